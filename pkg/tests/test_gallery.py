"""Instance generation, dense-grid oracles, active-set enumeration, files."""

import numpy as np
import pytest

from varfista.gallery import (QuadraticOracle, QuadraticSpec,
                              active_set_stationary, brute_force_stationary,
                              default_start, generate_qp, global_min_phi,
                              load_instance, make_qp_problem, save_instance)
from varfista.problems import phi
from varfista.prox import L1PlusBox


def test_generated_spectrum_is_reproduced():
    for lo_eig in (1.0, -1.0):
        prob = generate_qp(QuadraticSpec(n=20, eig_lo=lo_eig, eig_hi=10.0,
                                         seed=4))
        eigs = np.linalg.eigvalsh(prob.smooth.Q)
        want = np.linspace(lo_eig, 10.0, 20)
        assert np.max(np.abs(eigs - want)) <= 1e-10


def test_generated_metadata_is_analytic():
    convex = generate_qp(QuadraticSpec(n=6, eig_lo=1.0, eig_hi=10.0))
    assert convex.smooth.audit_lipschitz == 10.0
    assert convex.smooth.audit_curvature == 0.0
    rough = generate_qp(QuadraticSpec(n=6, eig_lo=-1.0, eig_hi=10.0))
    assert rough.smooth.audit_lipschitz == 10.0
    assert rough.smooth.audit_curvature == 1.0


def test_generation_is_deterministic_in_seed():
    a = generate_qp(QuadraticSpec(n=5, eig_lo=1.0, eig_hi=3.0, seed=9))
    b = generate_qp(QuadraticSpec(n=5, eig_lo=1.0, eig_hi=3.0, seed=9))
    c = generate_qp(QuadraticSpec(n=5, eig_lo=1.0, eig_hi=3.0, seed=10))
    assert np.array_equal(a.smooth.Q, b.smooth.Q)
    assert np.array_equal(a.smooth.c, b.smooth.c)
    assert not np.array_equal(a.smooth.Q, c.smooth.Q)


def test_spec_validation():
    with pytest.raises(ValueError):
        QuadraticSpec(n=0, eig_lo=1.0, eig_hi=2.0)
    with pytest.raises(ValueError):
        QuadraticSpec(n=2, eig_lo=3.0, eig_hi=2.0)
    with pytest.raises(ValueError):
        QuadraticSpec(n=2, eig_lo=1.0, eig_hi=2.0, box=(1.0, 1.0))


def test_quadratic_oracle_validation():
    with pytest.raises(ValueError):
        QuadraticOracle(np.array([[1.0, 2.0]]), np.array([0.0]))
    with pytest.raises(ValueError):
        QuadraticOracle(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2))


def test_default_start_is_box_midpoint():
    prob = make_qp_problem(np.array([[2.0]]), np.array([-4.0]),
                           np.array([0.0]), np.array([1.0]))
    assert np.array_equal(default_start(prob), [0.5])


def _face_instance():
    # f(u) = u^2 - 4u on [0, 1]: the only stationary point is u = 1
    return make_qp_problem(np.array([[2.0]]), np.array([-4.0]),
                           np.array([0.0]), np.array([1.0]))


def test_global_min_on_face_instance():
    arg, val = global_min_phi(_face_instance())
    assert arg[0] == 1.0
    assert val == pytest.approx(-3.0, abs=1e-12)


def test_brute_force_on_face_instance():
    pts = brute_force_stationary(_face_instance())
    assert len(pts) >= 1
    assert all(abs(p[0] - 1.0) <= 2e-4 for p in pts)
    # the active-set enumeration contributes the exact face point
    assert any(p[0] == 1.0 for p in pts)


def _concave_instance():
    # f(u) = -u^2/2 on [-1, 1]: stationary set is {-1, 0, 1}
    return make_qp_problem(np.array([[-1.0]]), np.array([0.0]),
                           np.array([-1.0]), np.array([1.0]))


def test_brute_force_on_concave_instance():
    pts = brute_force_stationary(_concave_instance())
    clusters = np.unique(np.round([p[0] for p in pts], 3))
    assert np.array_equal(clusters, [-1.0, -0.0, 1.0]) or \
        np.array_equal(clusters, [-1.0, 0.0, 1.0])


def test_active_set_on_concave_instance():
    sols = sorted(s[0] for s in active_set_stationary(_concave_instance()))
    assert sols == [-1.0, 0.0, 1.0]


def test_global_min_on_concave_instance():
    arg, val = global_min_phi(_concave_instance())
    assert abs(arg[0]) == 1.0
    assert val == -0.5


def test_active_set_on_2d_saddle():
    # separable saddle: u0 must sit at its interior zero, u1 anywhere
    # stationary for -u^2/2, so exactly (0, -1), (0, 0), (0, 1)
    prob = make_qp_problem(np.diag([2.0, -1.0]), np.zeros(2),
                           np.full(2, -1.0), np.full(2, 1.0))
    sols = active_set_stationary(prob)
    got = sorted((round(s[0], 12), round(s[1], 12)) for s in sols)
    assert got == [(0.0, -1.0), (0.0, 0.0), (0.0, 1.0)]


def test_brute_force_2d_matches_active_set():
    prob = make_qp_problem(np.diag([2.0, -1.0]), np.zeros(2),
                           np.full(2, -1.0), np.full(2, 1.0))
    pts = brute_force_stationary(prob, grid_resolution=1e-3)
    exact = active_set_stationary(prob)
    for s in exact:
        assert min(np.linalg.norm(s - p) for p in pts) <= 1e-9
    for p in pts:
        assert min(np.linalg.norm(s - p) for s in exact) <= 2e-3 * 3.0


def test_l1_instance_shrinks_minimizer():
    # min u^2 - u + 0.3|u| on [-1, 1]: minimizer (1 - 0.3)/2 = 0.35
    prob = make_qp_problem(np.array([[2.0]]), np.array([-1.0]),
                           np.array([-1.0]), np.array([1.0]), l1_weight=0.3)
    assert isinstance(prob.regularizer, L1PlusBox)
    arg, val = global_min_phi(prob)
    assert arg[0] == pytest.approx(0.35, abs=1e-4)
    assert val == pytest.approx(-0.1225, abs=1e-6)
    pts = brute_force_stationary(prob)
    assert len(pts) >= 1
    assert all(abs(p[0] - 0.35) <= 2e-4 for p in pts)


def test_l1_kink_is_captured_as_stationary():
    # c inside the subdifferential at 0: stationary exactly at the kink
    prob = make_qp_problem(np.array([[2.0]]), np.array([-0.2]),
                           np.array([-1.0]), np.array([1.0]), l1_weight=0.5)
    pts = brute_force_stationary(prob)
    assert any(abs(p[0]) <= 1e-4 for p in pts)
    arg, _ = global_min_phi(prob)
    assert abs(arg[0]) <= 1e-4


def test_flat_instance_every_point_stationary():
    prob = make_qp_problem(np.array([[0.0]]), np.array([0.0]),
                           np.array([-1.0]), np.array([1.0]))
    pts = brute_force_stationary(prob, grid_resolution=1e-2)
    assert len(pts) >= 201  # the whole grid, plus active-set extras


def test_dense_grid_oracles_reject_bad_problems():
    with pytest.raises(ValueError):
        brute_force_stationary(generate_qp(
            QuadraticSpec(n=3, eig_lo=1.0, eig_hi=2.0)))
    from varfista.problems import CompositeProblem, SmoothOracle
    from varfista.prox import BoxIndicator, identity_projector
    nonquad = CompositeProblem(
        SmoothOracle(lambda u: float(np.cos(u[0])),
                     lambda u: np.array([-np.sin(u[0])])),
        BoxIndicator.uniform(1, -1.0, 1.0), identity_projector(), 1)
    with pytest.raises(TypeError):
        global_min_phi(nonquad)
    with pytest.raises(TypeError):
        active_set_stationary(nonquad)


def test_instance_file_round_trip(tmp_path):
    prob = generate_qp(QuadraticSpec(n=7, eig_lo=-1.0, eig_hi=10.0, seed=3))
    path = tmp_path / "inst.json"
    save_instance(prob, str(path), seed=3)
    back = load_instance(str(path))
    assert np.array_equal(back.smooth.Q, prob.smooth.Q)
    assert np.array_equal(back.smooth.c, prob.smooth.c)
    lo_a, hi_a = prob.regularizer.domain_box
    lo_b, hi_b = back.regularizer.domain_box
    assert np.array_equal(lo_a, lo_b) and np.array_equal(hi_a, hi_b)
    # stored analytic constants survive, not recomputed ones
    assert back.smooth.audit_lipschitz == prob.smooth.audit_lipschitz
    assert back.smooth.audit_curvature == prob.smooth.audit_curvature
    u = default_start(prob)
    assert phi(back, u) == phi(prob, u)


def test_instance_file_round_trip_with_l1(tmp_path):
    prob = make_qp_problem(np.array([[2.0]]), np.array([-1.0]),
                           np.array([-1.0]), np.array([1.0]), l1_weight=0.3)
    path = tmp_path / "inst.json"
    save_instance(prob, str(path))
    back = load_instance(str(path))
    assert isinstance(back.regularizer, L1PlusBox)
    assert back.regularizer.weight == 0.3


def test_load_rejects_foreign_documents(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "something-else"}\n')
    with pytest.raises(ValueError):
        load_instance(str(path))
