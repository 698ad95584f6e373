"""Model functions, analytic run constants, anchor and drift rechecks."""

import numpy as np
import pytest

from varfista.diagnostics import (DriftReport, ModelFunction,
                                  TheoreticalBounds, check_xk_drift,
                                  check_xk_optimality, estimate_curvatures)
from varfista.gallery import (QuadraticSpec, default_start, generate_qp,
                              make_qp_problem)
from varfista.problems import CompositeProblem, SmoothOracle
from varfista.prox import BoxIndicator, identity_projector
from varfista.solver import (LinearizationRecord, SolverConfig, compute_x,
                             solve)


def _run(prob, iters=40, rho=1e-30, lambda0=1.0):
    cfg = SolverConfig(lambda0=lambda0, rho_hat=rho,
                       max_outer_iterations=iters)
    return cfg, solve(prob, cfg, default_start(prob))


def _model_at(trace, ledger, prob, i):
    return ModelFunction(record=ledger.record(i + 1), y_k=trace.ys[i],
                         lam_k=trace.lam[i], tau_k=trace.tau[i],
                         regularizer=prob.regularizer)


# ---------------------------------------------------------------------------
# model functions
# ---------------------------------------------------------------------------

def test_minorant_supports_surrogate():
    prob = generate_qp(QuadraticSpec(n=2, eig_lo=-1.0, eig_hi=8.0, seed=6))
    _, (cert, trace, ledger) = _run(prob, iters=25)
    rng = np.random.default_rng(0)
    lo, hi = prob.regularizer.domain_box
    for i in range(len(trace)):
        model = _model_at(trace, ledger, prob, i)
        # tangency at y_k is exact by construction
        assert model.minorant(trace.ys[i]) == model.surrogate(trace.ys[i])
        for _ in range(20):
            u = lo + rng.random(2) * (hi - lo)
            s = model.surrogate(u)
            m = model.minorant(u)
            assert m <= s + 1e-9 * max(1.0, abs(s))


def test_candidate_minimizes_surrogate_plus_prox_term():
    # y_k is the prox point, so it minimizes
    # surrogate(u) + ||u - x_tilde||^2 / (2 lam) over dom h
    prob = generate_qp(QuadraticSpec(n=2, eig_lo=-1.0, eig_hi=8.0, seed=6))
    _, (cert, trace, ledger) = _run(prob, iters=25)
    rng = np.random.default_rng(1)
    lo, hi = prob.regularizer.domain_box
    for i in range(0, len(trace), 5):
        model = _model_at(trace, ledger, prob, i)
        xt = model.record.x_tilde
        lam = model.lam_k

        def obj(u):
            d = u - xt
            return model.surrogate(u) + float(d @ d) / (2.0 * lam)

        best = obj(trace.ys[i])
        for _ in range(50):
            u = lo + rng.random(2) * (hi - lo)
            assert best <= obj(u) + 1e-9


# ---------------------------------------------------------------------------
# analytic constants
# ---------------------------------------------------------------------------

def test_bounds_from_analytic_metadata():
    prob = generate_qp(QuadraticSpec(n=4, eig_lo=-1.0, eig_hi=10.0))
    cfg = SolverConfig(lambda0=1.0, theta=2.0, gamma=0.99)
    b = TheoreticalBounds.from_problem(prob, cfg)
    assert b.M_bar == 10.0 and b.m_under == 1.0
    assert b.lambda_floor == pytest.approx(0.99 / 20.0)
    assert b.xi_bar == 4.0  # max(4 * 1, 1)
    assert b.D_h == pytest.approx(2.0 * np.sqrt(4))
    assert b.C == pytest.approx(2.0 * (2.0 + 4.0 * 1.0) * b.D_h)


def test_bounds_convex_case_zeroes_escalation():
    prob = generate_qp(QuadraticSpec(n=4, eig_lo=1.0, eig_hi=10.0))
    b = TheoreticalBounds.from_problem(prob, SolverConfig())
    assert b.m_under == 0.0 and b.xi_bar == 0.0
    assert b.C == pytest.approx(4.0 * b.D_h)


def test_bounds_small_lambda0_keeps_floor_at_lambda0():
    prob = generate_qp(QuadraticSpec(n=4, eig_lo=1.0, eig_hi=10.0))
    cfg = SolverConfig(lambda0=1e-3)
    b = TheoreticalBounds.from_problem(prob, cfg)
    assert b.lambda_floor == 1e-3


def test_bounds_require_metadata_or_estimation():
    f = SmoothOracle(lambda u: float(u[0] ** 2),
                     lambda u: np.array([2.0 * u[0]]))
    prob = CompositeProblem(f, BoxIndicator.uniform(1, -1.0, 1.0),
                            identity_projector(), 1)
    with pytest.raises(ValueError):
        TheoreticalBounds.from_problem(prob, SolverConfig())
    b = TheoreticalBounds.from_problem(prob, SolverConfig(),
                                       estimate_if_missing=True)
    assert 0.0 < b.M_bar <= 2.0 + 1e-9


def test_estimate_curvatures_bracket_analytic_values():
    prob = generate_qp(QuadraticSpec(n=3, eig_lo=-1.0, eig_hi=10.0, seed=2))
    M_est, m_est = estimate_curvatures(prob, n_samples=3000, seed=0)
    assert M_est <= 10.0 * (1.0 + 1e-9)
    assert m_est <= 1.0 * (1.0 + 1e-9)
    # sampled estimates approach the analytic constants from below
    assert M_est >= 0.5 * 10.0
    assert m_est >= 0.5 * 1.0
    with pytest.raises(ValueError):
        estimate_curvatures(prob, n_samples=1)


def test_estimates_grow_with_sample_count():
    prob = generate_qp(QuadraticSpec(n=3, eig_lo=-1.0, eig_hi=10.0, seed=2))
    M_small, m_small = estimate_curvatures(prob, n_samples=50, seed=1)
    M_large, m_large = estimate_curvatures(prob, n_samples=5000, seed=1)
    assert M_large >= M_small and m_large >= m_small


# ---------------------------------------------------------------------------
# anchor optimality
# ---------------------------------------------------------------------------

def test_anchor_formula_matches_subproblem_argmin_unconstrained():
    # with identity Omega the committed anchor must be the unconstrained
    # argmin -b/kappa of the rebuilt subproblem, up to roundoff; the two
    # routes share no arithmetic
    from varfista.diagnostics import _anchor_quadratic
    prob = generate_qp(QuadraticSpec(n=2, eig_lo=-1.0, eig_hi=8.0, seed=6))
    _, (cert, trace, ledger) = _run(prob, iters=40)
    x_prev = default_start(prob)
    for i in range(len(trace)):
        model = _model_at(trace, ledger, prob, i)
        kappa, b = _anchor_quadratic(model, x_prev, trace.a[i])
        closed = -b / kappa
        assert np.linalg.norm(closed - trace.xs[i]) <= 1e-9 * (
            1.0 + np.linalg.norm(trace.xs[i]))
        x_prev = trace.xs[i]


def test_anchor_check_accepts_solver_runs():
    for spec in (QuadraticSpec(n=1, eig_lo=2.0, eig_hi=2.0, seed=3),
                 QuadraticSpec(n=2, eig_lo=-1.0, eig_hi=8.0, seed=6)):
        prob = generate_qp(spec)
        _, (cert, trace, ledger) = _run(prob, iters=30)
        x_prev = default_start(prob)
        for i in range(len(trace)):
            model = _model_at(trace, ledger, prob, i)
            ok = check_xk_optimality(prob, model, trace.xs[i], x_prev,
                                     trace.a[i])
            assert ok is True, f"iteration {i + 1}"
            x_prev = trace.xs[i]


def test_anchor_check_flags_wrong_point():
    prob = generate_qp(QuadraticSpec(n=2, eig_lo=-1.0, eig_hi=8.0, seed=6))
    _, (cert, trace, ledger) = _run(prob, iters=10)
    i = len(trace) - 1
    model = _model_at(trace, ledger, prob, i)
    x_prev = trace.xs[i - 1]
    wrong = trace.xs[i] + 0.05
    assert check_xk_optimality(prob, model, wrong, x_prev,
                               trace.a[i]) is False


def test_anchor_check_projected_gradient_fallback():
    # dimension 3 forces the iterative route
    prob = generate_qp(QuadraticSpec(n=3, eig_lo=1.0, eig_hi=5.0, seed=1))
    _, (cert, trace, ledger) = _run(prob, iters=15)
    x_prev = default_start(prob)
    for i in range(len(trace)):
        model = _model_at(trace, ledger, prob, i)
        ok = check_xk_optimality(prob, model, trace.xs[i], x_prev,
                                 trace.a[i])
        assert ok is True
        x_prev = trace.xs[i]


# ---------------------------------------------------------------------------
# drift
# ---------------------------------------------------------------------------

def test_drift_report_hand_case():
    bounds = TheoreticalBounds(M_bar=1.0, m_under=0.0, lambda_floor=0.1,
                               xi_bar=0.0, D_h=1.0, C=4.0)
    x0 = np.zeros(1)
    rep = check_xk_drift([np.array([2.0]), np.array([7.0])], x0, bounds)
    assert rep.passed  # 2 <= 4*1 and 7 <= 4*2
    assert rep.worst_k == 2
    assert rep.worst_ratio == pytest.approx(7.0 / 8.0)

    bad = check_xk_drift([np.array([5.0])], x0, bounds)
    assert not bad.passed and bad.worst_k == 1 and bad.worst_ratio > 1.0


def test_drift_holds_on_solver_run():
    prob = generate_qp(QuadraticSpec(n=4, eig_lo=-1.0, eig_hi=10.0, seed=5))
    cfg, (cert, trace, ledger) = _run(prob, iters=60)
    bounds = TheoreticalBounds.from_problem(prob, cfg)
    rep = check_xk_drift(trace.xs, default_start(prob), bounds)
    assert rep.passed
    assert isinstance(rep, DriftReport)
