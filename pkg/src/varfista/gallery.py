"""Seeded quadratic test instances and exhaustive low-dimensional oracles.

``generate_qp`` builds box-constrained quadratics with a prescribed spectrum:
the diagonal of chosen eigenvalues is conjugated by a product of random
Householder reflections, so the curvature constants reported for auditing
are exact by construction rather than estimated.  ``brute_force_stationary``
and ``global_min_phi`` are the independent dense-grid oracles (dimension at
most 2) that the test suite checks solver output against; for pure box
instances the stationary-point oracle additionally enumerates all 3^n
active-set sign patterns, which is exact up to linear-solve precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels
from ._kernels import grid_1d
from .problems import Array, CompositeProblem
from .prox import BoxIndicator, L1PlusBox, identity_projector

__all__ = [
    "QuadraticSpec", "QuadraticOracle", "generate_qp", "make_qp_problem",
    "brute_force_stationary", "active_set_stationary", "global_min_phi",
    "save_instance", "load_instance", "default_start",
]


@dataclass(frozen=True)
class QuadraticSpec:
    """Generation recipe for a box-constrained quadratic instance."""

    n: int
    eig_lo: float
    eig_hi: float
    c_scale: float = 1.0
    box: Tuple[float, float] = (-1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be at least 1")
        if self.eig_hi < self.eig_lo:
            raise ValueError("eig_hi must be >= eig_lo")
        if not self.box[1] > self.box[0]:
            raise ValueError("box must satisfy hi > lo")


class QuadraticOracle:
    """Smooth oracle f(u) = 0.5 u'Qu + c'u with its structure exposed.

    Exposing Q and c lets the dense-grid oracles evaluate millions of grid
    points without going through the scalar callables.
    """

    def __init__(self, Q: Array, c: Array,
                 audit_lipschitz: Optional[float] = None,
                 audit_curvature: Optional[float] = None):
        Q = np.asarray(Q, dtype=np.float64)
        c = np.asarray(c, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or c.shape != (Q.shape[0],):
            raise ValueError("Q must be square and c must match its size")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        self.Q = Q
        self.c = c
        if audit_lipschitz is None or audit_curvature is None:
            eigs = np.linalg.eigvalsh(Q)
            if audit_lipschitz is None:
                audit_lipschitz = float(np.max(np.abs(eigs)))
            if audit_curvature is None:
                audit_curvature = float(max(0.0, -np.min(eigs)))
        self.audit_lipschitz = audit_lipschitz
        self.audit_curvature = audit_curvature
        # callable-field view of the oracle interface
        self.value_fn = self.value
        self.grad_fn = self.grad

    def value(self, u: Array) -> float:
        return float(0.5 * (u @ (self.Q @ u)) + self.c @ u)

    def grad(self, u: Array) -> Array:
        return self.Q @ u + self.c


def generate_qp(spec: QuadraticSpec) -> CompositeProblem:
    """Instantiate the recipe; deterministic in the seed."""
    rng = np.random.default_rng(spec.seed)
    eigs = np.linspace(spec.eig_lo, spec.eig_hi, spec.n)
    M = np.diag(eigs)
    for _ in range(3):
        v = rng.standard_normal(spec.n)
        v /= np.linalg.norm(v)
        M = M - 2.0 * np.outer(v, v @ M)
        M = M - 2.0 * np.outer(M @ v, v)
    Q = 0.5 * (M + M.T)
    c = spec.c_scale * rng.standard_normal(spec.n)
    oracle = QuadraticOracle(
        Q, c,
        audit_lipschitz=float(np.max(np.abs(eigs))),
        audit_curvature=float(max(0.0, -np.min(eigs))))
    lo, hi = spec.box
    reg = BoxIndicator.uniform(spec.n, lo, hi)
    return CompositeProblem(oracle, reg, identity_projector(), spec.n)


def make_qp_problem(Q: Array, c: Array, lo: Array, hi: Array,
                    l1_weight: float = 0.0,
                    omega=None) -> CompositeProblem:
    """Direct construction from explicit data (tests, file loading)."""
    Q = np.asarray(Q, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    n = c.shape[0]
    oracle = QuadraticOracle(Q, c)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if l1_weight > 0.0:
        reg = L1PlusBox(float(l1_weight), lo, hi)
    else:
        reg = BoxIndicator(lo, hi)
    if omega is None:
        omega = identity_projector()
    return CompositeProblem(oracle, reg, omega, n)


def default_start(problem: CompositeProblem) -> Array:
    """Deterministic feasible start: the domain-box midpoint."""
    lo, hi = problem.regularizer.domain_box
    return 0.5 * (lo + hi)


def _require_grid_problem(problem: CompositeProblem):
    if problem.dimension > 2:
        raise ValueError("dense-grid oracles support dimension <= 2 only")
    if not isinstance(problem.smooth, QuadraticOracle):
        raise TypeError("dense-grid oracles need a QuadraticOracle")
    reg = problem.regularizer
    if isinstance(reg, L1PlusBox):
        wl1 = reg.weight
    elif isinstance(reg, BoxIndicator):
        wl1 = 0.0
    else:
        raise TypeError("dense-grid oracles need a box or L1-plus-box "
                        "regularizer")
    return problem.smooth, reg, wl1


_SCAN_CAP = 6_000_000


def brute_force_stationary(problem: CompositeProblem,
                           grid_resolution: float = 1e-4) -> List[Array]:
    """Every grid point whose exact stationarity residual is grid-small.

    The residual at u is the Euclidean distance from -grad f(u) to the
    closed-form subdifferential of h at u; points pass when it is below
    (lipschitz + 1) * resolution * sqrt(n).  For pure box instances the
    exact active-set enumeration solutions are appended as well.
    """
    smooth, reg, wl1 = _require_grid_problem(problem)
    lo, hi = reg.domain_box
    n = problem.dimension
    tol = (smooth.audit_lipschitz + 1.0) * grid_resolution * math.sqrt(n)
    snap = 0.25 * grid_resolution
    pts: List[Array] = []
    if n == 1:
        g = grid_1d(float(lo[0]), float(hi[0]), grid_resolution)
        step = (float(hi[0]) - float(lo[0])) / (g.shape[0] - 1)
        cap = min(g.shape[0], _SCAN_CAP)
        out = np.empty(cap)
        found = _kernels.qp_scan_1d(
            float(smooth.Q[0, 0]), float(smooth.c[0]), float(lo[0]),
            float(hi[0]), wl1, step, g.shape[0], tol, snap, out, cap)
        if found > cap:
            raise RuntimeError("stationarity scan exceeded the hit cap; "
                               "the residual tolerance admits too many points")
        pts = [np.array([out[i]]) for i in range(found)]
    else:
        g0 = grid_1d(float(lo[0]), float(hi[0]), grid_resolution)
        g1 = grid_1d(float(lo[1]), float(hi[1]), grid_resolution)
        step0 = (float(hi[0]) - float(lo[0])) / (g0.shape[0] - 1)
        step1 = (float(hi[1]) - float(lo[1])) / (g1.shape[0] - 1)
        cap = _SCAN_CAP
        out = np.empty((cap, 2))
        found = _kernels.qp_scan_2d(
            smooth.Q, smooth.c, lo, hi, wl1, step0, g0.shape[0], step1,
            g1.shape[0], tol, snap, out, cap)
        if found > cap:
            raise RuntimeError("stationarity scan exceeded the hit cap; "
                               "the residual tolerance admits too many points")
        pts = [out[i].copy() for i in range(found)]
    if wl1 == 0.0:
        pts.extend(active_set_stationary(problem))
    return pts


def active_set_stationary(problem: CompositeProblem) -> List[Array]:
    """Exact stationary points of a box-constrained quadratic.

    Enumerates all 3^n patterns assigning each coordinate to its lower bound,
    its upper bound, or the free set; solves the free block and keeps
    solutions that are primal feasible with a consistent gradient sign on
    the active coordinates.
    """
    if not isinstance(problem.smooth, QuadraticOracle):
        raise TypeError("active-set enumeration needs a QuadraticOracle")
    if not isinstance(problem.regularizer, BoxIndicator):
        raise TypeError("active-set enumeration needs a pure box regularizer")
    Q = problem.smooth.Q
    c = problem.smooth.c
    lo, hi = problem.regularizer.domain_box
    n = problem.dimension
    tol = 1e-10
    sols: List[Array] = []
    for code in range(3 ** n):
        pattern = []
        z = code
        for _ in range(n):
            pattern.append(z % 3)  # 0: at lo, 1: free, 2: at hi
            z //= 3
        free = [i for i, p in enumerate(pattern) if p == 1]
        u = np.where(np.array(pattern) == 0, lo, hi).astype(np.float64)
        if free:
            F = np.array(free)
            act = np.array([i for i in range(n) if i not in free], dtype=int)
            rhs = -(c[F] + (Q[np.ix_(F, act)] @ u[act] if act.size else 0.0))
            QFF = Q[np.ix_(F, F)]
            try:
                uf = np.linalg.solve(QFF, rhs)
            except np.linalg.LinAlgError:
                uf, *_ = np.linalg.lstsq(QFF, rhs, rcond=None)
            if np.linalg.norm(QFF @ uf - rhs) > tol * (1.0 + np.abs(rhs).max()):
                continue
            u[F] = uf
            if np.any(uf < lo[F] - tol) or np.any(uf > hi[F] + tol):
                continue
            u[F] = np.clip(uf, lo[F], hi[F])
        g = Q @ u + c
        ok = True
        for i, p in enumerate(pattern):
            if p == 0 and g[i] < -tol:
                ok = False
                break
            if p == 2 and g[i] > tol:
                ok = False
                break
        if not ok:
            continue
        if all(np.linalg.norm(u - s) > 1e-9 for s in sols):
            sols.append(u)
    return sols


def global_min_phi(problem: CompositeProblem,
                   grid_resolution: float = 1e-4) -> Tuple[Array, float]:
    """Dense-grid minimizer of phi over dom h (dimension <= 2)."""
    smooth, reg, wl1 = _require_grid_problem(problem)
    lo, hi = reg.domain_box
    if problem.dimension == 1:
        g = grid_1d(float(lo[0]), float(hi[0]), grid_resolution)
        step = (float(hi[0]) - float(lo[0])) / (g.shape[0] - 1)
        arg, val = _kernels.qp_phi_argmin_1d(
            float(smooth.Q[0, 0]), float(smooth.c[0]), float(lo[0]),
            float(hi[0]), wl1, step, g.shape[0])
        return np.array([arg]), float(val)
    g0 = grid_1d(float(lo[0]), float(hi[0]), grid_resolution)
    g1 = grid_1d(float(lo[1]), float(hi[1]), grid_resolution)
    step0 = (float(hi[0]) - float(lo[0])) / (g0.shape[0] - 1)
    step1 = (float(hi[1]) - float(lo[1])) / (g1.shape[0] - 1)
    a0, a1, val = _kernels.qp_phi_argmin_2d(
        smooth.Q, smooth.c, lo, hi, wl1, step0, g0.shape[0], step1,
        g1.shape[0])
    return np.array([a0, a1]), float(val)


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------

def save_instance(problem: CompositeProblem, path: str,
                  seed: Optional[int] = None) -> None:
    """Write a self-describing instance document (exact float round-trip)."""
    smooth, reg, wl1 = _check_serializable(problem)
    lo, hi = reg.domain_box
    doc = {
        "format": "varfista-qp-instance",
        "n": problem.dimension,
        "Q": [float(v) for v in smooth.Q.ravel(order="C")],
        "c": [float(v) for v in smooth.c],
        "box_lo": [float(v) for v in lo],
        "box_hi": [float(v) for v in hi],
        "l1_weight": float(wl1),
        "lipschitz": float(smooth.audit_lipschitz),
        "curvature": float(smooth.audit_curvature),
        "seed": seed,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _check_serializable(problem: CompositeProblem):
    if not isinstance(problem.smooth, QuadraticOracle):
        raise TypeError("only quadratic instances serialize")
    reg = problem.regularizer
    if isinstance(reg, L1PlusBox):
        return problem.smooth, reg, reg.weight
    if isinstance(reg, BoxIndicator):
        return problem.smooth, reg, 0.0
    raise TypeError("only box / L1-plus-box regularizers serialize")


def load_instance(path: str) -> CompositeProblem:
    """Read an instance document written by save_instance."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "varfista-qp-instance":
        raise ValueError(f"{path}: not a recognized instance document")
    n = int(doc["n"])
    Q = np.array(doc["Q"], dtype=np.float64).reshape(n, n)
    c = np.array(doc["c"], dtype=np.float64)
    lo = np.array(doc["box_lo"], dtype=np.float64)
    hi = np.array(doc["box_hi"], dtype=np.float64)
    wl1 = float(doc.get("l1_weight", 0.0))
    problem = make_qp_problem(Q, c, lo, hi, l1_weight=wl1)
    # keep the stored audit constants (they may be analytic, not recomputed)
    problem.smooth.audit_lipschitz = float(doc["lipschitz"])
    problem.smooth.audit_curvature = float(doc["curvature"])
    return problem
