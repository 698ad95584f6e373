"""Post-run diagnostics: model functions, analytic bounds, independent checks.

Everything here re-derives properties of a finished run from recorded data;
nothing feeds back into the solver.  The anchor-point check rebuilds each
iteration's anchor subproblem and minimizes it by dense grid search (or
projected gradient when a grid is impractical), giving a route to the anchor
that shares no code with the solver's closed-form update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels
from .problems import Array, CompositeProblem
from .solver import LinearizationRecord, SolverConfig

__all__ = [
    "ModelFunction", "TheoreticalBounds", "DriftReport",
    "check_xk_optimality", "estimate_curvatures", "check_xk_drift",
]


@dataclass(frozen=True)
class ModelFunction:
    """The two per-iteration models of phi around one accepted step.

    ``surrogate`` is the regularized linearization whose prox minimizer is
    y_k; ``minorant`` is its tangent expansion at y_k plus the same strong
    convexity term, so minorant <= surrogate everywhere with equality at y_k.
    """

    record: LinearizationRecord
    y_k: Array
    lam_k: float
    tau_k: float
    regularizer: object

    def surrogate(self, u: Array) -> float:
        d = u - self.record.x_tilde
        lin = self.record.f_at + float(self.record.grad_at @ d)
        quad = (self.tau_k / (2.0 * self.lam_k)) * float(d @ d)
        return lin + self.regularizer.value(u) + quad

    def minorant(self, u: Array) -> float:
        base = self.surrogate(self.y_k)
        d = u - self.y_k
        inner = float((self.record.x_tilde - self.y_k) @ d) / self.lam_k
        quad = (self.tau_k / (2.0 * self.lam_k)) * float(d @ d)
        return base + inner + quad


@dataclass(frozen=True)
class TheoreticalBounds:
    """Analytic run constants implied by the audit metadata and the config."""

    M_bar: float
    m_under: float
    lambda_floor: float
    xi_bar: float
    D_h: float
    C: float

    @classmethod
    def from_problem(cls, problem: CompositeProblem, config: SolverConfig,
                     estimate_if_missing: bool = False,
                     n_samples: int = 2000, seed: int = 0):
        M = problem.smooth.audit_lipschitz
        m = problem.smooth.audit_curvature
        if M is None or m is None:
            if not estimate_if_missing:
                raise ValueError(
                    "problem carries no audit metadata; pass "
                    "estimate_if_missing=True to sample curvature estimates")
            M_est, m_est = estimate_curvatures(problem, n_samples, seed)
            M = M_est if M is None else M
            m = m_est if m is None else m
        lam_floor = config.lambda0
        if M > 0.0:
            lam_floor = min(config.gamma / (config.theta * M), config.lambda0)
        xi_bar = max(4.0 * m, 1.0) if m > 0.0 else 0.0
        lo, hi = problem.regularizer.domain_box
        D_h = float(np.linalg.norm(hi - lo))
        C = 2.0 * (2.0 + xi_bar * config.lambda0) * D_h
        return cls(M_bar=float(M), m_under=float(m),
                   lambda_floor=float(lam_floor), xi_bar=float(xi_bar),
                   D_h=D_h, C=float(C))


def _anchor_quadratic(model: ModelFunction, x_prev: Array, a: float):
    """The anchor subproblem  a * minorant(u) + ||u - x_prev||^2 / (2 lam)
    as 0.5 * kappa ||u||^2 + b.u (constant dropped)."""
    lam = model.lam_k
    tau = model.tau_k
    kappa = (a * tau + 1.0) / lam
    b = ((a / lam) * (model.record.x_tilde - model.y_k)
         - (a * tau / lam) * model.y_k - x_prev / lam)
    return kappa, b


def _grid_argmin(kappa: float, b: Array, lo: Array, hi: Array,
                 resolution: float) -> Array:
    """Coarse-to-fine grid argmin of the strongly convex quadratic.

    Exact for the final grid because the objective is unimodal along each
    axis, so every refinement window brackets the coarse argmin.
    """
    def _npts(width: float, res: float) -> int:
        return max(2, int(math.ceil(width / res)) + 1)

    n = b.shape[0]
    lo = lo.copy()
    hi = hi.copy()
    while True:
        span = float(np.max(hi - lo))
        res = max(span / 400.0, resolution)
        if n == 1:
            npts = _npts(hi[0] - lo[0], res)
            step = (hi[0] - lo[0]) / (npts - 1)
            arg, _ = _kernels.iso_quad_argmin_1d(kappa, float(b[0]),
                                                 float(lo[0]), float(hi[0]),
                                                 step, npts)
            best = np.array([arg])
        else:
            n0 = _npts(hi[0] - lo[0], res)
            n1 = _npts(hi[1] - lo[1], res)
            step0 = (hi[0] - lo[0]) / (n0 - 1)
            step1 = (hi[1] - lo[1]) / (n1 - 1)
            a0, a1, _ = _kernels.iso_quad_argmin_2d(kappa, b, lo, hi,
                                                    step0, n0, step1, n1)
            best = np.array([a0, a1])
        if res <= resolution:
            return best
        lo = np.maximum(lo, best - 3.0 * res)
        hi = np.minimum(hi, best + 3.0 * res)


def check_xk_optimality(problem: CompositeProblem, model: ModelFunction,
                        x_k: Array, x_prev: Array, a: float,
                        grid_resolution: float = 1e-4) -> Optional[bool]:
    """Does x_k minimize the anchor subproblem over Omega?

    Minimizes by dense grid (dimension <= 2, identity or box Omega) or by
    projected gradient otherwise; True/False when the independent minimizer
    lands within / outside max(grid_resolution, 1e-6) of x_k, None when the
    search is inconclusive (argmin pinned to an artificial window edge).
    """
    kappa, b = _anchor_quadratic(model, x_prev, a)
    tol = max(grid_resolution, 1e-6)
    kind = problem.omega.kind
    if problem.dimension <= 2 and kind in ("identity", "box"):
        pts = [x_prev, x_k, model.y_k, model.record.x_tilde, -b / kappa]
        stack = np.stack(pts)
        margin = max(1.0, float(np.max(np.abs(stack)))) * 0.5
        w_lo = np.min(stack, axis=0) - margin
        w_hi = np.max(stack, axis=0) + margin
        for _ in range(4):
            lo = w_lo.copy()
            hi = w_hi.copy()
            clipped_lo = np.zeros(problem.dimension, dtype=bool)
            clipped_hi = np.zeros(problem.dimension, dtype=bool)
            if kind == "box":
                # clamp the window into Omega; a face of Omega is a genuine
                # boundary, an unclamped window face is artificial
                lo = problem.omega.project(w_lo)
                hi = problem.omega.project(w_hi)
                clipped_lo = lo > w_lo
                clipped_hi = hi < w_hi
            best = _grid_argmin(kappa, b, lo, hi, grid_resolution)
            on_artificial = (((best - lo < 2.0 * grid_resolution)
                              & ~clipped_lo)
                             | ((hi - best < 2.0 * grid_resolution)
                                & ~clipped_hi))
            if not np.any(on_artificial):
                return bool(np.linalg.norm(best - x_k) <= tol)
            span = w_hi - w_lo
            w_lo = w_lo - span
            w_hi = w_hi + span
        return None
    # projected-gradient fallback for higher dimension or ball regions
    u = x_k.copy()
    eta = 1.0 / kappa
    for _ in range(100_000):
        u_next = problem.omega.project(u - eta * (kappa * u + b))
        if np.linalg.norm(u_next - u) <= 1e-12 * (1.0 + np.linalg.norm(u)):
            return bool(np.linalg.norm(u_next - x_k) <= tol)
        u = u_next
    return None


def estimate_curvatures(problem: CompositeProblem, n_samples: int = 2000,
                        seed: int = 0) -> Tuple[float, float]:
    """Sampled lower bounds (M_est, m_est) on the curvature constants.

    Draws point pairs uniformly from the domain box; M_est is the largest
    gradient difference ratio, m_est the largest (positive part of the)
    linearization overshoot ratio, scanned in both pair orders.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    lo, hi = problem.regularizer.domain_box
    rng = np.random.default_rng(seed)
    smooth = problem.smooth
    M_est = 0.0
    m_est = 0.0
    for _ in range(n_samples):
        u1 = lo + rng.random(problem.dimension) * (hi - lo)
        u2 = lo + rng.random(problem.dimension) * (hi - lo)
        d = u1 - u2
        nd2 = float(d @ d)
        if nd2 <= 1e-16:
            continue
        g1 = smooth.grad(u1)
        g2 = smooth.grad(u2)
        M_est = max(M_est, float(np.linalg.norm(g1 - g2)) / math.sqrt(nd2))
        f1 = smooth.value(u1)
        f2 = smooth.value(u2)
        over = 2.0 * (f2 + float(g2 @ d) - f1) / nd2
        m_est = max(m_est, over)
        over = 2.0 * (f1 + float(g1 @ (-d)) - f2) / nd2
        m_est = max(m_est, over)
    return M_est, max(0.0, m_est)


@dataclass(frozen=True)
class DriftReport:
    passed: bool
    worst_ratio: float
    worst_k: int
    C: float


def check_xk_drift(trace_xs: List[Array], x0: Array,
                   bounds: TheoreticalBounds) -> DriftReport:
    """Check ||x_k - x0|| <= C * k for every recorded anchor point."""
    worst = 0.0
    worst_k = 0
    for i, xk in enumerate(trace_xs):
        k = i + 1
        r = float(np.linalg.norm(xk - x0)) / (bounds.C * k) if bounds.C > 0 \
            else math.inf
        if r > worst:
            worst = r
            worst_k = k
    return DriftReport(passed=worst <= 1.0, worst_ratio=worst,
                       worst_k=worst_k, C=bounds.C)
