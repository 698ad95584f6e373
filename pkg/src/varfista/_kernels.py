"""Hot numeric kernels, compiled with numba when available.

Two interchangeable lanes exist for every kernel: a numba ``@njit`` build of
an explicit-loop implementation, and a pure-numpy implementation (vectorized
or chunked where a bare Python loop would be too slow).  The lane used by the
library is chosen once at import time from the environment variable
``VARFISTA_BACKEND``:

* ``"numba"``  -- require numba; raise if it cannot be imported.
* ``"numpy"``  -- force the pure-numpy lane.
* unset/``"auto"`` -- numba when importable, numpy otherwise.

Both lanes evaluate the same scalar expression trees so their outputs agree
bit-for-bit; ``benchmarks/benchmark_backends.py`` times one against the other
and the test suite asserts the agreement.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None
    HAS_NUMBA = False


def _resolve_backend() -> str:
    choice = os.environ.get("VARFISTA_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise ImportError(
                "VARFISTA_BACKEND=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"unrecognized VARFISTA_BACKEND value: {choice!r}")


BACKEND = _resolve_backend()


def grid_1d(lo: float, hi: float, resolution: float) -> np.ndarray:
    """Uniform grid covering [lo, hi] with spacing <= resolution.

    Endpoints are exact so that box-boundary kinks land on the grid.
    """
    if not hi > lo:
        raise ValueError("grid requires hi > lo")
    if not resolution > 0.0:
        raise ValueError("grid resolution must be positive")
    n = int(math.ceil((hi - lo) / resolution)) + 1
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# momentum-schedule scan
# ---------------------------------------------------------------------------

def _schedule_scan_loop(A0, k_max):
    """Run the accumulation recursion a=(1+sqrt(1+4A))/2, A+=a for k_max steps.

    Tracks the worst-case margins of the growth bounds
        k/2 <= a_{k-1} <= 4k,
        sum_{i<=k} A_i >= k^3/12,
        (sum_{i<=k} a_{i-1}) / (sum_{i<=k} A_i) <= 4/k,
    and the largest relative gap |A_k - a_{k-1}^2| / A_k.

    Returns (min_lower, k_lower, min_upper, k_upper, min_sum, k_sum,
             min_ratio, k_ratio, max_gap, k_gap, a_last, A_last).
    """
    A = A0
    a = 0.0
    sum_A = 0.0
    sum_a = 0.0
    min_lower = math.inf
    min_upper = math.inf
    min_sum = math.inf
    min_ratio = math.inf
    max_gap = 0.0
    k_lower = 0
    k_upper = 0
    k_sum = 0
    k_ratio = 0
    k_gap = 0
    for k in range(1, k_max + 1):
        a = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * A))
        A_next = A + a
        sum_A += A_next
        sum_a += a
        m = a - 0.5 * k
        if m < min_lower:
            min_lower = m
            k_lower = k
        m = 4.0 * k - a
        if m < min_upper:
            min_upper = m
            k_upper = k
        m = sum_A - (k * k * k) / 12.0
        if m < min_sum:
            min_sum = m
            k_sum = k
        m = 4.0 / k - sum_a / sum_A
        if m < min_ratio:
            min_ratio = m
            k_ratio = k
        g = A_next - a * a
        if g < 0.0:
            g = -g
        g = g / A_next
        if g > max_gap:
            max_gap = g
            k_gap = k
        A = A_next
    return (min_lower, k_lower, min_upper, k_upper, min_sum, k_sum,
            min_ratio, k_ratio, max_gap, k_gap, a, A)


# ---------------------------------------------------------------------------
# history-inequality margin
# ---------------------------------------------------------------------------

def _history_margin_loop(lam_hist, tau_hist, L_arr, xi_arr):
    """Worst margin of xi_k*lam_{i-1} - L_k*lam_i - tau_i over 1<=i<=k<=N.

    lam_hist has length N+1 (lam_0..lam_N); the other arrays have length N.
    Returns (min_margin, k_arg, i_arg) with 1-based k and i.
    """
    n = tau_hist.shape[0]
    best = math.inf
    k_arg = 0
    i_arg = 0
    for k in range(1, n + 1):
        xi = xi_arr[k - 1]
        L = L_arr[k - 1]
        for i in range(1, k + 1):
            m = xi * lam_hist[i - 1] - L * lam_hist[i] - tau_hist[i - 1]
            if m < best:
                best = m
                k_arg = k
                i_arg = i
    return best, k_arg, i_arg


def _history_margin_numpy(lam_hist, tau_hist, L_arr, xi_arr):
    n = tau_hist.shape[0]
    best = math.inf
    k_arg = 0
    i_arg = 0
    prev = lam_hist[:-1]
    curr = lam_hist[1:]
    for k in range(1, n + 1):
        margins = (xi_arr[k - 1] * prev[:k] - L_arr[k - 1] * curr[:k]
                   - tau_hist[:k])
        i = int(np.argmin(margins))
        if margins[i] < best:
            best = float(margins[i])
            k_arg = k
            i_arg = i + 1
    return best, k_arg, i_arg


# ---------------------------------------------------------------------------
# stationarity residual scan for box/L1 quadratics
# ---------------------------------------------------------------------------
# h(u) = wl1 * ||u||_1 + indicator of [lo, hi]^n.  A point u is stationary
# when -grad f(u) lies in the subdifferential of h at u, which is an interval
# per component: wl1 * [sub-gradient of |.|] plus the normal cone of the box.
# The scan returns every grid point whose Euclidean distance from -grad to
# that interval is <= tol.  Coordinates within `snap` of the L1 kink at 0 are
# treated as sitting on the kink so float dust in grid construction cannot
# hide a genuine stationary point; box faces land on the grid exactly.

def _interval_dist(mg, u, lo, hi, wl1, snap):
    if wl1 > 0.0:
        if u < -snap:
            a = -wl1
            b = -wl1
        elif u > snap:
            a = wl1
            b = wl1
        else:
            a = -wl1
            b = wl1
    else:
        a = 0.0
        b = 0.0
    if u <= lo + snap:
        a = -math.inf
    if u >= hi - snap:
        b = math.inf
    if mg < a:
        return a - mg
    if mg > b:
        return mg - b
    return 0.0


def _interval_dist_vec(mg, u, lo, hi, wl1, snap):
    """Vectorized twin of _interval_dist (lo, hi scalars, broadcasting u)."""
    if wl1 > 0.0:
        on_kink = np.abs(u) <= snap
        sgn = np.where(u > snap, wl1, -wl1)
        a = np.where(on_kink, -wl1, sgn)
        b = np.where(on_kink, wl1, sgn)
    else:
        a = np.zeros_like(mg)
        b = np.zeros_like(mg)
    a = np.where(u <= lo + snap, -np.inf, a)
    b = np.where(u >= hi - snap, np.inf, b)
    return np.maximum(np.maximum(a - mg, mg - b), 0.0)


def _qp_scan_1d_loop(q, c, lo, hi, wl1, step, n_pts, tol, snap, out, max_hits):
    found = 0
    for i in range(n_pts):
        u = hi if i == n_pts - 1 else lo + i * step
        mg = -(q * u + c)
        d = _interval_dist(mg, u, lo, hi, wl1, snap)
        if d <= tol:
            if found < max_hits:
                out[found] = u
            found += 1
    return found


def _qp_scan_2d_loop(Q, c, lo, hi, wl1, step0, n0, step1, n1, tol, snap,
                     out, max_hits):
    found = 0
    for i in range(n0):
        u0 = hi[0] if i == n0 - 1 else lo[0] + i * step0
        for j in range(n1):
            u1 = hi[1] if j == n1 - 1 else lo[1] + j * step1
            mg0 = -(Q[0, 0] * u0 + Q[0, 1] * u1 + c[0])
            mg1 = -(Q[1, 0] * u0 + Q[1, 1] * u1 + c[1])
            d0 = _interval_dist(mg0, u0, lo[0], hi[0], wl1, snap)
            d1 = _interval_dist(mg1, u1, lo[1], hi[1], wl1, snap)
            if math.sqrt(d0 * d0 + d1 * d1) <= tol:
                if found < max_hits:
                    out[found, 0] = u0
                    out[found, 1] = u1
                found += 1
    return found


def _qp_scan_1d_numpy(q, c, lo, hi, wl1, step, n_pts, tol, snap, out,
                      max_hits):
    u = lo + step * np.arange(n_pts)
    u[-1] = hi
    mg = -(q * u + c)
    d = _interval_dist_vec(mg, u, lo, hi, wl1, snap)
    hits = u[d <= tol]
    found = hits.shape[0]
    kept = min(found, max_hits)
    out[:kept] = hits[:kept]
    return found


def _qp_scan_2d_numpy(Q, c, lo, hi, wl1, step0, n0, step1, n1, tol, snap,
                      out, max_hits):
    u1 = lo[1] + step1 * np.arange(n1)
    u1[-1] = hi[1]
    found = 0
    block = max(1, int(2e6) // n1)
    for start in range(0, n0, block):
        stop = min(start + block, n0)
        u0 = lo[0] + step0 * np.arange(start, stop)
        if stop == n0:
            u0[-1] = hi[0]
        U0 = u0[:, None]
        mg0 = -(Q[0, 0] * U0 + Q[0, 1] * u1 + c[0])
        mg1 = -(Q[1, 0] * U0 + Q[1, 1] * u1 + c[1])
        d0 = _interval_dist_vec(mg0, np.broadcast_to(U0, mg0.shape),
                                lo[0], hi[0], wl1, snap)
        d1 = _interval_dist_vec(mg1, np.broadcast_to(u1, mg1.shape),
                                lo[1], hi[1], wl1, snap)
        mask = np.sqrt(d0 * d0 + d1 * d1) <= tol
        ii, jj = np.nonzero(mask)
        for r in range(ii.shape[0]):
            if found < max_hits:
                out[found, 0] = u0[ii[r]]
                out[found, 1] = u1[jj[r]]
            found += 1
    return found


# ---------------------------------------------------------------------------
# grid argmin of the composite objective for box/L1 quadratics
# ---------------------------------------------------------------------------

def _qp_phi_argmin_1d_loop(q, c, lo, hi, wl1, step, n_pts):
    best = math.inf
    arg = lo
    for i in range(n_pts):
        u = hi if i == n_pts - 1 else lo + i * step
        v = 0.5 * q * u * u + c * u + wl1 * abs(u)
        if v < best:
            best = v
            arg = u
    return arg, best


def _qp_phi_argmin_2d_loop(Q, c, lo, hi, wl1, step0, n0, step1, n1):
    best = math.inf
    a0 = lo[0]
    a1 = lo[1]
    for i in range(n0):
        u0 = hi[0] if i == n0 - 1 else lo[0] + i * step0
        for j in range(n1):
            u1 = hi[1] if j == n1 - 1 else lo[1] + j * step1
            v = (0.5 * (Q[0, 0] * u0 * u0 + (Q[0, 1] + Q[1, 0]) * u0 * u1
                        + Q[1, 1] * u1 * u1)
                 + c[0] * u0 + c[1] * u1 + wl1 * (abs(u0) + abs(u1)))
            if v < best:
                best = v
                a0 = u0
                a1 = u1
    return a0, a1, best


def _qp_phi_argmin_1d_numpy(q, c, lo, hi, wl1, step, n_pts):
    u = lo + step * np.arange(n_pts)
    u[-1] = hi
    v = 0.5 * q * u * u + c * u + wl1 * np.abs(u)
    i = int(np.argmin(v))
    return u[i], v[i]


def _qp_phi_argmin_2d_numpy(Q, c, lo, hi, wl1, step0, n0, step1, n1):
    u1 = lo[1] + step1 * np.arange(n1)
    u1[-1] = hi[1]
    best = math.inf
    a0 = lo[0]
    a1 = lo[1]
    block = max(1, int(2e6) // n1)
    for start in range(0, n0, block):
        stop = min(start + block, n0)
        u0 = lo[0] + step0 * np.arange(start, stop)
        if stop == n0:
            u0[-1] = hi[0]
        U0 = u0[:, None]
        v = (0.5 * (Q[0, 0] * U0 * U0 + (Q[0, 1] + Q[1, 0]) * U0 * u1
                    + Q[1, 1] * u1 * u1)
             + c[0] * U0 + c[1] * u1 + wl1 * (np.abs(U0) + np.abs(u1)))
        i = int(np.argmin(v))
        r, s = divmod(i, n1)
        if v[r, s] < best:
            best = float(v[r, s])
            a0 = float(u0[r])
            a1 = float(u1[s])
    return a0, a1, best


# ---------------------------------------------------------------------------
# grid argmin of an isotropic quadratic 0.5*kappa*||u||^2 + b.u on a rectangle
# ---------------------------------------------------------------------------

def _iso_quad_argmin_1d_loop(kappa, b, lo, hi, step, n_pts):
    best = math.inf
    arg = lo
    for i in range(n_pts):
        u = hi if i == n_pts - 1 else lo + i * step
        v = 0.5 * kappa * u * u + b * u
        if v < best:
            best = v
            arg = u
    return arg, best


def _iso_quad_argmin_2d_loop(kappa, b, lo, hi, step0, n0, step1, n1):
    best = math.inf
    a0 = lo[0]
    a1 = lo[1]
    for i in range(n0):
        u0 = hi[0] if i == n0 - 1 else lo[0] + i * step0
        for j in range(n1):
            u1 = hi[1] if j == n1 - 1 else lo[1] + j * step1
            v = 0.5 * kappa * (u0 * u0 + u1 * u1) + b[0] * u0 + b[1] * u1
            if v < best:
                best = v
                a0 = u0
                a1 = u1
    return a0, a1, best


def _iso_quad_argmin_1d_numpy(kappa, b, lo, hi, step, n_pts):
    u = lo + step * np.arange(n_pts)
    u[-1] = hi
    v = 0.5 * kappa * u * u + b * u
    i = int(np.argmin(v))
    return u[i], v[i]


def _iso_quad_argmin_2d_numpy(kappa, b, lo, hi, step0, n0, step1, n1):
    u1 = lo[1] + step1 * np.arange(n1)
    u1[-1] = hi[1]
    best = math.inf
    a0 = lo[0]
    a1 = lo[1]
    block = max(1, int(2e6) // n1)
    for start in range(0, n0, block):
        stop = min(start + block, n0)
        u0 = lo[0] + step0 * np.arange(start, stop)
        if stop == n0:
            u0[-1] = hi[0]
        U0 = u0[:, None]
        v = 0.5 * kappa * (U0 * U0 + u1 * u1) + b[0] * U0 + b[1] * u1
        i = int(np.argmin(v))
        r, s = divmod(i, n1)
        if v[r, s] < best:
            best = float(v[r, s])
            a0 = float(u0[r])
            a1 = float(u1[s])
    return a0, a1, best


# ---------------------------------------------------------------------------
# lane binding
# ---------------------------------------------------------------------------

_PY_IMPLS = {
    "schedule_scan": _schedule_scan_loop,
    "history_margin": _history_margin_numpy,
    "qp_scan_1d": _qp_scan_1d_numpy,
    "qp_scan_2d": _qp_scan_2d_numpy,
    "qp_phi_argmin_1d": _qp_phi_argmin_1d_numpy,
    "qp_phi_argmin_2d": _qp_phi_argmin_2d_numpy,
    "iso_quad_argmin_1d": _iso_quad_argmin_1d_numpy,
    "iso_quad_argmin_2d": _iso_quad_argmin_2d_numpy,
}

if HAS_NUMBA:
    # The scan loops call _interval_dist through the module global, so the
    # global is rebound to its compiled form before those loops first compile.
    # The numpy lane only ever uses _interval_dist_vec and is unaffected.
    _interval_dist = njit(cache=True)(_interval_dist)
    _NB_IMPLS = {
        "schedule_scan": njit(cache=True)(_schedule_scan_loop),
        "history_margin": njit(cache=True)(_history_margin_loop),
        "qp_scan_1d": njit(cache=True)(_qp_scan_1d_loop),
        "qp_scan_2d": njit(cache=True)(_qp_scan_2d_loop),
        "qp_phi_argmin_1d": njit(cache=True)(_qp_phi_argmin_1d_loop),
        "qp_phi_argmin_2d": njit(cache=True)(_qp_phi_argmin_2d_loop),
        "iso_quad_argmin_1d": njit(cache=True)(_iso_quad_argmin_1d_loop),
        "iso_quad_argmin_2d": njit(cache=True)(_iso_quad_argmin_2d_loop),
    }
else:  # pragma: no cover
    _NB_IMPLS = None


def get_impl(name: str, backend: str):
    """Fetch a kernel by name for an explicit lane ("numba" or "numpy")."""
    if backend == "numpy":
        return _PY_IMPLS[name]
    if backend == "numba":
        if _NB_IMPLS is None:
            raise ImportError("numba lane requested but numba is unavailable")
        return _NB_IMPLS[name]
    raise ValueError(f"unknown backend {backend!r}")


_ACTIVE = _PY_IMPLS if BACKEND == "numpy" else _NB_IMPLS

schedule_scan = _ACTIVE["schedule_scan"]
history_margin = _ACTIVE["history_margin"]
qp_scan_1d = _ACTIVE["qp_scan_1d"]
qp_scan_2d = _ACTIVE["qp_scan_2d"]
qp_phi_argmin_1d = _ACTIVE["qp_phi_argmin_1d"]
qp_phi_argmin_2d = _ACTIVE["qp_phi_argmin_2d"]
iso_quad_argmin_1d = _ACTIVE["iso_quad_argmin_1d"]
iso_quad_argmin_2d = _ACTIVE["iso_quad_argmin_2d"]
