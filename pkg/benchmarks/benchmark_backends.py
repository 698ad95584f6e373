"""Time the compiled kernel lane against the pure-numpy lane.

Runs each hot kernel through both lanes on sized-up inputs, reports wall
times and the speedup, and verifies that the two lanes return identical
results (the library guarantees bit-for-bit agreement).

Usage: python benchmarks/benchmark_backends.py [--k-max N] [--grid N]
                                               [--history N] [--repeats R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from varfista._kernels import HAS_NUMBA, get_impl


def _time(fn, *args, repeats: int = 3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _fmt(name: str, t_nb: float, t_np: float, agree: bool) -> str:
    speed = t_np / t_nb if t_nb > 0 else float("inf")
    mark = "identical" if agree else "MISMATCH"
    return (f"{name:<22} numba {t_nb * 1e3:9.2f} ms   "
            f"numpy {t_np * 1e3:9.2f} ms   x{speed:6.1f}   {mark}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-max", type=int, default=100_000,
                    help="schedule scan length")
    ap.add_argument("--grid", type=int, default=2000,
                    help="points per axis for the 2-D scans")
    ap.add_argument("--history", type=int, default=2000,
                    help="synthetic run length for the history margin")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if not HAS_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    rows = []

    # schedule scan
    nb = get_impl("schedule_scan", "numba")
    py = get_impl("schedule_scan", "numpy")
    nb(12.0, 10)  # compile
    t_nb, out_nb = _time(nb, 12.0, args.k_max, repeats=args.repeats)
    t_py, out_py = _time(py, 12.0, args.k_max, repeats=args.repeats)
    rows.append(_fmt("schedule_scan", t_nb, t_py, out_nb == out_py))

    # history margin
    n = args.history
    lam = np.sort(rng.random(n + 1))[::-1].copy() + 0.1
    tau = rng.random(n) * 1e-3
    L = np.sort(rng.random(n))
    xi = np.sort(rng.integers(0, 8, n).astype(np.float64))
    nb = get_impl("history_margin", "numba")
    py = get_impl("history_margin", "numpy")
    nb(lam[:3], tau[:2], L[:2], xi[:2])
    t_nb, out_nb = _time(nb, lam, tau, L, xi, repeats=args.repeats)
    t_py, out_py = _time(py, lam, tau, L, xi, repeats=args.repeats)
    rows.append(_fmt("history_margin", t_nb, t_py, out_nb == out_py))

    # 2-D stationarity scan
    Q = np.array([[2.0, 0.3], [0.3, -1.0]])
    c = np.array([0.1, -0.2])
    lo = np.array([-1.0, -1.0])
    hi = np.array([1.0, 1.0])
    npts = args.grid
    step = 2.0 / (npts - 1)
    tol = 3.0 * step
    snap = 0.25 * step
    cap = 1_000_000
    nb = get_impl("qp_scan_2d", "numba")
    py = get_impl("qp_scan_2d", "numpy")
    out_a = np.empty((cap, 2))
    out_b = np.empty((cap, 2))
    nb(Q, c, lo, hi, 0.05, step, 8, step, 8, tol, snap, out_a, cap)
    t_nb, found_nb = _time(nb, Q, c, lo, hi, 0.05, step, npts, step, npts,
                           tol, snap, out_a, cap, repeats=args.repeats)
    t_py, found_py = _time(py, Q, c, lo, hi, 0.05, step, npts, step, npts,
                           tol, snap, out_b, cap, repeats=args.repeats)
    agree = (found_nb == found_py
             and np.array_equal(out_a[:found_nb], out_b[:found_py]))
    rows.append(_fmt("qp_scan_2d", t_nb, t_py, agree))

    # 2-D objective argmin
    nb = get_impl("qp_phi_argmin_2d", "numba")
    py = get_impl("qp_phi_argmin_2d", "numpy")
    nb(Q, c, lo, hi, 0.05, step, 8, step, 8)
    t_nb, out_nb = _time(nb, Q, c, lo, hi, 0.05, step, npts, step, npts,
                         repeats=args.repeats)
    t_py, out_py = _time(py, Q, c, lo, hi, 0.05, step, npts, step, npts,
                         repeats=args.repeats)
    rows.append(_fmt("qp_phi_argmin_2d", t_nb, t_py, out_nb == out_py))

    # 2-D anchor-subproblem argmin
    b = np.array([0.4, -0.7])
    nb = get_impl("iso_quad_argmin_2d", "numba")
    py = get_impl("iso_quad_argmin_2d", "numpy")
    nb(3.0, b, lo, hi, step, 8, step, 8)
    t_nb, out_nb = _time(nb, 3.0, b, lo, hi, step, npts, step, npts,
                         repeats=args.repeats)
    t_py, out_py = _time(py, 3.0, b, lo, hi, step, npts, step, npts,
                         repeats=args.repeats)
    rows.append(_fmt("iso_quad_argmin_2d", t_nb, t_py, out_nb == out_py))

    print(f"kernel timings (best of {args.repeats}; "
          f"grid {npts}x{npts}, schedule k_max {args.k_max}, "
          f"history {n}):")
    for r in rows:
        print(" ", r)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
