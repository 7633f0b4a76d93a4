"""Compare the compiled core with the NumPy fallback.

Times the direct mat-vec on a planar disk and the four-point lattice search,
and reports the largest relative disagreement between the two backends.

    python3 benchmarks/bench_backends.py [--resolution 120] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from maxenergy import _backend, geometry, kernels, pointset


def _best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_matvec(impls, resolution, repeat):
    dom = geometry.build_mask_region(geometry.disk(1.0), resolution)
    v = np.random.default_rng(0).random(dom.n_nodes) * dom.weights
    code, p0, p1 = kernels.exponential(1.0).core_args(2)
    results = {}
    for name, impl in impls.items():
        t, out = _best_time(lambda: impl.apply_direct(dom.nodes, v, code, p0, p1, False, False, 1), repeat)
        results[name] = (t, out)
    return dom.n_nodes, results


def bench_search(impls, repeat):
    params = pointset.AdmissibleParams(0.5, 2.5)
    sep, cover = params.bounds(4)
    lattice = -1.0 + 2.0 * np.arange(81) / 80
    cand = np.ascontiguousarray(np.tile(lattice, (4, 1)))
    counts = np.full(4, 81, dtype=np.intc)
    code, p0, p1 = kernels.exponential(1.0).core_args(1)
    results = {}
    for name, impl in impls.items():
        t, out = _best_time(
            lambda: impl.interval_search(cand, counts, -1.0, 1.0, sep, cover, code, p0, p1, 1e-12, 0, 0.0), repeat
        )
        results[name] = (t, out)
    return results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolution", type=int, default=120)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = _backend.available_backends()
    print(f"backends: {', '.join(impls)} (default: {_backend.BACKEND})")

    n, res = bench_matvec(impls, args.resolution, args.repeat)
    print(f"\ndirect mat-vec, disk with {n} nodes")
    for name, (t, _) in res.items():
        print(f"  {name:8s} {t * 1e3:10.1f} ms")
    if len(res) == 2:
        a, b = (out for _, out in res.values())
        print(f"  max relative difference {np.max(np.abs(a - b) / np.abs(b)):.2e}")
        (ta, _), (tb, _) = res.values()
        print(f"  speed-up {max(ta, tb) / min(ta, tb):.1f}x")

    res = bench_search(impls, args.repeat)
    print("\nfour-point lattice search, 81 sites")
    for name, (t, out) in res.items():
        print(f"  {name:8s} {t * 1e3:10.1f} ms   best index {tuple(int(i) for i in out[2])}  admissible {out[3]}")
    if len(res) == 2:
        (ta, _), (tb, _) = res.values()
        print(f"  speed-up {max(ta, tb) / min(ta, tb):.1f}x")


if __name__ == "__main__":
    main()
