"""Compare the numba and numpy kernel backends, and the EA and CF engines.

Usage::

    python benchmarks/bench_kernels.py [--tuples 64] [--dim 35] [--repeat 200]
    python benchmarks/bench_kernels.py --engines --points 4000
"""

import argparse
import statistics
import time

import numpy as np

from emastream import _kernels
from emastream.engine import EngineState, process_point, window_rebalance
from emastream.params import Params
from emastream.summary import Point


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def kernel_cases(m, d, n_window, rng):
    p = rng.random(d)
    mean = rng.random((m, d))
    meansq = mean ** 2 + rng.choice([0.0, 0.01], size=(m, d))
    ids = np.arange(m, dtype=np.int64)
    w = rng.random(m) * 100
    buf = rng.random((m, n_window, d))
    times = np.tile(np.arange(n_window, dtype=np.int64), (m, 1))
    head = np.zeros(m, dtype=np.int64)
    count = np.full(m, n_window, dtype=np.int64)
    now = np.full(m, n_window - 1, dtype=np.int64)
    X = rng.random((1000, d))
    W = rng.choice([1.0, 0.001], size=X.shape)
    return {
        "ea_hypothetical": lambda k: k.ea_hypothetical(p, mean, meansq, 0.01),
        "cf_hypothetical": lambda k: k.cf_hypothetical(p, n_window, mean, meansq, w, now, buf, times,
                                                       head, count, 0.2324, n_window),
        "select": lambda k: k.select(p, mean, meansq, mean, meansq, w, ids, 0.002, 1000.0, 1000.0,
                                     30, n_window, 0.9, True),
        "degrade_ea": lambda k: k.degrade_ea(mean.copy(), meansq.copy(), w.copy(), 0, 0.99, True),
        "pairwise_sq(1000)": lambda k: k.pairwise_sq(X, W),
    }


def bench_kernels(args):
    rng = np.random.default_rng(0)
    cases = kernel_cases(args.tuples, args.dim, args.window, rng)
    backends = [_kernels.NUMPY] + ([_kernels.NUMBA] if _kernels.NUMBA is not None else [])
    for k in backends:
        _kernels.warmup(k)
        k.pairwise_sq(np.zeros((2, 2)), np.ones((2, 2)))
    print(f"{'kernel':<20}" + "".join(f"{k.name + ' (us)':>16}" for k in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        rep = max(3, args.repeat // 50) if name.startswith("pairwise") else args.repeat
        med = [best_of(lambda: fn(k), rep)[1] * 1e6 for k in backends]
        speed = f"{med[0] / med[1]:>9.1f}x" if len(med) == 2 else ""
        print(f"{name:<20}" + "".join(f"{v:>16.1f}" for v in med) + speed)


def bench_engines(args):
    rng = np.random.default_rng(1)
    params = Params(n_window=args.window, eps=args.eps)
    centers = rng.random((5, args.dim))
    X = centers[rng.integers(0, 5, size=args.points)] + rng.normal(0, args.noise, size=(args.points, args.dim))
    # a few dimensions carry no cluster structure, so pdim stays under pi
    X[:, : args.dim // 4] = rng.random((args.points, args.dim // 4))
    X = np.clip(X, 0, 1)
    backend = _kernels.backend(args.backend)
    _kernels.warmup(backend)
    print(f"engine latency, backend={backend.name}, N={args.window}, d={args.dim}, eps={args.eps}")
    for kind in ("EA", "CF"):
        s = EngineState(args.dim, params, kind, backend=backend.name)
        per_window = []
        t0 = time.perf_counter()
        for i, x in enumerate(X):
            process_point(Point(x), s)
            if (i + 1) % args.window == 0:
                window_rebalance(s)
                t1 = time.perf_counter()
                per_window.append(t1 - t0)
                t0 = t1
        print(f"  {kind}: median {statistics.median(per_window) * 1e3:8.2f} ms/window over "
              f"{len(per_window)} windows, {len(s.cores)} cores, {len(s.outliers)} outliers, "
              f"resident values {s.resident_values()}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tuples", type=int, default=64)
    ap.add_argument("--dim", type=int, default=35)
    ap.add_argument("--window", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--engines", action="store_true", help="time the EA and CF engines instead")
    ap.add_argument("--points", type=int, default=4000)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--noise", type=float, default=0.01, help="spread around the five centers")
    ap.add_argument("--backend", choices=("numba", "numpy"))
    args = ap.parse_args(argv)
    if args.engines:
        bench_engines(args)
    else:
        bench_kernels(args)


if __name__ == "__main__":
    main()
