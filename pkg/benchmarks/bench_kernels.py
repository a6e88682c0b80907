"""Time the jitted kernels against the pure numpy fallbacks.

Run twice to see both dispatch paths end to end:

    python3 benchmarks/bench_kernels.py
    HEXTRAJ_NO_NUMBA=1 python3 benchmarks/bench_kernels.py

Within one process both implementations are timed directly, so a single
run already prints the comparison; the env flag additionally proves the
fallback wiring is what the package uses when numba is unavailable.
"""

import time

import numpy as np

from hextraj import _kernels


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm up; for numba this triggers compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(7)
    n = 600
    a_lat = rng.uniform(40, 50, n)
    a_lon = rng.uniform(-10, 0, n)
    b_lat = a_lat + rng.normal(0, 0.05, n)
    b_lon = a_lon + rng.normal(0, 0.05, n)
    big = 200_000
    c_lat = rng.uniform(40, 50, big)
    c_lon = rng.uniform(-10, 0, big)
    d_lat = c_lat + rng.normal(0, 0.05, big)
    d_lon = c_lon + rng.normal(0, 0.05, big)
    cl_lat = rng.uniform(44, 46, 3000)
    cl_lon = rng.uniform(-6, -4, 3000)

    print(f"numba enabled: {_kernels.NUMBA_ENABLED}")
    rows = [
        ("haversine pairs 200k", _kernels.haversine_np, _kernels.haversine_nb,
         (c_lat, c_lon, d_lat, d_lon)),
        ("frechet 600x600", _kernels.frechet_np, _kernels.frechet_nb,
         (a_lat, a_lon, b_lat, b_lon)),
        ("dbscan 3000 pts", _kernels.dbscan_np, _kernels.dbscan_nb,
         (cl_lat, cl_lon, 0.05, 4)),
    ]
    print(f"{'kernel':<28}{'numpy':>12}{'jitted':>12}{'speedup':>10}")
    for name, np_fn, nb_fn, args in rows:
        t_np = timeit(np_fn, *args)
        if _kernels.NUMBA_ENABLED:
            t_nb = timeit(nb_fn, *args)
            print(f"{name:<28}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<28}{t_np * 1e3:>10.2f}ms{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
