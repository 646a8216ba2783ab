"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N]

Both flavours are imported directly, so the ``YIELDFLOW_DISABLE_NUMBA`` flag
does not matter here.  The first numba call (compilation or cache load) is
excluded from the timings.
"""

import argparse
import time

import numpy as np

from yieldflow import kernels
from yieldflow.profiles import make_params


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    p = make_params(2.0)
    v = rng.uniform(p.f_top - 1.0 / -p.K, p.f_top, 200_000)
    y = rng.uniform(-1.0, 1.0, 200_000)
    z = rng.uniform(-8.0, 0.0, 200_000)
    u = rng.uniform(0.0, 1.0, (129, 513))
    hy, hz = 2.0 / 128, 8.0 / 512
    zc = np.abs(np.linspace(-8.0, 0.0, 513)[:-1] + 0.5 * hz)
    return {
        "f_angle_inverse (2e5 values)": (
            lambda: kernels.f_angle_inverse_numba(v, p.lam),
            lambda: kernels.f_angle_inverse_numpy(v, p.lam),
        ),
        "cone_angles (2e5 points)": (
            lambda: kernels.cone_angles_numba(y, z, p.lam, p.K),
            lambda: kernels.cone_angles_numpy(y, z, p.lam, p.K),
        ),
        "edge_coefficients (129x513)": (
            lambda: kernels.edge_coefficients_numba(u, hy, hz, zc, 1e-4),
            lambda: kernels.edge_coefficients_numpy(u, hy, hz, zc, 1e-4),
        ),
        "corner_energy (129x513)": (
            lambda: kernels.corner_energy_numba(u, hy, hz, zc, 1e-4),
            lambda: kernels.corner_energy_numpy(u, hy, hz, zc, 1e-4),
        ),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':32s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speed-up':>9s}")
    for name, (fast, ref) in cases().items():
        tn = best_of(fast, args.repeat)
        tp = best_of(ref, args.repeat)
        print(f"{name:32s} {1e3 * tn:11.2f} {1e3 * tp:11.2f} {tp / tn:8.1f}x")


if __name__ == "__main__":
    main()
