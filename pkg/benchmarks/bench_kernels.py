"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from d2dsim import _kernels_py

try:
    from d2dsim import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def cases(mod):
    rng = np.random.default_rng(0)
    a = rng.uniform(0.1, 50, 2000)
    x = rng.uniform(0, 100, 2000)
    new = rng.poisson(5.0, size=(20000, 4)).astype(np.int64)
    new[:, 0] = rng.poisson(20.0, size=20000)
    need = int(np.cumsum(new, axis=1)[:, :-1].sum())
    u = rng.random(need)
    ks = np.arange(-60, 120, dtype=np.int64)
    return {
        "gammainc_lower x2000": lambda: [mod.gammainc_lower(float(ai), float(xi)) for ai, xi in zip(a, x)],
        "ibp_old_counts 20000x4": lambda: mod.ibp_old_counts(new, u),
        "skellam_pmf 180 pts": lambda: mod.skellam_pmf(20.0, 5.0, ks),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    py = cases(_kernels_py)
    cy = cases(_kernels_c) if _kernels_c is not None else {}
    print(f"{'kernel':<26}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn in py.items():
        t_py = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
        if name in cy:
            t_cy = min(timeit.repeat(cy[name], number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<26}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>9.1f}x")
        else:
            print(f"{name:<26}{t_py:>12.2f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
