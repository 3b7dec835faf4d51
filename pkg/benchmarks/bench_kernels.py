"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (kernel, size) with the best-of-N time for each backend
and the speedup. Both backends are checked for identical output first.
"""

import argparse
import timeit

import numpy as np

from gauss_deanon import _kernels_py, kernels


def _perm_case(s, k, seed=0):
    rng = np.random.default_rng(seed)
    return (
        rng.random(s),
        np.triu(rng.random((s, s)), 1),
        rng.random((k, s)),
        np.triu(rng.random((k, s, s)), 1),
    )


def _cov_case(n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 400))
    return np.cov(x, bias=True), 400 ** -0.2


def _time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def _check(name, a, b):
    if not all(np.array_equal(x, y) for x, y in zip(a, b)):
        raise SystemExit(f"{name}: backends disagree")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    compiled = kernels.compiled
    if compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")

    print(f"{'kernel':<22}{'size':<16}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for s, k in [(2, 50), (3, 50), (5, 20), (7, 5), (8, 2)]:
        case = _perm_case(s, k)
        _check("perm_distances", _kernels_py.perm_distances(*case), compiled.perm_distances(*case))
        tp = _time(_kernels_py.perm_distances, case, args.repeat)
        tc = _time(compiled.perm_distances, case, args.repeat)
        print(f"{'perm_distances':<22}{f's={s} k={k}':<16}{tp * 1e6:>12.1f}{tc * 1e6:>12.1f}{tp / tc:>9.1f}x")
    for n in (40, 160, 640):
        case = _cov_case(n)
        _check("threshold_components", _kernels_py.threshold_components(*case), compiled.threshold_components(*case))
        tp = _time(_kernels_py.threshold_components, case, args.repeat)
        tc = _time(compiled.threshold_components, case, args.repeat)
        print(f"{'threshold_components':<22}{f'n={n}':<16}{tp * 1e6:>12.1f}{tc * 1e6:>12.1f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
