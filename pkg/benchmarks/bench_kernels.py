"""Compare the compiled and pure-Python Jacobi kernels.

Run ``python benchmarks/bench_kernels.py``. Each backend solves the same
random matrices; the table shows the median time per call and the largest
disagreement with the other backend.
"""

import argparse
import timeit

import numpy as np

from qadapose._backend import available_backends

TOL = 1e-15
SWEEPS = 60
# shapes the solvers actually use: EPnP M^T M, RPnP/IPPE design matrices, Procrustes
CASES = [
    ("eigh 9x9", "eigh", (9, 9)),
    ("eigh 12x12", "eigh", (12, 12)),
    ("svd 3x3", "svd", (3, 3)),
    ("svd 8x5", "svd", (8, 5)),
    ("svd 20x9", "svd", (20, 9)),
]


def _inputs(kind, shape, count, rng):
    mats = []
    for _ in range(count):
        a = rng.standard_normal(shape)
        mats.append(a @ a.T if kind == "eigh" else a)
    return mats


def _call(mod, kind):
    if kind == "eigh":
        return lambda a: mod.jacobi_eigh(a, TOL, SWEEPS)
    return lambda a: mod.jacobi_svd(a, TOL, SWEEPS)


def run(count=200, repeat=5, seed=0):
    rng = np.random.default_rng(seed)
    backends = available_backends()
    rows = []
    for label, kind, shape in CASES:
        mats = _inputs(kind, shape, count, rng)
        times, values = {}, {}
        for name, mod in backends.items():
            f = _call(mod, kind)
            t = timeit.repeat(lambda: [f(a) for a in mats], number=1, repeat=repeat)
            times[name] = 1e6 * float(np.median(t)) / count
            # singular/eigen values are basis independent, so they are comparable
            values[name] = np.array([np.sort(f(a)[1 if kind == "svd" else 0]) for a in mats])
        diff = 0.0
        if len(values) == 2:
            diff = float(np.max(np.abs(values["python"] - values["cython"])))
        rows.append((label, times, diff))
    return backends, rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    backends, rows = run(args.count, args.repeat)
    names = list(backends)
    print(f"{'case':<12}" + "".join(f"{n + ' us':>14}" for n in names) + f"{'speedup':>10}{'max diff':>12}")
    for label, times, diff in rows:
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<12}" + "".join(f"{times[n]:14.1f}" for n in names) + f"{speed:10.1f}{diff:12.2e}")
    if "cython" not in backends:
        print("compiled backend not built; only the pure-Python kernels were timed")


if __name__ == "__main__":
    main()
