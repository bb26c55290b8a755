"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--json PATH]

Times each kernel on representative sizes, then two end-to-end workloads
(a C/3 discharge and a random-forest fit) with the package kernels swapped
between backends. Results from both backends are also compared.
"""

import argparse
import json
import time
from contextlib import contextmanager

import numpy as np

from batwb import kernels
from batwb.espm import SimOptions, Simulator, constant_current_profile
from batwb.ocp import default_ocp
from batwb.params import SpatialGrid, preset
from batwb.trees import ForestOptions, forest_fit

NAMES = ("tridiag_solve", "implicit_diffusion", "best_split")


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


@contextmanager
def use_backend(name):
    mod = kernels.backend_module(name)
    saved = {k: getattr(kernels, k) for k in NAMES}
    for k in NAMES:
        setattr(kernels, k, getattr(mod, k))
    try:
        yield
    finally:
        for k, v in saved.items():
            setattr(kernels, k, v)


def micro_cases(rng):
    cases = []
    for n in (20, 100, 1000):
        lower, upper = -rng.random(n), -rng.random(n)  # full length; ends ignored
        diag = 2.5 + rng.random(n)
        rhs = rng.random(n)
        cases.append((f"tridiag_solve n={n}", "tridiag_solve", (lower, diag, upper, rhs), 2000))
        c, cap, cond, src = rng.random(n), 0.5 + rng.random(n), rng.random(n - 1), rng.random(n)
        cases.append((f"implicit_diffusion n={n}", "implicit_diffusion",
                      (c, cap, cond, src, 0.1, 0.01, 0.0), 2000))
    for n in (100, 1000, 10000):
        x = np.sort(rng.random(n))
        y = rng.standard_normal(n)
        y -= y.mean()
        cases.append((f"best_split n={n}", "best_split", (x, y, 5), 200))
    return cases


def end_to_end():
    cell = preset("nmc_graphite")
    ocp = default_ocp("nmc")
    prof = constant_current_profile(cell.capacity / 3.0, 3 * 3600.0, 10.0)
    sim = Simulator(cell, ocp, SpatialGrid(), SimOptions(v_min=2.8))
    rng = np.random.default_rng(0)
    X = rng.random((2000, 10))
    y = np.sin(6 * X[:, 0]) + X[:, 1] ** 2 + 0.05 * rng.standard_normal(2000)
    fopts = ForestOptions(T=20, max_depth=10, min_leaf=5, feature_rate=0.6)
    return [("C/3 discharge (20 r-nodes)", lambda: sim.run(prof).V),
            ("forest fit 2000x10, T=20", lambda: forest_fit(X, y, fopts).trees[0].value)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write results to this file")
    args = ap.parse_args(argv)
    py = kernels.backend_module("python")
    try:
        cy = kernels.backend_module("cython")
    except ImportError:
        print("compiled backend not built; nothing to compare")
        return 1
    rows = []
    for label, name, a, inner in micro_cases(np.random.default_rng(0)):
        f_py, f_cy = getattr(py, name), getattr(cy, name)
        r_py, r_cy = f_py(*a), f_cy(*a)
        diff = float(np.max(np.abs(np.subtract(r_py, r_cy))))
        t_py = best_time(lambda: [f_py(*a) for _ in range(inner)], args.repeat) / inner
        t_cy = best_time(lambda: [f_cy(*a) for _ in range(inner)], args.repeat) / inner
        rows.append({"case": label, "python_s": t_py, "cython_s": t_cy, "max_abs_diff": diff})
    for label, fn in end_to_end():
        out = {}
        times = {}
        for b in ("python", "cython"):
            with use_backend(b):
                out[b] = np.asarray(fn())
                times[b] = best_time(fn, max(1, args.repeat - 1))
        diff = float(np.max(np.abs(out["python"] - out["cython"])))
        rows.append({"case": label, "python_s": times["python"], "cython_s": times["cython"],
                     "max_abs_diff": diff})
    print(f"{'case':34s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>8s} {'max|diff|':>10s}")
    for r in rows:
        print(f"{r['case']:34s} {r['python_s']:12.3e} {r['cython_s']:12.3e} "
              f"{r['python_s'] / r['cython_s']:8.1f} {r['max_abs_diff']:10.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
