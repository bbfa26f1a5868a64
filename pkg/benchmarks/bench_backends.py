#!/usr/bin/env python3
"""Benchmark the compiled solver core against the NumPy fallback.

Times three workloads on one synthetic sample:

* cold box-QP solves across a spread of ridge levels,
* a full constrained radius scan (warm path),
* one regularized fit (outer search + refinement),

plus the projected-subgradient iteration for scale.  Run after building the
extension (``python setup.py build_ext --inplace``); the NumPy rows are
always available.
"""

import argparse
import time

import numpy as np

from svmlab._qp import have_compiled, solve_box_qp
from svmlab.distributions import SyntheticDist
from svmlab.kernels import KernelSpec, gram
from svmlab.solver import HingePathSolver, TrainConfig, projected_subgradient, train_regularized


def bench(n: int, seed: int):
    kernel = KernelSpec.circle_fourier()
    dist = SyntheticDist("hard_gap", m=1, eta0=0.2)
    x, y = dist.sample(n, seed=seed)
    K = gram(kernel, x)
    Q = K * np.outer(y, y)
    backends = ["numpy"] + (["compiled"] if have_compiled() else [])
    radii = [2.0**k / kernel.sup_bound for k in range(0, 9)]

    print(f"n={n}  backends={backends}")
    header = f"{'workload':<34}" + "".join(f"{b:>12}" for b in backends)
    print(header)
    print("-" * len(header))

    rows = {}
    for be in backends:
        t0 = time.time()
        for mu in (0.3, 0.03, 0.003):
            solve_box_qp(Q, mu, 1.0 / n, gap_tol=1e-7, backend=be)
        rows.setdefault("cold box-QP solves (3 ridges)", {})[be] = time.time() - t0

        t0 = time.time()
        path = HingePathSolver(kernel, x, y, backend=be)
        for R in radii:
            path.constrained(R, gap_tol=1e-5)
        rows.setdefault("constrained radius scan (9 R)", {})[be] = time.time() - t0

        t0 = time.time()
        path2 = HingePathSolver(kernel, x, y, backend=be)
        train_regularized(x, y, kernel, TrainConfig(phi="quadratic", lam=0.07), path=path2)
        rows.setdefault("regularized fit (grid + refine)", {})[be] = time.time() - t0

    t0 = time.time()
    projected_subgradient(K, y, 2.0, iters=2000)
    sub = time.time() - t0

    for name, vals in rows.items():
        print(f"{name:<34}" + "".join(f"{vals[b]:>11.3f}s" for b in backends))
    print(f"{'projected subgradient (2k iters)':<34}{sub:>11.3f}s  (backend-independent)")
    if have_compiled() and "constrained radius scan (9 R)" in rows:
        r = rows["constrained radius scan (9 R)"]
        print(f"\nscan speedup compiled vs numpy: {r['numpy'] / r['compiled']:.2f}x")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    bench(args.n, args.seed)
