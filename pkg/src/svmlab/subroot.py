"""Sub-root functions and their unique positive fixed point.

A sub-root function is nonnegative, nondecreasing, with psi(r)/sqrt(r)
nonincreasing for r > 0.  Such a function is continuous and psi(r) = r has
a unique positive solution r*; moreover r >= psi(r) exactly when r >= r*,
which makes bracketing by doubling plus bisection unconditionally correct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["SubrootFn", "FixedPointResult", "is_subroot", "solve_fixed_point"]

MAX_DOUBLINGS = 1 << 10


@dataclass
class SubrootFn:
    eval: Callable[[float], float]
    domain_hint: float = 1.0

    def __call__(self, r: float) -> float:
        return float(self.eval(r))


@dataclass
class FixedPointResult:
    r_star: float
    converged: bool
    degenerate: bool = False

    def __float__(self) -> float:
        return self.r_star


def is_subroot(psi, grid: Sequence[float], tol: float = 1e-12) -> bool:
    """Check both monotonicity conditions on an ascending positive grid."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly ascending")
    vals = np.array([psi(r) for r in grid], dtype=float)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(vals < -tol * scale):
        return False
    if np.any(np.diff(vals) < -tol * scale):
        return False
    ratio = vals / np.sqrt(grid)
    rscale = max(1.0, float(np.max(np.abs(ratio))))
    return not np.any(np.diff(ratio) > tol * rscale)


def solve_fixed_point(psi, tol: float = 1e-10) -> FixedPointResult:
    """Unique positive solution of psi(r) = r for a certified sub-root psi.

    Brackets by doubling from r = 1 (up while psi(r) > r, down while
    psi(r) < r), then bisects; stops when |psi(r) - r| <= tol * max(1, r).
    A psi that evaluates to 0 everywhere tested is flagged degenerate.
    """
    r = 1.0
    v = psi(r)
    if v > r:
        lo = r
        for _ in range(MAX_DOUBLINGS):
            r *= 2.0
            v = psi(r)
            if v <= r:
                break
            lo = r
        else:
            raise ValueError("no upper bracket found: input does not look sub-root")
        hi = r
    else:
        hi = r
        zero_run = v == 0.0
        for _ in range(MAX_DOUBLINGS):
            r *= 0.5
            v = psi(r)
            if v >= r:
                break
            hi = r
            zero_run = zero_run and v == 0.0
        else:
            if zero_run and psi(0.0) == 0.0:
                return FixedPointResult(0.0, True, degenerate=True)
            raise ValueError("no lower bracket found: input does not look sub-root")
        lo = r

    # Invariant: psi(lo) >= lo and psi(hi) <= hi; bisect to relative width.
    for _ in range(400):
        if hi - lo <= 0.25 * tol * max(lo, 1e-300):
            break
        mid = 0.5 * (lo + hi)
        if psi(mid) > mid:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return FixedPointResult(mid, abs(psi(mid) - mid) <= tol * max(1.0, mid))
