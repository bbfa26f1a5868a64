"""Synthetic classification distributions on the unit circle.

The marginal is always uniform on [0, 1).  The conditional positive-class
probability eta(x) follows the sign of sin(2 pi m x) and is bounded away
from 1/2 by a configurable gap, so the Bayes classifier has closed form
sign(sin(2 pi m x)) and both noise-gap assumptions hold with certified
constants:

* ``hard_gap``:  eta = 1/2 + eta0 * sgn(sin(2 pi m x)).  The distance of
  eta from 1/2 is exactly eta0 and min(eta, 1-eta) = 1/2 - eta0.
* ``banded``:    eta = 1/2 + sgn * (eta0 + (1/2 - eta1 - eta0)|sin(2 pi m x)|),
  requiring eta0 + eta1 <= 1/2; the distance from 1/2 stays >= eta0 and
  min(eta, 1-eta) >= eta1.

sgn(0) is taken as +1 (ties of the Bayes classifier are broken to +1),
so the gap holds at every point, including the sign-change grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["SyntheticDist", "replicate_rng", "dist_to_config", "dist_from_config"]


def replicate_rng(master_seed: int, index: int = 0) -> np.random.Generator:
    """Deterministic per-replicate stream from a master seed.

    Counter-based Philox keyed by (master_seed, index): replicate streams
    are independent of execution order and worker count.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _sgn_pos(v: np.ndarray) -> np.ndarray:
    """Sign with sgn(0) = +1."""
    return np.where(v >= 0.0, 1.0, -1.0)


@dataclass(eq=False)
class SyntheticDist:
    """Uniform-marginal distribution with a gap-certified eta."""

    form: str  # "hard_gap" | "banded"
    m: int = 1
    eta0: float = 0.2
    eta1: Optional[float] = None  # banded only

    def __post_init__(self):
        if self.form not in ("hard_gap", "banded"):
            raise ValueError(f"unknown eta form {self.form!r}")
        if not (self.m >= 1 and int(self.m) == self.m):
            raise ValueError("frequency m must be a positive integer")
        if not (0.0 < self.eta0 <= 0.5):
            raise ValueError("eta0 must lie in (0, 1/2]")
        if self.form == "banded":
            if self.eta1 is None or not (0.0 < self.eta1 <= 0.5):
                raise ValueError("banded form needs eta1 in (0, 1/2]")
            if self.eta0 + self.eta1 > 0.5 + 1e-15:
                raise ValueError("banded form requires eta0 + eta1 <= 1/2")

    # -- certified gap constants ------------------------------------------

    @property
    def gap_eta0(self) -> float:
        """Certified lower bound on |eta - 1/2|."""
        return self.eta0

    @property
    def gap_eta1(self) -> float:
        """Certified lower bound on min(eta, 1 - eta); 0 when eta hits {0,1}."""
        if self.form == "hard_gap":
            return 0.5 - self.eta0
        return float(self.eta1)

    @property
    def breakpoints(self) -> np.ndarray:
        """Sorted eta discontinuity / Bayes sign-change locations in [0, 1)."""
        return np.arange(0, 2 * self.m) / (2.0 * self.m)

    # -- conditional law and Bayes classifier ------------------------------

    def eta(self, x):
        scalar = np.isscalar(x)
        xs = np.mod(np.atleast_1d(np.asarray(x, dtype=float)), 1.0)
        sgn = _sgn_pos(np.sin(2.0 * np.pi * self.m * xs))
        if self.form == "hard_gap":
            vals = 0.5 + self.eta0 * sgn
        else:
            amp = self.eta0 + (0.5 - self.eta1 - self.eta0) * np.abs(
                np.sin(2.0 * np.pi * self.m * xs)
            )
            vals = 0.5 + sgn * amp
        return float(vals[0]) if scalar else vals

    def bayes(self):
        """The Bayes classifier as a vectorized +-1 function."""
        m = self.m

        def s_star(x):
            scalar = np.isscalar(x)
            xs = np.mod(np.atleast_1d(np.asarray(x, dtype=float)), 1.0)
            vals = _sgn_pos(np.sin(2.0 * np.pi * m * xs))
            return float(vals[0]) if scalar else vals

        s_star.breakpoints = self.breakpoints
        return s_star

    # -- sampling -----------------------------------------------------------

    def sample(self, n: int, seed=None, rng: Optional[np.random.Generator] = None):
        """n i.i.d. pairs; X uniform, Y = +1 with probability eta(X)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if rng is None:
            rng = replicate_rng(0 if seed is None else seed)
        x = rng.random(n)
        y = np.where(rng.random(n) < self.eta(x), 1.0, -1.0)
        return x, y


def sample_to_csv(path, x: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for xi, yi in zip(x, y):
            w.writerow([repr(float(xi)), int(yi)])


def dist_to_config(dist: SyntheticDist) -> dict:
    cfg = {"form": dist.form, "m": dist.m, "eta0": dist.eta0}
    if dist.eta1 is not None:
        cfg["eta1"] = dist.eta1
    return cfg


def dist_from_config(cfg: dict) -> SyntheticDist:
    return SyntheticDist(
        form=cfg["form"],
        m=int(cfg.get("m", 1)),
        eta0=float(cfg.get("eta0", 0.2)),
        eta1=cfg.get("eta1"),
    )
