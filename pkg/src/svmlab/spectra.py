"""Eigenvalues of the kernel integral operator, with certified tail sums.

For the circle cosine-series kernel under the uniform marginal the operator
diagonalizes in the Fourier basis: the constant function carries eigenvalue
a0 and each frequency k >= 1 contributes the pair a_k/2, a_k/2.  The model
stores an explicit nonincreasing prefix of eigenvalues plus a closed-form
bound on the mass beyond it, so tail sums over the whole sequence stay cheap.

Empirical spectra come from a dense symmetric eigensolve of Gram/n; those
are finite sequences with zero tail.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import KernelSpec, power_tail_bound

__all__ = ["SpectrumModel", "analytic_spectrum", "empirical_spectrum", "tail_sum"]

DEFAULT_N_EXPLICIT = 10_000


@dataclass(frozen=True)
class PowerLawTailRule:
    """Mass of circle-kernel eigenvalue pairs for frequencies beyond a prefix.

    Frequencies k in [k_start, k_end] (k_end None = infinite) each contribute
    total mass amplitude * k^(-2 smoothness) split over an eigenvalue pair.
    """

    amplitude: float
    smoothness: float
    k_start: int
    k_end: Optional[int] = None

    def mass_from_freq(self, k0: int) -> float:
        """Certified value of sum over frequencies k >= k0 within range."""
        k0 = max(k0, self.k_start)
        if self.k_end is not None:
            if k0 > self.k_end:
                return 0.0
            ks = np.arange(k0, self.k_end + 1, dtype=float)
            return self.amplitude * float(np.sum(ks ** (-2.0 * self.smoothness)))
        return self.amplitude * power_tail_bound(self.smoothness, k0)

    def eigenvalue_at_freq(self, k: int) -> float:
        if k < self.k_start or (self.k_end is not None and k > self.k_end):
            return 0.0
        return 0.5 * self.amplitude * k ** (-2.0 * self.smoothness)


class SpectrumModel:
    """Nonincreasing eigenvalue sequence with a tail rule beyond the prefix."""

    def __init__(self, eigenvalues, tail_rule: Optional[PowerLawTailRule] = None):
        lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1].copy()
        if lam.size and lam[-1] < -1e-12 * max(1.0, lam[0]):
            raise ValueError("eigenvalues must be nonnegative")
        lam = np.maximum(lam, 0.0)
        self.eigenvalues = lam
        self.tail_rule = tail_rule
        self._cum = np.concatenate([[0.0], np.cumsum(lam)])
        self._beyond_prefix = tail_rule.mass_from_freq(tail_rule.k_start) if tail_rule else 0.0

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def total_sum(self) -> float:
        return float(self._cum[-1] + self._beyond_prefix)

    def tails_upto(self, d_max: int) -> np.ndarray:
        """Vector of tail_sum(d) for d = 0..d_max (d_max <= prefix length)."""
        d_max = min(d_max, len(self.eigenvalues))
        return (self._cum[-1] - self._cum[: d_max + 1]) + self._beyond_prefix

    def tail_sum(self, d: int) -> float:
        """sum_{j > d} lambda_j including the certified remainder."""
        if d < 0:
            raise ValueError("d must be nonnegative")
        n = len(self.eigenvalues)
        if d <= n:
            return float(self._cum[-1] - self._cum[d] + self._beyond_prefix)
        if self.tail_rule is None:
            return 0.0
        # Index j=1 is the constant mode, indices 2k, 2k+1 the pair of
        # frequency k; a split pair leaves half of one frequency's mass.
        rule = self.tail_rule
        mass = rule.mass_from_freq(d // 2 + 1)
        if d % 2 == 0:
            mass += rule.eigenvalue_at_freq(d // 2)
        return float(mass)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, lam in enumerate(self.eigenvalues, start=1):
                w.writerow([i, repr(float(lam))])


def analytic_spectrum(kernel: KernelSpec, n_explicit: int = DEFAULT_N_EXPLICIT) -> SpectrumModel:
    """Operator spectrum of a circle cosine-series kernel (uniform marginal).

    The explicit prefix covers the constant mode plus full frequency pairs up
    to roughly n_explicit entries; the rest is carried by the tail rule.
    """
    if kernel.family != "circle_fourier":
        raise ValueError("analytic spectrum is only available for circle_fourier kernels")
    p = kernel.params
    a0, amp, s = p["a0"], p["amplitude"], p["smoothness"]
    n_freq = p["truncation"]  # None = infinite series
    k_expl = max((n_explicit - 1) // 2, 1)
    if n_freq is not None:
        k_expl = min(k_expl, n_freq)
    ks = np.arange(1, k_expl + 1, dtype=float)
    pair_vals = 0.5 * amp * ks ** (-2.0 * s)
    lam = np.concatenate([[a0], np.repeat(pair_vals, 2)])
    if n_freq is not None and n_freq <= k_expl:
        tail_rule = None
    else:
        tail_rule = PowerLawTailRule(amp, s, k_expl + 1, n_freq)
    return SpectrumModel(lam, tail_rule)


def empirical_spectrum(G: np.ndarray, n: int) -> SpectrumModel:
    """Spectrum of Gram/n: clamped, sorted eigenvalues; zero tail beyond."""
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("Gram matrix must be square")
    scale = max(1.0, float(np.max(np.abs(G))))
    if not np.all(np.abs(G - G.T) <= 1e-8 * scale):
        raise ValueError("Gram matrix must be symmetric")
    if n < 1:
        raise ValueError("sample size must be >= 1")
    lam = np.linalg.eigvalsh(0.5 * (G + G.T) / float(n))
    return SpectrumModel(np.maximum(lam, 0.0))


def tail_sum(spec: SpectrumModel, d: int) -> float:
    """Module-level alias for :meth:`SpectrumModel.tail_sum`."""
    return spec.tail_sum(d)
