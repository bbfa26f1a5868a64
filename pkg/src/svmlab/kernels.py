"""Kernels, Gram matrices and finite kernel expansions.

Three kernel families are supported:

* ``gaussian``: k(x, y) = exp(-(x - y)^2 / (2 bandwidth^2)) on the real
  line, used to exercise the empirical-spectrum code path (sup bound 1).
* ``circle_fourier``: translation invariant on the unit circle [0, 1),

      k(x, y) = a0 + A * sum_{k>=1} k^(-2s) cos(2 pi k (x - y)),

  with smoothness s > 1/2.  For integer s in {1, 2, 3} the cosine series
  has a Bernoulli-polynomial closed form and ``truncation=None`` evaluates
  it exactly; otherwise the series is summed up to ``truncation`` terms and
  the dropped mass is bounded by :meth:`KernelSpec.truncation_remainder`.
* ``table``: explicit symmetric values on a fixed finite grid of points,
  mostly useful for tests and adversarial inputs.

All families are positive semi-definite by construction (nonnegative
cosine coefficients / Bochner for the first two); ``table`` is whatever the
caller supplies, which is why :func:`rkhs_norm` guards the radicand.

Circle points are ordinary floats; they are reduced mod 1 and distances
are folded to [0, 1/2] before evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "KernelSpec",
    "RepresenterFn",
    "eval_kernel",
    "gram",
    "rep_eval",
    "rkhs_norm",
    "kernel_to_config",
    "kernel_from_config",
    "kernel_to_toml",
]

# PSD slack for Gram eigenvalues, relative to the trace.
PSD_TOL = 1e-9

_SERIES_CHUNK = 4096


def _bernoulli_cos_series(z: np.ndarray, s: int) -> np.ndarray:
    """Exact sum_{k>=1} cos(2 pi k z) / k^(2s) for integer s in {1, 2, 3}.

    Uses sum = (-1)^(s-1) (2 pi)^(2s) B_{2s}({z}) / (2 (2s)!) with the
    Bernoulli polynomial B_{2s}.
    """
    t = np.mod(z, 1.0)
    if s == 1:
        b = t * t - t + 1.0 / 6.0
        return (math.pi ** 2) * b
    if s == 2:
        b = ((t - 2.0) * t + 1.0) * t * t - 1.0 / 30.0
        return -(math.pi ** 4 / 3.0) * b
    if s == 3:
        t2 = t * t
        b = t2 * t2 * (t2 - 3.0 * t + 2.5) - 0.5 * t2 + 1.0 / 42.0
        return (2.0 * math.pi ** 6 / 45.0) * b
    raise ValueError(f"no closed form for smoothness s={s}")


def _truncated_cos_series(z: np.ndarray, s: float, n_terms: int) -> np.ndarray:
    """sum_{k=1}^{n_terms} cos(2 pi k z) / k^(2s), chunked over k."""
    out = np.zeros_like(z, dtype=float)
    flat = 2.0 * math.pi * z.reshape(-1)
    acc = np.zeros_like(flat)
    for start in range(1, n_terms + 1, _SERIES_CHUNK):
        ks = np.arange(start, min(start + _SERIES_CHUNK, n_terms + 1), dtype=float)
        acc += np.cos(np.outer(flat, ks)) @ ks ** (-2.0 * s)
    out.reshape(-1)[:] = acc
    return out


def _power_sum(s: float, k_from: int, k_to: int) -> float:
    """sum_{k=k_from}^{k_to} k^(-2s), exact by direct summation."""
    if k_to < k_from:
        return 0.0
    ks = np.arange(k_from, k_to + 1, dtype=float)
    return float(np.sum(ks ** (-2.0 * s)))


def power_tail_bound(s: float, k_from: int) -> float:
    """Integral upper bound for sum_{k>=k_from} k^(-2s), s > 1/2.

    sum_{k>=k_from} k^(-2s) <= integral_{k_from-1}^inf x^(-2s) dx; the
    slightly tighter (k_from - 1/2) anchor is still an upper bound because
    x^(-2s) is convex (midpoint rule under-estimates each cell's integral).
    """
    if k_from < 1:
        raise ValueError("k_from must be >= 1")
    return (k_from - 0.5) ** (1.0 - 2.0 * s) / (2.0 * s - 1.0)


@dataclass(eq=False)
class KernelSpec:
    """A positive semi-definite kernel family with its sup bound M.

    Instances are immutable in spirit; use the class-method constructors.
    """

    family: str
    params: dict = field(default_factory=dict)
    sup_bound: float = 1.0

    # -- constructors -----------------------------------------------------

    @classmethod
    def gaussian(cls, bandwidth: float, sup_bound: float = 1.0) -> "KernelSpec":
        if not (bandwidth > 0):
            raise ValueError("bandwidth must be positive")
        return cls("gaussian", {"bandwidth": float(bandwidth)}, float(sup_bound))

    @classmethod
    def circle_fourier(
        cls,
        a0: float = 1.0,
        amplitude: float = 1.0,
        smoothness: float = 1.0,
        truncation: Optional[int] = None,
        sup_bound: Optional[float] = None,
    ) -> "KernelSpec":
        if a0 < 0:
            raise ValueError("a0 must be nonnegative")
        if amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if not (smoothness > 0.5):
            raise ValueError("smoothness must exceed 1/2 (series must be summable)")
        if truncation is None:
            s_int = int(round(smoothness))
            if amplitude > 0 and not (abs(smoothness - s_int) < 1e-12 and 1 <= s_int <= 3):
                raise ValueError(
                    "truncation=None (closed form) requires integer smoothness in {1,2,3}; "
                    "pass an explicit truncation otherwise"
                )
        else:
            truncation = int(truncation)
            if truncation < 1:
                raise ValueError("truncation must be a positive integer")
        params = {
            "a0": float(a0),
            "amplitude": float(amplitude),
            "smoothness": float(smoothness),
            "truncation": truncation,
        }
        spec = cls("circle_fourier", params, 1.0)
        if sup_bound is None:
            spec.sup_bound = math.sqrt(spec._circle_diag())
        else:
            spec.sup_bound = float(sup_bound)
        return spec

    @classmethod
    def table(cls, points, values, sup_bound: Optional[float] = None) -> "KernelSpec":
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        if points.ndim != 1 or values.shape != (len(points), len(points)):
            raise ValueError("table kernel needs a 1-d grid and a square value matrix")
        if not np.allclose(values, values.T, atol=1e-12):
            raise ValueError("table kernel values must be symmetric")
        if sup_bound is None:
            sup_bound = math.sqrt(max(float(np.max(np.diag(values))), 0.0))
        return cls("table", {"points": points, "values": values}, float(sup_bound))

    # -- evaluation --------------------------------------------------------

    def _circle_diag(self) -> float:
        p = self.params
        if p["amplitude"] == 0.0:
            return p["a0"]
        s, n_terms = p["smoothness"], p["truncation"]
        if n_terms is None:
            zeta_2s = float(_bernoulli_cos_series(np.zeros(1), int(round(s)))[0])
        else:
            zeta_2s = _power_sum(s, 1, n_terms)
        return p["a0"] + p["amplitude"] * zeta_2s

    def _check_domain(self, xs: np.ndarray) -> None:
        if not np.all(np.isfinite(xs)):
            raise ValueError(f"{self.family} kernel: input points must be finite reals")

    def pairwise(self, xs, ys) -> np.ndarray:
        """Kernel matrix k(xs_i, ys_j) with shape (len(xs), len(ys))."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        self._check_domain(xs)
        self._check_domain(ys)
        if self.family == "gaussian":
            d = xs[:, None] - ys[None, :]
            bw = self.params["bandwidth"]
            return np.exp(-0.5 * (d / bw) ** 2)
        if self.family == "circle_fourier":
            z = np.abs(np.mod(xs[:, None], 1.0) - np.mod(ys[None, :], 1.0))
            z = np.minimum(z, 1.0 - z)
            p = self.params
            if p["amplitude"] == 0.0:
                return np.full_like(z, p["a0"])
            if p["truncation"] is None:
                series = _bernoulli_cos_series(z, int(round(p["smoothness"])))
            else:
                series = _truncated_cos_series(z, p["smoothness"], p["truncation"])
            return p["a0"] + p["amplitude"] * series
        if self.family == "table":
            return self.params["values"][np.ix_(self._table_index(xs), self._table_index(ys))]
        raise ValueError(f"unknown kernel family {self.family!r}")

    def _table_index(self, xs: np.ndarray) -> np.ndarray:
        grid = self.params["points"]
        idx = np.searchsorted(grid, xs)
        idx = np.clip(idx, 0, len(grid) - 1)
        left = np.clip(idx - 1, 0, len(grid) - 1)
        idx = np.where(np.abs(grid[left] - xs) < np.abs(grid[idx] - xs), left, idx)
        if not np.all(np.abs(grid[idx] - xs) <= 1e-12):
            raise ValueError("table kernel: point outside the declared grid")
        return idx

    def __call__(self, x: float, x2: float) -> float:
        return float(self.pairwise([x], [x2])[0, 0])

    def truncation_remainder(self) -> float:
        """Upper bound on the series mass dropped by truncation (0 if exact)."""
        if self.family != "circle_fourier":
            return 0.0
        p = self.params
        if p["truncation"] is None:
            return 0.0
        return p["amplitude"] * power_tail_bound(p["smoothness"], p["truncation"] + 1)


def eval_kernel(k: KernelSpec, x: float, x2: float) -> float:
    """Single kernel evaluation k(x, x2)."""
    return k(x, x2)


def gram(k: KernelSpec, xs) -> np.ndarray:
    """Symmetric Gram matrix of a nonempty point list."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size == 0:
        raise ValueError("gram needs a nonempty point list")
    g = k.pairwise(xs, xs)
    return 0.5 * (g + g.T)


@dataclass(eq=False)
class RepresenterFn:
    """Finite kernel expansion f = sum_i coeffs_i k(anchors_i, .)."""

    kernel: KernelSpec
    anchors: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.anchors = np.atleast_1d(np.asarray(self.anchors, dtype=float))
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if self.anchors.shape != self.coeffs.shape:
            raise ValueError("anchors and coeffs must have the same length")
        self._anchor_gram: Optional[np.ndarray] = None

    def __call__(self, x):
        scalar = np.isscalar(x)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if len(self.coeffs) == 0:
            vals = np.zeros(len(xs))
        else:
            # chunked so anchors x points never allocates more than ~30 MB
            step = max(4_000_000 // max(len(self.anchors), 1), 64)
            vals = np.empty(len(xs))
            for i in range(0, len(xs), step):
                vals[i : i + step] = self.coeffs @ self.kernel.pairwise(self.anchors, xs[i : i + step])
        return float(vals[0]) if scalar else vals

    @property
    def breakpoints(self):
        """Derivative-kink locations, for quadrature panel splitting.

        Low-smoothness circle kernels (s < 1.75) have a corner at zero lag,
        so the expansion kinks at every anchor; smoother families are
        numerically benign without splits.
        """
        if (
            self.kernel.family == "circle_fourier"
            and self.kernel.params["smoothness"] < 1.75
            and len(self.anchors)
        ):
            return np.unique(np.mod(self.anchors, 1.0))
        return None

    @property
    def oscillation_hint(self) -> float:
        """Rough frequency content, steering root-scan density in quadrature."""
        if self.kernel.family == "gaussian":
            return 2.0 / self.kernel.params["bandwidth"]
        if self.kernel.family == "circle_fourier":
            # between anchor kinks the pieces are low-order smooth
            return 4.0 if self.kernel.params["smoothness"] < 1.75 else 16.0
        return 0.0

    def anchor_gram(self) -> np.ndarray:
        if self._anchor_gram is None:
            self._anchor_gram = gram(self.kernel, self.anchors)
        return self._anchor_gram

    def rkhs_norm(self) -> float:
        if len(self.coeffs) == 0:
            return 0.0
        q = float(self.coeffs @ self.anchor_gram() @ self.coeffs)
        scale = max(1.0, float(np.trace(self.anchor_gram())) * float(self.coeffs @ self.coeffs))
        if q < -PSD_TOL * scale:
            raise ValueError(f"negative squared norm {q}: kernel is not PSD")
        return math.sqrt(max(q, 0.0))


def rep_eval(f: RepresenterFn, x) -> float:
    """Evaluate a representer function at a point."""
    return f(x)


def rkhs_norm(f: RepresenterFn) -> float:
    """RKHS norm sqrt(coeffs' Gram coeffs), clamped at tiny negatives."""
    return f.rkhs_norm()


# -- config round trip ------------------------------------------------------


def kernel_to_config(k: KernelSpec) -> dict:
    """Plain-scalar dict for the structured text config."""
    cfg = {"family": k.family, "sup_bound": k.sup_bound}
    if k.family == "gaussian":
        cfg["bandwidth"] = k.params["bandwidth"]
    elif k.family == "circle_fourier":
        cfg.update(
            a0=k.params["a0"],
            amplitude=k.params["amplitude"],
            smoothness=k.params["smoothness"],
        )
        if k.params["truncation"] is not None:
            cfg["truncation"] = k.params["truncation"]
    elif k.family == "table":
        cfg["points"] = [float(v) for v in k.params["points"]]
        cfg["values"] = [[float(v) for v in row] for row in k.params["values"]]
    return cfg


def kernel_to_toml(k: KernelSpec, table: str = "kernel") -> str:
    """Render the kernel spec as a TOML table (non-table families only)."""
    cfg = kernel_to_config(k)
    if k.family == "table":
        raise ValueError("table kernels carry matrices; serialize those as JSON instead")
    lines = [f"[{table}]"]
    for key, val in cfg.items():
        if isinstance(val, str):
            lines.append(f'{key} = "{val}"')
        elif isinstance(val, bool):
            lines.append(f"{key} = {str(val).lower()}")
        elif isinstance(val, int):
            lines.append(f"{key} = {val}")
        else:
            lines.append(f"{key} = {float(val)!r}")
    return "\n".join(lines) + "\n"


def kernel_from_config(cfg: dict) -> KernelSpec:
    family = cfg["family"]
    if family == "gaussian":
        return KernelSpec.gaussian(cfg["bandwidth"], cfg.get("sup_bound", 1.0))
    if family == "circle_fourier":
        return KernelSpec.circle_fourier(
            a0=cfg.get("a0", 1.0),
            amplitude=cfg.get("amplitude", 1.0),
            smoothness=cfg.get("smoothness", 1.0),
            truncation=cfg.get("truncation"),
            sup_bound=cfg.get("sup_bound"),
        )
    if family == "table":
        return KernelSpec.table(cfg["points"], cfg["values"], cfg.get("sup_bound"))
    raise ValueError(f"unknown kernel family {family!r}")
