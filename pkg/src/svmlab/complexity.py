"""Capacity functions, localized complexity bounds, and Rademacher oracles.

Two routes measure the capacity of a ball of radius R in the kernel space:

* spectral (setting ``s1``): everything is driven by tail sums of the
  operator eigenvalues, through

      gamma1(n) = eta1^-1 n^-1/2 inf_d ( d/sqrt(n) + (eta1/M) sqrt(tail(d)) )

  and the sub-root localized bound

      phi_R(r)  = 4/sqrt(n)  inf_d ( sqrt(d r) + 2 R sqrt(tail(d)) ).

* entropy (setting ``s2``): driven by the sup-norm entropy integral
  xi(x) = int_0^x sqrt(H(eps)) d eps and the crossing point x*(n) of
  xi(x) = M^-1 sqrt(n) x^2, giving gamma2(n) = M^-2 x*(n)^2.

The infima over the cut level d are computed by exhaustive scan with a
certified stopping rule: the d-term is increasing, so once it alone exceeds
the best value seen, no larger d can win.

The Monte Carlo / exact Rademacher oracles evaluate, for given sign
vectors, the exact supremum of the signed empirical mean over the
intersection of the norm ball (radius R) and the variance ellipsoid
(level r) in eigenfunction coordinates; the per-sign supremum of a linear
form over two centered ellipsoids is solved by a one-dimensional dual
search over the multiplier ratio with single-constraint fallbacks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .distributions import replicate_rng
from .kernels import KernelSpec
from .spectra import SpectrumModel
from .subroot import SubrootFn, solve_fixed_point

__all__ = [
    "EntropyModel",
    "ModelParams",
    "gamma_s1",
    "gamma_s2",
    "xi",
    "phi_r_s1",
    "r_star_bound",
    "rademacher_bound_infd",
    "rademacher_bound_minsum",
    "circle_eigenfunctions",
    "ellipsoid_linear_max",
    "rademacher_mc",
    "rademacher_exact",
]


# ---------------------------------------------------------------------------
# entropy models and the s2 capacity function


@dataclass(eq=False)
class EntropyModel:
    """Sup-norm entropy of the unit ball: power law or tabulated."""

    form: str  # "power_law" | "table"
    c_h: float = 1.0
    s: float = 1.0
    eps: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None

    @classmethod
    def power_law(cls, c_h: float = 1.0, s: float = 1.0) -> "EntropyModel":
        if not (c_h > 0):
            raise ValueError("C_H must be positive")
        if not (s > 0.5):
            raise ValueError("entropy power law needs s > 1/2 (integrable at 0)")
        return cls("power_law", c_h=float(c_h), s=float(s))

    @classmethod
    def table(cls, eps, h) -> "EntropyModel":
        eps = np.asarray(eps, dtype=float)
        h = np.asarray(h, dtype=float)
        if eps.ndim != 1 or eps.shape != h.shape or len(eps) < 1:
            raise ValueError("table needs matching 1-d eps and H arrays")
        if np.any(np.diff(eps) <= 0):
            raise ValueError("eps knots must be strictly increasing")
        if np.any(np.diff(h) > 1e-12):
            raise ValueError("H must be nonincreasing in eps")
        if np.any(h < 0):
            raise ValueError("H must be nonnegative")
        return cls("table", eps=eps, h=h)

    def h_at(self, e):
        """H(eps); constant extension below the first and above the last knot."""
        return np.interp(np.asarray(e, dtype=float), self.eps, self.h)


def xi(em: EntropyModel, x: float) -> float:
    """Entropy integral int_0^x sqrt(H(eps)) d eps."""
    if not (x > 0):
        raise ValueError("x must be positive")
    if em.form == "power_law":
        p = 1.0 - 1.0 / (2.0 * em.s)
        return math.sqrt(em.c_h) * x ** p / p
    inner = [float(e) for e in em.eps if 0.0 < e < x]
    val, _ = integrate.quad(
        lambda e: np.sqrt(em.h_at(e)), 0.0, x, points=inner, limit=200, epsrel=1e-10, epsabs=1e-14
    )
    return float(val)


def _xstar_closed_form(em: EntropyModel, n: int, M: float) -> float:
    p = 1.0 - 1.0 / (2.0 * em.s)
    return (M * math.sqrt(em.c_h) / (p * math.sqrt(n))) ** (1.0 / (1.0 + 1.0 / (2.0 * em.s)))


def xstar_bisect(em: EntropyModel, n: int, M: float, tol: float = 1e-12) -> float:
    """Solve xi(x) = M^-1 sqrt(n) x^2; xi(x)/x^2 is strictly decreasing."""
    target = math.sqrt(n) / M

    def excess(x):
        return xi(em, x) / (x * x) - target

    lo = hi = 1.0
    for _ in range(200):
        if excess(hi) < 0:
            break
        hi *= 2.0
    for _ in range(200):
        if excess(lo) > 0:
            break
        lo *= 0.5
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * lo:
            break
    return math.sqrt(lo * hi)


def gamma_s2(em: EntropyModel, n: int, M: float) -> float:
    """Entropy-route capacity function gamma2(n) = M^-2 x*(n)^2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if em.form == "power_law":
        xs = _xstar_closed_form(em, n, M)
    else:
        xs = xstar_bisect(em, n, M)
    return xs * xs / (M * M)


# ---------------------------------------------------------------------------
# spectral route: certified infima over the cut level d


def _certified_inf_d(spec: SpectrumModel, d_coef_fn, b: float):
    """Minimize d_term(d) + b * sqrt(tail(d)) over integers d >= 0.

    d_coef_fn maps an integer array to the (nondecreasing) d-term.  The scan
    doubles its range until the d-term alone certifies no larger d can win;
    a d-term that is identically zero falls back to the deepest scanned d.
    """
    cap = max(4 * len(spec.eigenvalues) + 8, 64)
    size = 64
    while True:
        size = min(size, cap)
        ds = np.arange(0, size + 1)
        if size <= len(spec.eigenvalues):
            tails = spec.tails_upto(size)
        else:
            tails = np.array([spec.tail_sum(int(d)) for d in ds])
        vals = d_coef_fn(ds) + b * np.sqrt(np.maximum(tails, 0.0))
        i = int(np.argmin(vals))
        best = float(vals[i])
        if float(d_coef_fn(np.array([size]))[0]) >= best or size >= cap:
            return best, int(ds[i])
        size *= 2


def gamma_s1(spec: SpectrumModel, n: int, eta1: float, M: float) -> float:
    """Spectral-route capacity function gamma1(n)."""
    if len(spec.eigenvalues) == 0:
        raise ValueError("empty spectrum")
    if not (0.0 < eta1 <= 0.5):
        raise ValueError("eta1 must lie in (0, 1/2]")
    if n < 1:
        raise ValueError("n must be >= 1")
    sqn = math.sqrt(n)
    best, _ = _certified_inf_d(spec, lambda ds: ds / sqn, eta1 / M)
    return best / (eta1 * sqn)


def phi_r_s1(spec: SpectrumModel, R: float, n: int) -> SubrootFn:
    """The spectral localized bound phi_R as an evaluable sub-root function."""
    if not (R >= 0):
        raise ValueError("R must be nonnegative")
    sqn = math.sqrt(n)

    def evaluate(r: float) -> float:
        r = max(float(r), 0.0)
        best, _ = _certified_inf_d(spec, lambda ds: np.sqrt(ds * r), 2.0 * R)
        return 4.0 / sqn * best

    hint = max(1.0, (8.0 * R * math.sqrt(max(spec.total_sum, 0.0)) / sqn) ** 2)
    return SubrootFn(evaluate, domain_hint=hint)


# ---------------------------------------------------------------------------
# per-model parameters and fixed-point bounds


@dataclass
class ModelParams:
    """Per-ball constants for the model selection machinery."""

    R: float
    b_R: float
    C_R: float
    setting: str
    r_star: Optional[float] = None


def model_params(setting: str, R: float, M: float, eta0: float, eta1: Optional[float] = None) -> ModelParams:
    if setting == "s1":
        if eta1 is None or not (0.0 < eta1 <= 0.5):
            raise ValueError("setting s1 needs eta1 in (0, 1/2]")
        c = 2.0 * (M * R / eta1 + 1.0 / eta0)
    elif setting == "s2":
        c = M * R + 1.0 / eta0
    else:
        raise ValueError(f"unknown setting {setting!r}")
    return ModelParams(R=R, b_R=1.0 + M * R, C_R=c, setting=setting)


def r_star_bound(
    params: ModelParams,
    n: int,
    M: float,
    spec: Optional[SpectrumModel] = None,
    entropy: Optional[EntropyModel] = None,
    eta1: Optional[float] = None,
) -> float:
    """Closed-form upper bound on the fixed point of phi_R(r) = r / C_R."""
    if params.setting == "s1":
        if spec is None or eta1 is None:
            raise ValueError("setting s1 needs a spectrum and eta1")
        sqn = math.sqrt(n)
        best, _ = _certified_inf_d(spec, lambda ds: ds / sqn, eta1 / M)
        return 16.0 * params.C_R ** 2 / sqn * best
    if entropy is None:
        raise ValueError("setting s2 needs an entropy model")
    if entropy.form == "power_law":
        xs = _xstar_closed_form(entropy, n, M)
    else:
        xs = xstar_bisect(entropy, n, M)
    return 2500.0 * params.C_R ** 2 * xs * xs / (M * M)


def r_star_exact_s1(params: ModelParams, spec: SpectrumModel, n: int) -> float:
    """Exact sub-root fixed point of C_R * phi_R, for cross-checking the bound."""
    phi = phi_r_s1(spec, params.R, n)
    res = solve_fixed_point(SubrootFn(lambda r: params.C_R * phi(r), phi.domain_hint), tol=1e-12)
    return res.r_star


# ---------------------------------------------------------------------------
# localized Rademacher bounds and oracles


def rademacher_bound_infd(spec: SpectrumModel, R: float, r: float, n: int) -> float:
    """(1/sqrt(n)) inf_d ( sqrt(d r) + R sqrt(tail(d)) )."""
    best, _ = _certified_inf_d(spec, lambda ds: np.sqrt(ds * max(r, 0.0)), R)
    return best / math.sqrt(n)


def rademacher_bound_minsum(spec: SpectrumModel, R: float, r: float, n: int) -> float:
    """sqrt(2/n) ( sum_j min(r, R^2 lambda_j) )^(1/2), tail included."""
    lam = spec.eigenvalues
    total = float(np.sum(np.minimum(r, R * R * lam)))
    rule = spec.tail_rule
    if rule is not None:
        lam_min = float(lam[-1]) if len(lam) else 0.0
        if R * R * lam_min <= r or R == 0.0:
            total += R * R * spec.tail_sum(len(lam))
        else:
            # crossover frequency where R^2 lambda drops below r
            k_star = int(math.ceil((R * R * rule.amplitude / (2.0 * r)) ** (1.0 / (2.0 * rule.smoothness))))
            k_star = max(k_star, rule.k_start)
            total += 2.0 * r * (k_star - rule.k_start)
            total += R * R * rule.mass_from_freq(k_star)
    return math.sqrt(2.0 / n) * math.sqrt(total)


def circle_eigenfunctions(kernel: KernelSpec, n_funcs: int):
    """Top eigenvalues and eigenfunction features of a circle kernel.

    Features are scaled so the uniform second moment of feature j equals its
    eigenvalue: the constant sqrt(a0), then sqrt(a_k) cos(2 pi k x) and
    sqrt(a_k) sin(2 pi k x) per frequency, listed in nonincreasing eigenvalue
    order.  Returns (lambdas, feature_fn) with feature_fn(x) of shape
    (len(x), n_funcs).
    """
    if kernel.family != "circle_fourier":
        raise ValueError("analytic eigenfunctions are only available for circle kernels")
    p = kernel.params
    a0, amp, s, trunc = p["a0"], p["amplitude"], p["smoothness"], p["truncation"]
    support = 1 + 2 * (trunc if trunc is not None else max(n_funcs, 1))
    if amp == 0.0:
        support = 1
    if n_funcs > support:
        raise ValueError(f"kernel supports only {support} eigenfunctions, requested {n_funcs}")
    cands = [(a0, 0, "const")]
    k_needed = n_funcs  # more than enough frequency pairs
    if amp > 0.0:
        for k in range(1, k_needed + 1):
            lam_k = 0.5 * amp * k ** (-2.0 * s)
            cands.append((lam_k, k, "cos"))
            cands.append((lam_k, k, "sin"))
    cands.sort(key=lambda t: (-t[0], t[1], t[2]))
    chosen = cands[:n_funcs]
    lam = np.array([c[0] for c in chosen])

    def features(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        cols = []
        for lam_j, k, kind in chosen:
            if kind == "const":
                cols.append(np.full_like(xs, math.sqrt(a0)))
            elif kind == "cos":
                cols.append(math.sqrt(amp * k ** (-2.0 * s)) * np.cos(2.0 * math.pi * k * xs))
            else:
                cols.append(math.sqrt(amp * k ** (-2.0 * s)) * np.sin(2.0 * math.pi * k * xs))
        return np.stack(cols, axis=1)

    return lam, features


def ellipsoid_linear_max(C: np.ndarray, lam: np.ndarray, R: float, r: float) -> np.ndarray:
    """Row-wise exact max of c' a over {|a| <= R, sum lam_j a_j^2 <= r}.

    Single-constraint cases are handled in closed form; in the genuinely
    two-constraint case the maximizer direction is c_j / (1 + t lam_j) and
    the multiplier ratio t solves a monotone scalar equation by bisection.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    lam = np.asarray(lam, dtype=float)
    m = C.shape[0]
    out = np.zeros(m)
    if R <= 0.0:
        return out
    pos = lam > 0.0
    c2 = C * C
    norm2 = c2.sum(axis=1)
    live = norm2 > 0.0
    if r <= 0.0:
        # only the lam=0 directions remain
        free = c2[:, ~pos].sum(axis=1)
        out[live] = R * np.sqrt(free[live])
        return out

    lam_c2 = c2 @ lam
    # ball-only: the lam-ellipsoid is slack at the scaled c direction
    ball = live & (R * R * lam_c2 <= r * norm2 * (1.0 + 1e-12))
    out[ball] = R * np.sqrt(norm2[ball])

    rest = live & ~ball
    if not np.any(rest):
        return out
    inv_lam = np.zeros_like(lam)
    inv_lam[pos] = 1.0 / lam[pos]
    c2_rest = c2[rest]
    w1 = c2_rest @ inv_lam
    w2 = c2_rest @ (inv_lam * inv_lam)
    free_mass = c2_rest[:, ~pos].sum(axis=1)
    # ellipsoid-only: needs no mass on lam=0 directions and a slack ball
    ell = (free_mass == 0.0) & (r * w2 <= R * R * w1 * (1.0 + 1e-12))
    idx_rest = np.nonzero(rest)[0]
    out[idx_rest[ell]] = np.sqrt(r * w1[ell])

    mixed = ~ell
    if not np.any(mixed):
        return out
    Cm = C[idx_rest[mixed]]
    target = r / (R * R)

    def rho(t):
        d2 = (Cm / (1.0 + np.outer(t, lam))) ** 2
        return (d2 @ lam) / d2.sum(axis=1)

    k = Cm.shape[0]
    t_lo = np.zeros(k)
    t_hi = np.ones(k)
    for _ in range(200):
        too_high = rho(t_hi) > target
        if not np.any(too_high):
            break
        t_lo[too_high] = t_hi[too_high]
        t_hi[too_high] *= 2.0
    for _ in range(120):
        t_mid = 0.5 * (t_lo + t_hi)
        high = rho(t_mid) > target
        t_lo[high] = t_mid[high]
        t_hi[~high] = t_mid[~high]
    t = 0.5 * (t_lo + t_hi)
    d = Cm / (1.0 + np.outer(t, lam))
    vals = R * (Cm * d).sum(axis=1) / np.sqrt((d * d).sum(axis=1))
    out[idx_rest[mixed]] = vals
    return out


def signed_suprema(kernel: KernelSpec, sample, signs: np.ndarray, R: float, r: float, n_funcs: int) -> np.ndarray:
    """Exact per-sign-vector suprema of the signed empirical mean."""
    sample = np.asarray(sample, dtype=float)
    lam, features = circle_eigenfunctions(kernel, n_funcs)
    psi = features(sample)
    C = signs @ psi / len(sample)
    return ellipsoid_linear_max(C, lam, R, r)


def rademacher_mc(
    kernel: KernelSpec,
    R: float,
    r: float,
    sample,
    n_sigma: int,
    seed: int,
    n_funcs: int = 16,
):
    """Monte Carlo localized Rademacher average over random sign vectors.

    Returns (estimate, standard_error).
    """
    sample = np.asarray(sample, dtype=float)
    rng = replicate_rng(seed)
    signs = rng.integers(0, 2, size=(n_sigma, len(sample))).astype(float) * 2.0 - 1.0
    vals = signed_suprema(kernel, sample, signs, R, r, n_funcs)
    se = float(np.std(vals, ddof=1) / math.sqrt(n_sigma)) if n_sigma > 1 else 0.0
    return float(np.mean(vals)), se


def rademacher_exact(kernel: KernelSpec, R: float, r: float, sample, n_funcs: int = 8) -> float:
    """Exact conditional Rademacher average by enumerating all sign vectors."""
    sample = np.asarray(sample, dtype=float)
    n = len(sample)
    if n > 20:
        raise ValueError("exact enumeration is limited to n <= 20")
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    signs = bits.astype(float) * 2.0 - 1.0
    vals = signed_suprema(kernel, sample, signs, R, r, n_funcs)
    return float(np.mean(vals))


def write_gamma_csv(path, rows) -> None:
    """CSV export of (n, gamma, setting) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "gamma", "setting"])
        for n, g, setting in rows:
            w.writerow([int(n), repr(float(g)), setting])
