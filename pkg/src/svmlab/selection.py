"""Penalty calibration, discretized radius grids, and penalized selection.

Calibration fixes the regularization level at

    lam_n = c ( gamma(n) + (log(log(n)/delta) v 1) / (w1 n) ),

with gamma from the spectral or the entropy route and w1 = eta1 / 1
respectively, and prices each radius in the dyadic grid

    radii = { 2^k / M : 0 <= k <= ceil(log2 n) }

at  pen(R) = lam_n ( phi(M R / 2) + 1/(w1 eta0) ).  The additive term uses
1/(w1 eta0); the variant with w1 eta0^-1 (and the extra factor c) that
appears in some statements of the final bound is available through
``trailing_variant``; the two differ whenever w1 < 1, and the inverse
form is the conservative one.

Selection over several kernels runs the same machinery per kernel with
delta split across kernels, and picks the smallest penalized empirical
loss (ties: smallest radius, then lowest kernel index).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .complexity import (
    EntropyModel,
    circle_eigenfunctions,
    gamma_s1,
    gamma_s2,
    model_params,
    r_star_bound,
)
from .distributions import SyntheticDist, replicate_rng
from .kernels import KernelSpec
from .losses import rel_hinge_risk
from .solver import (
    FitResult,
    HingePathSolver,
    phi_function,
    train_constrained_fourier,
)
from .spectra import SpectrumModel

__all__ = [
    "PenaltyCalibration",
    "SelectionResult",
    "CertificateResult",
    "radius_grid",
    "calibrate",
    "select_model",
    "oracle_rhs",
    "certificate_check",
]


def radius_grid(M: float, n: int) -> np.ndarray:
    """Dyadic radii M^-1 2^k, k = 0..ceil(log2 n)."""
    kmax = math.ceil(math.log2(n))
    return np.array([2.0**k / M for k in range(kmax + 1)])


@dataclass
class PenaltyCalibration:
    setting: str
    delta: float
    c: float
    contrast: float  # the K > 1 constant of the selection machinery
    eta0: float
    eta1: Optional[float]
    w1: float
    M: float
    n: int
    gamma: float
    lambda_n: float
    radii: np.ndarray
    x_r: float
    phi_name: str
    trailing_variant: str
    pen: dict = field(default_factory=dict)
    rho: dict = field(default_factory=dict)
    pen_sufficient: dict = field(default_factory=dict)
    _phi: object = None

    def phi(self, x: float) -> float:
        return self._phi(x)

    def trailing_term(self) -> float:
        """The radius-independent tail of the risk bound, 4 lam (2 phi(2) + gap term)."""
        if self.trailing_variant == "w1_inv":
            extra = 1.0 / (self.w1 * self.eta0)
        elif self.trailing_variant == "w1_direct":
            extra = self.c * self.w1 / self.eta0
        else:
            raise ValueError(f"unknown trailing variant {self.trailing_variant!r}")
        return 4.0 * self.lambda_n * (2.0 * self.phi(2.0) + extra)


def calibrate(
    setting: str,
    n: int,
    delta: float,
    eta0: float,
    M: float,
    phi="quadratic",
    eta1: Optional[float] = None,
    spectrum: Optional[SpectrumModel] = None,
    entropy: Optional[EntropyModel] = None,
    c: float = 1.0,
    c1: float = 1.0,
    contrast: float = 3.0,
    trailing_variant: str = "w1_inv",
) -> PenaltyCalibration:
    """Build lam_n and the pen/rho tables over the dyadic radius grid."""
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not (0.0 < eta0 <= 0.5):
        raise ValueError("eta0 must lie in (0, 1/2]")
    phi_fn, phi_name = phi_function(phi)
    if setting == "s1":
        if spectrum is None:
            raise ValueError("setting s1 needs a spectrum")
        if eta1 is None or not (0.0 < eta1 <= 0.5):
            raise ValueError("setting s1 needs eta1 in (0, 1/2]")
        gamma = gamma_s1(spectrum, n, eta1, M)
        w1 = eta1
    elif setting == "s2":
        if entropy is None:
            raise ValueError("setting s2 needs an entropy model")
        gamma = gamma_s2(entropy, n, M)
        w1 = 1.0
    else:
        raise ValueError(f"unknown setting {setting!r}")

    log_term = max(math.log(math.log(n) / delta), 1.0)
    lam = c * (gamma + log_term / (w1 * n))
    radii = radius_grid(M, n)
    x_r = math.log(math.log2(n) + 2.0)
    cal = PenaltyCalibration(
        setting=setting,
        delta=delta,
        c=c,
        contrast=contrast,
        eta0=eta0,
        eta1=eta1,
        w1=w1,
        M=M,
        n=n,
        gamma=gamma,
        lambda_n=lam,
        radii=radii,
        x_r=x_r,
        phi_name=phi_name,
        trailing_variant=trailing_variant,
        _phi=phi_fn,
    )
    dev_term = x_r + max(math.log(1.0 / delta), 1.0)
    for R in radii:
        R = float(R)
        cal.pen[R] = lam * (phi_fn(M * R / 2.0) + 1.0 / (w1 * eta0))
        cal.rho[R] = lam * (phi_fn(M * R) + phi_fn(1.0) + 1.0 / (w1 * eta0)) - cal.pen[R]
        params = model_params(setting, R, M, eta0, eta1)
        r_star = r_star_bound(params, n, M, spec=spectrum, entropy=entropy, eta1=eta1)
        params.r_star = r_star
        cal.pen_sufficient[R] = c1 * (
            r_star / params.C_R + (params.C_R + params.b_R) * dev_term / n
        )
    return cal


# ---------------------------------------------------------------------------
# model selection over radii and kernels


@dataclass
class ModelRow:
    kernel_index: int
    R: float
    empirical_loss: float
    pen: float
    penalized_loss: float
    gap: float
    chosen: bool = False


@dataclass
class SelectionResult:
    kernel_index: int
    R_hat: float
    g_hat: object
    rows: list
    rho: dict  # (kernel_index, R) -> rho
    penalized_loss: float

    def to_json_dict(self) -> dict:
        return {
            "kernel_index": self.kernel_index,
            "R_hat": self.R_hat,
            "penalized_loss": self.penalized_loss,
            "rows": [
                {
                    "kernel": r.kernel_index,
                    "R": r.R,
                    "empirical_loss": r.empirical_loss,
                    "pen": r.pen,
                    "penalized_loss": r.penalized_loss,
                    "gap": r.gap,
                    "chosen": r.chosen,
                }
                for r in self.rows
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "R", "empirical_loss", "pen", "penalized_loss", "chosen"])
            for r in self.rows:
                w.writerow(
                    [r.kernel_index, repr(r.R), repr(r.empirical_loss), repr(r.pen),
                     repr(r.penalized_loss), int(r.chosen)]
                )


def select_model(
    x,
    y,
    kernels: Sequence[KernelSpec],
    cals: Sequence[PenaltyCalibration],
    gap_tol: float = 1e-6,
    paths: Optional[Sequence[HingePathSolver]] = None,
) -> SelectionResult:
    """Penalized empirical-loss selection over (kernel, radius) models.

    ``cals`` must already carry the delta/t split when t = len(kernels) > 1.
    Ties pick the smallest radius, then the lowest kernel index.
    """
    if len(kernels) == 0:
        raise ValueError("need at least one kernel")
    if len(cals) != len(kernels):
        raise ValueError("one calibration per kernel is required")
    rows: list[ModelRow] = []
    fits = {}
    for ki, (kernel, cal) in enumerate(zip(kernels, cals)):
        path = paths[ki] if paths is not None else HingePathSolver(kernel, x, y)
        for R in cal.radii:
            R = float(R)
            fit = path.constrained(R, gap_tol)
            fits[(ki, R)] = (path, fit)
            rows.append(
                ModelRow(
                    kernel_index=ki,
                    R=R,
                    empirical_loss=fit.value,
                    pen=cal.pen[R],
                    penalized_loss=fit.value + cal.pen[R],
                    gap=fit.gap,
                )
            )
    winner = min(rows, key=lambda r: (r.penalized_loss, r.R, r.kernel_index))
    winner.chosen = True
    path, fit = fits[(winner.kernel_index, winner.R)]
    rho = {(ki, float(R)): cals[ki].rho[float(R)] for ki in range(len(kernels)) for R in cals[ki].radii}
    return SelectionResult(
        kernel_index=winner.kernel_index,
        R_hat=winner.R,
        g_hat=path.representer(fit),
        rows=rows,
        rho=rho,
        penalized_loss=winner.penalized_loss,
    )


# ---------------------------------------------------------------------------
# the risk-bound right-hand side and the approximate-minimizer certificate


@dataclass
class OracleRhsReport:
    value: float
    trailing: float
    best_R: float
    table: list  # (R, norm, rel_hinge, bound_term) rows


def reference_table(
    dist: SyntheticDist,
    radii,
    kernel: KernelSpec,
    n_ref: int = 50_000,
    n_funcs: int = 129,
    seed: int = 20240601,
    passes: int = 300,
    risk_tol: float = 1e-8,
) -> list:
    """(R, norm, relative hinge risk) of reference fits on a large sample.

    One constrained fit per radius, trained in the kernel's eigenfeature
    coordinates; the zero function is included as the R = 0 row.  Any
    feasible function upper-bounds the population infimum over its ball,
    which is the sound direction for the bound verification built on top.
    """
    _, features = circle_eigenfunctions(kernel, n_funcs)
    rng = replicate_rng(seed)
    x_ref, y_ref = dist.sample(n_ref, rng=rng)
    zero_risk = rel_hinge_risk(lambda t: np.zeros_like(np.atleast_1d(t)), dist, tol=risk_tol)
    table = [(0.0, 0.0, zero_risk)]
    for R in radii:
        R = float(R)
        g = train_constrained_fourier(features, x_ref, y_ref, R, passes=passes)
        table.append((R, g.rkhs_norm(), rel_hinge_risk(g, dist, tol=risk_tol)))
    return table


def oracle_rhs_from_table(table, cal: PenaltyCalibration) -> OracleRhsReport:
    """Assemble the risk-bound right-hand side from a reference table."""
    lam, phi, M = cal.lambda_n, cal.phi, cal.M
    best, best_row = math.inf, None
    rows = []
    for R, norm, risk in table:
        term = risk + 2.0 * lam * phi(2.0 * M * norm)
        rows.append((R, norm, risk, term))
        if term < best:
            best, best_row = term, R
    trailing = cal.trailing_term()
    return OracleRhsReport(2.0 * best + trailing, trailing, best_row, rows)


def oracle_rhs(
    dist: SyntheticDist,
    cal: PenaltyCalibration,
    kernel: KernelSpec,
    n_ref: int = 50_000,
    n_funcs: int = 129,
    seed: int = 20240601,
    passes: int = 300,
    risk_tol: float = 1e-8,
) -> OracleRhsReport:
    """Upper bound on the oracle risk-bound right-hand side, end to end."""
    table = reference_table(dist, cal.radii, kernel, n_ref, n_funcs, seed, passes, risk_tol)
    return oracle_rhs_from_table(table, cal)


@dataclass
class CertificateResult:
    ok: bool
    lhs: float
    rhs: float
    R_hat_dyadic: float
    slack: float


def certificate_check(
    fit: FitResult,
    cal: PenaltyCalibration,
    slack: float = 1e-9,
) -> CertificateResult:
    """Approximate penalized-minimizer certificate for a regularized fit.

    Checks  P_n l(g_hat) + pen(R_hat)  <=  min_R [P_n l(f_R) + pen(R) + rho(R)]
    + slack, with R_hat the dyadic radius covering |g_hat| and the grid
    losses taken from the fit's own radius scan (``inner_values``).
    """
    M = cal.M
    norm = fit.R_hat_continuous
    k_hat = 0 if M * norm <= 1.0 else math.ceil(math.log2(M * norm))
    k_hat = min(k_hat, len(cal.radii) - 1)
    r_hat = float(cal.radii[k_hat])
    lhs = fit.diagnostics["empirical_hinge"] + cal.pen[r_hat]
    rhs = math.inf
    for R in cal.radii:
        R = float(R)
        loss = fit.inner_values.get(R)
        if loss is None:
            continue
        rhs = min(rhs, loss + cal.pen[R] + cal.rho[R])
    ok = math.isfinite(rhs) and lhs <= rhs + slack
    return CertificateResult(ok, lhs, rhs, r_hat, slack)
