"""Hinge-loss training over RKHS balls and the regularized estimator.

Two routes into the same family of convex problems:

* ``HingePathSolver``: all fits for one labelled sample.  The constrained
  problem  min_{||f|| <= R} mean hinge  is solved through its penalized
  companion  min_f mean hinge + mu ||f||^2  (box QP dual, see ``_qp``):
  the penalized-solution norm is continuous and nonincreasing in mu, so a
  guarded fixed-point/bisection drive on mu lands the norm on R, and every
  candidate is certified against the constrained dual bound
  sum(a) - R sqrt(a'Qa).  Solutions along a radius path share a warm-start
  cache of penalized solves, making whole-grid scans cheap.

* ``train_regularized``: the phi-regularized estimator: a 1-d outer search
  of inner(R) + lam * phi(M R) over a geometric radius grid with
  golden-section refinement of the best bracket (unimodality is not
  assumed: the final answer is the argmin over every evaluated point).

Independent oracles for cross-checking live here too: a pure-Python dual
coordinate-ascent solve of the quadratic-regularizer problem at fixed lam,
a cutting-plane solver for the constrained problem in function-value
space, and the textbook projected-subgradient primal method.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from ._qp import QPState, default_backend, power_lmax, solve_box_qp
from .kernels import KernelSpec, RepresenterFn, gram, kernel_to_config

__all__ = [
    "TrainConfig",
    "FitResult",
    "ConstrainedFit",
    "HingePathSolver",
    "train_constrained",
    "train_regularized",
    "dual_svm0_crosscheck",
    "constrained_hinge_cutting_plane",
    "projected_subgradient",
    "FourierFn",
    "train_constrained_fourier",
    "phi_function",
]

MU_FLOOR = 1e-14


def phi_function(phi) -> tuple[Callable[[float], float], str]:
    """Resolve a regularizer choice to (callable, name) and validate it."""
    if phi == "linear":
        return (lambda x: x), "linear"
    if phi == "quadratic":
        return (lambda x: 2.0 * x * x), "quadratic"
    if callable(phi):
        name = getattr(phi, "__name__", "custom")
        if abs(phi(0.0)) > 1e-12:
            raise ValueError("phi(0) must be 0")
        xs = np.array([0.5, 0.7, 1.0, 2.0, 5.0, 10.0, 100.0])
        vals = np.array([phi(float(v)) for v in xs])
        if np.any(vals < xs - 1e-9):
            raise ValueError("phi(x) >= x must hold for x >= 1/2")
        probe = np.array([phi(float(v)) for v in np.linspace(0.0, 100.0, 64)])
        if np.any(np.diff(probe) < -1e-9):
            raise ValueError("phi must be nondecreasing")
        return phi, name
    raise ValueError(f"unknown phi {phi!r}")


@dataclass
class TrainConfig:
    phi: object = "quadratic"
    lam: float = 0.1
    tol: float = 1e-6
    coarse_tol: float = 1e-4  # duality gap for grid-scan fits
    max_iters: int = 50_000  # projected-subgradient budget
    grid_points: int = 64
    refine_iters: int = 24

    def __post_init__(self):
        if not (self.lam > 0):
            raise ValueError("lam must be positive")
        if self.coarse_tol < self.tol:
            self.coarse_tol = self.tol
        phi_function(self.phi)


@dataclass
class ConstrainedFit:
    R: float
    alpha: np.ndarray  # coefficients of f = sum alpha_i k(x_i, .)
    value: float  # empirical hinge at the fit
    norm: float
    gap: float
    mu: float
    converged: bool
    solves: int = 0


def _hinge_from_margins(margins: np.ndarray) -> float:
    return float(np.mean(np.maximum(1.0 - margins, 0.0)))


class HingePathSolver:
    """All constrained / penalized hinge fits for one labelled sample."""

    def __init__(self, kernel: KernelSpec, x, y, backend: Optional[str] = None):
        self.kernel = kernel
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1 or len(self.x) == 0:
            raise ValueError("need matching 1-d x, y with at least one point")
        if not np.all(np.abs(self.y) == 1.0):
            raise ValueError("labels must be +-1")
        self.n = len(self.x)
        self.K = gram(kernel, self.x)
        self.Q = self.K * np.outer(self.y, self.y)
        self.ub = 1.0 / self.n
        self.backend = backend or default_backend()
        self._lmax: Optional[float] = None
        self._mus: list[float] = []  # sorted keys of the penalized cache
        self._cache: dict[float, QPState] = {}
        self._fits: dict[tuple[float, float], ConstrainedFit] = {}
        self._mu_history: list[tuple[float, float]] = []  # (R, mu*) pairs
        self._rsep: Optional[float] = None
        self._interp_alpha: Optional[np.ndarray] = None
        self.qp_solves = 0

    # -- penalized problems -------------------------------------------------

    def lmax(self) -> float:
        if self._lmax is None:
            self._lmax = power_lmax(self.Q)
        return self._lmax

    def penalized(self, mu: float, gap_tol: float, max_rounds: int = 60) -> QPState:
        """Dual solve of mean hinge + mu ||f||^2 to the requested gap."""
        cached = self._cache.get(mu)
        if cached is not None and cached.gap <= gap_tol:
            return cached
        a0 = cached.a if cached is not None else self._warm_start(mu)
        state = solve_box_qp(
            self.Q, mu, self.ub, a0=a0, gap_tol=gap_tol,
            backend=self.backend, lmax=self.lmax(), max_rounds=max_rounds,
        )
        self.qp_solves += 1
        if mu not in self._cache:
            insort(self._mus, mu)
        self._cache[mu] = state
        return state

    def _warm_start(self, mu: float):
        if not self._mus:
            return None
        i = bisect_left(self._mus, mu)
        cands = [m for m in (self._mus[max(i - 1, 0) : i + 1])]
        nearest = min(cands, key=lambda m: abs(math.log(m) - math.log(mu)))
        return self._cache[nearest].a

    # -- constrained problems ------------------------------------------------

    def zero_fit(self) -> ConstrainedFit:
        return ConstrainedFit(0.0, np.zeros(self.n), 1.0, 0.0, 0.0, math.inf, True)

    def interpolation_radius(self) -> float:
        """Norm of the minimum-norm function with margins exactly one.

        Any radius at or above it makes the constrained minimum exactly 0.
        Infinite when the Gram factorization fails.
        """
        if self._rsep is None:
            try:
                jitter = 1e-11 * max(float(np.trace(self.K)) / self.n, 1.0)
                cf = cho_factor(self.K + jitter * np.eye(self.n))
                self._interp_alpha = cho_solve(cf, self.y)
                self._rsep = float(np.sqrt(max(self.y @ self._interp_alpha, 0.0)))
            except np.linalg.LinAlgError:
                self._rsep = math.inf
        return self._rsep

    def _predict_mu(self, R: float) -> float:
        """First guess of the ball multiplier from previously solved radii."""
        if not self._mu_history:
            return 1.0 / (R * R)
        hist = sorted(self._mu_history)
        logr = math.log(R)
        if len(hist) == 1:
            r0, m0 = hist[0]
            return min(max(m0 * (r0 / R) ** 2, MU_FLOOR), 1e12)
        pos = bisect_left([h[0] for h in hist], R)
        i = min(max(pos, 1), len(hist) - 1)
        (r1, m1), (r2, m2) = hist[i - 1], hist[i]
        slope = (math.log(m2) - math.log(m1)) / (math.log(r2) - math.log(r1))
        guess = math.exp(math.log(m1) + slope * (logr - math.log(r1)))
        return min(max(guess, MU_FLOOR), 1e12)

    def constrained(self, R: float, gap_tol: float = 1e-8, max_solves: int = 60) -> ConstrainedFit:
        """min mean hinge over ||f|| <= R, certified by the constrained dual.

        Drives the penalized-path multiplier to the radius by a log-log
        secant with a bisection safeguard; the returned value is always the
        hinge loss of a feasible representer, the recorded gap its certified
        distance from the constrained optimum.
        """
        if R <= 0.0:
            return self.zero_fit()
        key = (float(R), float(gap_tol))
        hit = self._fits.get(key)
        if hit is not None:
            return hit
        if R >= self.interpolation_radius():
            # unit-margin interpolant: zero hinge, norm within the ball
            alpha = self._interp_alpha
            val = self.empirical_hinge_of(alpha)
            fit = ConstrainedFit(R, alpha.copy(), val, self._rsep, val, 0.0, True)
            self._fits[key] = fit
            return fit
        qp_tol = max(gap_tol / 4.0, 1e-13)
        solves0 = self.qp_solves

        best_val = 1.0  # zero function is always feasible
        best_alpha = np.zeros(self.n)
        best_norm = 0.0
        best_mu = math.inf
        best_dual = 0.0

        def consider(state: QPState):
            nonlocal best_val, best_alpha, best_norm, best_mu, best_dual
            dual_h = float(np.sum(state.a)) - 2.0 * R * state.mu * state.norm
            best_dual = max(best_dual, dual_h)
            if state.norm <= 0.0:
                return
            scale = min(1.0, R / state.norm)
            margins = state.s / (2.0 * state.mu) * scale
            val = _hinge_from_margins(margins)
            if val < best_val:
                best_val = val
                best_alpha = (self.y * state.a) / (2.0 * state.mu) * scale
                best_norm = state.norm * scale
                best_mu = state.mu

        # lower bracket: norm(mu) > R, upper bracket: norm(mu) < R
        mu_lo, mu_hi = None, None
        pts: list[tuple[float, float]] = []  # (log mu, log norm)
        mu = min(self._predict_mu(R), 1.0 / (R * R))
        converged = False
        for _ in range(max_solves):
            st = self.penalized(mu, qp_tol)
            consider(st)
            converged = best_val - best_dual <= gap_tol
            if converged:
                break
            if st.norm >= R:
                mu_lo = mu if mu_lo is None else max(mu_lo, mu)
            else:
                mu_hi = mu if mu_hi is None else min(mu_hi, mu)
            if st.norm > 0.0:
                pts.append((math.log(mu), math.log(st.norm)))
            proposal = None
            if len(pts) >= 2 and pts[-1][1] != pts[-2][1]:
                (l1, n1), (l2, n2) = pts[-2], pts[-1]
                log_prop = l2 + (math.log(R) - n2) * (l1 - l2) / (n1 - n2)
                proposal = math.exp(min(max(log_prop, math.log(MU_FLOOR)), 28.0))
            if mu_lo is not None and mu_hi is not None:
                if proposal is None or not (mu_lo < proposal < mu_hi):
                    proposal = math.sqrt(mu_lo * mu_hi)
                if mu_hi / mu_lo < 1.0 + 1e-13:
                    qp_tol = max(qp_tol / 8.0, 1e-14)
                    proposal = mu_lo
            elif mu_lo is not None:  # norm too big everywhere so far: raise mu
                if proposal is None or proposal <= mu_lo:
                    proposal = mu_lo * 32.0
            else:  # norm too small everywhere so far: lower mu
                if proposal is None or proposal >= mu_hi:
                    proposal = mu_hi / 32.0
                if proposal <= MU_FLOOR and mu_hi <= MU_FLOOR * 32.0:
                    break  # interior optimum: the ball constraint is slack
                proposal = max(proposal, MU_FLOOR)
            mu = proposal

        if best_mu is not math.inf and best_norm > 0:
            self._mu_history.append((R, best_mu))
        fit = ConstrainedFit(
            R=R,
            alpha=best_alpha,
            value=best_val,
            norm=best_norm,
            gap=max(best_val - best_dual, 0.0),
            mu=best_mu,
            converged=converged,
            solves=self.qp_solves - solves0,
        )
        self._fits[key] = fit
        return fit

    def representer(self, fit: ConstrainedFit) -> RepresenterFn:
        return RepresenterFn(self.kernel, self.x, fit.alpha.copy())

    def empirical_hinge_of(self, alpha: np.ndarray) -> float:
        return _hinge_from_margins(self.y * (self.K @ alpha))


def train_constrained(
    x, y, kernel: KernelSpec, R: float,
    gap_tol: float = 1e-8,
    method: str = "dual",
    subgradient_iters: int = 50_000,
    path: Optional[HingePathSolver] = None,
) -> RepresenterFn:
    """Constrained hinge fit; returns the representer anchored at the inputs.

    ``method="dual"`` is the certified path solver; ``method="subgradient"``
    is the plain projected-subgradient primal iteration (cheap per step,
    slow to high accuracy; kept for cross-checks and benchmarks).
    """
    path = path or HingePathSolver(kernel, x, y)
    if method == "dual":
        fit = path.constrained(R, gap_tol)
        fn = path.representer(fit)
    elif method == "subgradient":
        alpha, _ = projected_subgradient(path.K, path.y, R, iters=subgradient_iters)
        fn = RepresenterFn(kernel, path.x, alpha)
    else:
        raise ValueError(f"unknown method {method!r}")
    return fn


# ---------------------------------------------------------------------------
# regularized estimator


@dataclass
class FitResult:
    g_hat: RepresenterFn
    objective: float
    inner_values: dict
    R_hat_continuous: float  # norm of g_hat
    R_opt: float
    lam: float
    phi_name: str
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "kernel": kernel_to_config(self.g_hat.kernel),
            "anchors": [float(v) for v in self.g_hat.anchors],
            "coefficients": [float(v) for v in self.g_hat.coeffs],
            "objective": self.objective,
            "norm": self.R_hat_continuous,
            "R_opt": self.R_opt,
            "lam": self.lam,
            "phi": self.phi_name,
            "inner_values": {repr(k): v for k, v in sorted(self.inner_values.items())},
            "diagnostics": self.diagnostics,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)


def _outer_grid(M: float, n: int, grid_points: int, extra) -> np.ndarray:
    r_max = n / M
    geo = np.geomspace(r_max / n**2, r_max, grid_points - 1)
    grid = np.concatenate([[0.0], geo])
    if extra is not None:
        grid = np.concatenate([grid, np.asarray(extra, dtype=float)])
    return np.unique(grid)


def train_regularized(
    x, y, kernel: KernelSpec, cfg: TrainConfig,
    path: Optional[HingePathSolver] = None,
    extra_radii=None,
) -> FitResult:
    """Outer 1-d search of inner(R) + lam phi(M R) over a radius grid.

    The grid is geometric on [0, n/M] (the norm of any minimizer is at most
    n/M once lam >= 1/n, by comparison with the zero function); radii in
    ``extra_radii`` are evaluated too, but only radii within the bound are
    eligible winners.  Ties go to the smallest radius.
    """
    phi, phi_name = phi_function(cfg.phi)
    path = path or HingePathSolver(kernel, x, y)
    M = kernel.sup_bound
    n = path.n
    scan_tol = max(cfg.coarse_tol, 1e-12)
    r_cap = n / M * (1.0 + 1e-12)

    grid = _outer_grid(M, n, cfg.grid_points, extra_radii)
    evals: dict[float, float] = {}
    gaps: dict[float, float] = {}
    objs: dict[float, float] = {}

    def objective(R: float, relax: bool = False) -> float:
        R = float(R)
        if R > 0:
            if relax:  # value recorded as an honest upper bound, cheaply
                fit = path.constrained(R, gap_tol=max(scan_tol, 0.25), max_solves=3)
            else:
                fit = path.constrained(R, scan_tol)
            inner, gap = fit.value, fit.gap
        else:
            inner, gap = 1.0, 0.0
        evals[R] = inner
        gaps[R] = gap
        obj = inner + cfg.lam * phi(M * R)
        if R <= r_cap:
            objs[R] = obj
        return obj

    # ascending scan with sound pruning: inner(R) >= 0, so a radius whose
    # penalty term alone reaches the running best can never win
    best_seen = math.inf
    for R in grid:
        pen_term = cfg.lam * phi(M * float(R))
        obj = objective(R, relax=pen_term >= best_seen)
        best_seen = min(best_seen, obj)
    best_r = min(objs, key=lambda R: (objs[R], R))

    # golden-section refinement of the best bracket (argmin stays global
    # over every evaluated point, so unimodality is not assumed)
    sorted_grid = sorted(evals)
    i = sorted_grid.index(best_r)
    lo = sorted_grid[max(i - 1, 0)]
    hi = sorted_grid[min(i + 1, len(sorted_grid) - 1)]
    if hi > lo:
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        uselog = lo > 0.0
        a, b = (math.log(lo), math.log(hi)) if uselog else (lo, hi)
        back = math.exp if uselog else (lambda v: v)
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = objective(back(c)), objective(back(d))
        for _ in range(cfg.refine_iters):
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = objective(back(c))
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = objective(back(d))

    best_obj = min(objs.values())
    tie = cfg.tol * max(1.0, abs(best_obj))
    best_r = min(R for R, v in objs.items() if v <= best_obj + tie)

    fit = path.constrained(best_r, max(cfg.tol, 1e-12)) if best_r > 0 else path.zero_fit()
    g_hat = path.representer(fit)
    norm = fit.norm
    objective_val = fit.value + cfg.lam * phi(M * norm)
    return FitResult(
        g_hat=g_hat,
        objective=objective_val,
        inner_values=dict(evals),
        R_hat_continuous=norm,
        R_opt=best_r,
        lam=cfg.lam,
        phi_name=phi_name,
        diagnostics={
            "qp_solves": path.qp_solves,
            "gap": fit.gap,
            "converged": bool(fit.converged),
            "backend": path.backend,
            "empirical_hinge": fit.value,
            "inner_gaps": dict(gaps),
        },
    )


# ---------------------------------------------------------------------------
# independent oracles


def dual_svm0_crosscheck(x, y, kernel: KernelSpec, lam: float,
                         gap_tol: float = 1e-8, max_sweeps: int = 20_000, full: bool = False):
    """Quadratic-regularizer objective at lam via plain coordinate ascent.

    Solves min_f mean hinge + 2 lam M^2 ||f||^2 through its box dual with a
    self-contained cyclic coordinate-ascent loop (independent of the path
    solver) and returns the primal objective reconstructed from the dual
    variables.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    K = gram(kernel, x)
    Q = K * np.outer(y, y)
    n = len(x)
    ub = 1.0 / n
    mu = 2.0 * lam * kernel.sup_bound**2
    a = np.zeros(n)
    s = np.zeros(n)
    gap = math.inf
    for _sweep in range(max_sweeps):
        for i in range(n):
            qii = Q[i, i]
            if qii > 0.0:
                new = min(max(a[i] + (2.0 * mu - s[i]) / qii, 0.0), ub)
            else:
                slope = 1.0 - s[i] / (2.0 * mu)
                new = ub if slope > 0 else (0.0 if slope < 0 else a[i])
            delta = new - a[i]
            if delta != 0.0:
                a[i] = new
                s += delta * Q[i]
        quad = float(a @ s)
        hinge = float(np.mean(np.maximum(1.0 - s / (2.0 * mu), 0.0)))
        primal = hinge + quad / (4.0 * mu)
        dual = float(np.sum(a)) - quad / (4.0 * mu)
        gap = primal - dual
        if gap <= gap_tol:
            break
    if full:
        return primal, {"gap": gap, "a": a, "dual": dual, "mu": mu}
    return primal


def constrained_hinge_cutting_plane(K, y, R: float, tol: float = 1e-7, max_cuts: int = 2000) -> float:
    """Constrained hinge minimum by cutting planes in function-value space.

    Variables are the fitted values v_i = f(x_i) plus slacks; the hinge part
    is exactly linear and the ball constraint v' K^-1 v <= R^2 is enforced by
    accumulated linearizations, each LP solved by HiGHS.  Every LP value is a
    lower bound; radially scaling the LP iterate onto the ball gives a
    feasible upper bound, and the loop stops when the two meet within tol.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if R <= 0.0:
        return 1.0
    ridge = 1e-12 * max(float(np.trace(K)) / n, 1.0)
    Kinv = np.linalg.inv(K + ridge * np.eye(n))
    vb = R * np.sqrt(np.maximum(np.diag(K), 0.0))
    c = np.concatenate([np.zeros(n), np.full(n, 1.0 / n)])
    # xi_i >= 1 - y_i v_i
    A = np.concatenate([-np.diag(y), -np.eye(n)], axis=1)
    b = -np.ones(n)
    bounds = [(-float(vb[i]), float(vb[i])) for i in range(n)] + [(0.0, None)] * n
    best_ub = 1.0  # the zero function
    for _ in range(max_cuts):
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if not res.success:
            raise RuntimeError(f"cutting-plane LP failed: {res.message}")
        v = res.x[:n]
        w = Kinv @ v
        q = float(v @ w)
        if q > 0.0:
            v_feas = v * min(1.0, R / math.sqrt(q))
            best_ub = min(best_ub, float(np.mean(np.maximum(1.0 - y * v_feas, 0.0))))
        lower = float(res.fun)
        if q <= R * R * (1.0 + 1e-12):
            return lower
        if best_ub - lower <= tol:
            return best_ub
        A = np.vstack([A, np.concatenate([2.0 * w, np.zeros(n)])])
        b = np.append(b, R * R + q)
    raise RuntimeError("cutting-plane solver did not converge within the cut budget")


def projected_subgradient(K, y, R: float, iters: int = 50_000, step_scale: Optional[float] = None):
    """Projected subgradient descent in function space with Polyak averaging.

    Steps are c/sqrt(t); projection onto the ball is radial scaling in the
    kernel metric.  Returns (alpha, value) for the better of the averaged
    and the best visited iterate.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if R <= 0.0:
        return np.zeros(n), 1.0
    M = math.sqrt(max(float(np.max(np.diag(K))), 1e-300))
    c = step_scale if step_scale is not None else R / M
    alpha = np.zeros(n)
    k_alpha = np.zeros(n)
    best_alpha, best_val = alpha.copy(), 1.0
    avg = np.zeros(n)
    for t in range(1, iters + 1):
        margins = y * k_alpha
        val = _hinge_from_margins(margins)
        if val < best_val:
            best_val, best_alpha = val, alpha.copy()
        active = (margins < 1.0).astype(float)
        step = c / math.sqrt(t)
        direction = y * active / n
        alpha = alpha + step * direction
        k_alpha = k_alpha + step * (K @ direction)
        nrm2 = float(alpha @ k_alpha)
        if nrm2 > R * R:
            sc = R / math.sqrt(nrm2)
            alpha *= sc
            k_alpha *= sc
        avg += alpha
    avg /= iters
    avg_val = _hinge_from_margins(y * (K @ avg))
    if avg_val < best_val:
        return avg, avg_val
    return best_alpha, best_val


# ---------------------------------------------------------------------------
# explicit-feature training for large reference samples


class FourierFn:
    """Linear function theta' psi(x) in circle eigenfeature coordinates.

    The feature scaling makes the kernel-space norm equal to |theta|_2.
    ``oscillation_hint`` (max frequency) steers quadrature scan density.
    """

    def __init__(self, features, theta, oscillation_hint: int = 0):
        self._features = features
        self.theta = np.asarray(theta, dtype=float)
        self.oscillation_hint = oscillation_hint

    def __call__(self, x):
        scalar = np.isscalar(x)
        vals = self._features(np.atleast_1d(np.asarray(x, dtype=float))) @ self.theta
        return float(vals[0]) if scalar else vals

    def rkhs_norm(self) -> float:
        return float(np.linalg.norm(self.theta))


def train_constrained_fourier(features, x, y, R: float, passes: int = 300) -> FourierFn:
    """Constrained hinge fit with an explicit feature map, by averaged
    projected subgradient over the full batch (any feasible point is a
    valid upper-bound witness; high accuracy is not required here)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phi_mat = features(x)
    n, dim = phi_mat.shape
    hint = (dim + 1) // 2  # highest frequency among the features
    if R <= 0.0:
        return FourierFn(features, np.zeros(dim), hint)
    row_norm = float(np.max(np.linalg.norm(phi_mat, axis=1)))
    theta = np.zeros(dim)
    avg = np.zeros(dim)
    best_theta, best_val = theta.copy(), 1.0
    for t in range(1, passes + 1):
        margins = y * (phi_mat @ theta)
        val = _hinge_from_margins(margins)
        if val < best_val:
            best_val, best_theta = val, theta.copy()
        active = margins < 1.0
        grad = -(phi_mat.T @ (y * active)) / n
        theta = theta - (R / (row_norm * math.sqrt(t))) * grad
        nrm = np.linalg.norm(theta)
        if nrm > R:
            theta *= R / nrm
        avg += theta
    avg /= passes
    if _hinge_from_margins(y * (phi_mat @ avg)) < best_val:
        return FourierFn(features, avg, hint)
    return FourierFn(features, best_theta, hint)
