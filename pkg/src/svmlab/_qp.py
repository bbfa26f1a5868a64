"""Box-constrained quadratic dual of the penalized hinge problem.

Solves   max_{a in [0, 1/n]^n}  sum(a) - a'Qa / (4 mu),   Q = (y y') * K,

which is the dual of  min_f  mean hinge(f) + mu ||f||^2  with
f = sum_i a_i y_i k(x_i, .) / (2 mu).  Termination is certified by the
exact primal-dual gap, reconstructed from the maintained product s = Q a
(margins are s / (2 mu), the squared norm is a's / (4 mu^2)).

Two interchangeable backends: compiled cyclic coordinate ascent
(``svmlab._fastloops``) when built, otherwise L-BFGS-B bursts with a
projected-gradient (FISTA) polisher.  ``SVMLAB_PURE=1`` forces the
fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize

try:  # compiled hot loop, optional
    from . import _fastloops
except ImportError:  # pragma: no cover - depends on build
    _fastloops = None

__all__ = ["default_backend", "solve_box_qp", "QPState"]


def default_backend() -> str:
    if os.environ.get("SVMLAB_PURE", "0") not in ("", "0"):
        return "numpy"
    return "compiled" if _fastloops is not None else "numpy"


def have_compiled() -> bool:
    return _fastloops is not None


@dataclass
class QPState:
    a: np.ndarray
    s: np.ndarray  # Q @ a
    mu: float
    dual: float
    primal: float
    gap: float
    hinge: float
    norm: float  # ||f_mu||_k

    @classmethod
    def from_a(cls, Q: np.ndarray, a: np.ndarray, mu: float, s=None) -> "QPState":
        if s is None:
            s = Q @ a
        quad = float(a @ s)
        margins = s / (2.0 * mu)
        hinge = float(np.mean(np.maximum(1.0 - margins, 0.0)))
        dual = float(np.sum(a)) - quad / (4.0 * mu)
        primal = hinge + quad / (4.0 * mu)
        return cls(
            a=a,
            s=s,
            mu=mu,
            dual=dual,
            primal=primal,
            gap=primal - dual,
            hinge=hinge,
            norm=float(np.sqrt(max(quad, 0.0)) / (2.0 * mu)),
        )


def _lbfgsb_burst(Q, a, mu, ub, maxiter):
    n = len(a)

    def fun(v):
        s = Q @ v
        return float(v @ s) / (4.0 * mu) - float(np.sum(v)), s / (2.0 * mu) - 1.0

    res = minimize(
        fun,
        a,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, ub)] * n,
        options={"maxiter": maxiter, "ftol": 1e-18, "gtol": 1e-14},
    )
    return np.clip(res.x, 0.0, ub)


def _pnewton_burst(Q, a, mu, ub, iters=8):
    """Projected-Newton steps on the free set of the box QP.

    The strictly-inside coordinates at the optimum are the margin support
    vectors, typically few, so the free-set Newton system stays small; each
    step costs one small Cholesky plus a matvec per line-search trial.
    Returns (a, s) with s = Q a kept in sync.
    """
    n = len(a)
    s = Q @ a
    twomu = 2.0 * mu

    def fval(v, sv):
        return float(v @ sv) / (4.0 * mu) - float(np.sum(v))

    f0 = fval(a, s)
    for _ in range(iters):
        g = s / twomu - 1.0
        bound = ((a <= 0.0) & (g >= 0.0)) | ((a >= ub) & (g <= 0.0))
        free = ~bound
        nf = int(np.count_nonzero(free))
        if nf == 0:
            break
        qff = Q[np.ix_(free, free)] / twomu
        ridge = 1e-12 * max(float(np.trace(qff)) / nf, 1.0)
        try:
            cf = cho_factor(qff + ridge * np.eye(nf), lower=True, check_finite=False)
            df = -cho_solve(cf, g[free], check_finite=False)
        except LinAlgError:
            df = -g[free] * twomu
        d = np.zeros(n)
        d[free] = df
        t = 1.0
        improved = False
        for _ls in range(12):
            a_new = np.clip(a + t * d, 0.0, ub)
            s_new = Q @ a_new
            f_new = fval(a_new, s_new)
            if f_new < f0 - 1e-15 * max(abs(f0), 1.0):
                improved = True
                break
            t *= 0.25
        if not improved:
            break
        a, s, f0 = a_new, s_new, f_new
    return a, s


def _fista_burst(Q, a, mu, ub, lmax, iters):
    step = 2.0 * mu / max(lmax, 1e-300)
    z = a.copy()
    prev = a.copy()
    t = 1.0
    for _ in range(iters):
        grad = (Q @ z) / (2.0 * mu) - 1.0
        cur = np.clip(z - step * grad, 0.0, ub)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = cur + ((t - 1.0) / t_new) * (cur - prev)
        if float((z - cur) @ (cur - prev)) > 0.0:  # gradient restart
            z = cur.copy()
            t_new = 1.0
        prev = cur
        t = t_new
    return prev


def power_lmax(Q: np.ndarray, iters: int = 30) -> float:
    """Largest eigenvalue of PSD Q by deterministic power iteration."""
    n = Q.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(iters):
        w = Q @ v
        lam = float(np.linalg.norm(w))
        if lam <= 0.0:
            return 0.0
        v = w / lam
    return lam * 1.01  # small head-room so 1/L is a safe step


def solve_box_qp(
    Q: np.ndarray,
    mu: float,
    ub: float,
    a0=None,
    gap_tol: float = 1e-8,
    max_rounds: int = 60,
    backend: str | None = None,
    lmax: float | None = None,
) -> QPState:
    """Solve the box QP to the requested duality gap (absolute, hinge units).

    The compiled backend runs cyclic coordinate-ascent bursts (excellent when
    warm-started) and falls over to L-BFGS-B when the gap stalls, which
    happens on cold, badly conditioned instances (small mu).  The NumPy
    backend runs L-BFGS-B bursts with a projected-gradient polisher.  Both
    stop on the exact reconstructed gap; if the round budget runs out the
    best iterate is returned with its achieved gap.
    """
    n = Q.shape[0]
    backend = backend or default_backend()
    a = np.zeros(n) if a0 is None else np.clip(np.asarray(a0, dtype=float).copy(), 0.0, ub)
    state = QPState.from_a(Q, a, mu)
    if state.gap <= gap_tol:
        return state
    if backend == "compiled":
        if _fastloops is None:
            raise RuntimeError("compiled backend requested but svmlab._fastloops is not built")
        Qc = np.ascontiguousarray(Q)
        s = Qc @ a
        best = state
        stalls = 0
        for round_ in range(max_rounds):
            prev_gap = best.gap
            _fastloops.cd_sweeps(Qc, a, s, ub, mu, 2 if round_ < 6 else 6)
            state = QPState.from_a(Q, a, mu, s=s.copy())
            if state.gap <= gap_tol:
                return state
            if state.gap < best.gap:
                best = state
            stalls = stalls + 1 if state.gap > 0.5 * prev_gap else 0
            if stalls >= 2:  # conditioning beats coordinate ascent: Newton rescue
                a, s = _pnewton_burst(Q, a, mu, ub)
                state = QPState.from_a(Q, a, mu, s=s.copy())
                if state.gap <= gap_tol:
                    return state
                if state.gap < best.gap:
                    best = state
                stalls = 0
        return best
    best = state
    for round_ in range(max_rounds):
        a, s = _pnewton_burst(Q, a, mu, ub)
        state = QPState.from_a(Q, a, mu, s=s)
        if state.gap <= gap_tol:
            return state
        if state.gap >= 0.5 * best.gap:  # stalled: quasi-Newton then gradient polish
            a = _lbfgsb_burst(Q, a, mu, ub, maxiter=200)
            state = QPState.from_a(Q, a, mu)
            if state.gap <= gap_tol:
                return state
            if state.gap >= 0.5 * best.gap:
                if lmax is None:
                    lmax = power_lmax(Q)
                a = _fista_burst(Q, a, mu, ub, lmax, iters=150)
                state = QPState.from_a(Q, a, mu)
                if state.gap <= gap_tol:
                    return state
        if state.gap < best.gap:
            best = state
        a = best.a.copy()
    return best
