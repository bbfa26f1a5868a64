"""Hinge and 0-1 losses and exact relative risks against the Bayes classifier.

Risks are computed relative to the Bayes classifier s*(x) = sign(eta - 1/2):

    hinge:  integral of  eta (1-g)_+ + (1-eta)(1+g)_+ - 2 min(eta, 1-eta)
    0-1:    integral of  eta 1{g<=0} + (1-eta) 1{g>=0} - min(eta, 1-eta)

over the uniform marginal.  The integrands are piecewise smooth once the
domain is split at eta's breakpoints and at the level crossings of g
(g = +-1 for the hinge kinks, g = 0 for the 0-1 jumps), so composite
Gauss-Legendre panels with doubling converge fast; crossings are isolated
by scanning plus bisection.  A margin of exactly zero counts as an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "hinge",
    "zero_one",
    "cond_hinge_risk",
    "bayes_cond_hinge",
    "rel_hinge_risk",
    "rel_01_risk",
    "empirical_hinge",
    "risk_report",
    "rel_risks_mc",
    "RiskReport",
]

_GL_CACHE: dict = {}


def _gl_nodes(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def hinge(margin):
    """(1 - margin)_+ elementwise."""
    return np.maximum(1.0 - np.asarray(margin, dtype=float), 0.0) if not np.isscalar(margin) else max(1.0 - margin, 0.0)


def zero_one(margin):
    """1{margin <= 0}; a margin of exactly 0 counts as an error."""
    if np.isscalar(margin):
        return 1 if margin <= 0 else 0
    return (np.asarray(margin, dtype=float) <= 0.0).astype(int)


def cond_hinge_risk(eta, g):
    """Conditional hinge risk eta (1-g)_+ + (1-eta)(1+g)_+."""
    eta_arr = np.asarray(eta, dtype=float)
    if np.any(eta_arr < 0.0) or np.any(eta_arr > 1.0):
        raise ValueError("eta must lie in [0, 1]")
    g_arr = np.asarray(g, dtype=float)
    out = eta_arr * np.maximum(1.0 - g_arr, 0.0) + (1.0 - eta_arr) * np.maximum(1.0 + g_arr, 0.0)
    return float(out) if out.ndim == 0 else out


def bayes_cond_hinge(eta):
    """Conditional hinge risk of the Bayes classifier: 2 min(eta, 1-eta)."""
    eta_arr = np.asarray(eta, dtype=float)
    out = 2.0 * np.minimum(eta_arr, 1.0 - eta_arr)
    return float(out) if out.ndim == 0 else out


def empirical_hinge(g, x, y) -> float:
    """Mean hinge loss of g over a labelled sample."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        raise ValueError("sample must be nonempty")
    return float(np.mean(np.maximum(1.0 - y * np.asarray(g(x), dtype=float), 0.0)))


# -- quadrature engine -------------------------------------------------------


def _integrate_panel(fun, a: float, b: float, tol: float, order: int = 0, max_splits: int = 9):
    """Composite Gauss-Legendre on [a, b] with doubling until stable."""
    if order <= 0:
        order = 32 if b - a > 0.02 else 8  # narrow panels hold low-order pieces
    nodes, weights = _gl_nodes(order)
    prev = None
    for level in range(max_splits + 1):
        k = 1 << level
        edges = np.linspace(a, b, k + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        vals = np.asarray(fun(xs), dtype=float).reshape(k, order)
        cur = float(np.sum((vals @ weights) * half))
        if prev is not None and abs(cur - prev) <= tol:
            return cur, abs(cur - prev)
        prev = cur
    return prev, tol  # best effort; caller folds tol into the error estimate


def _find_crossings(fun, a: float, b: float, scan: int = 64) -> list:
    """Roots of fun in (a, b) by sign scanning plus bisection."""
    xs = np.linspace(a, b, scan + 1)
    vals = np.asarray(fun(xs), dtype=float)
    roots = [float(x) for x, v in zip(xs[1:-1], vals[1:-1]) if v == 0.0]
    idx = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
    for i in idx:
        lo, hi = xs[i], xs[i + 1]
        flo = vals[i]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = float(fun(np.array([mid]))[0])
            if fm == 0.0:
                break
            if (flo < 0) == (fm < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return sorted(roots)


def _base_panels(dist, g) -> np.ndarray:
    pts = [0.0, 1.0]
    pts.extend(float(v) for v in dist.breakpoints)
    bp = getattr(g, "breakpoints", None)
    if bp is not None:
        pts.extend(float(v) for v in bp)
    pts = np.array(sorted(p for p in set(pts) if 0.0 <= p <= 1.0))
    return pts


def _split_at(panels: np.ndarray, extra: list) -> np.ndarray:
    if not extra:
        return panels
    return np.array(sorted(set(panels.tolist()) | set(extra)))


def _scan_density(g, a: float, b: float) -> int:
    """Crossing-scan resolution: at least 8 samples per oscillation.

    Functions exposing ``oscillation_hint`` (an effective max frequency) get
    a width-proportional scan; anything else gets the conservative default.
    """
    hint = getattr(g, "oscillation_hint", None)
    if hint is None:
        return 64
    return max(9, int(8.0 * hint * (b - a)) + 1)


def rel_hinge_risk(g, dist, tol: float = 1e-8) -> float:
    """Relative hinge risk of g against the Bayes classifier, by quadrature."""
    value, _ = _rel_hinge(g, dist, tol)
    return value


def _rel_hinge(g, dist, tol: float):
    panels = _base_panels(dist, g)
    crossings = []
    for level in (1.0, -1.0):
        for a, b in zip(panels[:-1], panels[1:]):
            crossings.extend(
                _find_crossings(lambda x: np.asarray(g(x)) - level, a, b, _scan_density(g, a, b))
            )
    panels = _split_at(panels, crossings)

    def integrand(x):
        e = dist.eta(x)
        return cond_hinge_risk(e, np.asarray(g(x), dtype=float)) - bayes_cond_hinge(e)

    total, err = 0.0, 0.0
    for a, b in zip(panels[:-1], panels[1:]):
        if b - a <= 1e-15:
            continue
        v, e = _integrate_panel(integrand, a, b, max(tol * (b - a), 1e-16))
        total += v
        err += e
    return total, err


def rel_01_risk(g, dist, tol: float = 1e-8) -> float:
    """Relative misclassification risk of g, by quadrature with sign isolation."""
    value, _ = _rel_01(g, dist, tol)
    return value


def _rel_01(g, dist, tol: float):
    panels = _base_panels(dist, g)
    crossings = []
    for a, b in zip(panels[:-1], panels[1:]):
        crossings.extend(_find_crossings(lambda x: np.asarray(g(x)), a, b, _scan_density(g, a, b)))
    panels = _split_at(panels, crossings)

    total, err = 0.0, 0.0
    for a, b in zip(panels[:-1], panels[1:]):
        if b - a <= 1e-15:
            continue
        s = float(np.atleast_1d(g(0.5 * (a + b)))[0])
        ind_le = 1.0 if s <= 0.0 else 0.0  # 1{g <= 0}: positive class errs
        ind_ge = 1.0 if s >= 0.0 else 0.0  # 1{g >= 0}: negative class errs

        def integrand(x):
            e = dist.eta(x)
            return e * ind_le + (1.0 - e) * ind_ge - np.minimum(e, 1.0 - e)

        v, e = _integrate_panel(integrand, a, b, max(tol * (b - a), 1e-16))
        total += v
        err += e
    return total, err


@dataclass
class RiskReport:
    rel_hinge: float
    rel_01: float
    method: str
    error_estimate: float


def risk_report(g, dist, tol: float = 1e-8) -> RiskReport:
    """Quadrature risk report (both losses) for one function."""
    l_val, l_err = _rel_hinge(g, dist, tol)
    t_val, t_err = _rel_01(g, dist, tol)
    return RiskReport(l_val, t_val, "quadrature", l_err + t_err + tol)


def rel_risks_mc(g, dist, n_draws: int, rng) -> RiskReport:
    """Monte Carlo risk report, conditional on X (Y integrated analytically)."""
    x = rng.random(n_draws)
    e = dist.eta(x)
    gv = np.asarray(g(x), dtype=float)
    h = cond_hinge_risk(e, gv) - bayes_cond_hinge(e)
    z = e * (gv <= 0.0) + (1.0 - e) * (gv >= 0.0) - np.minimum(e, 1.0 - e)
    se = float(np.sqrt(np.var(h) / n_draws) + np.sqrt(np.var(z) / n_draws))
    return RiskReport(float(np.mean(h)), float(np.mean(z)), "monte_carlo", se)
