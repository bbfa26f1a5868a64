"""Experiment runner: ``svmlab <kind> [flags]``.

Each experiment writes ``rows.csv`` (RFC-4180, one record per measurement)
and ``summary.json`` (schema_version 1; every summary statistic is
recomputable from the rows).  Configuration comes from an optional TOML
file (``--config``) with nested ``[kernel]`` / ``[dist]`` tables, overridden
by command-line flags.  All randomness flows from the master ``--seed``
through per-replicate splits, so reruns are byte-identical at any
``--workers`` count.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import complexity, losses, selection, solver, spectra
from .distributions import SyntheticDist, dist_from_config, replicate_rng
from .kernels import KernelSpec, gram, kernel_from_config

SCHEMA_VERSION = 1

KINDS = (
    "spectrum",
    "gamma",
    "calibrate",
    "train",
    "select",
    "verify-oracle",
    "rate-study",
    "rademacher-check",
    "risk",
)

DEFAULTS = {
    "seed": 20240801,
    "workers": 1,
    "replicates": 1,
    "n": 512,
    "delta": 0.05,
    "c": 1.0,
    "setting": "s1",
    "phi": ["quadratic"],
    "trailing_variant": "w1_inv",
    "risk_tol": 1e-7,
    "gap_tol": 1e-6,
    "kernel": {"family": "circle_fourier", "a0": 1.0, "amplitude": 1.0, "smoothness": 1.0},
    "dist": {"form": "hard_gap", "m": 1, "eta0": 0.2},
    "oracle": {"n_ref": 50000, "n_funcs": 129, "passes": 300, "seed": 20240601},
}


# ---------------------------------------------------------------------------
# report plumbing


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


def write_report(out_dir, header, rows, summary) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    write_rows(os.path.join(out_dir, "rows.csv"), header, rows)
    summary = {"schema_version": SCHEMA_VERSION, **summary}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    return summary


def rate_study_fit(points):
    """OLS slope of log(value) on log(n) with a 95% confidence band.

    ``points`` is a sequence of (n, value) pairs with positive values and at
    least 4 distinct n.  Returns (slope, half_width, stderr).
    """
    from scipy import stats

    pts = [(float(n), float(v)) for n, v in points]
    if len({p[0] for p in pts}) < 4:
        raise ValueError("need at least 4 distinct n values")
    if any(v <= 0 for _, v in pts):
        raise ValueError("values must be positive for a log-log fit")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    dof = max(len(pts) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = math.sqrt(s2 / sxx) if sxx > 0 else 0.0
    half = float(stats.t.ppf(0.975, dof)) * stderr
    return float(coef[0]), half, stderr


def _build_kernel(cfg) -> KernelSpec:
    return kernel_from_config(cfg["kernel"])


def _build_kernels(cfg) -> list:
    if "kernels" in cfg:
        return [kernel_from_config(c) for c in cfg["kernels"]]
    return [_build_kernel(cfg)]


def _build_dist(cfg) -> SyntheticDist:
    return dist_from_config(cfg["dist"])


def _eta1_for(cfg, dist) -> float:
    eta1 = cfg.get("eta1", dist.gap_eta1)
    if not (0.0 < eta1 <= 0.5):
        raise ValueError(
            "setting s1 needs a positive eta1; the configured distribution "
            "touches {0,1} so pass an explicit eta1 or use setting s2"
        )
    return float(eta1)


def _calibration(cfg, kernel, dist, n, phi, delta=None):
    setting = cfg["setting"]
    delta = cfg["delta"] if delta is None else delta
    if setting == "s1":
        spec = spectra.analytic_spectrum(kernel)
        return selection.calibrate(
            "s1", n, delta, dist.gap_eta0, kernel.sup_bound, phi=phi,
            eta1=_eta1_for(cfg, dist), spectrum=spec, c=cfg["c"],
            trailing_variant=cfg["trailing_variant"],
        )
    em = complexity.EntropyModel.power_law(
        cfg.get("entropy_c_h", 1.0), cfg.get("entropy_s", kernel.params.get("smoothness", 1.0))
    )
    return selection.calibrate(
        "s2", n, delta, dist.gap_eta0, kernel.sup_bound, phi=phi,
        entropy=em, c=cfg["c"], trailing_variant=cfg["trailing_variant"],
    )


def _pool_map(fn, payloads, workers):
    if workers <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, payloads))


# ---------------------------------------------------------------------------
# experiment: spectrum


def run_spectrum(cfg, out_dir):
    kernel = _build_kernel(cfg)
    n = int(cfg["n"])
    reps = int(cfg["replicates"])
    top_k = int(cfg.get("top_k", 5))
    analytic = spectra.analytic_spectrum(kernel) if kernel.family == "circle_fourier" else None
    rows = []
    if analytic is not None:
        for i, lam in enumerate(analytic.eigenvalues[: max(top_k, 16)], start=1):
            rows.append(["analytic", -1, i, float(lam)])
    rel_errs = []
    for rep in range(reps):
        rng = replicate_rng(cfg["seed"], rep)
        xs = rng.random(n)
        emp = spectra.empirical_spectrum(gram(kernel, xs), n)
        for i, lam in enumerate(emp.eigenvalues[:top_k], start=1):
            rows.append(["empirical", rep, i, float(lam)])
        if analytic is not None:
            a = analytic.eigenvalues[:top_k]
            e = emp.eigenvalues[:top_k]
            rel_errs.append(float(np.max(np.abs(e - a) / a)))
    summary = {"kind": "spectrum", "n": n, "replicates": reps, "top_k": top_k}
    if rel_errs:
        summary["median_top_rel_err"] = float(np.median(rel_errs))
    return write_report(out_dir, ["kind", "replicate", "index", "eigenvalue"], rows, summary)


# ---------------------------------------------------------------------------
# experiment: gamma


def run_gamma(cfg, out_dir):
    kernel = _build_kernel(cfg)
    dist = _build_dist(cfg)
    ns = [int(v) for v in cfg.get("n_list", [2**k for k in range(8, 17)])]
    setting = cfg["setting"]
    rows = []
    for n in ns:
        if setting == "s1":
            spec = spectra.analytic_spectrum(kernel)
            g = complexity.gamma_s1(spec, n, _eta1_for(cfg, dist), kernel.sup_bound)
        else:
            em = complexity.EntropyModel.power_law(
                cfg.get("entropy_c_h", 1.0),
                cfg.get("entropy_s", kernel.params.get("smoothness", 1.0)),
            )
            g = complexity.gamma_s2(em, n, kernel.sup_bound)
        rows.append([n, g, setting])
    slope, half, stderr = rate_study_fit([(r[0], r[1]) for r in rows])
    summary = {
        "kind": "gamma",
        "setting": setting,
        "slope": slope,
        "slope_ci_halfwidth": half,
        "slope_stderr": stderr,
    }
    return write_report(out_dir, ["n", "gamma", "setting"], rows, summary)


# ---------------------------------------------------------------------------
# experiment: calibrate


def run_calibrate(cfg, out_dir):
    kernel = _build_kernel(cfg)
    dist = _build_dist(cfg)
    n = int(cfg["n"])
    cal = _calibration(cfg, kernel, dist, n, cfg["phi"][0])
    rows = [
        [float(R), cal.pen[float(R)], cal.rho[float(R)], cal.pen_sufficient[float(R)], cal.x_r]
        for R in cal.radii
    ]
    summary = {
        "kind": "calibrate",
        "setting": cal.setting,
        "n": n,
        "delta": cal.delta,
        "lambda_n": cal.lambda_n,
        "gamma": cal.gamma,
        "w1": cal.w1,
        "x_r": cal.x_r,
        "grid_size": len(cal.radii),
        "phi": cal.phi_name,
    }
    return write_report(out_dir, ["R", "pen", "rho", "pen_sufficient", "x_R"], rows, summary)


# ---------------------------------------------------------------------------
# experiment: train


def _train_task(payload):
    cfg, rep = payload
    kernel = _build_kernel(cfg)
    dist = _build_dist(cfg)
    n = int(cfg["n"])
    rng = replicate_rng(cfg["seed"], rep)
    x, y = dist.sample(n, rng=rng)
    results = []
    path = solver.HingePathSolver(kernel, x, y)
    for phi in cfg["phi"]:
        cal = _calibration(cfg, kernel, dist, n, phi)
        tc = solver.TrainConfig(phi=phi, lam=cal.lambda_n, tol=cfg["gap_tol"])
        fit = solver.train_regularized(x, y, kernel, tc, path=path, extra_radii=cal.radii)
        results.append(
            {
                "rep": rep,
                "phi": phi,
                "lam": cal.lambda_n,
                "objective": fit.objective,
                "norm": fit.R_hat_continuous,
                "R_opt": fit.R_opt,
                "empirical_hinge": fit.diagnostics["empirical_hinge"],
                "fit": fit,
            }
        )
    return results


def run_train(cfg, out_dir):
    payloads = [(cfg, rep) for rep in range(int(cfg["replicates"]))]
    all_results = _pool_map(_train_task, payloads, int(cfg["workers"]))
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for results in all_results:
        for res in results:
            rows.append(
                [res["rep"], cfg["n"], res["phi"], res["lam"], res["R_opt"],
                 res["norm"], res["empirical_hinge"], res["objective"]]
            )
            if cfg.get("save_fits", True):
                res["fit"].save(os.path.join(out_dir, f"fit_r{res['rep']}_{res['phi']}.json"))
    summary = {
        "kind": "train",
        "n": int(cfg["n"]),
        "replicates": int(cfg["replicates"]),
        "mean_objective": float(np.mean([r[7] for r in rows])),
    }
    return write_report(
        out_dir,
        ["replicate", "n", "phi", "lambda_n", "R_opt", "norm", "empirical_hinge", "objective"],
        rows,
        summary,
    )


# ---------------------------------------------------------------------------
# experiment: select


def _select_task(payload):
    cfg, rep = payload
    kernels = _build_kernels(cfg)
    dist = _build_dist(cfg)
    n = int(cfg["n"])
    t = len(kernels)
    rng = replicate_rng(cfg["seed"], rep)
    x, y = dist.sample(n, rng=rng)
    cals = [
        _calibration(cfg, k, dist, n, cfg["phi"][0], delta=cfg["delta"] / t) for k in kernels
    ]
    sel = selection.select_model(x, y, kernels, cals, gap_tol=cfg["gap_tol"])
    return rep, sel


def run_select(cfg, out_dir):
    payloads = [(cfg, rep) for rep in range(int(cfg["replicates"]))]
    results = _pool_map(_select_task, payloads, int(cfg["workers"]))
    rows = []
    chosen_counts: dict[int, int] = {}
    for rep, sel in results:
        chosen_counts[sel.kernel_index] = chosen_counts.get(sel.kernel_index, 0) + 1
        for r in sel.rows:
            rows.append(
                [rep, r.kernel_index, r.R, r.empirical_loss, r.pen, r.penalized_loss, r.chosen]
            )
    summary = {
        "kind": "select",
        "replicates": int(cfg["replicates"]),
        "chosen_counts": {str(k): v for k, v in sorted(chosen_counts.items())},
    }
    return write_report(
        out_dir,
        ["replicate", "kernel", "R", "empirical_loss", "pen", "penalized_loss", "chosen"],
        rows,
        summary,
    )


# ---------------------------------------------------------------------------
# experiment: verify-oracle


def _verify_task(payload):
    cfg, rep, rhs_by_phi = payload
    kernel = _build_kernel(cfg)
    dist = _build_dist(cfg)
    n = int(cfg["n"])
    rng = replicate_rng(cfg["seed"], rep)
    x, y = dist.sample(n, rng=rng)
    path = solver.HingePathSolver(kernel, x, y)
    out = []
    for phi in cfg["phi"]:
        cal = _calibration(cfg, kernel, dist, n, phi)
        tc = solver.TrainConfig(phi=phi, lam=cal.lambda_n, tol=cfg["gap_tol"])
        fit = solver.train_regularized(x, y, kernel, tc, path=path, extra_radii=cal.radii)
        l_val = losses.rel_hinge_risk(fit.g_hat, dist, tol=cfg["risk_tol"])
        t_val = losses.rel_01_risk(fit.g_hat, dist, tol=cfg["risk_tol"])
        cert = selection.certificate_check(fit, cal)
        rhs = rhs_by_phi[phi]
        out.append(
            [rep, n, kernel.family, phi, cal.lambda_n, fit.R_opt, fit.R_hat_continuous,
             fit.diagnostics["empirical_hinge"], l_val, t_val, rhs,
             bool(l_val > rhs), bool(cert.ok)]
        )
    return out


VERIFY_HEADER = [
    "replicate", "n", "kernel", "phi", "lambda_n", "R_opt", "norm",
    "empirical_hinge", "rel_hinge", "rel_01", "oracle_rhs", "violated", "cert_ok",
]


def run_verify_oracle(cfg, out_dir):
    kernel = _build_kernel(cfg)
    dist = _build_dist(cfg)
    n = int(cfg["n"])
    ocfg = cfg["oracle"]
    cal0 = _calibration(cfg, kernel, dist, n, cfg["phi"][0])
    table = selection.reference_table(
        dist, cal0.radii, kernel,
        n_ref=int(ocfg["n_ref"]), n_funcs=int(ocfg["n_funcs"]),
        seed=int(ocfg["seed"]), passes=int(ocfg["passes"]), risk_tol=cfg["risk_tol"],
    )
    rhs_by_phi = {}
    for phi in cfg["phi"]:
        cal = _calibration(cfg, kernel, dist, n, phi)
        rhs_by_phi[phi] = selection.oracle_rhs_from_table(table, cal).value
    payloads = [(cfg, rep, rhs_by_phi) for rep in range(int(cfg["replicates"]))]
    results = _pool_map(_verify_task, payloads, int(cfg["workers"]))
    rows = [row for chunk in results for row in chunk]
    summary = {"kind": "verify-oracle", "n": n, "replicates": int(cfg["replicates"])}
    for phi in cfg["phi"]:
        sub = [r for r in rows if r[3] == phi]
        summary[f"violation_rate_{phi}"] = float(np.mean([r[11] for r in sub]))
        summary[f"cert_all_ok_{phi}"] = bool(all(r[12] for r in sub))
        summary[f"mean_rel_hinge_{phi}"] = float(np.mean([r[8] for r in sub]))
        summary[f"oracle_rhs_{phi}"] = rhs_by_phi[phi]
    return write_report(out_dir, VERIFY_HEADER, rows, summary)


# ---------------------------------------------------------------------------
# experiment: rate-study


def run_rate_study(cfg, out_dir):
    cfg = dict(cfg)
    ns = [int(v) for v in cfg.get("n_list", [256, 512, 1024, 2048])]
    reps = int(cfg["replicates"])
    payloads = []
    for n in ns:
        for rep in range(reps):
            sub = dict(cfg)
            sub["n"] = n
            sub["save_fits"] = False
            payloads.append((sub, rep))
    results = _pool_map(_rate_task, payloads, int(cfg["workers"]))
    rows = [row for chunk in results for row in chunk]
    kernel = _build_kernel(cfg)
    dist = _build_dist(cfg)
    summary = {"kind": "rate-study", "n_list": ns, "replicates": reps}
    gamma_pts = []
    for n in ns:
        cal = _calibration(cfg, kernel, dist, n, cfg["phi"][0])
        gamma_pts.append((n, cal.gamma))
    if len(ns) >= 4:
        slope, half, _ = rate_study_fit(gamma_pts)
        summary["gamma_slope"] = slope
        summary["gamma_slope_ci_halfwidth"] = half
        for phi in cfg["phi"]:
            pts = [(r[1], r[4]) for r in rows if r[2] == phi and r[4] > 0]
            if len({p[0] for p in pts}) >= 4:
                slope, half, _ = rate_study_fit(pts)
                summary[f"risk_slope_{phi}"] = slope
                summary[f"risk_slope_ci_halfwidth_{phi}"] = half
    return write_report(
        out_dir, ["replicate", "n", "phi", "norm", "rel_hinge", "rel_01"], rows, summary
    )


def _rate_task(payload):
    cfg, rep = payload
    kernel = _build_kernel(cfg)
    dist = _build_dist(cfg)
    n = int(cfg["n"])
    rng = replicate_rng(cfg["seed"], rep)
    x, y = dist.sample(n, rng=rng)
    path = solver.HingePathSolver(kernel, x, y)
    out = []
    for phi in cfg["phi"]:
        cal = _calibration(cfg, kernel, dist, n, phi)
        tc = solver.TrainConfig(phi=phi, lam=cal.lambda_n, tol=cfg["gap_tol"])
        fit = solver.train_regularized(x, y, kernel, tc, path=path, extra_radii=cal.radii)
        l_val = losses.rel_hinge_risk(fit.g_hat, dist, tol=cfg["risk_tol"])
        t_val = losses.rel_01_risk(fit.g_hat, dist, tol=cfg["risk_tol"])
        out.append([rep, n, phi, fit.R_hat_continuous, l_val, t_val])
    return out


# ---------------------------------------------------------------------------
# experiment: rademacher-check


def run_rademacher_check(cfg, out_dir):
    kernel = _build_kernel(cfg)
    spec = spectra.analytic_spectrum(kernel)
    r_list = [float(v) for v in cfg.get("r_ball_list", [0.5, 1.0, 2.0])]
    v_list = [float(v) for v in cfg.get("r_var_list", [0.01, 0.1, 1.0])]
    n_list = [int(v) for v in cfg.get("n_list", [4, 7, 10])]
    n_funcs = int(cfg.get("n_funcs", 8))
    rows = []
    violations = 0
    for idx_n, n in enumerate(n_list):
        rng = replicate_rng(cfg["seed"], idx_n)
        sample = rng.random(n)
        for R in r_list:
            for r in v_list:
                exact = complexity.rademacher_exact(kernel, R, r, sample, n_funcs=n_funcs)
                b1 = complexity.rademacher_bound_infd(spec, R, r, n)
                b2 = complexity.rademacher_bound_minsum(spec, R, r, n)
                ok = exact <= b1 + 1e-12 and b1 <= b2 + 1e-12
                violations += 0 if ok else 1
                rows.append([n, R, r, exact, b1, b2, ok])
    summary = {
        "kind": "rademacher-check",
        "grid_size": len(rows),
        "violations": violations,
        "max_exact_over_bound": float(
            max((r[3] / r[4]) if r[4] > 0 else 0.0 for r in rows)
        ),
    }
    return write_report(
        out_dir, ["n", "R", "r", "exact", "bound_infd", "bound_minsum", "ok"], rows, summary
    )


# ---------------------------------------------------------------------------
# experiment: risk


def run_risk(cfg, out_dir):
    dist = _build_dist(cfg)
    rows = []

    def add(name, g):
        rep = losses.risk_report(g, dist, tol=cfg["risk_tol"])
        rows.append([name, rep.rel_hinge, rep.rel_01, rep.method, rep.error_estimate])
        rng = replicate_rng(cfg["seed"])
        mc = losses.rel_risks_mc(g, dist, int(cfg.get("mc_draws", 10**6)), rng)
        rows.append([name, mc.rel_hinge, mc.rel_01, mc.method, mc.error_estimate])

    add("bayes", dist.bayes())
    add("zero", lambda t: np.zeros_like(np.atleast_1d(t)))
    fit_path = cfg.get("fit_json")
    if fit_path:
        with open(fit_path) as fh:
            blob = json.load(fh)
        from .kernels import RepresenterFn

        g = RepresenterFn(
            kernel_from_config(blob["kernel"]),
            np.array(blob["anchors"]),
            np.array(blob["coefficients"]),
        )
        add("fit", g)
    summary = {"kind": "risk", "functions": sorted({r[0] for r in rows})}
    return write_report(
        out_dir, ["function", "rel_hinge", "rel_01", "method", "error_estimate"], rows, summary
    )


# ---------------------------------------------------------------------------
# dispatch


RUNNERS = {
    "spectrum": run_spectrum,
    "gamma": run_gamma,
    "calibrate": run_calibrate,
    "train": run_train,
    "select": run_select,
    "verify-oracle": run_verify_oracle,
    "rate-study": run_rate_study,
    "rademacher-check": run_rademacher_check,
    "risk": run_risk,
}


def run(config: dict, out_dir: str) -> dict:
    """Run one experiment from a fully merged config dict."""
    cfg = _merge(DEFAULTS, config)
    kind = cfg.get("kind")
    if kind not in RUNNERS:
        raise ValueError(f"unknown experiment kind {kind!r}; choose from {KINDS}")
    if isinstance(cfg["phi"], str):
        cfg["phi"] = [cfg["phi"]]
    if int(cfg["replicates"]) < 1:
        raise ValueError("replicates must be >= 1")
    if int(cfg["n"]) < 2:
        raise ValueError("n must be >= 2")
    return RUNNERS[kind](cfg, out_dir)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        elif v is not None:
            out[k] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="svmlab",
        description=__doc__,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = p.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        sp.add_argument("--config", default=None, help="TOML config with [kernel]/[dist] tables")
        sp.add_argument("--out", default=None, help="output directory (default: ./out-<kind>)")
        sp.add_argument("--seed", type=int, default=None, help=f"master seed (default {DEFAULTS['seed']})")
        sp.add_argument("--workers", type=int, default=None, help="replicate worker processes (default 1)")
        sp.add_argument("--phi", choices=["linear", "quadratic"], default=None,
                        help="regularizer shape (default quadratic)")
        sp.add_argument("--setting", choices=["s1", "s2"], default=None,
                        help="capacity route: spectral (s1) or entropy (s2); default s1")
        sp.add_argument("--c", type=float, default=None, help="universal-constant knob (default 1.0)")
        sp.add_argument("--delta", type=float, default=None, help="confidence level (default 0.05)")
        sp.add_argument("--n", type=int, default=None, help=f"sample size (default {DEFAULTS['n']})")
        sp.add_argument("--replicates", type=int, default=None, help="replicate count (default 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg: dict = {}
        if args.config:
            with open(args.config, "rb") as fh:
                cfg = tomllib.load(fh)
        cfg["kind"] = args.kind
        for key in ("seed", "workers", "c", "delta", "n", "replicates", "setting"):
            val = getattr(args, key)
            if val is not None:
                cfg[key] = val
        if args.phi is not None:
            cfg["phi"] = [args.phi]
        out_dir = args.out or f"out-{args.kind}"
        summary = run(cfg, out_dir)
    except Exception as exc:  # surface the failing stage, nonzero exit
        print(f"svmlab {args.kind}: error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
