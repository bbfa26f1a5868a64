"""Acceptance gate: every criterion runs standalone and prints a verdict.

Each test emits one PASS/FAIL line (with timing) that bypasses pytest's
capture, so a plain ``pytest tests/test_acceptance.py`` shows them all.
The oracle soundness study (criterion 7) is the long one; its runtime
budget is 30 minutes on one core.
"""

import math
import time

import numpy as np
import pytest

from svmlab import cli, selection
from svmlab.complexity import (
    EntropyModel,
    gamma_s1,
    gamma_s2,
    rademacher_bound_infd,
    rademacher_bound_minsum,
    rademacher_exact,
)
from svmlab.distributions import SyntheticDist, replicate_rng
from svmlab.kernels import KernelSpec, RepresenterFn, gram
from svmlab.losses import bayes_cond_hinge, cond_hinge_risk, risk_report
from svmlab.solver import (
    HingePathSolver,
    TrainConfig,
    constrained_hinge_cutting_plane,
    dual_svm0_crosscheck,
    train_regularized,
)
from svmlab.spectra import analytic_spectrum, empirical_spectrum
from svmlab.subroot import solve_fixed_point

CIRCLE = KernelSpec.circle_fourier()  # a0 = 1, A = 1, s = 1, closed form
SPEC = analytic_spectrum(CIRCLE)
M = CIRCLE.sup_bound
HARD = SyntheticDist("hard_gap", m=1, eta0=0.2)
ETA1 = HARD.gap_eta1  # 0.3 for the hard 0.2-gap distribution


@pytest.fixture
def verdict(capsys):
    """One always-visible PASS/FAIL line per criterion, capture or not."""

    def report(num, name, ok, detail, t0):
        line = (
            f"ACCEPTANCE {num} [{name}]: {'PASS' if ok else 'FAIL'} "
            f"({time.time() - t0:.1f}s) {detail}"
        )
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def test_criterion_1_spectrum_correctness(verdict):
    t0 = time.time()
    expected = np.array([1.0, 0.5, 0.5, 0.125, 0.125, 1 / 18, 1 / 18, 0.03125, 0.03125])
    mapping_ok = np.allclose(SPEC.eigenvalues[:9], expected, rtol=1e-12)

    top = SPEC.eigenvalues[:5]
    errs = {200: [], 2000: []}
    for n in errs:
        for seed in range(20):
            xs = replicate_rng(101, seed + (0 if n == 2000 else 1000)).random(n)
            emp = empirical_spectrum(gram(CIRCLE, xs), n).eigenvalues[:5]
            errs[n].append(float(np.max(np.abs(emp - top) / top)))
    med2000 = float(np.median(errs[2000]))
    med200 = float(np.median(errs[200]))
    ok = mapping_ok and med2000 <= 0.10 and med2000 < med200
    verdict(
        1, "spectrum", ok,
        f"mapping exact={mapping_ok}, median top-5 rel err n=2000: {med2000:.4f} "
        f"(tol 0.10), n=200: {med200:.4f}", t0,
    )


def test_criterion_2_gamma_rates(verdict):
    t0 = time.time()
    ns = [2**k for k in range(8, 17)]
    g1 = [(n, gamma_s1(SPEC, n, ETA1, M)) for n in ns]
    slope1, _, _ = cli.rate_study_fit(g1)
    em = EntropyModel.power_law(1.0, 1.0)
    g2 = [(n, gamma_s2(em, n, M)) for n in ns]
    slope2, _, _ = cli.rate_study_fit(g2)
    ok = abs(slope1 + 2.0 / 3.0) <= 0.05 and abs(slope2 + 2.0 / 3.0) <= 1e-6
    verdict(
        2, "gamma rate", ok,
        f"spectral slope {slope1:.4f} (within 0.05 of -2/3), "
        f"entropy slope {slope2:.10f} (within 1e-6)", t0,
    )


def test_criterion_3_subroot_solver(verdict):
    t0 = time.time()
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(100):
        a = float(10.0 ** rng.uniform(-2, 2))
        b = float(10.0 ** rng.uniform(-2, 2))
        r_star = solve_fixed_point(lambda r: a * math.sqrt(r) + b).r_star
        closed = ((a + math.sqrt(a * a + 4 * b)) / 2.0) ** 2
        worst = max(worst, abs(r_star - closed) / closed)
    ok = worst <= 1e-8
    verdict(3, "sub-root fixed point", ok, f"worst relative error {worst:.2e} (tol 1e-8)", t0)


def test_criterion_4_rademacher_domination(verdict):
    t0 = time.time()
    violations = 0
    checked = 0
    tightest = math.inf
    for idx, n in enumerate((6, 8, 10)):
        sample = replicate_rng(404, idx).random(n)
        for R in (0.5, 1.5, 4.0):
            for r in (0.01, 0.2, 2.0):
                exact = rademacher_exact(CIRCLE, R, r, sample, n_funcs=8)
                b1 = rademacher_bound_infd(SPEC, R, r, n)
                b2 = rademacher_bound_minsum(SPEC, R, r, n)
                checked += 1
                if not (exact <= b1 + 1e-12 and b1 <= b2 + 1e-12):
                    violations += 1
                if b1 > 0:
                    tightest = min(tightest, b1 / exact if exact > 0 else math.inf)
    ok = violations == 0 and checked == 27
    verdict(
        4, "localized Rademacher", ok,
        f"{checked} grid points, {violations} violations "
        f"(closest bound/exact ratio {tightest:.3f})", t0,
    )


def test_criterion_5_loss_relations(verdict):
    t0 = time.time()
    banded = SyntheticDist("banded", m=1, eta0=0.1, eta1=0.1)
    rng = np.random.default_rng(505)
    violations = 0
    for i in range(1000):
        dist = HARD if i % 2 == 0 else banded
        m = int(rng.integers(1, 9))
        f = RepresenterFn(CIRCLE, rng.random(m), 2.0 * rng.standard_normal(m))
        rep = risk_report(f, dist, tol=1e-9)
        if not (rep.rel_01 <= rep.rel_hinge + 1e-8 and rep.rel_hinge >= -1e-8):
            violations += 1

    gs = np.arange(-3.0, 3.0 + 1e-9, 1e-3)
    argmin_ok = True
    for eta in np.arange(0.05, 0.951, 0.05):
        if abs(eta - 0.5) < 1e-9:
            continue
        vals = cond_hinge_risk(eta, gs)
        g_best = gs[int(np.argmin(vals))]
        if np.sign(g_best) != np.sign(eta - 0.5):
            argmin_ok = False
        if abs(vals.min() - bayes_cond_hinge(eta)) > 2e-3:
            argmin_ok = False
    ok = violations == 0 and argmin_ok
    verdict(
        5, "loss relations", ok,
        f"1000 representers, {violations} violations of theta <= hinge + 1e-8; "
        f"conditional argmin matches the Bayes sign: {argmin_ok}", t0,
    )


def test_criterion_6_solver_crossvalidation(verdict):
    t0 = time.time()
    rng = np.random.default_rng(606)
    worst_reg = 0.0
    for i in range(20):
        n = int(rng.integers(20, 51))
        lam = float(10.0 ** rng.uniform(-2.2, -0.7))
        x, y = HARD.sample(n, seed=6000 + i)
        res = train_regularized(x, y, CIRCLE, TrainConfig(phi="quadratic", lam=lam, tol=1e-8))
        oracle = dual_svm0_crosscheck(x, y, CIRCLE, lam)
        worst_reg = max(worst_reg, abs(res.objective - oracle) / max(abs(oracle), 1e-12))

    worst_con = 0.0
    for i in range(4):
        x, y = HARD.sample(6, seed=6600 + i)
        path = HingePathSolver(CIRCLE, x, y)
        for R in (0.6, 1.8, 3.5):
            mine = path.constrained(R, gap_tol=1e-10).value
            ref = constrained_hinge_cutting_plane(path.K, y, R)
            worst_con = max(worst_con, abs(mine - ref))
    ok = worst_reg <= 1e-4 and worst_con <= 1e-4
    verdict(
        6, "solver cross-validation", ok,
        f"regularized vs dual oracle worst rel diff {worst_reg:.2e} (tol 1e-4); "
        f"constrained vs cutting-plane worst diff {worst_con:.2e} (tol 1e-4)", t0,
    )


def test_criterion_7_oracle_inequality(tmp_path, verdict):
    t0 = time.time()
    cfg = {
        "kind": "verify-oracle",
        "n": 512,
        "replicates": 200,
        "seed": 20240807,
        "delta": 0.05,
        "c": 1.0,
        "setting": "s1",
        "phi": ["linear", "quadratic"],
        "kernel": {"family": "circle_fourier", "a0": 1.0, "amplitude": 1.0, "smoothness": 1.0},
        "dist": {"form": "hard_gap", "m": 1, "eta0": 0.2},
    }
    summary = cli.run(cfg, str(tmp_path / "oracle"))
    viol_lin = summary["violation_rate_linear"]
    viol_quad = summary["violation_rate_quadratic"]
    certs = summary["cert_all_ok_linear"] and summary["cert_all_ok_quadratic"]
    elapsed = time.time() - t0
    ok = viol_lin <= 0.08 and viol_quad <= 0.08 and certs and elapsed < 1800
    verdict(
        7, "oracle inequality", ok,
        f"violation rates: linear {viol_lin:.3f}, quadratic {viol_quad:.3f} (tol 0.08); "
        f"all minimizer certificates pass: {certs}; "
        f"rhs linear {summary['oracle_rhs_linear']:.2f}, "
        f"quadratic {summary['oracle_rhs_quadratic']:.2f}; "
        f"mean risk linear {summary['mean_rel_hinge_linear']:.4f}, "
        f"quadratic {summary['mean_rel_hinge_quadratic']:.4f}", t0,
    )


def test_criterion_8_regularizer_comparison(tmp_path, verdict):
    t0 = time.time()
    cal_lin = selection.calibrate(
        "s1", 512, 0.05, HARD.gap_eta0, M, phi="linear", eta1=ETA1, spectrum=SPEC
    )
    cal_quad = selection.calibrate(
        "s1", 512, 0.05, HARD.gap_eta0, M, phi="quadratic", eta1=ETA1, spectrum=SPEC
    )
    table = selection.reference_table(
        HARD, cal_lin.radii, CIRCLE, n_ref=20_000, n_funcs=65, passes=150, risk_tol=1e-7
    )
    per_g_ok = True
    compared = 0
    for _, norm, risk in table:
        z = 2.0 * M * norm
        if z >= 0.5:
            compared += 1
            lin = risk + 2.0 * cal_lin.lambda_n * cal_lin.phi(z)
            quad = risk + 2.0 * cal_quad.lambda_n * cal_quad.phi(z)
            if lin > quad + 1e-12:
                per_g_ok = False

    slopes = cli.run(
        {
            "kind": "rate-study",
            "n_list": [128, 192, 256, 384],
            "replicates": 2,
            "phi": ["linear", "quadratic"],
            "oracle": {"n_ref": 2000, "n_funcs": 33, "passes": 60},
        },
        str(tmp_path / "rate"),
    )
    slopes_present = "risk_slope_linear" in slopes and "risk_slope_quadratic" in slopes
    ok = per_g_ok and compared >= 5 and slopes_present
    detail = (
        f"per-function linear <= quadratic bound terms on {compared} reference fits: {per_g_ok}; "
        f"measured risk slopes: linear {slopes.get('risk_slope_linear', float('nan')):.3f}, "
        f"quadratic {slopes.get('risk_slope_quadratic', float('nan')):.3f} (exploratory)"
    )
    verdict(8, "regularizer comparison", ok, detail, t0)


def test_criterion_9_determinism(tmp_path, verdict):
    t0 = time.time()
    cfg = {
        "kind": "verify-oracle",
        "n": 64,
        "replicates": 4,
        "phi": ["quadratic"],
        "oracle": {"n_ref": 1500, "n_funcs": 17, "passes": 40},
    }
    blobs = {}
    for workers in (1, 2):
        out = tmp_path / f"w{workers}"
        c = dict(cfg)
        c["workers"] = workers
        cli.run(c, str(out))
        blobs[workers] = (out / "rows.csv").read_bytes()
    rerun = tmp_path / "rerun"
    cli.run(dict(cfg, workers=1), str(rerun))
    identical = blobs[1] == blobs[2] == (rerun / "rows.csv").read_bytes()
    verdict(
        9, "determinism", identical,
        f"rows.csv byte-identical across worker counts and reruns: {identical}", t0,
    )
