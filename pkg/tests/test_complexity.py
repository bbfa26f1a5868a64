import math

import numpy as np
import pytest

from svmlab.complexity import (
    EntropyModel,
    circle_eigenfunctions,
    ellipsoid_linear_max,
    gamma_s1,
    gamma_s2,
    model_params,
    phi_r_s1,
    r_star_bound,
    r_star_exact_s1,
    rademacher_bound_infd,
    rademacher_bound_minsum,
    rademacher_exact,
    rademacher_mc,
    signed_suprema,
    xi,
    xstar_bisect,
)
from svmlab.distributions import replicate_rng
from svmlab.kernels import KernelSpec
from svmlab.spectra import SpectrumModel, analytic_spectrum
from svmlab.subroot import is_subroot

CIRCLE = KernelSpec.circle_fourier()
SPEC = analytic_spectrum(CIRCLE)
M = CIRCLE.sup_bound


class TestGammaS1:
    def test_finite_rank_asymptote(self):
        m_rank = 5
        spec = SpectrumModel(np.linspace(2.0, 1.0, m_rank))
        eta1 = 0.25
        n = 10**10
        assert n * gamma_s1(spec, n, eta1, 2.0) == pytest.approx(m_rank / eta1, rel=1e-3)

    def test_zero_spectrum(self):
        spec = SpectrumModel(np.zeros(4))
        assert gamma_s1(spec, 100, 0.2, 1.0) == 0.0

    def test_nonincreasing_in_n(self):
        vals = [gamma_s1(SPEC, n, 0.3, M) for n in (64, 256, 1024, 4096)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_rough_power_law(self):
        g1 = gamma_s1(SPEC, 2**10, 0.3, M)
        g2 = gamma_s1(SPEC, 2**14, 0.3, M)
        slope = math.log(g2 / g1) / math.log(2**14 / 2**10)
        assert slope == pytest.approx(-2.0 / 3.0, abs=0.07)

    def test_validation(self):
        with pytest.raises(ValueError):
            gamma_s1(SPEC, 100, 0.7, M)


class TestEntropyRoute:
    def test_xi_closed_form(self):
        em = EntropyModel.power_law(1.0, 1.0)
        assert xi(em, 1.0) == pytest.approx(2.0)
        assert xi(em, 1e-8) <= 1e-3

    def test_xi_constant_table(self):
        em = EntropyModel.table([1e-6, 1.0], [4.0, 4.0])
        assert xi(em, 0.5) == pytest.approx(1.0, rel=1e-8)

    def test_gamma_s2_closed_form(self):
        em = EntropyModel.power_law(1.0, 1.0)
        n = 4096
        assert gamma_s2(em, n, 1.0) == pytest.approx((2.0 / math.sqrt(n)) ** (4.0 / 3.0), rel=1e-12)

    def test_closed_form_matches_bisection(self):
        rng = np.random.default_rng(123)
        for _ in range(50):
            c_h = float(10.0 ** rng.uniform(-1, 1))
            s = float(rng.uniform(0.6, 3.0))
            n = int(rng.integers(16, 1 << 16))
            m = float(rng.uniform(0.5, 3.0))
            em = EntropyModel.power_law(c_h, s)
            closed = gamma_s2(em, n, m)
            table_free = m**-2 * xstar_bisect(em, n, m) ** 2
            assert closed == pytest.approx(table_free, rel=1e-8)

    def test_gamma_s2_nonincreasing(self):
        em = EntropyModel.power_law(2.0, 1.5)
        vals = [gamma_s2(em, n, 1.0) for n in (64, 256, 1024)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_diverging_power_law_rejected(self):
        with pytest.raises(ValueError):
            EntropyModel.power_law(1.0, 0.5)

    def test_table_validation(self):
        with pytest.raises(ValueError):
            EntropyModel.table([0.1, 0.2], [1.0, 2.0])  # increasing H


class TestPhiAndRStar:
    def test_rank_zero_phi_vanishes(self):
        phi = phi_r_s1(SpectrumModel(np.zeros(3)), R=2.0, n=100)
        assert phi(0.0) == 0.0 and phi(10.0) == 0.0

    def test_monotone_in_radius(self):
        p1 = phi_r_s1(SPEC, 1.0, 256)
        p2 = phi_r_s1(SPEC, 3.0, 256)
        for r in np.geomspace(1e-6, 100, 30):
            assert p1(r) <= p2(r) + 1e-15

    def test_phi_is_subroot(self):
        phi = phi_r_s1(SPEC, 2.0, 512)
        assert is_subroot(phi, np.geomspace(1e-8, 1e4, 300))

    def test_r_star_s2_formula(self):
        em = EntropyModel.power_law(1.0, 1.0)
        params = model_params("s2", 2.0, M, eta0=0.2)
        expected = 2500.0 * params.C_R**2 * gamma_s2(em, 256, M)
        assert r_star_bound(params, 256, M, entropy=em) == pytest.approx(expected, rel=1e-12)

    def test_r_star_s1_zero_spectrum(self):
        spec = SpectrumModel(np.zeros(3))
        params = model_params("s1", 1.0, M, eta0=0.2, eta1=0.3)
        assert r_star_bound(params, 128, M, spec=spec, eta1=0.3) == 0.0

    def test_s1_bound_dominates_exact_fixed_point(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            R = float(10.0 ** rng.uniform(-1, 1.5))
            n = int(rng.integers(16, 4096))
            eta0 = float(rng.uniform(0.05, 0.5))
            eta1 = float(rng.uniform(0.05, 0.5))
            params = model_params("s1", R, M, eta0=eta0, eta1=eta1)
            bound = r_star_bound(params, n, M, spec=SPEC, eta1=eta1)
            exact = r_star_exact_s1(params, SPEC, n)
            assert bound >= exact * (1.0 - 1e-9)

    def test_params_nondecreasing_in_radius(self):
        for setting, eta1 in (("s1", 0.3), ("s2", None)):
            prev = -1.0
            for R in (0.5, 1.0, 2.0, 4.0):
                p = model_params(setting, R, M, eta0=0.2, eta1=eta1)
                if setting == "s1":
                    v = r_star_bound(p, 256, M, spec=SPEC, eta1=0.3)
                else:
                    v = r_star_bound(p, 256, M, entropy=EntropyModel.power_law(1.0, 1.0))
                assert v >= prev
                prev = v


def polar_oracle_2d(c, lam, R, r, n_grid=200_001):
    """Dense polar scan for the 2-d two-ellipsoid linear maximum."""
    th = np.linspace(0.0, 2.0 * math.pi, n_grid)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    quad = u @ lam * 0.0 + (u * u) @ lam
    with np.errstate(divide="ignore"):
        rho = np.minimum(R, np.sqrt(r / np.maximum(quad, 1e-300)))
    return float(np.max(rho * (u @ c)))


class TestEllipsoidMax:
    def test_zero_radius_or_budget(self):
        lam = np.array([1.0, 0.5])
        assert ellipsoid_linear_max([[1.0, 1.0]], lam, 0.0, 1.0)[0] == 0.0
        assert ellipsoid_linear_max([[1.0, 1.0]], lam, 1.0, 0.0)[0] == 0.0

    def test_zero_budget_with_null_directions(self):
        lam = np.array([1.0, 0.0])
        val = ellipsoid_linear_max([[1.0, 2.0]], lam, 3.0, 0.0)[0]
        assert val == pytest.approx(3.0 * 2.0)

    def test_equal_eigenvalues_closed_form(self):
        rng = np.random.default_rng(5)
        lam = np.full(8, 0.37)
        C = rng.standard_normal((40, 8))
        for R, r in ((1.0, 0.1), (0.5, 10.0), (2.0, 0.9)):
            vals = ellipsoid_linear_max(C, lam, R, r)
            expect = min(R, math.sqrt(r / 0.37)) * np.linalg.norm(C, axis=1)
            assert np.allclose(vals, expect, rtol=1e-9)

    def test_matches_polar_scan_in_2d(self):
        rng = np.random.default_rng(6)
        for _ in range(40):
            lam = np.sort(rng.uniform(0.01, 2.0, 2))[::-1]
            c = rng.standard_normal(2)
            R = float(10.0 ** rng.uniform(-1, 1))
            r = float(10.0 ** rng.uniform(-2, 1))
            mine = ellipsoid_linear_max([c], lam, R, r)[0]
            ref = polar_oracle_2d(c, lam, R, r)
            assert mine == pytest.approx(ref, rel=5e-5, abs=1e-9)


class TestRademacherOracles:
    def test_eigenfeature_second_moments(self):
        lam, feats = circle_eigenfunctions(CIRCLE, 9)
        grid = (np.arange(200_000) + 0.5) / 200_000.0
        psi = feats(grid)
        second = np.mean(psi * psi, axis=0)
        assert np.allclose(second, lam, rtol=1e-6)

    def test_features_reproduce_kernel(self):
        lam, feats = circle_eigenfunctions(CIRCLE, 401)
        xs = np.array([0.1, 0.37, 0.62])
        approx = feats(xs) @ feats(xs).T
        exact = CIRCLE.pairwise(xs, xs)
        tail = 1.0 / 200.0  # dropped frequencies beyond the 200 kept
        assert np.max(np.abs(approx - exact)) <= tail

    def test_truncation_support_enforced(self):
        k = KernelSpec.circle_fourier(truncation=3, smoothness=1.0)
        with pytest.raises(ValueError):
            circle_eigenfunctions(k, 8)

    def test_degenerate_budgets(self):
        sample = replicate_rng(1).random(6)
        est, _ = rademacher_mc(CIRCLE, 0.0, 1.0, sample, 64, seed=2)
        assert est == 0.0
        est, _ = rademacher_mc(CIRCLE, 1.0, 0.0, sample, 64, seed=2, n_funcs=7)
        assert est == 0.0  # all eigenvalues positive: only the null direction

    def test_exact_equals_full_enumeration_through_mc_path(self):
        sample = replicate_rng(3).random(6)
        n = len(sample)
        bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
        signs = bits * 2.0 - 1.0
        vals = signed_suprema(CIRCLE, sample, signs, 1.5, 0.2, 7)
        assert rademacher_exact(CIRCLE, 1.5, 0.2, sample, n_funcs=7) == pytest.approx(
            float(np.mean(vals)), rel=1e-12
        )

    def test_mc_within_three_sigma_of_exact(self):
        sample = replicate_rng(4).random(8)
        exact = rademacher_exact(CIRCLE, 1.0, 0.3, sample, n_funcs=7)
        est, se = rademacher_mc(CIRCLE, 1.0, 0.3, sample, 4000, seed=9, n_funcs=7)
        assert abs(est - exact) <= 3.0 * se + 1e-12

    def test_exact_below_both_bounds(self):
        rng = replicate_rng(6)
        for n in (5, 8):
            sample = rng.random(n)
            for R in (0.5, 2.0):
                for r in (0.05, 0.7):
                    exact = rademacher_exact(CIRCLE, R, r, sample, n_funcs=8)
                    b1 = rademacher_bound_infd(SPEC, R, r, n)
                    b2 = rademacher_bound_minsum(SPEC, R, r, n)
                    assert exact <= b1 + 1e-12
                    assert b1 <= b2 + 1e-12

    def test_bounds_ordering_on_parameter_grid(self):
        for n in (4, 16, 64, 256):
            for R in np.geomspace(0.1, 10, 7):
                for r in np.geomspace(1e-4, 10, 7):
                    b1 = rademacher_bound_infd(SPEC, R, r, n)
                    b2 = rademacher_bound_minsum(SPEC, R, r, n)
                    assert b1 <= b2 + 1e-12

    def test_enumeration_size_guard(self):
        with pytest.raises(ValueError):
            rademacher_exact(CIRCLE, 1.0, 1.0, np.zeros(25), n_funcs=4)


def test_gamma_csv_export(tmp_path):
    from svmlab.complexity import write_gamma_csv

    rows = [(n, gamma_s1(SPEC, n, 0.3, M), "s1") for n in (64, 128, 256)]
    path = tmp_path / "gamma.csv"
    write_gamma_csv(path, rows)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n,gamma,setting"
    assert len(lines) == 4
    assert float(lines[1].split(",")[1]) == rows[0][1]
