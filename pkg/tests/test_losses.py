import numpy as np
import pytest

from svmlab.distributions import SyntheticDist, replicate_rng
from svmlab.kernels import KernelSpec, RepresenterFn
from svmlab.losses import (
    bayes_cond_hinge,
    cond_hinge_risk,
    empirical_hinge,
    hinge,
    rel_01_risk,
    rel_hinge_risk,
    rel_risks_mc,
    risk_report,
    zero_one,
)

HARD = SyntheticDist("hard_gap", m=1, eta0=0.2)
BANDED = SyntheticDist("banded", m=1, eta0=0.1, eta1=0.1)


def zero_fn(t):
    return np.zeros_like(np.atleast_1d(np.asarray(t, dtype=float)))


class TestPointwise:
    def test_hinge_values(self):
        assert hinge(1.0) == 0.0
        assert hinge(0.0) == 1.0
        assert hinge(-2.0) == 3.0

    def test_zero_one_values(self):
        assert zero_one(0.0) == 1  # zero margin counts as an error
        assert zero_one(1e-12) == 0
        assert zero_one(-1.0) == 1

    def test_hinge_dominates_zero_one(self):
        margins = np.random.default_rng(0).uniform(-5, 5, 10_000)
        assert np.all(hinge(margins) >= zero_one(margins))

    def test_cond_hinge_risk_values(self):
        assert cond_hinge_risk(1.0, 1.0) == 0.0
        for g in (-1.0, -0.4, 0.0, 0.7, 1.0):
            assert cond_hinge_risk(0.5, g) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            cond_hinge_risk(1.2, 0.0)

    def test_conditional_minimizer_is_bayes_sign(self):
        gs = np.arange(-3.0, 3.0 + 1e-9, 1e-3)
        for eta in np.arange(0.05, 0.96, 0.05):
            if abs(eta - 0.5) < 1e-12:
                continue
            vals = cond_hinge_risk(eta, gs)
            g_best = gs[np.argmin(vals)]
            assert np.sign(g_best) == np.sign(eta - 0.5)
            assert vals.min() == pytest.approx(bayes_cond_hinge(eta), abs=2e-3)

    def test_conditional_ties_at_extremes(self):
        gs = np.arange(-3.0, 3.0 + 1e-9, 1e-3)
        vals1 = cond_hinge_risk(1.0, gs)
        winners = gs[vals1 <= vals1.min() + 1e-12]
        assert winners.min() >= 1.0 - 1e-9
        vals_half = cond_hinge_risk(0.5, gs)
        winners = gs[vals_half <= vals_half.min() + 1e-12]
        assert winners.min() == pytest.approx(-1.0, abs=2e-3)
        assert winners.max() == pytest.approx(1.0, abs=2e-3)


class TestEmpiricalHinge:
    def test_zero_function(self):
        x = np.array([0.1, 0.2, 0.9])
        y = np.array([1.0, -1.0, 1.0])
        assert empirical_hinge(zero_fn, x, y) == 1.0

    def test_hand_case(self):
        def g(t):
            return np.array([2.0, -0.5, 1.0])

        x = np.zeros(3)
        y = np.array([1.0, -1.0, -1.0])
        # margins are (2, 0.5, -1) -> losses (0, 0.5, 2)
        assert empirical_hinge(g, x, y) == pytest.approx(5.0 / 6.0)

    def test_separating_with_unit_margin(self):
        def g(t):
            return 2.0 * np.ones_like(np.atleast_1d(t))

        x = np.array([0.3, 0.6])
        y = np.array([1.0, 1.0])
        assert empirical_hinge(g, x, y) == 0.0

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            empirical_hinge(zero_fn, [], [])


class TestRelativeRisks:
    def test_bayes_is_optimal(self):
        s = HARD.bayes()
        assert rel_hinge_risk(s, HARD) == pytest.approx(0.0, abs=1e-10)
        assert rel_01_risk(s, HARD) == pytest.approx(0.0, abs=1e-10)

    def test_zero_function_hinge_risk(self):
        assert rel_hinge_risk(zero_fn, HARD) == pytest.approx(2 * HARD.eta0, abs=1e-9)

    def test_sign_flip_misclassification(self):
        s = HARD.bayes()

        class Neg:
            breakpoints = HARD.breakpoints

            def __call__(self, t):
                return -s(t)

        assert rel_01_risk(Neg(), HARD) == pytest.approx(2 * HARD.eta0, abs=1e-9)

    @pytest.mark.parametrize("dist", [HARD, BANDED], ids=["hard", "banded"])
    def test_quadrature_matches_monte_carlo(self, dist):
        rng = np.random.default_rng(42)
        kernel = KernelSpec.circle_fourier()
        f = RepresenterFn(kernel, rng.random(6), rng.standard_normal(6))
        rep = risk_report(f, dist)
        mc = rel_risks_mc(f, dist, 1_000_000, replicate_rng(7))
        assert rep.rel_hinge == pytest.approx(mc.rel_hinge, abs=3 * mc.error_estimate + 1e-6)
        assert rep.rel_01 == pytest.approx(mc.rel_01, abs=3 * mc.error_estimate + 1e-6)

    def test_theta_below_hinge_for_random_representers(self):
        rng = np.random.default_rng(9)
        kernel = KernelSpec.circle_fourier()
        for dist in (HARD, BANDED):
            for _ in range(25):
                m = rng.integers(1, 7)
                f = RepresenterFn(kernel, rng.random(m), 2.0 * rng.standard_normal(m))
                rep = risk_report(f, dist)
                assert rep.rel_01 <= rep.rel_hinge + 1e-8
                assert rep.rel_hinge >= -1e-8

    def test_report_invariant_fields(self):
        # the 0-1 vs hinge comparison needs an a.e.-nonvanishing function:
        # with margin-0 counted as an error, g = 0 violates it by design
        f = RepresenterFn(KernelSpec.circle_fourier(), [0.3], [0.8])
        rep = risk_report(f, HARD)
        assert rep.method == "quadrature"
        assert rep.rel_01 <= rep.rel_hinge + rep.error_estimate
