import math

import numpy as np
import pytest
from pytest_subtests import SubTests

from sigvol import diagnostics
from sigvol.algebra import TensorPoly, Word
from sigvol.diagnostics import (
    BUMP,
    CriticalVerdict,
    MartingaleReason,
    MomentRegime,
    critical_case_functional,
    critical_case_report,
    martingality_predicate,
    moment_estimate,
    moment_predicate,
    moment_verdict,
    spot_vol_correlation_sign,
    t_star,
)
from sigvol.engine import simulation
from sigvol.engine.dataclasses import Mode, PriceSampleSet
from sigvol.exceptions import FitError, HypothesisViolated, ModelError
from sigvol.signature import TruncSig, segment_sig

from .factories import ModelParamsFactory, SimConfigFactory, leading_only, sigma_of


class TestMartingalityPredicate:
    def test_cases(self, subtests: SubTests) -> None:
        cases = [
            (5, 1, -0.9, True, MartingaleReason.ODD_AND_NONPOSITIVE),
            (3, 1, 0.5, False, MartingaleReason.POSITIVE_PRODUCT),
            (4, 1, -0.9, False, MartingaleReason.EVEN_ORDER),
            (3, 1, 0.0, True, MartingaleReason.RHO_ZERO),
            (1, 1, 0.5, True, MartingaleReason.ORDER_ONE),
        ]
        for order, lead, rho, martingale, reason in cases:
            with subtests.test(msg=f"N={order}, lead={lead}, rho={rho}"):
                params = ModelParamsFactory.create(
                    sigma=leading_only(order, lead), rho=rho
                )
                verdict = martingality_predicate(params)
                assert verdict.predicted_martingale is martingale
                assert verdict.reason is reason

    def test_constant_vol_is_order_one(self) -> None:
        params = ModelParamsFactory.create(rho=0.5)
        assert martingality_predicate(params).reason is MartingaleReason.ORDER_ONE

    def test_flipping_both_signs(self) -> None:
        for order in range(1, 7):
            for rho in (-0.6, 0.3):
                a = ModelParamsFactory.create(sigma=leading_only(order, 2), rho=rho)
                b = ModelParamsFactory.create(sigma=leading_only(order, -2), rho=-rho)
                assert martingality_predicate(a) == martingality_predicate(b)

    def test_zero_leading_coefficient(self) -> None:
        sigma = TensorPoly(2, {Word((2,)): 1}, 3)
        params = ModelParamsFactory.create(sigma=sigma, rho=-0.5)
        with pytest.raises(HypothesisViolated, match="hypothesis violated"):
            martingality_predicate(params)

    def test_multi_factor_uses_the_sign_of_the_lead(self) -> None:
        params = ModelParamsFactory.create(
            sigma=leading_only(3, -1, alphabet_dim=3), mode=Mode.MULTI_FACTOR
        )
        assert martingality_predicate(params).predicted_martingale


class TestMartingaleGap:
    def test_flat_samples_are_consistent(self) -> None:
        params = ModelParamsFactory.create(rho=0.5)
        samples = PriceSampleSet.from_prices(np.ones(10))
        verdict = diagnostics.classify_martingality(params, samples)
        assert verdict.measured_gap == 0.0
        assert verdict.gap_ci == (0.0, 0.0)
        assert verdict.consistent is True
        assert verdict.to_json()["reason"] == "order_one"

    def test_gap_away_from_zero(self) -> None:
        params = ModelParamsFactory.create(sigma=leading_only(3), rho=0.5)
        prediction = martingality_predicate(params)
        verdict = diagnostics.verdict_from_gap(prediction, 0.15, (0.1, 0.2))
        assert verdict.consistent is True
        wrong = diagnostics.verdict_from_gap(prediction, 0.01, (-0.02, 0.04))
        assert wrong.consistent is False

    def test_invalid_samples_ignored(self) -> None:
        samples = PriceSampleSet.from_prices([0.9, math.nan, 1.1])
        gap, _ = diagnostics.martingale_gap(samples, 1.0)
        assert gap == pytest.approx(0.0, abs=1e-15)


class TestMomentPredicate:
    def test_regimes(self, subtests: SubTests) -> None:
        cases = [
            (-0.8, 2, MomentRegime.FINITE),
            (-0.7, 3, MomentRegime.INFINITE),
            (-math.sqrt(0.5), 2, MomentRegime.CRITICAL),
            (0.0, 1.5, MomentRegime.INFINITE),
        ]
        for rho, m, regime in cases:
            with subtests.test(msg=f"rho={rho}, m={m}"):
                assert moment_predicate(rho, m).regime is regime

    def test_threshold(self) -> None:
        assert moment_predicate(-0.5, 3).threshold == pytest.approx(math.sqrt(2 / 3))

    def test_order_at_most_one(self) -> None:
        verdict = moment_predicate(0.0, 1.0)
        assert verdict.regime is MomentRegime.FINITE
        assert verdict.note is not None

    def test_bad_inputs(self) -> None:
        with pytest.raises(ModelError):
            moment_predicate(-0.5, 0.0)
        with pytest.raises(ModelError):
            moment_predicate(1.5, 2.0)


class TestMomentEstimate:
    def test_degenerate_samples(self) -> None:
        estimate = moment_estimate(PriceSampleSet.from_prices(np.full(10, 2.0)), 3)
        assert estimate.estimate == pytest.approx(8.0, rel=1e-12)
        assert estimate.tail_share == pytest.approx(0.1, rel=1e-12)
        assert estimate.stderr == 0.0
        assert estimate.n == 10

    def test_degenerate_samples_are_exact(self, subtests: SubTests) -> None:
        for price, m in [(1.3, 2.5), (0.7, 3.0), (2.0, 0.5)]:
            with subtests.test(msg=f"{price}^{m}"):
                samples = PriceSampleSet.from_prices(np.full(7, price))
                assert moment_estimate(samples, m).estimate == price**m

    def test_zero_prices(self) -> None:
        estimate = moment_estimate(PriceSampleSet.from_prices(np.zeros(4)), 2)
        assert estimate.estimate == 0.0

    def test_large_moments_do_not_overflow(self) -> None:
        samples = PriceSampleSet.from_prices([1e100, 1.0])
        estimate = moment_estimate(samples, 3)
        assert estimate.estimate == pytest.approx(5e299, rel=1e-9)
        assert estimate.tail_share == pytest.approx(1.0)

    def test_overflowing_moments(self) -> None:
        samples = PriceSampleSet.from_prices([1e200, 1.0])
        estimate = moment_estimate(samples, 2)
        assert estimate.estimate == math.inf
        assert estimate.tail_share == pytest.approx(1.0)

    def test_against_simulation(self) -> None:
        params = ModelParamsFactory.create(rho=-0.5)
        config = SimConfigFactory.create(n_paths=4000, seed=31)
        samples = simulation.simulate(params, config)
        estimate = moment_estimate(samples, 2)
        assert abs(estimate.estimate - math.exp(0.04)) < 5 * estimate.stderr


class TestMomentVerdict:
    def test_attaches_the_estimate(self) -> None:
        params = ModelParamsFactory.create(sigma=leading_only(3), rho=-0.8)
        samples = PriceSampleSet.from_prices(np.full(10, 1.0))
        verdict = moment_verdict(params, 2, samples)
        assert verdict.regime is MomentRegime.FINITE
        assert verdict.estimate == pytest.approx(1.0)
        assert verdict.to_json()["regime"] == "finite"

    def test_hypotheses(self, subtests: SubTests) -> None:
        samples = PriceSampleSet.from_prices(np.ones(4))
        cases = [
            ("even order", leading_only(2), -0.5),
            ("positive product", leading_only(3), 0.5),
            ("order one", leading_only(1), -0.5),
        ]
        for name, sigma, rho in cases:
            with subtests.test(msg=name):
                params = ModelParamsFactory.create(sigma=sigma, rho=rho)
                with pytest.raises(HypothesisViolated):
                    moment_verdict(params, 2, samples)


class TestSpotVolCorrelation:
    def test_sign(self, subtests: SubTests) -> None:
        linear = sigma_of({"ø": 0.2, "2": 1})
        quadratic = sigma_of({"22": 1})
        state = segment_sig([0.1, -0.3], 2)
        cases = [
            (linear, -0.5, TruncSig.identity(2, 2), -1),
            (linear, 0.0, TruncSig.identity(2, 2), 0),
            (quadratic, -0.5, state, 1),
            (quadratic, 0.5, state, -1),
        ]
        for sigma, rho, sig_state, sign in cases:
            with subtests.test(msg=f"{sigma.render()}, rho={rho}"):
                params = ModelParamsFactory.create(sigma=sigma, rho=rho)
                assert spot_vol_correlation_sign(params, sig_state) == sign


class TestCriticalCase:
    def test_quadratic_coefficient(self) -> None:
        kappa = math.sqrt(2)
        for T in (0.5, 1.0, 2.0):
            report = critical_case_report(1.0, 0.0, 2.0, T)
            expected = kappa * T / 8 - math.pi**2 / (4 * T)
            assert report.quadratic_coefficient == pytest.approx(expected, abs=1e-12)

    def test_functional(self) -> None:
        assert critical_case_functional(1.0, 0.0, 2.0, 1.0, 0.0) == 0.0
        value = critical_case_functional(1.0, 0.0, 2.0, 1.0, 2.0)
        assert value == pytest.approx(-2.2906 * 4, abs=1e-3)

    def test_t_star(self) -> None:
        assert t_star(1.0, 2.0) == pytest.approx(3.736, abs=1e-3)

    def test_verdicts(self, subtests: SubTests) -> None:
        cases = [
            (0.0, 1.0, CriticalVerdict.FINITE),
            (0.0, 5.0, CriticalVerdict.INFINITE_QUADRATIC),
            (0.3, 1.0, CriticalVerdict.INFINITE_CUBIC),
            (0.0, t_star(1.0, 2.0), CriticalVerdict.UNDETERMINED),
        ]
        for beta, T, verdict in cases:
            with subtests.test(msg=f"beta={beta}, T={T}"):
                report = critical_case_report(1.0, beta, 2.0, T)
                assert report.verdict is verdict

    def test_to_json(self) -> None:
        data = critical_case_report(1.0, 0.0, 2.0, 1.0).to_json()
        assert data["verdict"] == "finite"
        assert data["mode"] == "analytic"
        assert data["lambda_grid"] == [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]

    def test_too_few_lambdas(self) -> None:
        with pytest.raises(FitError):
            critical_case_report(1.0, 0.0, 2.0, 1.0, lambda_grid=[0.0, 1.0, 1.0, 2.0])

    def test_rho_must_be_critical(self) -> None:
        with pytest.raises(HypothesisViolated):
            critical_case_report(1.0, 0.0, 2.0, 1.0, rho=-0.9)
        report = critical_case_report(1.0, 0.0, 2.0, 1.0, rho=-math.sqrt(0.5))
        assert report.verdict is CriticalVerdict.FINITE

    def test_bad_inputs(self) -> None:
        with pytest.raises(ModelError):
            critical_case_report(1.0, 0.0, 1.0, 1.0)
        with pytest.raises(ModelError):
            critical_case_report(-1.0, 0.0, 2.0, 1.0)
        with pytest.raises(ModelError):
            critical_case_report(1.0, 0.0, 2.0, 1.0, psi="triangle")

    def test_bump_control_integrals(self) -> None:
        T = 2.0
        assert BUMP.integrals(T) == pytest.approx(
            {
                "dpsi_sq": 16 / (3 * T),
                "psi_sq": 8 * T / 15,
                "psi_cube": 16 * T / 35,
                "t_psi": T**2 / 3,
            },
            rel=1e-9,
        )

    def test_monte_carlo_agrees_with_closed_form(self) -> None:
        config = SimConfigFactory.create(n_paths=2000, n_steps=200, seed=4)
        report = critical_case_report(1.0, 0.0, 2.0, 1.0, mc=config)
        assert report.mode == "monte_carlo"
        assert report.verdict is CriticalVerdict.FINITE
        c0, c1, c2, _ = report.coefficients
        s0, s1, _, _ = report.coefficient_stderrs
        assert abs(c0) < 5 * s0 + 1e-3
        assert abs(c1) < 5 * s1 + 1e-3
        assert c2 == pytest.approx(-2.2906, abs=1e-3)

    @pytest.mark.slow
    def test_monte_carlo_cubic_term(self) -> None:
        config = SimConfigFactory.create(n_paths=20_000, n_steps=400, seed=6)
        report = critical_case_report(1.0, 0.3, 2.0, 1.0, mc=config)
        analytic = critical_case_report(1.0, 0.3, 2.0, 1.0)
        assert report.cubic_coefficient == pytest.approx(
            analytic.cubic_coefficient, rel=1e-2
        )
        assert report.verdict is CriticalVerdict.INFINITE_CUBIC
