"""Gumbel marginals, Frank coupling, and cost attachment."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import brentq

from depthrisk import (
    AlreadyHasCosts,
    ConfigError,
    DepthModel,
    DimensionMismatch,
    DomainError,
    FrankGumbelConfig,
    GumbelMarginal,
    RngStream,
    Sample,
    attach_costs,
    build_spd,
    frank_pair,
    gumbel_cdf,
    gumbel_quantile,
    mix64,
    sample_gaussian,
    sample_risk_factors,
    squared_norms,
)

EULER_GAMMA = 0.5772156649015329
CFG = FrankGumbelConfig(
    theta=5.0,
    marg1=GumbelMarginal(0.0, 0.25),
    marg2=GumbelMarginal(-0.5, 0.25),
)
# population means mu + beta * gamma of the two marginals
MEAN_1 = 0.25 * EULER_GAMMA
MEAN_2 = -0.5 + 0.25 * EULER_GAMMA
# population variance beta^2 pi^2 / 6
VAR_MARGINAL = 0.0625 * math.pi**2 / 6.0


class TestGumbelQuantile:
    def test_mode_probability_is_location_exactly(self):
        # log(exp(-1.0)) rounds to -1.0, so the nesting cancels exactly
        assert gumbel_quantile(math.exp(-1.0), 0.0, 0.25) == 0.0
        assert gumbel_quantile(math.exp(-1.0), -0.5, 0.25) == -0.5

    def test_median(self):
        expect = -math.log(math.log(2.0))
        assert gumbel_quantile(0.5, 0.0, 1.0) == pytest.approx(expect, rel=1e-15)

    def test_location_scale(self):
        base = gumbel_quantile(0.3, 0.0, 1.0)
        assert gumbel_quantile(0.3, 2.0, 3.0) == pytest.approx(
            2.0 + 3.0 * base, rel=1e-14
        )

    def test_monotone(self):
        p = np.linspace(0.01, 0.99, 99)
        q = gumbel_quantile(p, 0.0, 0.25)
        assert np.all(np.diff(q) > 0)

    def test_round_trip_with_cdf(self):
        p = np.linspace(0.05, 0.95, 19)
        x = gumbel_quantile(p, -0.5, 0.25)
        assert np.allclose(gumbel_cdf(x, -0.5, 0.25), p, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_endpoint_rejected(self, p):
        with pytest.raises(DomainError):
            gumbel_quantile(p, 0.0, 1.0)

    def test_bad_beta(self):
        with pytest.raises(DomainError):
            gumbel_quantile(0.5, 0.0, 0.0)
        with pytest.raises(DomainError):
            gumbel_cdf(0.5, 0.0, -1.0)

    def test_scalar_in_scalar_out(self):
        assert isinstance(gumbel_quantile(0.5, 0.0, 1.0), float)
        assert isinstance(gumbel_cdf(0.5, 0.0, 1.0), float)


class TestFrankPair:
    def test_matches_conditional_inversion_oracle(self):
        # root-find dC/du(u, v) = w directly on the copula derivative
        def ccond(u, v, th):
            num = math.exp(-th * u) * (math.exp(-th * v) - 1.0)
            den = math.exp(-th) - 1.0 + (math.exp(-th * u) - 1.0) * (
                math.exp(-th * v) - 1.0
            )
            return num / den

        cases = [(0.3, 0.7, 5.0), (0.9, 0.2, -3.0), (0.05, 0.95, 12.0)]
        for u, w, th in cases:
            v_oracle = brentq(
                lambda v: ccond(u, v, th) - w, 1e-15, 1.0 - 1e-15, xtol=1e-15
            )
            got_u, got_v = frank_pair(u, w, th)
            assert got_u == u
            assert got_v == pytest.approx(v_oracle, abs=1e-12)

    def test_median_conditional_is_symmetric(self):
        # at u = 0.5 and w = 0.5 the conditional median is 0.5 for any theta
        for th in (0.5, 5.0, -7.0, 50.0, 300.0, -200.0, 1e6):
            _, v = frank_pair(0.5, 0.5, th)
            assert v == pytest.approx(0.5, abs=1e-12)

    def test_extreme_theta_limits(self):
        # theta -> +inf approaches the comonotone copula (V -> U),
        # theta -> -inf the countermonotone one (V -> 1 - U)
        for u in (0.2, 0.5, 0.8):
            _, v = frank_pair(u, 0.5, 1000.0)
            assert v == pytest.approx(u, abs=0.01)
            _, v = frank_pair(u, 0.5, -1000.0)
            assert v == pytest.approx(1.0 - u, abs=0.01)
            assert 0.0 < v < 1.0

    def test_tiny_theta_routes_to_independence(self):
        u, v = frank_pair(0.37, 0.91, 1e-9)
        assert v == 0.91

    def test_zero_theta_rejected(self):
        with pytest.raises(DomainError):
            frank_pair(0.5, 0.5, 0.0)

    @pytest.mark.parametrize("u,w", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)])
    def test_endpoints_rejected(self, u, w):
        with pytest.raises(DomainError):
            frank_pair(u, w, 5.0)

    def test_output_stays_open(self):
        s = RngStream(11, 0)
        u = s.uniforms(50_000)
        w = s.uniforms(50_000)
        for th in (5.0, -5.0, 30.0):
            _, v = frank_pair(u, w, th)
            assert np.all(v > 0.0)
            assert np.all(v < 1.0)

    def test_kendall_tau(self):
        # Debye-function population value for theta = 5
        th = 5.0
        from scipy.integrate import quad

        debye1 = quad(lambda t: t / math.expm1(t), 0.0, th)[0] / th
        tau_pop = 1.0 - 4.0 / th * (1.0 - debye1)
        s = RngStream(7, mix64(43))
        u = s.uniforms(100_000)
        w = s.uniforms(100_000)
        uu, vv = frank_pair(u, w, th)
        tau = stats.kendalltau(uu, vv).statistic
        assert tau == pytest.approx(tau_pop, abs=0.01)

    def test_conditional_marginal_is_uniform(self):
        s = RngStream(7, mix64(42))
        u = s.uniforms(100_000)
        w = s.uniforms(100_000)
        _, v = frank_pair(u, w, 5.0)
        for t in (0.1, 0.25, 0.5, 0.75, 0.9):
            se = math.sqrt(t * (1.0 - t) / 100_000)
            assert abs(float(np.mean(v < t)) - t) < 3.0 * se


class TestRiskFactors:
    def test_deterministic(self):
        a = sample_risk_factors(500, CFG, RngStream(3, 14))
        b = sample_risk_factors(500, CFG, RngStream(3, 14))
        assert np.array_equal(a.points, b.points)

    def test_shape_and_no_costs(self):
        s = sample_risk_factors(50, CFG, RngStream(0))
        assert s.points.shape == (50, 2)
        assert s.costs is None

    def test_marginal_means(self):
        s = sample_risk_factors(100_000, CFG, RngStream(12, 0))
        se = math.sqrt(VAR_MARGINAL / 100_000)
        assert abs(s.points[:, 0].mean() - MEAN_1) < 3.0 * se
        assert abs(s.points[:, 1].mean() - MEAN_2) < 3.0 * se

    def test_first_marginal_ks(self):
        # distribution test across independent seeds; a fixed small failure
        # rate is expected at the 1% level
        crit = 1.6276 / math.sqrt(10_000)
        hits = 0
        for seed in range(100):
            s = sample_risk_factors(10_000, CFG, RngStream(seed, mix64(41)))
            d = stats.kstest(
                s.points[:, 0], lambda x: gumbel_cdf(x, 0.0, 0.25)
            ).statistic
            hits += d < crit
        assert hits >= 95

    def test_positive_dependence(self):
        s = sample_risk_factors(20_000, CFG, RngStream(2, 0))
        assert np.corrcoef(s.points.T)[0, 1] > 0.5

    def test_n_validation(self):
        with pytest.raises(DomainError):
            sample_risk_factors(0, CFG, RngStream(0))


class TestAttachCosts:
    def test_zero_noise_is_exact_squared_norm(self):
        s = sample_risk_factors(200, CFG, RngStream(5, 0))
        out = attach_costs(s, 0.0, RngStream(5, 1))
        assert np.array_equal(out.costs, squared_norms(s.points))

    def test_zero_noise_consumes_no_stream(self):
        stream = RngStream(5, 1)
        s = Sample([[3.0, 4.0]])
        attach_costs(s, 0.0, stream)
        assert np.array_equal(stream.uniforms(2), RngStream(5, 1).uniforms(2))

    def test_hand_value(self):
        out = attach_costs(Sample([[3.0, 4.0]]), 0.0, RngStream(0))
        assert out.costs[0] == 25.0

    def test_noise_variance(self):
        s = Sample(np.zeros((1_000_000, 2)))
        out = attach_costs(s, 0.005, RngStream(9, 2))
        # costs are pure noise here
        var = out.costs.var()
        se = 0.005 * math.sqrt(2.0 / 1e6)
        assert abs(var - 0.005) < 3.0 * se
        assert abs(out.costs.mean()) < 3.0 * math.sqrt(0.005 / 1e6)

    def test_already_has_costs(self):
        s = Sample([[1.0, 2.0]], costs=[3.0])
        with pytest.raises(AlreadyHasCosts):
            attach_costs(s, 0.0, RngStream(0))

    def test_negative_variance(self):
        with pytest.raises(DomainError):
            attach_costs(Sample([[1.0, 2.0]]), -0.1, RngStream(0))

    def test_original_sample_untouched(self):
        s = Sample([[1.0, 2.0]])
        attach_costs(s, 0.0, RngStream(0))
        assert s.costs is None


class TestSampleGaussian:
    def test_moments(self):
        model = DepthModel(
            np.array([1.0, -2.0]), build_spd([[2.0, 0.6], [0.6, 1.0]])
        )
        s = sample_gaussian(200_000, model, RngStream(21, 0))
        n = s.n
        for j, (m, v) in enumerate([(1.0, 2.0), (-2.0, 1.0)]):
            assert abs(s.points[:, j].mean() - m) < 3.0 * math.sqrt(v / n)
        cov = np.cov(s.points.T)
        assert cov[0, 1] == pytest.approx(0.6, abs=3.0 * math.sqrt(2.0 * 2.0 / n))

    def test_mean_shift(self):
        base = DepthModel(np.zeros(2), build_spd(np.eye(2)))
        shifted = DepthModel(np.array([5.0, 5.0]), build_spd(np.eye(2)))
        a = sample_gaussian(100, base, RngStream(4, 0))
        b = sample_gaussian(100, shifted, RngStream(4, 0))
        assert np.allclose(b.points - a.points, 5.0, rtol=0, atol=1e-12)

    def test_n_validation(self):
        model = DepthModel(np.zeros(2), build_spd(np.eye(2)))
        with pytest.raises(DomainError):
            sample_gaussian(0, model, RngStream(0))


class TestSample:
    def test_points_read_only(self):
        s = Sample([[1.0, 2.0]])
        with pytest.raises(ValueError):
            s.points[0, 0] = 9.0

    def test_shape_validation(self):
        with pytest.raises(DimensionMismatch):
            Sample([1.0, 2.0])
        with pytest.raises(DimensionMismatch):
            Sample(np.empty((0, 2)))

    def test_cost_length_validation(self):
        with pytest.raises(DimensionMismatch):
            Sample([[1.0, 2.0]], costs=[1.0, 2.0])

    def test_properties(self):
        s = Sample(np.ones((7, 3)))
        assert s.n == 7
        assert s.dim == 3


class TestFrankGumbelConfig:
    def test_all_violations_reported_together(self):
        with pytest.raises(ConfigError) as exc:
            FrankGumbelConfig(
                theta=0.0,
                marg1=GumbelMarginal(0.0, -1.0),
                marg2=GumbelMarginal(0.0, 0.25),
                noise_var=-0.1,
            )
        msg = str(exc.value)
        assert "theta" in msg
        assert "marginals[0].beta" in msg
        assert "noise_var" in msg

    def test_json_round_trip(self):
        back = FrankGumbelConfig.from_json(CFG.to_json())
        assert back == CFG

    def test_json_round_trip_with_seed(self):
        cfg = FrankGumbelConfig(
            theta=2.0,
            marg1=GumbelMarginal(0.0, 1.0),
            marg2=GumbelMarginal(0.0, 1.0),
            seed=99,
        )
        assert FrankGumbelConfig.from_json(cfg.to_json()) == cfg

    def test_missing_keys_all_listed(self):
        with pytest.raises(ConfigError) as exc:
            FrankGumbelConfig.from_json({})
        msg = str(exc.value)
        for key in ("theta", "marginals", "noise_var"):
            assert f"{key}: missing" in msg

    def test_missing_nested_marginal_fields(self):
        with pytest.raises(ConfigError) as exc:
            FrankGumbelConfig.from_json(
                {"theta": 5.0, "marginals": [{"mu": 0.0}, {"beta": 1.0}], "noise_var": 0.0}
            )
        msg = str(exc.value)
        assert "marginals[0].beta: missing" in msg
        assert "marginals[1].mu: missing" in msg

    def test_wrong_marginal_count(self):
        with pytest.raises(ConfigError):
            FrankGumbelConfig.from_json(
                {"theta": 5.0, "marginals": [{"mu": 0.0, "beta": 1.0}], "noise_var": 0.0}
            )
