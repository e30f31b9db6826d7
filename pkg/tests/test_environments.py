import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from ldpbandit.environments import (
    BanditEnvironment,
    Bernoulli,
    Beta,
    TwoPoint,
    UniformInterval,
    distribution_from_dict,
    jensen_gap,
    mean,
    mgf,
    sample,
    variance,
)

ALL = [Bernoulli(0.3), Beta(4, 1), Beta(0.5, 0.7), TwoPoint(0.4, 1.0, 0.5), TwoPoint(0.1, 0.6, 0.2), UniformInterval(0.0, 1.0), UniformInterval(0.2, 0.5)]


class TestMoments:
    def test_bernoulli(self):
        d = Bernoulli(0.9)
        assert mean(d) == 0.9
        assert variance(d) == pytest.approx(0.09, abs=1e-15)

    def test_beta(self):
        d = Beta(4, 1)
        assert mean(d) == pytest.approx(0.8, abs=1e-15)
        assert variance(d) == pytest.approx(4 / 150, abs=1e-15)

    def test_uniform(self):
        d = UniformInterval(0, 1)
        assert mean(d) == 0.5
        assert variance(d) == pytest.approx(1 / 12, abs=1e-15)

    def test_two_point(self):
        d = TwoPoint(0.4, 1.0, 0.5)
        assert mean(d) == pytest.approx(0.7, abs=1e-15)
        assert variance(d) == pytest.approx(0.25 * 0.36, abs=1e-15)

    @pytest.mark.parametrize("dist", ALL, ids=repr)
    def test_sample_moments_within_4_se(self, dist):
        rng = np.random.default_rng(11)
        n = 10**6
        x = dist.sample_many(rng, n)
        assert x.min() >= 0 and x.max() <= 1
        assert abs(x.mean() - dist.mean) <= 4 * math.sqrt(dist.variance / n)
        # standard error of the sample variance: sqrt((mu4 - sigma^4) / n)
        mu4 = np.mean((x - dist.mean) ** 4)
        se_var = math.sqrt(max(mu4 - dist.variance**2, 0) / n)
        # plus the O(1/n) bias from centring on the sample mean
        assert abs(x.var() - dist.variance) <= 4 * se_var + 16 * dist.variance / n


class TestSampling:
    def test_degenerate_bernoulli(self, rng):
        d = Bernoulli(1.0)
        assert all(sample(d, rng) == 1.0 for _ in range(100))

    @pytest.mark.parametrize("dist, target", [(TwoPoint(0.4, 1, 0.5), 0.7), (Beta(4, 1), 0.8)])
    def test_preset_means(self, dist, target):
        rng = np.random.default_rng(5)
        n = 10**6
        x = dist.sample_many(rng, n)
        assert abs(x.mean() - target) <= 3 * math.sqrt(dist.variance / n)

    @pytest.mark.parametrize("dist", ALL, ids=repr)
    def test_sample_many_matches_scalar(self, dist):
        a, b = np.random.default_rng(1), np.random.default_rng(1)
        vec = dist.sample_many(a, 64)
        loop = [dist.sample(b) for _ in range(64)]
        np.testing.assert_array_equal(vec, loop)


class TestMgf:
    @pytest.mark.parametrize("dist", ALL, ids=repr)
    def test_at_zero(self, dist):
        assert mgf(dist, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_bernoulli(self):
        assert mgf(Bernoulli(0.9), 1.0) == pytest.approx(0.1 + 0.9 * math.e, rel=1e-15)

    def test_uniform(self):
        assert mgf(UniformInterval(0, 1), 1.0) == pytest.approx(math.e - 1, rel=1e-15)

    def test_uniform_small_eps_continuous(self):
        assert mgf(UniformInterval(0.2, 0.9), 1e-12) == pytest.approx(1.0, abs=1e-11)

    @pytest.mark.parametrize("a, b", [(4, 1), (0.5, 0.5), (2.5, 7), (0.3, 3)])
    @pytest.mark.parametrize("eps", [0.1, 1.0, 3.0])
    def test_beta_quadrature_against_hypergeometric(self, a, b, eps):
        # E[exp(eps X)] for X ~ Beta(a, b) is 1F1(a; a + b; eps)
        assert mgf(Beta(a, b), eps) == pytest.approx(special.hyp1f1(a, a + b, eps), rel=1e-10)

    def test_rejects_infinite(self):
        with pytest.raises(ValueError):
            mgf(Bernoulli(0.5), math.inf)

    @pytest.mark.parametrize("dist", ALL, ids=repr)
    def test_monotone_in_eps(self, dist):
        values = [mgf(dist, e) for e in np.linspace(0, 5, 26)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestJensenGap:
    def test_point_mass(self):
        assert jensen_gap(Bernoulli(1.0), 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_bernoulli_half(self):
        expected = (0.5 + 0.5 * math.e) - math.exp(0.5)
        assert jensen_gap(Bernoulli(0.5), 1.0) == pytest.approx(expected, rel=1e-14)

    def test_beta_against_monte_carlo(self):
        rng = np.random.default_rng(2024)
        x = rng.beta(4, 1, 10**7)
        y = np.exp(x)
        mc = y.mean() - math.exp(0.8)
        se = y.std() / math.sqrt(len(y))
        assert abs(jensen_gap(Beta(4, 1), 1.0) - mc) <= 3 * se


@settings(max_examples=150, deadline=None)
@given(
    st.one_of(
        st.builds(Bernoulli, st.floats(0, 1)),
        st.builds(Beta, st.floats(0.2, 20), st.floats(0.2, 20)),
        st.builds(lambda lo, w, p: TwoPoint(lo, lo + w * (1 - lo) + 1e-9 if lo + w * (1 - lo) + 1e-9 <= 1 else 1.0, p),
                  st.floats(0, 0.9), st.floats(0.01, 1), st.floats(0, 1)),
        st.builds(lambda lo, w: UniformInterval(lo, min(1.0, lo + 1e-3 + w)), st.floats(0, 0.99), st.floats(0, 1)),
    ),
    st.floats(0, 6),
)
def test_jensen_gap_nonnegative(dist, eps):
    assert jensen_gap(dist, eps) >= -1e-12


class TestEnvironment:
    def test_gaps(self):
        env = BanditEnvironment((Bernoulli(0.9), Bernoulli(0.6), UniformInterval(0, 1)))
        assert env.optimal_arm == 0
        np.testing.assert_allclose(env.gaps, [0, 0.3, 0.4])
        assert env.delta_min == pytest.approx(0.3)
        assert not env.has_tied_optimum

    def test_tie_flagged(self):
        env = BanditEnvironment((Bernoulli(0.5), UniformInterval(0, 1)))
        assert env.has_tied_optimum
        assert env.delta_min == 0

    def test_single_arm(self):
        env = BanditEnvironment((Bernoulli(0.5),))
        assert env.delta_min == math.inf

    def test_group_round_trip(self):
        groups = [
            {"variant": "bernoulli", "params": {"mu": 0.9}, "count": 1},
            {"variant": "beta", "params": {"alpha": 4.0, "beta": 1.0}, "count": 3},
        ]
        env = BanditEnvironment.from_groups(groups)
        assert env.n_arms == 4
        assert env.to_groups() == groups
        assert BanditEnvironment.from_groups(env.to_groups()) == env

    def test_bad_variant(self):
        with pytest.raises(ValueError):
            distribution_from_dict({"variant": "gaussian", "params": {}})

    @pytest.mark.parametrize(
        "ctor", [lambda: Bernoulli(1.2), lambda: Beta(0, 1), lambda: TwoPoint(0.5, 0.4), lambda: UniformInterval(0.2, 1.5)]
    )
    def test_invalid_parameters(self, ctor):
        with pytest.raises(ValueError):
            ctor()
