"""
Tests for RngStream: reproducibility and exactness of every sampler against
its probability mass function.

The default run uses 10^5 draws per oracle; the ``slow`` variants repeat the
heaviest oracles at 10^6 draws.
"""

import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from popsim.common.errors import DrawsExceedPopulation, InputError, InvalidProbability, NonPositiveRate
from popsim.rng.samplers import RngStream, log_factorial_ratio
from tests.oracles import P_MIN, chisquare_p


def _call_sequence(rng: RngStream) -> list:
    return [
        rng.random(),
        rng.poisson_sample(12.5),
        rng.binomial_sample(100, 0.3),
        rng.hypergeometric_sample(40, 60, 30),
        rng.exp_sample(2.0),
        rng.multivariate_hypergeometric([5, 7, 9], 10),
    ]


class TestReproducibility:
    def test_same_seed_same_sequence(self):
        assert _call_sequence(RngStream(42)) == _call_sequence(RngStream(42))

    def test_different_seeds_differ(self):
        assert [RngStream(1).random() for _ in range(3)] != [RngStream(2).random() for _ in range(3)]

    def test_spawn_is_deterministic_and_distinct(self):
        parent = RngStream(7)
        assert parent.spawn(3).seed == RngStream(7).spawn(3).seed
        assert parent.spawn(0).random() == RngStream(7).random()
        assert parent.spawn(1).random() != parent.spawn(2).random()

    def test_seed_is_recorded(self):
        assert RngStream(123).seed == 123
        assert RngStream().seed >= 0

    def test_negative_seed(self):
        with pytest.raises(InputError):
            RngStream(-1)


class TestContinuous:
    def test_exp_mean(self):
        rng = RngStream(1)
        samples = [rng.exp_sample(1.0) for _ in range(100_000)]
        assert 0.98 <= sum(samples) / len(samples) <= 1.02

    def test_exp_median(self):
        rng = RngStream(2)
        draws = 100_000
        above = sum(rng.exp_sample(2.0) > math.log(2) / 2 for _ in range(draws))
        assert 0.493 <= above / draws <= 0.507

    def test_exp_rejects_zero_rate(self):
        with pytest.raises(NonPositiveRate):
            RngStream(1).exp_sample(0.0)

    def test_uniform_ranges(self):
        rng = RngStream(3)
        assert all(0.0 <= rng.random() < 1.0 for _ in range(1000))
        assert all(0.0 < rng.open_uniform() <= 1.0 for _ in range(1000))

    def test_beta_is_a_uniform_order_statistic(self):
        rng = RngStream(4)
        samples = [rng.beta_sample(2, 4) for _ in range(20_000)]
        assert stats.kstest(samples, stats.beta(2, 4).cdf).pvalue > P_MIN


class TestPoisson:
    def test_zero_mean(self):
        rng = RngStream(5)
        assert all(rng.poisson_sample(0.0) == 0 for _ in range(100))

    def test_negative_mean(self):
        with pytest.raises(InputError):
            RngStream(5).poisson_sample(-1.0)

    def test_pmf_mean_four(self):
        rng = RngStream(6)
        draws = 100_000
        observed = Counter(rng.poisson_sample(4.0) for _ in range(draws))
        pmf = {k: float(stats.poisson(4.0).pmf(k)) for k in range(16)}
        assert chisquare_p(observed, pmf, draws) > P_MIN

    def test_compiled_rate_mean(self):
        # m * n * t for the reversible split CRN at n = v = 10 and t = 5
        rng = RngStream(7)
        draws = 100_000
        mean = sum(rng.poisson_sample(1.9 * 10 * 5) for _ in range(draws)) / draws
        assert mean == pytest.approx(95.0, rel=0.01)

    def test_huge_mean_stays_exact_scale(self):
        rng = RngStream(8)
        mean = 3e16
        for _ in range(20):
            x = rng.poisson_sample(mean)
            assert abs(x - mean) < 10 * math.sqrt(mean)

    @pytest.mark.slow
    def test_pmf_mean_four_full(self):
        rng = RngStream(9)
        draws = 1_000_000
        observed = Counter(rng.poisson_sample(4.0) for _ in range(draws))
        pmf = {k: float(stats.poisson(4.0).pmf(k)) for k in range(16)}
        assert chisquare_p(observed, pmf, draws) > P_MIN


class TestBinomial:
    def test_edges(self):
        rng = RngStream(10)
        assert rng.binomial_sample(0, 0.5) == 0
        assert rng.binomial_sample(17, 1.0) == 17
        assert rng.binomial_sample(17, 0.0) == 0

    def test_invalid_probability(self):
        with pytest.raises(InvalidProbability):
            RngStream(10).binomial_sample(5, 1.5)

    def test_pmf(self):
        rng = RngStream(11)
        draws = 100_000
        observed = Counter(rng.binomial_sample(10, 0.3) for _ in range(draws))
        pmf = {k: float(stats.binom(10, 0.3).pmf(k)) for k in range(11)}
        assert chisquare_p(observed, pmf, draws) > P_MIN


class TestMultinomial:
    def test_edges(self):
        rng = RngStream(12)
        assert rng.multinomial_split(0, [0.5, 0.5]) == [0, 0]
        assert rng.multinomial_split(9, [1.0]) == [9]

    def test_sums_to_total(self):
        rng = RngStream(13)
        for _ in range(100):
            assert sum(rng.multinomial_split(1000, [0.2, 0.3, 0.5])) == 1000

    def test_rejects_bad_vector(self):
        with pytest.raises(InvalidProbability):
            RngStream(13).multinomial_split(5, [0.5, 0.4])

    def test_pmf_uniform_thirds(self):
        rng = RngStream(14)
        draws = 100_000
        observed = Counter(tuple(rng.multinomial_split(6, [1 / 3, 1 / 3, 1 / 3])) for _ in range(draws))
        outcomes = [(a, b, 6 - a - b) for a in range(7) for b in range(7 - a)]
        index = {outcome: i for i, outcome in enumerate(outcomes)}
        law = stats.multinomial(6, [1 / 3, 1 / 3, 1 / 3])
        pmf = {index[o]: float(law.pmf(o)) for o in outcomes}
        assert chisquare_p(Counter({index[o]: c for o, c in observed.items()}), pmf, draws) > P_MIN


class TestHypergeometric:
    def test_edges(self):
        rng = RngStream(15)
        assert rng.hypergeometric_sample(5, 5, 0) == 0
        assert rng.hypergeometric_sample(5, 7, 12) == 5
        assert rng.hypergeometric_sample(0, 7, 3) == 0
        assert rng.hypergeometric_sample(4, 0, 3) == 3

    def test_draws_exceed_population(self):
        with pytest.raises(DrawsExceedPopulation):
            RngStream(15).hypergeometric_sample(1, 1, 3)

    def test_three_one_two(self):
        rng = RngStream(16)
        draws = 100_000
        observed = Counter(rng.hypergeometric_sample(3, 1, 2) for _ in range(draws))
        assert set(observed) == {1, 2}
        assert chisquare_p(observed, {1: 0.5, 2: 0.5}, draws) > P_MIN

    def test_ratio_of_uniforms_sampler_pmf(self):
        rng = RngStream(17)
        draws = 50_000
        observed = Counter(rng._hrua(30, 50, 20) for _ in range(draws))
        pmf = {k: float(stats.hypergeom(80, 30, 20).pmf(k)) for k in range(21)}
        assert chisquare_p(observed, pmf, draws) > P_MIN

    def test_ratio_of_uniforms_sampler_more_good_than_bad(self):
        rng = RngStream(18)
        draws = 50_000
        observed = Counter(rng._hrua(60, 25, 50) for _ in range(draws))
        pmf = {k: float(stats.hypergeom(85, 60, 50).pmf(k)) for k in range(51)}
        assert chisquare_p(observed, pmf, draws) > P_MIN

    def test_population_beyond_numpy_limit(self):
        rng = RngStream(19)
        good, bad, sample = 2 * 10**11, 3 * 10**11, 1000
        values = [rng.hypergeometric_sample(good, bad, sample) for _ in range(4000)]
        assert all(0 <= v <= sample for v in values)
        assert np.mean(values) == pytest.approx(400.0, abs=1.5)
        assert np.var(values) == pytest.approx(240.0, rel=0.1)

    def test_tiny_sample_from_huge_population(self):
        rng = RngStream(20)
        values = [rng.hypergeometric_sample(10**12, 10**12, 3) for _ in range(20_000)]
        observed = Counter(values)
        assert chisquare_p(observed, {0: 0.125, 1: 0.375, 2: 0.375, 3: 0.125}, len(values)) > P_MIN

    def test_log_factorial_ratio(self):
        assert log_factorial_ratio(10, 7) == pytest.approx(math.log(10 * 9 * 8))
        y = 2**40
        exact = math.fsum(math.log(y + i) for i in range(1, 6))
        assert log_factorial_ratio(y + 5, y) == pytest.approx(exact, rel=1e-12)
        assert log_factorial_ratio(y, y + 5) == pytest.approx(-exact, rel=1e-12)


class TestMultivariateHypergeometric:
    def test_edges(self):
        rng = RngStream(21)
        assert rng.multivariate_hypergeometric([3, 4], 0) == [0, 0]
        assert rng.multivariate_hypergeometric([0, 5, 0], 3) == [0, 3, 0]

    def test_sum_and_bounds(self):
        rng = RngStream(22)
        urn = [5, 0, 12, 3]
        for _ in range(200):
            taken = rng.multivariate_hypergeometric(urn, 9)
            assert sum(taken) == 9
            assert all(0 <= t <= u for t, u in zip(taken, urn, strict=True))

    def test_two_by_two(self):
        rng = RngStream(23)
        draws = 100_000
        observed = Counter(tuple(rng.multivariate_hypergeometric([2, 2], 2)) for _ in range(draws))
        assert observed[(1, 1)] / draws == pytest.approx(2 / 3, abs=0.01)

    def test_marginal_matches_hypergeometric(self):
        rng = RngStream(24)
        draws = 50_000
        observed = Counter(rng.multivariate_hypergeometric([4, 6, 5], 7)[1] for _ in range(draws))
        pmf = {k: float(stats.hypergeom(15, 6, 7).pmf(k)) for k in range(7)}
        assert chisquare_p(observed, pmf, draws) > P_MIN

    def test_draws_exceed_urn(self):
        with pytest.raises(DrawsExceedPopulation):
            RngStream(25).multivariate_hypergeometric([1, 1], 3)


class TestDiscreteHelpers:
    def test_choose_index_is_exact(self):
        rng = RngStream(26)
        draws = 60_000
        observed = Counter(rng.choose_index([1, 0, 2]) for _ in range(draws))
        assert 1 not in observed
        assert chisquare_p(observed, {0: 1 / 3, 2: 2 / 3}, draws) > P_MIN

    def test_choose_index_empty(self):
        with pytest.raises(InputError):
            RngStream(26).choose_index([0, 0])

    def test_geometric_mean(self):
        rng = RngStream(27)
        draws = 100_000
        samples = [rng.geometric_sample(0.25) for _ in range(draws)]
        assert min(samples) >= 1
        assert sum(samples) / draws == pytest.approx(4.0, rel=0.02)
        assert rng.geometric_sample(1.0) == 1
