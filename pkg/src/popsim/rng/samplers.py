"""
Seeded random source and exact samplers shared by all engines.

Every engine owns one ``RngStream`` and draws all of its randomness from it,
so a trajectory is reproducible from its seed. The bit generator is numpy's
``SFC64`` (a small-state 64-bit chaotic generator in the xoshiro class),
seeded through ``SeedSequence``.

Discrete samplers are exact for arbitrary parameters: numpy's C samplers
(PTRS Poisson, BTPE binomial, HRUA/HIN hypergeometric) are used inside their
documented parameter ranges, and the large-parameter cases fall back to
exact constructions (Poisson additivity, a ratio-of-uniforms hypergeometric
with cancellation-free log-factorial differences). No normal approximation
is ever used.
"""

from __future__ import annotations

import math
import secrets
from collections.abc import Sequence

import numpy as np

from popsim.common.errors import DrawsExceedPopulation, InputError, InvalidProbability, NonPositiveRate

# numpy's Generator.hypergeometric requires ngood and nbad below this bound
NUMPY_HYPERGEOMETRIC_LIMIT = 10**9
# Poisson means above this are split into independent chunks
POISSON_CHUNK = 1e15
# below this argument math.lgamma differences are accurate enough
_LGAMMA_DIRECT_LIMIT = 1 << 24

# ratio-of-uniforms constants for the hypergeometric rejection sampler
_HRUA_D1 = 1.7155277699214135
_HRUA_D2 = 0.8989161620588988


def fresh_seed() -> int:
    """A 63-bit seed from OS entropy."""
    return secrets.randbits(63)


def log_factorial_ratio(x: int, y: int) -> float:
    """ln(x!) - ln(y!) without catastrophic cancellation for huge, close arguments."""
    if x == y:
        return 0.0
    if min(x, y) < _LGAMMA_DIRECT_LIMIT:
        return math.lgamma(x + 1) - math.lgamma(y + 1)
    # Stirling difference: (y + 1/2) ln(x/y) + d ln x - d + 1/(12x) - 1/(12y)
    d = x - y
    return (y + 0.5) * math.log1p(d / y) + d * math.log(x) - d + (1.0 / (12 * x) - 1.0 / (12 * y))


class RngStream:
    """Per-instance random stream.

    Identical seeds give identical sample sequences for identical call
    sequences on the same build.
    """

    def __init__(self, seed: int | None = None) -> None:
        self.seed = fresh_seed() if seed is None else int(seed)
        if self.seed < 0:
            raise InputError(f"seed must be non-negative, got {self.seed}")
        self._gen = np.random.Generator(np.random.SFC64(np.random.SeedSequence(self.seed)))

    def spawn(self, index: int) -> RngStream:
        """Independent sub-stream for trial ``index``: seed XOR index, re-hashed by ``SeedSequence``."""
        return RngStream(self.seed ^ index)

    # continuous

    def random(self) -> float:
        """Uniform in [0, 1)."""
        return float(self._gen.random())

    def open_uniform(self) -> float:
        """Uniform in (0, 1]."""
        return 1.0 - float(self._gen.random())

    def exp_sample(self, rate: float) -> float:
        if not rate > 0:
            raise NonPositiveRate(f"exponential rate must be positive, got {rate}")
        return float(self._gen.exponential(1.0 / rate))

    def beta_sample(self, a: float, b: float) -> float:
        if not (a > 0 and b > 0):
            raise InputError(f"beta parameters must be positive, got ({a}, {b})")
        return float(self._gen.beta(a, b))

    # discrete

    def integer_below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        return int(self._gen.integers(0, bound))

    def choose_index(self, weights: Sequence[int]) -> int:
        """Index i with probability weights[i] / sum(weights), exact for integer weights."""
        total = sum(weights)
        if total <= 0:
            raise InputError("cannot choose from an empty urn")
        target = self.integer_below(total)
        for i, w in enumerate(weights):
            if target < w:
                return i
            target -= w
        raise AssertionError("unreachable: target exceeded total weight")

    def choose_weighted(self, weights: Sequence[float]) -> int:
        """Index i with probability weights[i] / sum(weights) for real weights."""
        total = math.fsum(weights)
        if not total > 0:
            raise InputError("cannot choose with zero total weight")
        target = self.random() * total
        last = 0
        for i, w in enumerate(weights):
            if w > 0:
                last = i
                if target < w:
                    return i
                target -= w
        return last

    def geometric_sample(self, p: float) -> int:
        """Number of Bernoulli(p) trials up to and including the first success."""
        if not 0.0 < p <= 1.0:
            raise InvalidProbability(f"geometric success probability must be in (0, 1], got {p}")
        if p == 1.0:
            return 1
        u = self.open_uniform()
        return max(1, math.ceil(math.log(u) / math.log1p(-p)))

    def poisson_sample(self, mean: float) -> int:
        if mean < 0 or math.isnan(mean):
            raise InputError(f"Poisson mean must be non-negative, got {mean}")
        if mean == 0:
            return 0
        if mean <= POISSON_CHUNK:
            return int(self._gen.poisson(mean))
        chunks = math.ceil(mean / POISSON_CHUNK)
        part = mean / chunks
        return sum(int(x) for x in self._gen.poisson(part, size=chunks))

    def binomial_sample(self, trials: int, p: float) -> int:
        if trials < 0:
            raise InputError(f"binomial trials must be non-negative, got {trials}")
        if not 0.0 <= p <= 1.0:
            raise InvalidProbability(f"binomial probability must be in [0, 1], got {p}")
        if trials == 0 or p == 0.0:
            return 0
        if p == 1.0:
            return trials
        return int(self._gen.binomial(trials, p))

    def multinomial_split(self, total: int, probs: Sequence[float]) -> list[int]:
        """Exact multinomial via sequential conditional binomials, in the given order."""
        if total < 0:
            raise InputError(f"multinomial total must be non-negative, got {total}")
        if any(p < 0 for p in probs):
            raise InvalidProbability("multinomial probabilities must be non-negative")
        mass = math.fsum(probs)
        if abs(mass - 1.0) > 2.0**-30:
            raise InvalidProbability(f"multinomial probabilities sum to {mass!r}, not 1")
        result = [0] * len(probs)
        remaining = total
        for i, p in enumerate(probs):
            if remaining == 0:
                break
            if i == len(probs) - 1 or mass <= p:
                result[i] = remaining
                remaining = 0
                break
            share = self.binomial_sample(remaining, min(1.0, p / mass))
            result[i] = share
            remaining -= share
            mass -= p
        if remaining:
            result[-1] += remaining
        return result

    def hypergeometric_sample(self, successes: int, failures: int, draws: int) -> int:
        """Successes among ``draws`` items taken without replacement."""
        if successes < 0 or failures < 0 or draws < 0:
            raise InputError("hypergeometric parameters must be non-negative")
        population = successes + failures
        if draws > population:
            raise DrawsExceedPopulation(f"cannot draw {draws} items from a population of {population}")
        if draws == 0 or successes == 0:
            return 0
        if failures == 0:
            return draws
        if draws == population:
            return successes
        if successes < NUMPY_HYPERGEOMETRIC_LIMIT and failures < NUMPY_HYPERGEOMETRIC_LIMIT:
            return int(self._gen.hypergeometric(successes, failures, draws))
        return self._large_hypergeometric(successes, failures, draws)

    def multivariate_hypergeometric(self, urn_counts: Sequence[int], draws: int) -> list[int]:
        """Draw counts per coordinate, as sequential hypergeometric draws over coordinates."""
        total = sum(urn_counts)
        if draws < 0:
            raise InputError(f"draws must be non-negative, got {draws}")
        if draws > total:
            raise DrawsExceedPopulation(f"cannot draw {draws} items from an urn of {total}")
        result = [0] * len(urn_counts)
        remaining_draws = draws
        remaining_total = total
        for i, count in enumerate(urn_counts):
            if remaining_draws == 0:
                break
            remaining_total -= count
            taken = self.hypergeometric_sample(count, remaining_total, remaining_draws)
            result[i] = taken
            remaining_draws -= taken
        return result

    def _large_hypergeometric(self, successes: int, failures: int, draws: int) -> int:
        population = successes + failures
        sample = min(draws, population - draws)
        if sample < 10:
            # direct sequential draws
            got = 0
            good, rest = successes, population
            for _ in range(sample):
                if self.integer_below(rest) < good:
                    got += 1
                    good -= 1
                rest -= 1
            return got if sample == draws else successes - got
        return self._hrua(successes, failures, draws)

    def _hrua(self, good: int, bad: int, sample: int) -> int:
        popsize = good + bad
        computed_sample = min(sample, popsize - sample)
        mingoodbad = min(good, bad)
        maxgoodbad = max(good, bad)

        p = mingoodbad / popsize
        q = maxgoodbad / popsize
        mu = computed_sample * p
        a = mu + 0.5
        var = (popsize - computed_sample) * computed_sample * p * q / (popsize - 1)
        c = math.sqrt(var + 0.5)
        h = _HRUA_D1 * c + _HRUA_D2
        mode = ((computed_sample + 1) * (mingoodbad + 1)) // (popsize + 2)
        bound = min(min(computed_sample, mingoodbad) + 1, math.floor(a + 16 * c))

        while True:
            u = self.open_uniform()
            v = self.random()
            x = a + h * (v - 0.5) / u
            if x < 0.0 or x >= bound:
                continue
            k = math.floor(x)
            # ln pmf(k) - ln pmf(mode)
            t = (
                log_factorial_ratio(mode, k)
                + log_factorial_ratio(mingoodbad - mode, mingoodbad - k)
                + log_factorial_ratio(computed_sample - mode, computed_sample - k)
                + log_factorial_ratio(maxgoodbad - computed_sample + mode, maxgoodbad - computed_sample + k)
            )
            if u * (4.0 - u) - 3.0 <= t:
                break
            if u * (u - t) >= 1:
                continue
            if 2.0 * math.log(u) <= t:
                break

        if good > bad:
            k = computed_sample - k
        if computed_sample < sample:
            k = good - k
        return k
