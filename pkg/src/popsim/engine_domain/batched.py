"""
Collision-length batching and the sequential reference engine.

Agent picks form a stream: initiator, responder, initiator, responder, ...
Until some agent is picked for the second time every interaction involves
fresh agents, so the pairs up to that collision form a uniformly random
disjoint matching whose outcome only depends on state counts. A batch:

1. samples the collision index C of the pick stream,
2. draws the ``(C - 1) // 2`` collision-free initiators and responders
   from the urn, matches them uniformly and applies all their transitions
   at once into a delayed urn,
3. simulates the single interaction containing the collision, whose agent
   is one of the already-picked ones, and
4. merges the delayed urn back.

The batch advances about sqrt(n) interactions at a cost that does not
depend on n (beyond O(log n) for sampling C).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from popsim.common.config import Config
from popsim.common.errors import PopulationTooSmall
from popsim.common.logging import get_logger
from popsim.core.model import Configuration, Pair, Protocol
from popsim.engine_domain.outcomes import apply_pair, sample_output
from popsim.rng.samplers import RngStream, log_factorial_ratio

logger = get_logger(__name__)

# below this population the survival function is walked as an exact product
EXACT_SURVIVAL_LIMIT = 4096


@dataclass
class Urn:
    """Multiset of agents by state."""

    counts: list[int]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def add(self, state: int, count: int = 1) -> None:
        self.counts[state] += count

    def remove_one(self, state: int) -> None:
        if self.counts[state] <= 0:
            raise ValueError(f"urn holds no agent in state {state}")
        self.counts[state] -= 1

    def draw_one(self, rng: RngStream) -> int:
        """Remove one uniformly random agent and return its state."""
        state = rng.choose_index(self.counts)
        self.counts[state] -= 1
        return state

    def draw(self, draws: int, rng: RngStream) -> list[int]:
        """Remove ``draws`` agents without replacement; returns their counts by state."""
        taken = rng.multivariate_hypergeometric(self.counts, draws)
        for state, count in enumerate(taken):
            self.counts[state] -= count
        return taken

    def merge(self, other: Urn) -> None:
        for state, count in enumerate(other.counts):
            self.counts[state] += count
            other.counts[state] = 0


@dataclass(frozen=True)
class BatchResult:
    interactions_applied: int
    collision_length: int


def collision_log_survival(n: int, t: int) -> float:
    """ln P(C > t) = ln(n! / ((n - t)! n^t)), the chance that t uniform picks are all distinct."""
    if t <= 1:
        return 0.0
    if t > n:
        return -math.inf
    y = n - t
    if y >= 1 << 24:
        # ln n! - ln y! - t ln n, with the t ln n term cancelled analytically
        return (y + 0.5) * math.log1p(t / y) - t + (1.0 / (12 * n) - 1.0 / (12 * y))
    return log_factorial_ratio(n, y) - t * math.log(n)


def sample_collision_length(n: int, rng: RngStream) -> int:
    """
    Index of the first pick that repeats an earlier pick in a uniform pick stream over n agents.

    Inverse transform on P(C > t) = prod_{i<t} (n - i) / n: the smallest t with
    survival(t) < U. Small populations walk the exact product, large ones
    binary-search the log-survival.

    Raises:
        PopulationTooSmall: If n < 2
    """
    if n < 2:
        raise PopulationTooSmall(f"population size must be at least 2, got {n}")
    u = rng.open_uniform()
    if n <= EXACT_SURVIVAL_LIMIT:
        survival = 1.0
        t = 1
        while True:
            t += 1
            survival *= (n - t + 1) / n
            if survival < u:
                return t
    log_u = math.log(u)
    lo, hi = 2, n + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if collision_log_survival(n, mid) < log_u:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _check_urns(n: int, *totals: int) -> None:
    assert sum(totals) == n, f"urn totals {totals} do not add up to n={n}"


def batch_step(
    config: Configuration,
    protocol: Protocol,
    rng: RngStream,
    max_interactions: int | None = None,
) -> BatchResult:
    """
    Advance ``config`` in place by one collision-bounded batch.

    Args:
        config: Configuration, mutated in place
        protocol: Protocol to apply
        rng: Random stream
        max_interactions: Upper bound on interactions to simulate; if the
            collision would fall beyond it, exactly this many collision-free
            interactions are applied instead

    Returns:
        Number of interactions simulated and the sampled collision length
    """
    n = config.n
    q = protocol.q
    if max_interactions is not None and max_interactions <= 0:
        return BatchResult(0, 0)
    c = sample_collision_length(n, rng)
    free = (c - 1) // 2
    collide = True
    if max_interactions is not None and free >= max_interactions:
        free = max_interactions
        collide = False
    lone = collide and c % 2 == 0

    main = Urn(config.counts)
    delayed = Urn([0] * q)

    initiators = main.draw(free, rng)
    responders = main.draw(free, rng)
    for i in range(q):
        if initiators[i] == 0:
            continue
        row = rng.multivariate_hypergeometric(responders, initiators[i])
        for j in range(q):
            d = row[j]
            if d == 0:
                continue
            responders[j] -= d
            _apply_many(protocol, i, j, d, delayed, rng)

    if Config.DEBUG_CHECKS:
        _check_urns(n, main.total, delayed.total)

    if not collide:
        main.merge(delayed)
        return BatchResult(free, c)

    if lone:
        # pick c - 1 is a fresh initiator; pick c (its responder) repeats one of the c - 1 picked agents
        initiator = main.draw_one(rng)
        if Config.DEBUG_CHECKS:
            _check_urns(n, main.total, delayed.total, 1)
        if rng.integer_below(c - 1) < c - 2:
            responder = delayed.draw_one(rng)
        else:
            # repeated its own initiator: the responder is uniform over the other n - 1 agents
            responder = _other_agent(c, n, main, delayed, rng)
    else:
        # pick c is an initiator that repeats one of the 2 * free matched agents
        initiator = delayed.draw_one(rng)
        responder = _other_agent(c, n, main, delayed, rng)

    outputs = sample_output(protocol.delta.get((initiator, responder)), rng) or (initiator, responder)
    delayed.add(outputs[0])
    delayed.add(outputs[1])
    main.merge(delayed)
    return BatchResult(free + 1, c)


def _other_agent(c: int, n: int, main: Urn, delayed: Urn, rng: RngStream) -> int:
    """Uniform agent among the n - 1 others: c - 2 already picked, the rest still in the main urn."""
    if rng.integer_below(n - 1) < c - 2:
        return delayed.draw_one(rng)
    return main.draw_one(rng)


def _apply_many(protocol: Protocol, i: int, j: int, d: int, delayed: Urn, rng: RngStream) -> None:
    """Apply ``d`` interactions of ordered pair (i, j), adding post-states to the delayed urn."""
    dist = protocol.delta.get((i, j))
    if dist is None or not dist.entries:
        delayed.add(i, d)
        delayed.add(j, d)
        return
    if dist.is_deterministic:
        (x, y), _ = dist.entries[0]
        delayed.add(x, d)
        delayed.add(y, d)
        return
    probs = [p for _, p in dist.entries]
    probs.append(max(0.0, 1.0 - math.fsum(probs)))
    split = rng.multinomial_split(d, _renormalized(probs))
    for ((x, y), _), k in zip(dist.entries, split, strict=False):
        if k:
            delayed.add(x, k)
            delayed.add(y, k)
    if split[-1]:
        delayed.add(i, split[-1])
        delayed.add(j, split[-1])


def _renormalized(probs: list[float]) -> list[float]:
    total = math.fsum(probs)
    return [p / total for p in probs]


def sequential_interaction(counts: list[int], protocol: Protocol, rng: RngStream) -> tuple[Pair, Pair] | None:
    """Let a uniform ordered pair of distinct agents interact; returns (inputs, outputs) unless null."""
    a = rng.choose_index(counts)
    counts[a] -= 1
    b = rng.choose_index(counts)
    counts[a] += 1
    outputs = sample_output(protocol.delta.get((a, b)), rng)
    if outputs is None or outputs == (a, b):
        return None
    apply_pair(counts, (a, b), outputs)
    return (a, b), outputs


def sequential_step(config: Configuration, protocol: Protocol, rng: RngStream) -> Configuration:
    """One uniformly random ordered pair of distinct agents interacts, in place."""
    if config.n < 2:
        raise PopulationTooSmall(f"population size must be at least 2, got {config.n}")
    sequential_interaction(config.counts, protocol, rng)
    return config


def run_sequential(config: Configuration, protocol: Protocol, interactions: int, rng: RngStream) -> Configuration:
    for _ in range(interactions):
        sequential_step(config, protocol, rng)
    return config


def run_batched(config: Configuration, protocol: Protocol, interactions: int, rng: RngStream) -> Configuration:
    """Exactly ``interactions`` interactions via batches."""
    remaining = interactions
    while remaining > 0:
        remaining -= batch_step(config, protocol, rng, max_interactions=remaining).interactions_applied
    return config
