"""
Exact stochastic simulation in two flavours.

CRN mode is the classical direct method on volume-based propensities and
serves as the reference the compiled protocols are checked against.
Protocol mode skips null interactions: it tracks the non-null interaction
mass W of the current configuration and jumps straight to the next
interaction that changes something.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from popsim.common.config import Config
from popsim.common.errors import Deadlock, InputError, NoApplicableInteraction, PopulationTooSmall, UnknownState
from popsim.common.logging import get_logger
from popsim.core.model import Configuration, Crn, Pair, Protocol, Reaction, TimeModel
from popsim.crn_domain.crn_compile import expand_reversible
from popsim.engine_domain.outcomes import apply_pair, sample_nonnull_output
from popsim.rng.samplers import RngStream

logger = get_logger(__name__)

# full W recompute after this many incremental updates
_RESYNC_EVERY = 4096


# CRN kinetics


def crn_propensity(reaction: Reaction, counts: list[int], volume: float) -> float:
    """k·#X for X -> ..., k·#X·#Y/v for X + Y -> ..., k·#X·(#X-1)/(2v) for X + X -> ..."""
    if reaction.arity == 1:
        return reaction.k * counts[reaction.reactants[0]]
    x, y = reaction.reactants
    if x != y:
        return reaction.k * counts[x] * counts[y] / volume
    return reaction.k * counts[x] * (counts[x] - 1) / (2 * volume)


@dataclass(frozen=True)
class PropensityTable:
    per_reaction: tuple[tuple[int, float], ...]
    total: float


def propensity_table(crn: Crn, reactions: list[Reaction], counts: list[int]) -> PropensityTable:
    per_reaction = tuple((i, crn_propensity(r, counts, crn.volume)) for i, r in enumerate(reactions))
    return PropensityTable(per_reaction, math.fsum(p for _, p in per_reaction))


def irreversible_reactions(crn: Crn) -> list[Reaction]:
    return expand_reversible(crn)


def crn_step(
    config: Configuration, crn: Crn, rng: RngStream, reactions: list[Reaction] | None = None
) -> tuple[Configuration, float]:
    """
    Fire one reaction of ``crn`` in place.

    Returns:
        The updated configuration and the exponential holding time

    Raises:
        Deadlock: If every propensity is zero
    """
    reactions = irreversible_reactions(crn) if reactions is None else reactions
    table = propensity_table(crn, reactions, config.counts)
    if table.total <= 0:
        raise Deadlock("no reaction has positive propensity")
    dt = rng.exp_sample(table.total)
    chosen = rng.choose_weighted([p for _, p in table.per_reaction])
    reaction = reactions[chosen]
    for s in reaction.reactants:
        config.counts[s] -= 1
    for s in reaction.products:
        config.counts[s] += 1
    return config, dt


def crn_run_until(config: Configuration, crn: Crn, t_end: float, rng: RngStream) -> Configuration:
    """Advance ``config`` in place to time ``t_end``; a deadlocked configuration stays put."""
    if not 0 <= t_end < math.inf:
        raise InputError(f"end time must be finite and non-negative, got {t_end}")
    reactions = irreversible_reactions(crn)
    t = 0.0
    while True:
        table = propensity_table(crn, reactions, config.counts)
        if table.total <= 0:
            return config
        t += rng.exp_sample(table.total)
        if t > t_end:
            return config
        reaction = reactions[rng.choose_weighted([p for _, p in table.per_reaction])]
        for s in reaction.reactants:
            config.counts[s] -= 1
        for s in reaction.products:
            config.counts[s] += 1


def crn_sample_endpoint(
    config: Configuration, crn: Crn, t: float, trials: int, rng: RngStream, state: str | None = None
) -> Counter[tuple[int, ...] | int]:
    """Histogram of Gillespie endpoints at time ``t`` over independent trials."""
    histogram: Counter[tuple[int, ...] | int] = Counter()
    index = None
    if state is not None:
        if state not in crn.index:
            raise UnknownState(f"unknown species {state!r}")
        index = crn.index[state]
    for trial in range(trials):
        end = crn_run_until(config.copy(), crn, t, rng.spawn(trial))
        histogram[end.counts[index] if index is not None else end.key()] += 1
    return histogram


# Protocol kinetics


def protocol_nonnull_mass(config: Configuration, protocol: Protocol) -> float:
    """W = sum over ordered pairs (a, b) of #a·(#b - [a == b])·(1 - null(a, b))."""
    counts = config.counts
    terms = []
    for (a, b), dist in protocol.delta.items():
        pairs = counts[a] * (counts[b] - (1 if a == b else 0))
        if pairs > 0:
            terms.append(pairs * dist.nonnull_prob)
    return math.fsum(terms)


class NonNullMass:
    """
    Incrementally maintained non-null interaction mass W.

    Keeps per-state row and column sums of the non-null probability matrix
    weighted by counts, so a count change costs O(q).
    """

    def __init__(self, protocol: Protocol, counts: list[int]) -> None:
        self.protocol = protocol
        self.counts = counts
        self.matrix = protocol.nonnull
        positive = [p for row in self.matrix for p in row if p > 0]
        self._floor = 0.5 * min(positive) if positive else math.inf
        self.resync()

    def resync(self) -> None:
        q = self.protocol.q
        matrix, counts = self.matrix, self.counts
        self.row = [math.fsum(matrix[a][b] * counts[b] for b in range(q)) for a in range(q)]
        self.col = [math.fsum(counts[a] * matrix[a][b] for a in range(q)) for b in range(q)]
        self.total = math.fsum(counts[a] * (self.row[a] - matrix[a][a]) for a in range(q))
        self._updates = 0

    def apply(self, inputs: Pair, outputs: Pair) -> None:
        """Apply an interaction to the shared counts and keep W current."""
        apply_pair(self.counts, inputs, outputs)
        self.record(inputs, outputs)

    def record(self, inputs: Pair, outputs: Pair) -> None:
        """Update W for an interaction the caller already applied to the counts."""
        for state in inputs:
            self.shift(state, -1)
        for state in outputs:
            self.shift(state, 1)
        self._updates += 1
        if self._updates >= _RESYNC_EVERY:
            self.resync()
        if Config.DEBUG_CHECKS:
            self.check()

    def shift(self, state: int, delta: int) -> None:
        """Account for a change of ``delta`` in the count of ``state``."""
        matrix = self.matrix
        diag = matrix[state][state]
        row_s = self.row[state]
        col_s = self.col[state]
        self.total += delta * (row_s + col_s) + delta * delta * diag - delta * diag
        for a in range(len(self.row)):
            self.row[a] += matrix[a][state] * delta
            self.col[a] += matrix[state][a] * delta

    def has_applicable(self) -> bool:
        counts = self.counts
        return any(counts[a] > 0 and counts[b] > (1 if a == b else 0) for a, b in self.protocol.active_pairs)

    def mass(self) -> float:
        """Current W, exactly zero in silent configurations."""
        if self.total < self._floor:
            self.resync()
            if not self.has_applicable():
                self.total = 0.0
        return max(self.total, 0.0)

    def check(self) -> None:
        exact = protocol_nonnull_mass(Configuration(self.protocol.states, self.counts), self.protocol)
        assert math.isclose(self.total, exact, rel_tol=1e-9, abs_tol=1e-9), f"W drifted: {self.total} != {exact}"

    def pick_pair(self, rng: RngStream) -> Pair:
        """Ordered pair (a, b) with probability proportional to #a·(#b - [a == b])·nonnull(a, b)."""
        matrix, counts = self.matrix, self.counts
        for _ in range(2):
            rows = [max(0.0, counts[a] * (self.row[a] - matrix[a][a])) if counts[a] else 0.0 for a in range(len(counts))]
            if math.fsum(rows) <= 0:
                self.resync()
                continue
            a = rng.choose_weighted(rows)
            cols = [matrix[a][b] * (counts[b] - (1 if a == b else 0)) for b in range(len(counts))]
            if math.fsum(cols) > 0:
                return a, rng.choose_weighted(cols)
            self.resync()
        raise NoApplicableInteraction("no non-null interaction is applicable")


def apply_nonnull_interaction(tracker: NonNullMass, rng: RngStream) -> tuple[Pair, Pair]:
    """Choose a non-null interaction by weight and apply it; returns (inputs, outputs)."""
    inputs = tracker.pick_pair(rng)
    dist = tracker.protocol.delta[inputs]
    outputs = sample_nonnull_output(dist, rng)
    tracker.apply(inputs, outputs)
    return inputs, outputs


def holding_time(tracker: NonNullMass, n: int, rng: RngStream) -> float:
    """Continuous-time wait until the next non-null interaction: Exp(m·W/(n-1))."""
    return rng.exp_sample(tracker.protocol.m * tracker.mass() / (n - 1))


def interactions_to_next_event(tracker: NonNullMass, n: int, rng: RngStream) -> int:
    """Interactions up to and including the next non-null one: Geometric(W/(n(n-1)))."""
    return rng.geometric_sample(min(1.0, tracker.mass() / (n * (n - 1))))


def protocol_gillespie_step(
    config: Configuration,
    protocol: Protocol,
    time_model: TimeModel,
    rng: RngStream,
    tracker: NonNullMass | None = None,
) -> tuple[Configuration, float]:
    """
    Apply the next non-null interaction in place.

    Continuous time waits Exp(m·W/(n-1)); discrete time skips
    G ~ Geometric(W/(n(n-1))) interactions and advances G/n.

    Raises:
        NoApplicableInteraction: If W == 0
    """
    n = config.n
    if n < 2:
        raise PopulationTooSmall(f"population size must be at least 2, got {n}")
    tracker = NonNullMass(protocol, config.counts) if tracker is None else tracker
    if tracker.mass() <= 0:
        raise NoApplicableInteraction("configuration is silent: every applicable interaction is null")
    if time_model is TimeModel.CONTINUOUS:
        dt = holding_time(tracker, n, rng)
    else:
        dt = interactions_to_next_event(tracker, n, rng) / n
    apply_nonnull_interaction(tracker, rng)
    return config, dt
