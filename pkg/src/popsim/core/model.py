"""
Domain types shared by every engine.

States are dense integer ids ``0..q-1`` with unique display names. A
``Protocol`` maps ordered state pairs to ``OutputDistribution`` values with
an explicit null probability; a ``Crn`` holds uni- and bimolecular reactions
over the same kind of species ids. Both are immutable once built.
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

from popsim.common.errors import (
    ArityMismatch,
    ConflictingOrderedRules,
    EmptyPopulation,
    InputError,
    InvalidProbability,
    NonPositiveRate,
    ProbabilityOverflow,
    SourceSpan,
    UnknownState,
)

# Normalization tolerance for stored probabilities
PROB_TOLERANCE = 2.0**-40

Pair = tuple[int, int]
NamedEntries = tuple[tuple[tuple[str, str], float], ...]
CanonicalForm = tuple[tuple[str, ...], tuple[tuple[tuple[str, str], NamedEntries], ...]]
# (reactants, products, k) or (reactants, products, k, k_rev) by species name
NamedReaction = tuple[Sequence[str], Sequence[str], float] | tuple[Sequence[str], Sequence[str], float, float]


class TimeModel(str, Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class OutputDistribution:
    """Randomized outcome of one ordered input pair.

    ``entries`` are (output pair, probability) in declaration order; whatever
    probability they leave is the null outcome.
    """

    entries: tuple[tuple[Pair, float], ...]
    null_prob: float

    def __post_init__(self) -> None:
        for out, prob in self.entries:
            if not 0.0 < prob <= 1.0 + PROB_TOLERANCE:
                raise InvalidProbability(f"probability {prob} for output {out} is outside (0, 1]")
        if self.null_prob < -PROB_TOLERANCE:
            raise InvalidProbability(f"negative null probability {self.null_prob}")
        total = math.fsum(p for _, p in self.entries) + self.null_prob
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidProbability(f"outcome probabilities sum to {total!r}, not 1")

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[Pair, float]]) -> OutputDistribution:
        """Build from non-null entries; the null probability is the remainder."""
        items = tuple(entries)
        total = math.fsum(p for _, p in items)
        if total > 1.0 + PROB_TOLERANCE:
            raise ProbabilityOverflow(f"outcome probabilities sum to {total!r} > 1")
        return cls(items, max(0.0, 1.0 - total))

    @property
    def nonnull_prob(self) -> float:
        return 1.0 - self.null_prob

    @property
    def is_deterministic(self) -> bool:
        return len(self.entries) == 1 and self.null_prob <= PROB_TOLERANCE

    def mirrored(self) -> OutputDistribution:
        return OutputDistribution(tuple(((d, c), p) for (c, d), p in self.entries), self.null_prob)


@dataclass(frozen=True)
class CompileInfo:
    """Parameters a CRN-derived protocol was compiled for."""

    n: int
    volume: float


@dataclass(frozen=True)
class Protocol:
    states: tuple[str, ...]
    delta: Mapping[Pair, OutputDistribution]
    m: float = 1.0
    compiled: CompileInfo | None = None

    def __post_init__(self) -> None:
        if len(set(self.states)) != len(self.states):
            raise InputError("state names must be unique")
        if not self.m > 0:
            raise InputError(f"time-scale constant m must be positive, got {self.m}")
        q = len(self.states)
        for (a, b), dist in self.delta.items():
            ids = [a, b] + [s for out, _ in dist.entries for s in out]
            if any(not 0 <= s < q for s in ids):
                raise UnknownState(f"transition on ({a}, {b}) references a state id outside 0..{q - 1}")

    @property
    def q(self) -> int:
        return len(self.states)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.states)}

    def state_id(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownState(f"unknown state {name!r}") from None

    def distribution(self, a: int, b: int) -> OutputDistribution | None:
        """Outcome law of ordered pair (a, b); None means always null."""
        return self.delta.get((a, b))

    @cached_property
    def nonnull(self) -> list[list[float]]:
        """q x q matrix of non-null probabilities."""
        matrix = [[0.0] * self.q for _ in range(self.q)]
        for (a, b), dist in self.delta.items():
            matrix[a][b] = dist.nonnull_prob
        return matrix

    @cached_property
    def active_pairs(self) -> tuple[Pair, ...]:
        """Ordered pairs with positive non-null probability, sorted."""
        return tuple(sorted(pair for pair, dist in self.delta.items() if dist.entries))

    @property
    def is_compiled(self) -> bool:
        return self.compiled is not None

    def canonical(self) -> CanonicalForm:
        """Name-based form with states sorted and entries in declaration order.

        Two protocols that differ only in state numbering have equal canonical forms.
        """
        names = self.states
        rows = []
        for (a, b), dist in self.delta.items():
            if not dist.entries:
                continue
            entries = tuple(((names[c], names[d]), p) for (c, d), p in dist.entries)
            rows.append(((names[a], names[b]), entries))
        return tuple(sorted(names)), tuple(sorted(rows))

    @cached_property
    def fingerprint(self) -> str:
        """SHA-256 of the canonical form plus m, used in trajectory metadata."""
        payload = repr((self.canonical(), float.hex(float(self.m)))).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


@dataclass
class _PendingGroup:
    ordered: bool
    entries: list[tuple[Pair, float]] = field(default_factory=list)
    span: SourceSpan | None = None


class ProtocolBuilder:
    """Accumulates rules and produces a symmetrized ``Protocol``.

    Unordered rules (``A B -> C D``) define both ordered pairs as mirror
    images. Ordered rules (``A B => C D``) define exactly the pair written.
    Rules with the same written left side accumulate into one randomized
    distribution. When two sources define the same ordered pair they must
    agree, otherwise ``ConflictingOrderedRules`` is raised.
    """

    def __init__(self, states: Iterable[str] = ()) -> None:
        self._states: list[str] = []
        self._index: dict[str, int] = {}
        self._groups: dict[tuple[Pair, bool], _PendingGroup] = {}
        for name in states:
            self.state(name)

    def state(self, name: str) -> int:
        if name not in self._index:
            self._index[name] = len(self._states)
            self._states.append(name)
        return self._index[name]

    def add_rule(
        self,
        inputs: tuple[str, str],
        outputs: tuple[str, str],
        prob: float = 1.0,
        ordered: bool = False,
        span: SourceSpan | None = None,
    ) -> None:
        if not 0.0 < prob <= 1.0:
            raise InvalidProbability(f"rule probability {prob} is outside (0, 1]")
        a, b = (self.state(s) for s in inputs)
        c, d = (self.state(s) for s in outputs)
        group = self._groups.setdefault(((a, b), ordered), _PendingGroup(ordered, span=span))
        # an explicit self-loop is null mass but still counts towards the total
        group.entries.append(((c, d), prob))

    def _distribution(self, pair: Pair, group: _PendingGroup, slack: float) -> OutputDistribution:
        total = math.fsum(p for _, p in group.entries)
        if total > 1.0 + slack:
            names = self._states
            raise ProbabilityOverflow(
                f"probabilities for ({names[pair[0]]}, {names[pair[1]]}) sum to {total:g} > 1", group.span
            )
        merged: dict[Pair, float] = {}
        for out, p in group.entries:
            if out != pair:
                merged[out] = merged.get(out, 0.0) + p
        entries = [(out, p) for out, p in merged.items()]
        scale = 1.0 / total if total > 1.0 else 1.0
        entries = [(out, p * scale) for out, p in entries]
        return OutputDistribution.from_entries(entries)

    def build(self, m: float = 1.0, slack: float = 2.0**-20) -> Protocol:
        defined: dict[Pair, tuple[OutputDistribution, SourceSpan | None]] = {}

        def define(pair: Pair, dist: OutputDistribution, span: SourceSpan | None) -> None:
            previous = defined.get(pair)
            if previous is None:
                defined[pair] = (dist, span)
                return
            if not _same_distribution(previous[0], dist):
                names = self._states
                raise ConflictingOrderedRules(
                    f"conflicting rules for ordered pair ({names[pair[0]]}, {names[pair[1]]})", span or previous[1]
                )

        for ((a, b), ordered), group in self._groups.items():
            dist = self._distribution((a, b), group, slack)
            if ordered:
                define((a, b), dist, group.span)
            elif a == b:
                define((a, b), _symmetrize_diagonal(dist), group.span)
            else:
                define((a, b), dist, group.span)
                define((b, a), dist.mirrored(), group.span)

        delta = {pair: dist for pair, (dist, _) in defined.items() if dist.entries}
        return Protocol(tuple(self._states), delta, m=m)


def _same_distribution(x: OutputDistribution, y: OutputDistribution) -> bool:
    xs = dict(x.entries)
    ys = dict(y.entries)
    if xs.keys() != ys.keys():
        return False
    return all(abs(xs[k] - ys[k]) <= PROB_TOLERANCE for k in xs) and abs(x.null_prob - y.null_prob) <= PROB_TOLERANCE


def _symmetrize_diagonal(dist: OutputDistribution) -> OutputDistribution:
    """Unordered rule on (a, a): outputs (c, d) and (d, c) are equally likely."""
    halves: dict[Pair, float] = {}
    for (c, d), p in dist.entries:
        if c == d:
            halves[(c, d)] = halves.get((c, d), 0.0) + p
        else:
            halves[(c, d)] = halves.get((c, d), 0.0) + p / 2
            halves[(d, c)] = halves.get((d, c), 0.0) + p / 2
    return OutputDistribution(tuple(halves.items()), dist.null_prob)


@dataclass
class Configuration:
    """Count vector indexed by state id. Mutated in place by engines."""

    states: tuple[str, ...]
    counts: list[int]

    def __post_init__(self) -> None:
        if len(self.counts) != len(self.states):
            raise InputError("count vector length does not match the state count")
        if any(c < 0 for c in self.counts):
            raise InputError("counts must be non-negative")

    @property
    def n(self) -> int:
        return sum(self.counts)

    def copy(self) -> Configuration:
        return Configuration(self.states, list(self.counts))

    def key(self) -> tuple[int, ...]:
        return tuple(self.counts)

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.states, self.counts, strict=True))

    def count(self, name: str) -> int:
        return self.counts[self.states.index(name)]

    def require_interacting(self) -> None:
        if self.n < 2:
            raise EmptyPopulation(f"population size {self.n} is too small for pairwise interactions (need n >= 2)")


@dataclass(frozen=True)
class Reaction:
    """Uni- or bimolecular reaction over species ids of the owning ``Crn``."""

    reactants: tuple[int, ...]
    products: tuple[int, ...]
    k: float = 1.0
    reversible: bool = False
    k_rev: float | None = None

    def __post_init__(self) -> None:
        if len(self.reactants) != len(self.products) or len(self.reactants) not in (1, 2):
            raise ArityMismatch(
                f"reaction needs 1 or 2 reactants and as many products, got {len(self.reactants)} -> {len(self.products)}"
            )
        if not self.k > 0:
            raise NonPositiveRate(f"rate constant must be positive, got {self.k}")
        if self.reversible:
            if self.k_rev is None or not self.k_rev > 0:
                raise NonPositiveRate(f"reversible reaction needs a positive reverse rate, got {self.k_rev}")
        elif self.k_rev is not None:
            raise InputError("irreversible reaction cannot carry a reverse rate")

    @property
    def arity(self) -> int:
        return len(self.reactants)


@dataclass(frozen=True)
class Crn:
    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    volume: float = 1.0

    def __post_init__(self) -> None:
        if not self.volume > 0:
            raise InputError(f"volume must be positive, got {self.volume}")
        q = len(self.species)
        for reaction in self.reactions:
            if any(not 0 <= s < q for s in reaction.reactants + reaction.products):
                raise UnknownState("reaction references a species id outside the CRN")

    @classmethod
    def from_names(cls, reactions: Sequence[NamedReaction], volume: float = 1.0) -> Crn:
        """Build from ``(reactants, products, k[, k_rev])`` name tuples; species in first-seen order."""
        species: dict[str, int] = {}
        built = []
        for spec in reactions:
            reactants, products = spec[0], spec[1]
            ids = [species.setdefault(s, len(species)) for s in (*reactants, *products)]
            r_ids, p_ids = tuple(ids[: len(reactants)]), tuple(ids[len(reactants) :])
            if len(spec) == 4:
                built.append(Reaction(r_ids, p_ids, spec[2], reversible=True, k_rev=spec[3]))
            else:
                built.append(Reaction(r_ids, p_ids, spec[2]))
        return cls(tuple(species), tuple(built), volume)

    def with_volume(self, volume: float) -> Crn:
        return Crn(self.species, self.reactions, volume)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.species)}
