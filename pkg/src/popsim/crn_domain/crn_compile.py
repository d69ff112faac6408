"""
Compile a CRN into an equivalent continuous-time population protocol.

The pipeline is expand_reversible -> to_ordered_transitions -> normalize:

1. reversible reactions become forward and reverse irreversible reactions;
2. bimolecular reactions become ordered transitions (plus the swapped order
   for unequal reactants) with rates scaled by (n - 1) / (2v); each
   unimolecular reaction X -> Y becomes (X, Z) -> (Y, Z) for every species Z
   with its rate unchanged;
3. the largest per-pair rate sum is the time-scale constant m and every
   transition fires with probability rate / m, the remainder being null.

Running the protocol in continuous time with m * n interactions per unit of
time samples the same configuration law as Gillespie on the CRN.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from popsim.common.errors import EmptyTransitionSet, InputError, NonPositiveRate, PopulationTooSmall
from popsim.common.logging import get_logger
from popsim.core.model import CompileInfo, Crn, OutputDistribution, Pair, Protocol, Reaction

logger = get_logger(__name__)


@dataclass(frozen=True)
class OrderedRatedTransition:
    inputs: Pair
    outputs: Pair
    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise NonPositiveRate(f"transition rate must be positive, got {self.rate}")


def expand_reversible(crn: Crn) -> list[Reaction]:
    """Split reversible reactions; input order is kept, forward before reverse."""
    reactions: list[Reaction] = []
    for reaction in crn.reactions:
        if reaction.reversible:
            assert reaction.k_rev is not None
            reactions.append(Reaction(reaction.reactants, reaction.products, reaction.k))
            reactions.append(Reaction(reaction.products, reaction.reactants, reaction.k_rev))
        else:
            reactions.append(reaction)
    return reactions


def corrective_factor(n: int, volume: float) -> float:
    return (n - 1) / (2 * volume)


def to_ordered_transitions(
    reactions: Iterable[Reaction], n: int, volume: float, species_count: int
) -> list[OrderedRatedTransition]:
    """
    Turn irreversible reactions into ordered rated transitions.

    Args:
        reactions: Irreversible reactions (see ``expand_reversible``)
        n: Population size
        volume: CRN volume v
        species_count: Size of the species universe; unimolecular reactions
            pair with every species in it

    Raises:
        PopulationTooSmall: If n < 2
    """
    if n < 2:
        raise PopulationTooSmall(f"population size must be at least 2, got {n}")
    if not volume > 0:
        raise InputError(f"volume must be positive, got {volume}")
    factor = corrective_factor(n, volume)
    transitions: list[OrderedRatedTransition] = []
    for reaction in reactions:
        if reaction.reversible:
            raise InputError("expand reversible reactions before building ordered transitions")
        if reaction.arity == 2:
            (x, y), (w, z) = reaction.reactants, reaction.products
            rate = reaction.k * factor
            transitions.append(OrderedRatedTransition((x, y), (w, z), rate))
            if x != y:
                transitions.append(OrderedRatedTransition((y, x), (z, w), rate))
        else:
            (x,), (w,) = reaction.reactants, reaction.products
            for other in range(species_count):
                transitions.append(OrderedRatedTransition((x, other), (w, other), reaction.k))
    return transitions


def merge_transitions(transitions: Iterable[OrderedRatedTransition]) -> list[OrderedRatedTransition]:
    """Sum the rates of transitions sharing both ordered input and ordered output; first-seen order."""
    rates: dict[tuple[Pair, Pair], list[float]] = {}
    for t in transitions:
        rates.setdefault((t.inputs, t.outputs), []).append(t.rate)
    return [OrderedRatedTransition(i, o, math.fsum(r)) for (i, o), r in rates.items()]


def normalize(
    transitions: Sequence[OrderedRatedTransition],
    states: Sequence[str],
    compiled: CompileInfo | None = None,
) -> tuple[Protocol, float]:
    """
    Scale rates into probabilities by the maximum per-pair rate sum m.

    Transitions that leave their pair unchanged are dropped: they never
    change the configuration.

    Returns:
        The protocol (with ``m`` set) and m

    Raises:
        EmptyTransitionSet: If there is nothing to normalize
    """
    effective = [t for t in merge_transitions(transitions) if t.inputs != t.outputs]
    if not effective:
        raise EmptyTransitionSet("no state-changing transitions to normalize")

    by_pair: dict[Pair, list[OrderedRatedTransition]] = {}
    for t in effective:
        by_pair.setdefault(t.inputs, []).append(t)
    pair_mass = {pair: math.fsum(t.rate for t in ts) for pair, ts in by_pair.items()}
    m = max(pair_mass.values())

    delta: dict[Pair, OutputDistribution] = {}
    for pair, ts in by_pair.items():
        entries = tuple((t.outputs, t.rate / m) for t in ts)
        null = 0.0 if pair_mass[pair] == m else max(0.0, 1.0 - math.fsum(p for _, p in entries))
        delta[pair] = OutputDistribution(entries, null)
    return Protocol(tuple(states), delta, m=m, compiled=compiled), m


def compile_crn(crn: Crn, n: int, volume: float | None = None) -> Protocol:
    """
    Compile ``crn`` for population size ``n``.

    Args:
        crn: Reaction network; its species become the protocol states
        n: Population size the rates are corrected for
        volume: Overrides ``crn.volume`` when given

    Returns:
        Protocol whose continuous-time dynamics at time m*t match Gillespie at time t
    """
    v = crn.volume if volume is None else volume
    reactions = expand_reversible(crn)
    transitions = to_ordered_transitions(reactions, n, v, len(crn.species))
    protocol, m = normalize(transitions, crn.species, CompileInfo(n=n, volume=v))
    logger.info(f"Compiled CRN with {len(crn.reactions)} reactions for n={n}, v={v}: m={m:g}, {len(protocol.delta)} pairs")
    return protocol
