"""
Building protocols from transition callbacks and mappings, and building
initial configurations.

A callback is never called during a simulation: the reachable state set is
enumerated up front and turned into a ``Protocol`` over integer ids.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Callable, Hashable, Iterable, Mapping

from popsim.common.config import Config
from popsim.common.errors import EmptyPopulation, InputError, NonDeterministicCallback, StateCapExceeded, UnknownState
from popsim.common.logging import get_logger
from popsim.core.model import Configuration, OutputDistribution, Pair, Protocol, ProtocolBuilder

logger = get_logger(__name__)

TransitionFn = Callable[[Hashable, Hashable], tuple[Hashable, Hashable]]


def _ordered_states(found: list[Hashable]) -> list[Hashable]:
    try:
        return sorted(found)  # type: ignore[type-var]
    except TypeError:
        return found


def enumerate_states(
    initial_states: Iterable[Hashable],
    transition_fn: TransitionFn,
    state_cap: int | None = None,
    symmetrize: bool = True,
) -> Protocol:
    """
    Enumerate the closure of ``initial_states`` under ``transition_fn``.

    The callback is evaluated on every ordered pair of reachable states. A
    pair whose callback output equals its input is null; if only one order
    of a pair is non-null, the other order receives its mirror image unless
    ``symmetrize`` is off.

    Args:
        initial_states: Seed states (any hashable values; names are ``str(state)``)
        transition_fn: Pure function mapping an ordered pair to an ordered pair
        state_cap: Maximum closure size (defaults to ``Config.STATE_CAP``)
        symmetrize: Mirror one-sided transitions onto the null order of the pair

    Returns:
        Deterministic protocol over exactly the reachable states

    Raises:
        StateCapExceeded: If the closure grows beyond the cap
        NonDeterministicCallback: If two invocations on the same pair disagree
    """
    cap = Config.STATE_CAP if state_cap is None else state_cap
    seen: dict[Hashable, None] = {}
    queue: deque[Hashable] = deque()
    for s in initial_states:
        if s not in seen:
            seen[s] = None
            queue.append(s)
    if not seen:
        raise InputError("at least one initial state is required")
    if len(seen) > cap:
        raise StateCapExceeded(f"{len(seen)} initial states exceed the cap of {cap}")

    outputs: dict[tuple[Hashable, Hashable], tuple[Hashable, Hashable]] = {}

    def evaluate(a: Hashable, b: Hashable) -> None:
        first = tuple(transition_fn(a, b))
        second = tuple(transition_fn(a, b))
        if first != second:
            raise NonDeterministicCallback(f"callback returned {first!r} and then {second!r} for {(a, b)!r}")
        if len(first) != 2:
            raise InputError(f"callback must return a pair, got {first!r} for {(a, b)!r}")
        outputs[(a, b)] = (first[0], first[1])
        for produced in first:
            if produced not in seen:
                seen[produced] = None
                queue.append(produced)
                if len(seen) > cap:
                    raise StateCapExceeded(f"state closure exceeds the cap of {cap} states")

    processed: list[Hashable] = []
    while queue:
        s = queue.popleft()
        evaluate(s, s)
        for other in processed:
            evaluate(s, other)
            evaluate(other, s)
        processed.append(s)

    states = _ordered_states(list(seen))
    names = [str(s) for s in states]
    if len(set(names)) != len(names):
        raise InputError("distinct callback states share a display name")
    index = {s: i for i, s in enumerate(states)}

    delta: dict[Pair, OutputDistribution] = {}
    for (a, b), (c, d) in outputs.items():
        if (c, d) != (a, b):
            delta[(index[a], index[b])] = OutputDistribution((((index[c], index[d]), 1.0),), 0.0)
    for (a, b), (c, d) in outputs.items():
        if symmetrize and (c, d) == (a, b) and a != b:
            mirror = delta.get((index[b], index[a]))
            if mirror is not None:
                delta[(index[a], index[b])] = mirror.mirrored()

    logger.info(f"Enumerated {len(states)} states, {len(delta)} non-null ordered pairs")
    return Protocol(tuple(names), delta)


def protocol_from_mapping(rules: Mapping[tuple[str, str], tuple[str, str]], states: Iterable[str] = ()) -> Protocol:
    """Protocol from an unordered ``{(a, b): (c, d)}`` mapping, symmetrized into both orders."""
    builder = ProtocolBuilder(states)
    for inputs, outputs in rules.items():
        builder.add_rule(inputs, outputs)
    return builder.build()


def make_configuration(init: Mapping[str, int], protocol: Protocol) -> Configuration:
    """
    Build a count vector over the protocol's states.

    Raises:
        UnknownState: If a name is not a protocol state
        EmptyPopulation: If the population has fewer than 2 agents
    """
    counts = [0] * protocol.q
    for name, count in init.items():
        if name not in protocol.index:
            raise UnknownState(f"unknown state {name!r}")
        if count < 0:
            raise InputError(f"count for {name!r} must be non-negative, got {count}")
        counts[protocol.index[name]] += int(count)
    config = Configuration(protocol.states, counts)
    if config.n < 2:
        raise EmptyPopulation(f"population size {config.n} is too small for pairwise interactions (need n >= 2)")
    return config
