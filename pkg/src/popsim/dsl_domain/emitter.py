"""Protocol text emitter, the inverse of ``parse_protocol``."""

from __future__ import annotations

import re
from typing import Any

from popsim.common.errors import InputError
from popsim.core.model import OutputDistribution, Pair, Protocol

_STATE_NAME = re.compile(r"[A-Za-z0-9_]+")


def _number(x: float) -> str:
    """Shortest text that parses back to the same float."""
    return repr(float(x))


def _rule_lines(names: tuple[str, ...], pair: Pair, dist: OutputDistribution, arrow: str) -> list[str]:
    a, b = names[pair[0]], names[pair[1]]
    lines = []
    for (c, d), p in dist.entries:
        suffix = "" if p == 1.0 else f" : {_number(p)}"
        lines.append(f"{a} {b} {arrow} {names[c]} {names[d]}{suffix}")
    return lines


def emit_protocol(protocol: Protocol) -> str:
    """
    Render ``protocol`` in the ``.pp`` format.

    The header records the state order, and for compiled protocols the
    time-scale constant m together with n and v. Compiled protocols are
    written as ordered rules only; hand-written ones use an unordered rule
    wherever the two orders of a pair are exact mirror images.

    Raises:
        InputError: If a state name cannot be written in the format
    """
    names = protocol.states
    for name in names:
        if not _STATE_NAME.fullmatch(name):
            raise InputError(f"state name {name!r} cannot be written in the protocol format")

    lines = ["# popsim protocol", f"# states = {' '.join(names)}"]
    if protocol.compiled is not None:
        lines.append(f"# m = {_number(protocol.m)}")
        lines.append(f"# n = {protocol.compiled.n}")
        lines.append(f"# v = {_number(protocol.compiled.volume)}")
    elif protocol.m != 1.0:
        lines.append(f"# m = {_number(protocol.m)}")

    done: set[Pair] = set()
    for pair in sorted(protocol.delta, key=lambda p: (names[p[0]], names[p[1]])):
        if pair in done:
            continue
        dist = protocol.delta[pair]
        a, b = pair
        mirror = protocol.delta.get((b, a))
        unordered = (
            protocol.compiled is None and a != b and mirror is not None and mirror == dist.mirrored()
        )
        lines.extend(_rule_lines(names, pair, dist, "->" if unordered else "=>"))
        done.add(pair)
        if unordered:
            done.add((b, a))
    return "\n".join(lines) + "\n"


def null_probabilities(protocol: Protocol) -> dict[tuple[str, str], float]:
    """Null probability of every ordered pair with a non-null outcome."""
    names = protocol.states
    return {(names[a], names[b]): dist.null_prob for (a, b), dist in sorted(protocol.delta.items())}


def protocol_summary(protocol: Protocol) -> dict[str, Any]:
    """Plain-data description: states, q, m, compile parameters and null probabilities."""
    return {
        "states": list(protocol.states),
        "q": protocol.q,
        "m": protocol.m,
        "compiled": (
            {"n": protocol.compiled.n, "volume": protocol.compiled.volume} if protocol.compiled is not None else None
        ),
        "nonnull_pairs": len(protocol.active_pairs),
        "null_probabilities": {f"{a},{b}": p for (a, b), p in null_probabilities(protocol).items()},
        "fingerprint": protocol.fingerprint,
    }
