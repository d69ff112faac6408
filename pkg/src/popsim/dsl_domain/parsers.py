"""
Parsers for the ``.crn`` and ``.pp`` text formats.

CRN files hold one reaction per line::

    # approximate majority
    A + B -> 2U
    A + U -> 2A @ 3
    B + U <-> 2B @ 4, 5

Protocol files hold one rule per line. ``->`` rules define both orders of
the input pair, ``=>`` rules only the order written; ``: p`` makes a rule
fire with probability p. Rules sharing a left side accumulate, and whatever
probability they leave is null::

    A B -> U U
    A A => B C : 0.5

Comment lines of the form ``# key = value`` carry protocol metadata written
by the emitter (``states``, ``m``, ``n``, ``v``).
"""

from __future__ import annotations

import dataclasses
import math
import re
from collections.abc import Iterator

import pyparsing as pp

from popsim.common.errors import ArityMismatch, InputError, MissingReverseRate, ParseError, SourceSpan
from popsim.common.logging import get_logger
from popsim.core.model import CompileInfo, Crn, Protocol, ProtocolBuilder, Reaction
from popsim.dsl_domain.grammar import CrnGrammar, ProtocolGrammar

logger = get_logger(__name__)

# accepted excess of a left side's probabilities over 1 before it is an error
PROBABILITY_SLACK = 2.0**-20

_HEADER = re.compile(r"#\s*(states|m|n|v)\s*=\s*(.*?)\s*$")


def _lines(text: str) -> Iterator[tuple[int, str]]:
    """Numbered lines with '\\n' or '\\r\\n' endings removed."""
    for lineno, line in enumerate(text.split("\n"), start=1):
        yield lineno, line.removesuffix("\r")


def _line_span(lineno: int, line: str) -> SourceSpan:
    start = len(line) - len(line.lstrip()) + 1
    return SourceSpan(lineno, start, max(start + 1, len(line.rstrip()) + 1))


def _span_from(lineno: int, line: str, column: int) -> SourceSpan:
    """Span from ``column`` to the end of the line, clamped inside the line."""
    end = max(len(line.rstrip()), 1)
    start = min(max(column, 1), end)
    return SourceSpan(lineno, start, end + 1)


def _parse_line(element: pp.ParserElement, lineno: int, line: str) -> pp.ParseResults:
    try:
        return element.parse_string(line, parse_all=True)
    except pp.ParseBaseException as exc:
        expected = getattr(exc, "parser_element", None)
        names = frozenset({str(expected)}) if expected is not None else frozenset()
        raise ParseError(exc.msg, _span_from(lineno, line, exc.col), names) from None


def _is_skipped(line: str) -> bool:
    stripped = line.strip()
    return not stripped or stripped.startswith("#")


def _side(group: pp.ParseResults) -> list[str]:
    names: list[str] = []
    for term in group:
        copies = 2 if term.get("coefficient") else 1
        names.extend([term["species"]] * copies)
    return names


def _rate(raw: str, lineno: int, line: str) -> float:
    value = float(raw)
    if not value > 0 or math.isinf(value):
        raise ParseError(f"rate must be a positive finite number, got {raw}", _span_from(lineno, line, line.rfind(raw) + 1))
    return value


def parse_crn(text: str, volume: float = 1.0) -> Crn:
    """
    Parse a ``.crn`` document.

    Species are declared implicitly, in order of first appearance.

    Args:
        text: Document text
        volume: Volume v of the resulting CRN

    Returns:
        CRN with reactions in file order

    Raises:
        ParseError: If a line does not match the grammar or a rate is not positive
        ArityMismatch: If a side has more than two molecules or the sides differ in size
        MissingReverseRate: If a ``<->`` reaction has no reverse rate
    """
    species: dict[str, int] = {}
    reactions: list[Reaction] = []
    for lineno, line in _lines(text):
        if _is_skipped(line):
            continue
        result = _parse_line(CrnGrammar.reaction, lineno, line)
        span = _line_span(lineno, line)
        reactants, products = _side(result["reactants"]), _side(result["products"])
        if len(reactants) > 2 or len(products) > 2 or len(reactants) != len(products):
            raise ArityMismatch(
                f"reaction has {len(reactants)} reactant(s) and {len(products)} product(s); "
                "both sides need the same count, 1 or 2",
                span,
            )

        reversible = result["arrow"] == "<->"
        k = _rate(result["k"], lineno, line) if "k" in result else 1.0
        k_rev = _rate(result["k_rev"], lineno, line) if "k_rev" in result else None
        if reversible and k_rev is None:
            raise MissingReverseRate("'<->' needs a reverse rate: '@ k, k_rev'", span)
        if not reversible and k_rev is not None:
            raise ParseError(
                "'->' takes a single rate", _span_from(lineno, line, line.rfind(",") + 1), frozenset({"end of line"})
            )

        r_ids = tuple(species.setdefault(s, len(species)) for s in reactants)
        p_ids = tuple(species.setdefault(s, len(species)) for s in products)
        reactions.append(Reaction(r_ids, p_ids, k, reversible=reversible, k_rev=k_rev))

    logger.debug(f"Parsed CRN: {len(species)} species, {len(reactions)} reactions")
    return Crn(tuple(species), tuple(reactions), volume)


def _header_value(key: str, raw: str, lineno: int, line: str) -> float | tuple[str, ...]:
    if key == "states":
        return tuple(raw.split())
    try:
        value = float(raw)
    except ValueError:
        value = math.nan
    valid = value > 0 and not math.isinf(value)
    if key == "n":
        valid = valid and value.is_integer() and value >= 2
    if not valid:
        raise ParseError(f"header '{key}' has an invalid value {raw!r}", _line_span(lineno, line))
    return value


def parse_protocol(text: str, slack: float = PROBABILITY_SLACK) -> Protocol:
    """
    Parse a ``.pp`` document.

    Args:
        text: Document text
        slack: Tolerated excess of one left side's probabilities over 1; such
            sides are renormalized

    Returns:
        Symmetrized protocol; a ``# m``/``# n``/``# v`` header restores the
        time-scale constant and the compile parameters

    Raises:
        ParseError: If a line does not match the grammar or a probability is outside (0, 1]
        ProbabilityOverflow: If one left side's probabilities exceed 1 + ``slack``
        ConflictingOrderedRules: If two rules define the same ordered pair differently
    """
    header: dict[str, float | tuple[str, ...]] = {}
    rules: list[tuple[int, str, pp.ParseResults]] = []
    for lineno, line in _lines(text):
        match = _HEADER.match(line.strip())
        if match:
            header[match.group(1)] = _header_value(match.group(1), match.group(2), lineno, line)
            continue
        if _is_skipped(line):
            continue
        rules.append((lineno, line, _parse_line(ProtocolGrammar.rule, lineno, line)))

    states = header.get("states", ())
    builder = ProtocolBuilder(states if isinstance(states, tuple) else ())
    for lineno, line, result in rules:
        span = _line_span(lineno, line)
        prob = 1.0
        if "prob" in result:
            prob = float(result["prob"])
            if not 0.0 < prob <= 1.0:
                raise ParseError(
                    f"probability must be in (0, 1], got {result['prob']}",
                    _span_from(lineno, line, line.rfind(":") + 1),
                )
        inputs = (result["inputs"][0], result["inputs"][1])
        outputs = (result["outputs"][0], result["outputs"][1])
        builder.add_rule(inputs, outputs, prob, ordered=result["arrow"] == "=>", span=span)

    m = header.get("m")
    protocol = builder.build(m=m if isinstance(m, float) else 1.0, slack=slack)
    n, v = header.get("n"), header.get("v")
    if isinstance(n, float) and isinstance(v, float):
        protocol = dataclasses.replace(protocol, compiled=CompileInfo(n=int(n), volume=v))
    logger.debug(f"Parsed protocol: {protocol.q} states, {len(protocol.delta)} non-null ordered pairs")
    return protocol


def _assignments(text: str, what: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for item in text.split(","):
        name, sep, raw = item.partition("=")
        name, raw = name.strip(), raw.strip()
        if not sep or not name or not raw:
            raise InputError(f"{what} entries look like 'A=51', got {item.strip()!r}")
        if name in values:
            raise InputError(f"state {name!r} appears twice in the {what}")
        values[name] = raw
    return values


def parse_init(text: str) -> dict[str, int]:
    """``"A=51,B=49"`` -> ``{"A": 51, "B": 49}``."""
    counts: dict[str, int] = {}
    for name, raw in _assignments(text, "initial configuration").items():
        try:
            counts[name] = int(raw)
        except ValueError:
            raise InputError(f"count for {name!r} must be an integer, got {raw!r}") from None
        if counts[name] < 0:
            raise InputError(f"count for {name!r} must be non-negative, got {raw}")
    return counts


def parse_weights(text: str) -> dict[str, float]:
    """``"A=0.51,B=0.49"`` -> relative initial weights."""
    weights: dict[str, float] = {}
    for name, raw in _assignments(text, "initial weights").items():
        try:
            weights[name] = float(raw)
        except ValueError:
            raise InputError(f"weight for {name!r} must be a number, got {raw!r}") from None
    return weights
