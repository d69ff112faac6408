"""
pyparsing grammars for the line-oriented ``.crn`` and ``.pp`` formats.

Each grammar matches one non-comment line; the parsers feed lines one at a
time so every error is reported against its own line.
"""

import pyparsing as pp

number = pp.Regex(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?").set_name("number")


class CrnGrammar:
    """``A + B -> 2U @ 1`` and ``B + U <-> 2B @ 4, 5``."""

    species = pp.Word(pp.alphas + "_", pp.alphanums + "_").set_name("species")

    plus = pp.Suppress(pp.Literal("+"))
    star = pp.Suppress(pp.Literal("*"))
    at = pp.Suppress(pp.Literal("@"))
    comma = pp.Suppress(pp.Literal(","))

    # coefficient 1 (omitted) or 2, optionally written 2*
    term = pp.Group(pp.Optional(pp.Literal("2")("coefficient") + pp.Optional(star)) + species("species"))
    side = pp.Group(term + pp.Optional(plus + term))
    arrow = (pp.Literal("<->") | pp.Literal("->")).set_name("'->' or '<->'")
    rates = at + number("k") + pp.Optional(comma + number("k_rev"))

    reaction = side("reactants") + arrow("arrow") + side("products") + pp.Optional(rates)


class ProtocolGrammar:
    """``A B -> C D`` (both orders) and ``A B => C D : 0.5`` (as written)."""

    state = pp.Word(pp.alphanums + "_").set_name("state")

    colon = pp.Suppress(pp.Literal(":"))

    pair = pp.Group(state + state)
    arrow = (pp.Literal("=>") | pp.Literal("->")).set_name("'->' or '=>'")
    probability = colon + number("prob")

    rule = pair("inputs") + arrow("arrow") + pair("outputs") + pp.Optional(probability)
