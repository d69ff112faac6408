"""
Tests for the .crn and .pp parsers and the command-line value parsers.
"""

import pytest

from popsim.common.errors import (
    ArityMismatch,
    ConflictingOrderedRules,
    InputError,
    MissingReverseRate,
    ParseError,
    ProbabilityOverflow,
)
from popsim.dsl_domain.parsers import parse_crn, parse_init, parse_protocol, parse_weights

MAJORITY_CRN = """\
# approximate majority
A + B -> 2U
A + U -> 2A @ 3

B + U <-> 2B @ 4, 5
"""


class TestParseCrn:
    def test_reactions_and_species_order(self):
        crn = parse_crn(MAJORITY_CRN, volume=7.0)
        assert crn.species == ("A", "B", "U")
        assert crn.volume == 7.0
        assert [(r.reactants, r.products, r.k) for r in crn.reactions] == [
            ((0, 1), (2, 2), 1.0),
            ((0, 2), (0, 0), 3.0),
            ((1, 2), (1, 1), 4.0),
        ]
        last = crn.reactions[-1]
        assert last.reversible
        assert last.k_rev == 5.0

    def test_coefficient_with_star_and_crlf(self):
        crn = parse_crn("X -> 2*Y @ 0.5\r\nY + Y -> X + X\r\n")
        assert crn.species == ("X", "Y")
        assert crn.reactions[0].products == (1, 1)
        assert crn.reactions[0].k == 0.5

    def test_scientific_rate(self):
        crn = parse_crn("A -> B @ 2.5e-3")
        assert crn.reactions[0].k == pytest.approx(2.5e-3)

    def test_comments_only_gives_empty_crn(self):
        crn = parse_crn("# nothing here\n\n")
        assert crn.species == ()
        assert crn.reactions == ()

    def test_bad_arrow_reports_line(self):
        with pytest.raises(ParseError) as exc_info:
            parse_crn("A -> B\nA + B => C + C\n")
        assert exc_info.value.span is not None
        assert exc_info.value.span.line == 2
        assert "line 2" in str(exc_info.value)

    def test_three_reactants(self):
        with pytest.raises(ArityMismatch) as exc_info:
            parse_crn("2A + B -> C + D")
        assert exc_info.value.span is not None
        assert exc_info.value.span.line == 1

    def test_unbalanced_sides(self):
        with pytest.raises(ArityMismatch):
            parse_crn("A -> B + C")

    @pytest.mark.parametrize("line", ["A <-> B", "A <-> B @ 2"])
    def test_missing_reverse_rate(self, line):
        with pytest.raises(MissingReverseRate):
            parse_crn(line)

    @pytest.mark.parametrize("rate", ["0", "-3"])
    def test_non_positive_rate(self, rate):
        with pytest.raises(ParseError) as exc_info:
            parse_crn(f"A -> B\nA -> C @ {rate}\n")
        assert exc_info.value.span.line == 2
        assert "positive" in exc_info.value.message

    def test_irreversible_with_two_rates(self):
        with pytest.raises(ParseError):
            parse_crn("A -> B @ 1, 2")


class TestParseProtocol:
    def test_unordered_rule_defines_both_orders(self):
        protocol = parse_protocol("A B -> U U\nA U -> A A\nB U -> B B\n")
        a, b, u = (protocol.state_id(s) for s in "ABU")
        assert protocol.delta[(a, b)].entries == (((u, u), 1.0),)
        assert protocol.delta[(b, a)].entries == (((u, u), 1.0),)
        assert protocol.delta[(u, a)].entries == (((a, a), 1.0),)
        assert protocol.m == 1.0
        assert protocol.compiled is None

    def test_ordered_rule_defines_one_order(self):
        protocol = parse_protocol("A B => C D")
        a, b = protocol.state_id("A"), protocol.state_id("B")
        assert (a, b) in protocol.delta
        assert (b, a) not in protocol.delta

    def test_rules_accumulate_with_null_remainder(self):
        protocol = parse_protocol("A B => C C : 0.25\nA B => D D : 0.5\n")
        dist = protocol.delta[(0, 1)]
        assert dict(dist.entries) == {(2, 2): 0.25, (3, 3): 0.5}
        assert dist.null_prob == pytest.approx(0.25)

    def test_header_restores_state_order_and_compile_parameters(self):
        text = "# states = D C B A\n# m = 2.5\n# n = 10\n# v = 20.0\nA B => C D : 0.5\n"
        protocol = parse_protocol(text)
        assert protocol.states == ("D", "C", "B", "A")
        assert protocol.m == 2.5
        assert protocol.compiled is not None
        assert protocol.compiled.n == 10
        assert protocol.compiled.volume == 20.0

    def test_numeric_state_names(self):
        protocol = parse_protocol("0 4 -> 2 2")
        assert set(protocol.states) == {"0", "4", "2"}

    @pytest.mark.parametrize("header", ["# n = 1", "# n = 2.5", "# m = 0", "# m = abc"])
    def test_invalid_header(self, header):
        with pytest.raises(ParseError):
            parse_protocol(f"{header}\nA B -> C D\n")

    @pytest.mark.parametrize("prob", ["0", "1.5"])
    def test_probability_outside_unit_interval(self, prob):
        with pytest.raises(ParseError) as exc_info:
            parse_protocol(f"A B -> C D : {prob}")
        assert exc_info.value.span.line == 1

    def test_probability_overflow(self):
        with pytest.raises(ProbabilityOverflow) as exc_info:
            parse_protocol("A B -> C D : 0.7\nA B -> D D : 0.6\n")
        assert exc_info.value.span is not None

    def test_conflicting_ordered_rules(self):
        with pytest.raises(ConflictingOrderedRules) as exc_info:
            parse_protocol("A B => C D\nA B -> D D\n")
        assert exc_info.value.span is not None

    def test_agreeing_ordered_rule_is_accepted(self):
        protocol = parse_protocol("A B -> C D\nB A => D C\n")
        assert protocol.delta[(1, 0)].entries == (((3, 2), 1.0),)

    def test_garbage_line(self):
        with pytest.raises(ParseError) as exc_info:
            parse_protocol("A B -> C D\nA -> B\n")
        assert exc_info.value.span.line == 2


class TestValueParsers:
    def test_init(self):
        assert parse_init("A=51, B=49") == {"A": 51, "B": 49}

    @pytest.mark.parametrize("text", ["A=-1", "A=1.5", "A", "A=1,A=2", "=3"])
    def test_init_rejected(self, text):
        with pytest.raises(InputError):
            parse_init(text)

    def test_weights(self):
        assert parse_weights("A=0.51,B=0.49") == {"A": 0.51, "B": 0.49}

    def test_weights_rejected(self):
        with pytest.raises(InputError):
            parse_weights("A=half")
