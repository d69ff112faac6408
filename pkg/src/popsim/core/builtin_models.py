"""Ready-made models used in examples, benchmarks and tests."""

from __future__ import annotations

from collections.abc import Hashable

from popsim.core.enumeration import enumerate_states, protocol_from_mapping
from popsim.core.model import Crn, Protocol


def approximate_majority_protocol() -> Protocol:
    """A + B -> U + U, A + U -> A + A, B + U -> B + B (unordered, symmetrized)."""
    return protocol_from_mapping({("A", "B"): ("U", "U"), ("A", "U"): ("A", "A"), ("B", "U"): ("B", "B")})


def approximate_majority_crn(volume: float = 1.0) -> Crn:
    """Approximate majority as a CRN with rates 1, 3 and 4 (reverse 5)."""
    return Crn.from_names(
        [
            (("A", "B"), ("U", "U"), 1.0),
            (("A", "U"), ("A", "A"), 3.0),
            (("B", "U"), ("B", "B"), 4.0, 5.0),
        ],
        volume=volume,
    )


def discrete_averaging(s: Hashable, r: Hashable) -> tuple[int, int]:
    """Integer average of two integer states, floor for the first, ceiling for the second."""
    total = int(s) + int(r)  # type: ignore[call-overload]
    return total // 2, -(-total // 2)


def discrete_averaging_protocol(low: int = 0, high: int = 4) -> Protocol:
    return enumerate_states({low, high}, discrete_averaging)


def rock_paper_scissors_crn(volume: float = 1.0) -> Crn:
    """B + A -> 2B, C + B -> 2C, A + C -> 2A."""
    return Crn.from_names(
        [
            (("B", "A"), ("B", "B"), 1.0),
            (("C", "B"), ("C", "C"), 1.0),
            (("A", "C"), ("A", "A"), 1.0),
        ],
        volume=volume,
    )


def leader_election_protocol() -> Protocol:
    """L + L -> L + F: two leaders meet and one becomes a follower."""
    return protocol_from_mapping({("L", "L"): ("L", "F")}, states=("L", "F"))


def reversible_split_crn(volume: float = 10.0) -> Crn:
    """2A <-> B + C (rates 3, 2), C -> D (rate 1)."""
    return Crn.from_names(
        [
            (("A", "A"), ("B", "C"), 3.0, 2.0),
            (("C",), ("D",), 1.0),
        ],
        volume=volume,
    )
