"""
Exception hierarchy for popsim.

Two branches mirror the CLI exit codes: ``InputError`` (exit 2) for anything
wrong with what the caller handed in, ``SimulationError`` (exit 3) for
failures while a simulation is running.
"""

from __future__ import annotations

from dataclasses import dataclass


class PopsimError(Exception):
    """Base class for every error raised by popsim."""

    exit_code = 3


class InputError(PopsimError):
    """Invalid model, flag, or parameter."""

    exit_code = 2


class SimulationError(PopsimError):
    """Failure while advancing a simulation."""

    exit_code = 3


# core


class StateCapExceeded(InputError):
    pass


class NonDeterministicCallback(InputError):
    pass


class UnknownState(InputError):
    pass


class EmptyPopulation(InputError):
    pass


class PopulationTooSmall(InputError):
    pass


# rng


class NonPositiveRate(InputError):
    pass


class InvalidProbability(InputError):
    pass


class DrawsExceedPopulation(InputError):
    pass


# crn_compile / scheduler


class EmptyTransitionSet(InputError):
    pass


class NegativeHorizon(InputError):
    pass


class DiscreteTimeUnsupported(InputError):
    def __init__(self, message: str = "discrete time unsupported for CRN inputs") -> None:
        super().__init__(message)


# dsl


@dataclass(frozen=True)
class SourceSpan:
    """1-based line, 1-based inclusive column start, exclusive column end."""

    line: int
    column_start: int
    column_end: int

    def __str__(self) -> str:
        return f"line {self.line}, columns {self.column_start}-{self.column_end}"


class SpannedError(InputError):
    """Model error that can point at the offending source text.

    ``span`` is None when the model was built in code rather than parsed.
    """

    def __init__(
        self, message: str, span: SourceSpan | None = None, expected: frozenset[str] = frozenset()
    ) -> None:
        self.span = span
        self.message = message
        self.expected = expected
        detail = f"{span}: {message}" if span is not None else message
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)


class ParseError(SpannedError):
    """Text that does not match the grammar."""


class ArityMismatch(SpannedError):
    pass


class MissingReverseRate(SpannedError):
    pass


class ConflictingOrderedRules(SpannedError):
    pass


class ProbabilityOverflow(SpannedError):
    pass


# engines


class Deadlock(SimulationError):
    """Total CRN propensity is zero; the configuration is terminal."""


class NoApplicableInteraction(SimulationError):
    """Non-null interaction mass W is zero; the configuration is silent."""
