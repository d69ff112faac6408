"""Turning model text plus an initial configuration into something the scheduler can run."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from popsim.common.errors import InputError
from popsim.core.enumeration import make_configuration
from popsim.core.model import Configuration, Crn, Protocol
from popsim.crn_domain.crn_compile import compile_crn
from popsim.dsl_domain.parsers import parse_crn, parse_protocol


class ModelKind(str, Enum):
    PROTOCOL = "protocol"
    CRN = "crn"

    @classmethod
    def from_path(cls, path: Path) -> ModelKind:
        return cls.CRN if path.suffix == ".crn" else cls.PROTOCOL


@dataclass(frozen=True)
class LoadedModel:
    protocol: Protocol
    config: Configuration
    crn: Crn | None = None


def read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def load_model(
    kind: ModelKind,
    text: str,
    init: Mapping[str, int],
    n: int | None = None,
    volume: float | None = None,
) -> LoadedModel:
    """
    Parse a model and build its initial configuration.

    CRNs are compiled for ``n`` agents; ``volume`` defaults to n. For
    protocols n is the sum of ``init`` and may be given only as a check.

    Raises:
        InputError: If n is missing for a CRN or disagrees with ``init``
    """
    total = sum(init.values())
    if kind is ModelKind.CRN:
        if n is None:
            raise InputError("--n is required for CRN inputs")
        if total != n:
            raise InputError(f"initial counts sum to {total}, expected n={n}")
        crn = parse_crn(text, volume=float(n) if volume is None else volume)
        protocol = compile_crn(crn, n)
        return LoadedModel(protocol, make_configuration(init, protocol), crn)

    if n is not None and n != total:
        raise InputError(f"initial counts sum to {total}, but n={n} was given")
    if volume is not None:
        raise InputError("--volume only applies to CRN inputs")
    protocol = parse_protocol(text)
    return LoadedModel(protocol, make_configuration(init, protocol))
