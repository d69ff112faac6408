"""Wall-clock scaling benchmark across population sizes and engines."""

from __future__ import annotations

import math
import time
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from popsim.common.errors import InputError, PopulationTooSmall, UnknownState
from popsim.common.logging import get_logger
from popsim.core.model import Configuration, Protocol, TimeModel
from popsim.rng.samplers import RngStream
from popsim.simulation_domain.scheduler import Method, RunSpec, simulate

logger = get_logger(__name__)

DEFAULT_METHODS = (Method.BATCH, Method.GILLESPIE)


@dataclass(frozen=True)
class BenchRow:
    n: int
    method: str
    rep: int
    wall_seconds: float
    interactions: int


def scale_init(weights: Mapping[str, float], n: int) -> dict[str, int]:
    """
    Split ``n`` agents proportionally to ``weights`` by largest remainder.

    Ties in the remainder go to the state listed first.
    """
    if not weights:
        raise InputError("at least one initial weight is required")
    if any(w < 0 for w in weights.values()):
        raise InputError("initial weights must be non-negative")
    total = math.fsum(weights.values())
    if not total > 0:
        raise InputError("initial weights must not all be zero")
    exact = {name: n * w / total for name, w in weights.items()}
    counts = {name: math.floor(x) for name, x in exact.items()}
    short = n - sum(counts.values())
    names = list(weights)
    by_remainder = sorted(names, key=lambda name: (-(exact[name] - counts[name]), names.index(name)))
    for name in by_remainder[:short]:
        counts[name] += 1
    return counts


def bench(
    protocol: Protocol,
    n_list: Iterable[int],
    duration: float,
    reps: int = 1,
    methods: Sequence[Method] = DEFAULT_METHODS,
    init: Mapping[str, float] | None = None,
    seed: int | None = None,
) -> list[BenchRow]:
    """
    Time ``duration`` units of parallel time (n interactions per unit) for every n, method and repetition.

    Runs in discrete time on the protocol's interaction dynamics, so the
    interaction count of every row is exactly floor(n * duration) unless the
    run goes silent first.

    Args:
        protocol: Protocol to benchmark
        n_list: Population sizes
        duration: Interactions per agent
        reps: Repetitions per (n, method)
        methods: Engines to compare
        init: Initial weights per state name, scaled to each n (default uniform)
        seed: Base seed; repetition k of every cell uses sub-stream k
    """
    if reps < 1:
        raise InputError(f"reps must be at least 1, got {reps}")
    weights = dict(init) if init else {name: 1.0 for name in protocol.states}
    for name in weights:
        if name not in protocol.index:
            raise UnknownState(f"unknown state {name!r}")
    plain = Protocol(protocol.states, protocol.delta)
    spec_by_method = {
        method: RunSpec(duration, duration if duration > 0 else 1.0, method=method, time_model=TimeModel.DISCRETE)
        for method in methods
    }
    base = RngStream(seed)
    rows: list[BenchRow] = []
    for n in n_list:
        if n < 2:
            raise PopulationTooSmall(f"population size must be at least 2, got {n}")
        counts = scale_init(weights, n)
        config = Configuration(plain.states, [counts.get(name, 0) for name in plain.states])
        for method in methods:
            for rep in range(reps):
                started = time.perf_counter()
                trajectory = simulate(config, plain, spec_by_method[method], base.spawn(rep))
                elapsed = time.perf_counter() - started
                rows.append(BenchRow(n, method.value, rep, elapsed, trajectory.metadata.interactions))
                logger.info(f"bench n={n} method={method.value} rep={rep}: {elapsed:.3f}s")
    return rows
