"""
Hybrid run loop.

A run walks a fixed snapshot grid. Each grid interval is simulated either as
a Poisson (continuous time) or exact (discrete time) number of interactions,
consumed by batches, null-skipping Gillespie jumps or single sequential
interactions, or, in continuous time, by Gillespie holding times directly.

In ``auto`` mode the engine is re-chosen after every batch and every
Gillespie event: Gillespie while the expected number of interactions until
the next non-null one, n(n-1)/W, exceeds ``switch_factor * sqrt(n)``,
batches otherwise.

Time units: a protocol compiled from a CRN runs in CRN time, so one unit of
run time is m·n interactions; any other protocol runs in protocol time with
n interactions per unit.
"""

from __future__ import annotations

import csv
import io
import math
import time as wallclock
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any

from popsim.common.config import Config
from popsim.common.errors import (
    DiscreteTimeUnsupported,
    InputError,
    NegativeHorizon,
    PopulationTooSmall,
    UnknownState,
)
from popsim.common.logging import get_logger
from popsim.core.model import Configuration, Protocol, TimeModel
from popsim.engine_domain.batched import batch_step, sequential_interaction
from popsim.engine_domain.gillespie import NonNullMass, apply_nonnull_interaction, holding_time
from popsim.rng.samplers import RngStream

logger = get_logger(__name__)

# relative tolerance for treating horizon / interval as a whole number of steps
GRID_TOLERANCE = 1e-9


class Method(str, Enum):
    AUTO = "auto"
    BATCH = "batch"
    GILLESPIE = "gillespie"
    SEQUENTIAL = "sequential"


TimeValue = float | Fraction


@dataclass
class SimClock:
    """Run time. In discrete time it is derived from the integer interaction count."""

    time_model: TimeModel
    n: int
    interaction_count: int = 0
    elapsed: float = 0.0

    @property
    def t(self) -> float:
        if self.time_model is TimeModel.DISCRETE:
            return self.interaction_count / self.n
        return self.elapsed


@dataclass(frozen=True)
class RunSpec:
    horizon: float
    snapshot_interval: float
    method: Method = Method.AUTO
    switch_factor: float = 2.0
    time_model: TimeModel = TimeModel.CONTINUOUS

    def __post_init__(self) -> None:
        if self.horizon < 0 or math.isnan(self.horizon):
            raise NegativeHorizon(f"horizon must be non-negative, got {self.horizon}")
        if math.isinf(self.horizon):
            raise InputError(f"horizon must be finite, got {self.horizon}")
        if not self.snapshot_interval > 0 or math.isinf(self.snapshot_interval):
            raise InputError(f"snapshot interval must be a positive number, got {self.snapshot_interval}")
        if not self.switch_factor > 0:
            raise InputError(f"switch factor must be positive, got {self.switch_factor}")


@dataclass
class TrajectoryMetadata:
    seed: int
    n: int
    method: str
    time_model: str
    time_unit: str
    m: float
    switch_factor: float
    protocol_hash: str
    mode_steps: dict[str, int] = field(default_factory=dict)
    first_mode: str | None = None
    silent: bool = False
    silent_at: float | None = None
    # interactions simulated in interaction-count mode; continuous-time Gillespie spans are not counted
    interactions: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "n": self.n,
            "method": self.method,
            "time_model": self.time_model,
            "time_unit": self.time_unit,
            "m": self.m,
            "switch_factor": self.switch_factor,
            "protocol_hash": self.protocol_hash,
            "mode_steps": dict(sorted(self.mode_steps.items())),
            "first_mode": self.first_mode,
            "silent": self.silent,
            "silent_at": self.silent_at,
            "interactions": self.interactions,
        }


def format_time(t: float) -> str:
    """Grid times print with 12 significant digits so 3 * 0.1 reads as 0.3."""
    return f"{t:.12g}"


@dataclass
class Trajectory:
    states: tuple[str, ...]
    metadata: TrajectoryMetadata
    snapshots: list[tuple[float, tuple[int, ...]]] = field(default_factory=list)

    @property
    def final(self) -> Configuration:
        return Configuration(self.states, list(self.snapshots[-1][1]))

    def column_order(self) -> list[int]:
        return sorted(range(len(self.states)), key=lambda i: self.states[i])

    def to_rows(self) -> list[list[str]]:
        """Header ``time,<states sorted by name>`` followed by one row per snapshot."""
        order = self.column_order()
        rows = [["time", *(self.states[i] for i in order)]]
        for t, counts in self.snapshots:
            rows.append([format_time(t), *(str(counts[i]) for i in order)])
        return rows

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerows(self.to_rows())
        return buffer.getvalue()

    def to_json_dict(self) -> dict[str, Any]:
        order = self.column_order()
        return {
            "metadata": {**self.metadata.to_dict(), "states": [self.states[i] for i in order]},
            "snapshots": [
                {"time": float(format_time(t)), "counts": {self.states[i]: counts[i] for i in order}}
                for t, counts in self.snapshots
            ],
        }


def _exact(t: TimeValue) -> Fraction:
    return t if isinstance(t, Fraction) else Fraction(repr(float(t)))


def snapshot_grid(horizon: float, interval: float) -> list[Fraction]:
    """
    Snapshot times i * interval for i = 0, 1, ..., plus the horizon if it is off the grid.

    Times are exact decimal fractions of the written values, so discrete-time
    interaction targets do not depend on float rounding.

    Raises:
        InputError: If the grid would exceed ``Config.MAX_SNAPSHOTS`` points
    """
    h, d = _exact(horizon), _exact(interval)
    ratio = horizon / interval
    steps = round(ratio)
    if steps + 2 > Config.MAX_SNAPSHOTS:
        raise InputError(f"about {steps + 1} snapshots exceed the limit of {Config.MAX_SNAPSHOTS}")
    if abs(ratio - steps) <= GRID_TOLERANCE * max(1.0, ratio):
        grid = [d * i for i in range(steps)] + [h]
    else:
        steps = math.floor(h / d)
        grid = [d * i for i in range(steps + 1)]
        if grid[-1] < h:
            grid.append(h)
    if len(grid) > Config.MAX_SNAPSHOTS:
        raise InputError(f"{len(grid)} snapshots exceed the limit of {Config.MAX_SNAPSHOTS}")
    return grid


def interactions_until(t_target: TimeValue, clock: SimClock, protocol: Protocol, rng: RngStream) -> int:
    """
    Interactions to simulate to bring ``clock`` to ``t_target``.

    Continuous time draws Poisson(m·n·Δt); discrete time is exactly
    floor(n·t_target) minus the interactions already done.

    Raises:
        NegativeHorizon: If ``t_target`` lies before the clock
    """
    if clock.time_model is TimeModel.DISCRETE:
        target = math.floor(clock.n * _exact(t_target))
        if target < clock.interaction_count:
            raise NegativeHorizon(f"target time {float(t_target)} lies before the clock at {clock.t}")
        return target - clock.interaction_count
    dt = float(t_target) - clock.t
    if dt < 0:
        raise NegativeHorizon(f"target time {float(t_target)} lies before the clock at {clock.t}")
    return rng.poisson_sample(protocol.m * clock.n * dt)


class _Runner:
    """State of one run: the configuration, the W tracker, the clock and the bookkeeping."""

    def __init__(self, config: Configuration, protocol: Protocol, spec: RunSpec, rng: RngStream) -> None:
        self.protocol = protocol
        self.spec = spec
        self.rng = rng
        self.config = config
        self.n = config.n
        self.tracker = NonNullMass(protocol, config.counts)
        self.clock = SimClock(spec.time_model, self.n)
        self.threshold = spec.switch_factor * math.sqrt(self.n)
        self.mode_steps: Counter[str] = Counter()
        self.first_mode: str | None = None
        self.last_mode: str | None = None
        self.silent_at: float | None = None

    @property
    def silent(self) -> bool:
        return self.silent_at is not None

    def choose(self, w: float) -> Method:
        method = self.spec.method
        if method is Method.AUTO:
            # expected interactions until the next non-null one vs. the expected batch size
            slow = w <= 0 or self.n * (self.n - 1) / w > self.threshold
            method = Method.GILLESPIE if slow else Method.BATCH
        if self.first_mode is None:
            self.first_mode = method.value
        if method.value != self.last_mode:
            if self.last_mode is not None:
                logger.debug(f"Switching {self.last_mode} -> {method.value} at t={self.clock.t:.6g} (W={w:g})")
            self.last_mode = method.value
        return method

    def advance(self, t_target: Fraction) -> None:
        """Simulate up to grid time ``t_target`` unless the run goes silent on the way."""
        if self.spec.time_model is TimeModel.DISCRETE:
            budget = interactions_until(t_target, self.clock, self.protocol, self.rng)
            used, absorbed = self.consume(budget)
            self.clock.interaction_count += used
            if absorbed:
                self.silent_at = self.clock.interaction_count / self.n
            return

        target = float(t_target)
        if self.spec.method in (Method.GILLESPIE, Method.AUTO) and self.holding_times(target):
            return
        t0 = self.clock.elapsed
        budget = interactions_until(target, self.clock, self.protocol, self.rng)
        used, absorbed = self.consume(budget)
        self.clock.interaction_count += used
        if absorbed:
            # the used-th of `budget` interactions spread uniformly over (t0, target]
            offset = self.rng.beta_sample(used, budget - used + 1) if used else 0.0
            self.silent_at = t0 + (target - t0) * offset
        self.clock.elapsed = target

    def holding_times(self, target: float) -> bool:
        """
        Continuous-time Gillespie up to ``target``.

        Returns:
            True if the segment is done, False if ``auto`` handed the rest of
            it to interaction-count mode
        """
        while True:
            w = self.tracker.mass()
            if self.choose(w) is not Method.GILLESPIE:
                return False
            if w <= 0:
                self.silent_at = self.clock.elapsed
                return True
            dt = holding_time(self.tracker, self.n, self.rng)
            if self.clock.elapsed + dt > target:
                self.clock.elapsed = target
                return True
            self.clock.elapsed += dt
            apply_nonnull_interaction(self.tracker, self.rng)
            self.mode_steps[Method.GILLESPIE.value] += 1

    def consume(self, budget: int) -> tuple[int, bool]:
        """
        Simulate ``budget`` interactions, stopping once the configuration is silent.

        Returns:
            Interactions simulated and whether the run went silent; on silence
            the count ends at the absorbing interaction (at the end of the
            batch that contained it in batch mode)
        """
        used = 0
        w = self.tracker.mass()
        self.choose(w)
        if w <= 0:
            return 0, True
        while used < budget:
            method = self.choose(w)
            remaining = budget - used
            self.mode_steps[method.value] += 1
            if method is Method.GILLESPIE:
                skip = self.rng.geometric_sample(min(1.0, w / (self.n * (self.n - 1))))
                if skip > remaining:
                    return budget, False
                used += skip
                apply_nonnull_interaction(self.tracker, self.rng)
            elif method is Method.BATCH:
                result = batch_step(self.config, self.protocol, self.rng, max_interactions=remaining)
                used += result.interactions_applied
                self.tracker.resync()
            else:
                used += 1
                changed = sequential_interaction(self.config.counts, self.protocol, self.rng)
                if changed is None:
                    continue
                self.tracker.record(*changed)
            w = self.tracker.mass()
            if w <= 0:
                return used, True
        return used, False


def simulate(config: Configuration, protocol: Protocol, spec: RunSpec, rng: RngStream) -> Trajectory:
    """Run without logging; see ``run``."""
    if config.n < 2:
        raise PopulationTooSmall(f"population size must be at least 2, got {config.n}")
    if protocol.is_compiled and spec.time_model is TimeModel.DISCRETE:
        raise DiscreteTimeUnsupported()
    if config.states != protocol.states:
        raise InputError("configuration and protocol have different state sets")

    grid = snapshot_grid(spec.horizon, spec.snapshot_interval)
    runner = _Runner(config.copy(), protocol, spec, rng)
    metadata = TrajectoryMetadata(
        seed=rng.seed,
        n=runner.n,
        method=spec.method.value,
        time_model=spec.time_model.value,
        time_unit="crn" if protocol.is_compiled else "protocol",
        m=protocol.m,
        switch_factor=spec.switch_factor,
        protocol_hash=protocol.fingerprint,
    )
    trajectory = Trajectory(protocol.states, metadata, [(0.0, runner.config.key())])
    for t_target in grid[1:]:
        if not runner.silent:
            runner.advance(t_target)
        trajectory.snapshots.append((float(t_target), runner.config.key()))

    w = runner.tracker.mass()
    if not runner.silent and w <= 0:
        runner.silent_at = runner.clock.t
    metadata.first_mode = runner.first_mode or runner.choose(w).value
    metadata.mode_steps = dict(runner.mode_steps)
    metadata.silent = runner.silent
    metadata.silent_at = runner.silent_at
    metadata.interactions = runner.clock.interaction_count
    return trajectory


def run(config: Configuration, protocol: Protocol, spec: RunSpec, rng: RngStream) -> Trajectory:
    """
    Simulate ``protocol`` from ``config`` and record snapshots on the grid of ``spec``.

    The caller's configuration is left untouched. Once the configuration is
    silent the remaining snapshots repeat it.

    Args:
        config: Initial configuration over the protocol's states
        protocol: Protocol to run; CRN-compiled protocols run in CRN time
        spec: Horizon, snapshot interval, method and time model
        rng: Random stream; its seed is recorded in the metadata

    Returns:
        Trajectory with snapshots at 0, Δ, 2Δ, ..., horizon

    Raises:
        PopulationTooSmall: If n < 2
        DiscreteTimeUnsupported: For discrete time on a CRN-compiled protocol
    """
    logger.info(
        f"Run started: n={config.n}, q={protocol.q}, method={spec.method.value}, "
        f"time={spec.time_model.value}, seed={rng.seed}"
    )
    started = wallclock.perf_counter()
    trajectory = simulate(config, protocol, spec, rng)
    logger.info(
        f"Run finished in {wallclock.perf_counter() - started:.3f}s: {len(trajectory.snapshots)} snapshots, "
        f"steps={trajectory.metadata.mode_steps}, silent={trajectory.metadata.silent}"
    )
    return trajectory


def run_to(config: Configuration, protocol: Protocol, spec: RunSpec, rng: RngStream) -> Configuration:
    """Endpoint of a run without logging, for repeated trials."""
    return simulate(config, protocol, spec, rng).final


def _endpoint_key(
    config: Configuration, protocol: Protocol, spec: RunSpec, rng: RngStream, index: int | None
) -> tuple[int, ...] | int:
    final = run_to(config, protocol, spec, rng)
    return final.counts[index] if index is not None else final.key()


def _endpoint_chunk(
    args: tuple[Configuration, Protocol, RunSpec, int, list[int], int | None],
) -> list[tuple[int, ...] | int]:
    config, protocol, spec, seed, trials, index = args
    parent = RngStream(seed)
    return [_endpoint_key(config, protocol, spec, parent.spawn(i), index) for i in trials]


def sample_endpoint(
    config: Configuration,
    protocol: Protocol,
    t: float,
    trials: int,
    rng: RngStream,
    state: str | None = None,
    method: Method = Method.AUTO,
    time_model: TimeModel = TimeModel.CONTINUOUS,
    switch_factor: float | None = None,
    workers: int | None = None,
) -> Counter[tuple[int, ...] | int]:
    """
    Histogram of configurations (or of one state's count) at time ``t`` over independent runs.

    Trial i runs on ``rng.spawn(i)``, so the histogram does not depend on
    the number of workers.

    Raises:
        InputError: If ``trials`` < 1
        UnknownState: If ``state`` is not a protocol state
    """
    if trials < 1:
        raise InputError(f"trials must be at least 1, got {trials}")
    index = None
    if state is not None:
        if state not in protocol.index:
            raise UnknownState(f"unknown state {state!r}")
        index = protocol.index[state]
    spec = RunSpec(
        horizon=t,
        snapshot_interval=t if t > 0 else 1.0,
        method=method,
        switch_factor=Config.SWITCH_FACTOR if switch_factor is None else switch_factor,
        time_model=time_model,
    )
    workers = Config.WORKERS if workers is None else workers
    keys: list[tuple[int, ...] | int]
    if workers <= 1 or trials < 2 * workers:
        keys = _endpoint_chunk((config, protocol, spec, rng.seed, list(range(trials)), index))
    else:
        chunks = [list(range(w, trials, workers)) for w in range(workers)]
        keys_by_trial: dict[int, tuple[int, ...] | int] = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            jobs = [(config, protocol, spec, rng.seed, chunk, index) for chunk in chunks]
            for chunk, results in zip(chunks, pool.map(_endpoint_chunk, jobs), strict=True):
                keys_by_trial.update(zip(chunk, results, strict=True))
        keys = [keys_by_trial[i] for i in range(trials)]
    logger.info(f"Sampled {trials} endpoints at t={t} with {max(1, workers)} worker(s)")
    return Counter(keys)
