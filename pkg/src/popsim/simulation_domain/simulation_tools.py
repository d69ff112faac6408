"""
Simulation Tools

MCP tools over the simulator: compile a CRN, run a trajectory, sample an
endpoint histogram and describe a protocol. Model text is passed inline;
every tool returns a plain dictionary, with an ``error`` key on failure.
"""

from typing import Any

from popsim.common.config import Config
from popsim.common.errors import InputError, PopsimError
from popsim.common.logging import get_logger
from popsim.core.model import Configuration, TimeModel
from popsim.crn_domain import crn_compile
from popsim.dsl_domain.emitter import emit_protocol, protocol_summary
from popsim.dsl_domain.parsers import parse_crn, parse_init, parse_protocol
from popsim.mcp_instance import mcp
from popsim.rng.samplers import RngStream
from popsim.simulation_domain.loading import ModelKind, load_model
from popsim.simulation_domain.scheduler import Method, RunSpec, run, sample_endpoint

logger = get_logger(__name__)

# histogram payloads list at most this many distinct outcomes
MAX_HISTOGRAM_ENTRIES = 10_000


def _enum(kind: type[Any], value: str, what: str) -> Any:
    try:
        return kind(value)
    except ValueError:
        choices = ", ".join(member.value for member in kind)
        raise InputError(f"{what} must be one of: {choices}") from None


@mcp.tool(
    description="Compile a chemical reaction network (.crn text) into a population protocol for n agents. Returns the protocol text, the time-scale constant m and per-pair null probabilities."
)
def compile_crn(crn_text: str, n: int, volume: float | None = None) -> dict[str, Any]:
    """
    Compile a CRN for population size n.

    Args:
        crn_text: Reactions in the .crn format
        n: Population size
        volume: Volume (default n)

    Returns:
        Dictionary with ``protocol_text`` and the protocol summary
    """
    try:
        crn = parse_crn(crn_text, volume=float(n) if volume is None else volume)
        protocol = crn_compile.compile_crn(crn, n)
        return {"status": "success", "protocol_text": emit_protocol(protocol), **protocol_summary(protocol)}
    except PopsimError as e:
        logger.error(f"CRN compilation failed: {e}")
        return {"error": str(e)}


@mcp.tool(
    description="Simulate one trajectory of a protocol (.pp) or reaction network (.crn) from initial counts like 'A=51,B=49'. Returns metadata and snapshots at 0, interval, 2*interval, ..., time."
)
def run_simulation(
    model_text: str,
    init: str,
    time: float,
    kind: str = "protocol",
    interval: float | None = None,
    n: int | None = None,
    volume: float | None = None,
    method: str = "auto",
    time_model: str = "continuous",
    switch_factor: float | None = None,
    seed: int | None = None,
) -> dict[str, Any]:
    """
    Run a simulation and return its trajectory.

    Args:
        model_text: Model in the .pp or .crn format
        init: Initial counts, e.g. "A=51,B=49"
        time: Simulated duration
        kind: "protocol" or "crn"
        interval: Snapshot spacing (default ``time``)
        n: Population size, required for CRNs
        volume: CRN volume (default n)
        method: auto, batch, gillespie or sequential
        time_model: continuous or discrete (protocols only)
        switch_factor: Hybrid switch threshold factor
        seed: Random seed (default from POPSIM_SEED or OS entropy)

    Returns:
        Trajectory as ``{"metadata": ..., "snapshots": [...]}``
    """
    try:
        model_kind = _enum(ModelKind, kind, "kind")
        model = load_model(model_kind, model_text, parse_init(init), n=n, volume=volume)
        spec = RunSpec(
            horizon=time,
            snapshot_interval=interval if interval is not None else (time if time > 0 else 1.0),
            method=_enum(Method, method, "method"),
            switch_factor=Config.SWITCH_FACTOR if switch_factor is None else switch_factor,
            time_model=_enum(TimeModel, time_model, "time_model"),
        )
        rng = RngStream(Config.DEFAULT_SEED if seed is None else seed)
        return run(model.config, model.protocol, spec, rng).to_json_dict()
    except PopsimError as e:
        logger.error(f"Simulation failed: {e}")
        return {"error": str(e)}


@mcp.tool(
    description="Sample the configuration at a fixed time over many independent runs and return a histogram, either of full configurations or of one state's count."
)
def sample_endpoint_histogram(
    model_text: str,
    init: str,
    at: float,
    trials: int,
    kind: str = "protocol",
    state: str | None = None,
    n: int | None = None,
    volume: float | None = None,
    method: str = "auto",
    time_model: str = "continuous",
    seed: int | None = None,
) -> dict[str, Any]:
    """
    Histogram of endpoints at time ``at``.

    Returns:
        Dictionary with ``seed``, ``trials`` and ``histogram`` entries sorted by value
    """
    try:
        model_kind = _enum(ModelKind, kind, "kind")
        model = load_model(model_kind, model_text, parse_init(init), n=n, volume=volume)
        rng = RngStream(Config.DEFAULT_SEED if seed is None else seed)
        histogram = sample_endpoint(
            model.config,
            model.protocol,
            at,
            trials,
            rng,
            state=state,
            method=_enum(Method, method, "method"),
            time_model=_enum(TimeModel, time_model, "time_model"),
        )
        entries = sorted(histogram.items())
        if len(entries) > MAX_HISTOGRAM_ENTRIES:
            return {
                "error": f"{len(entries)} distinct outcomes exceed the limit of {MAX_HISTOGRAM_ENTRIES}",
                "suggestion": "Pass a state name to histogram a single count",
            }
        rows: list[dict[str, Any]] = []
        for value, count in entries:
            if isinstance(value, int):
                rows.append({"value": value, "count": count})
            else:
                rows.append({"counts": Configuration(model.protocol.states, list(value)).as_dict(), "count": count})
        return {"status": "success", "seed": rng.seed, "trials": trials, "at": at, "state": state, "histogram": rows}
    except PopsimError as e:
        logger.error(f"Endpoint sampling failed: {e}")
        return {"error": str(e)}


@mcp.tool(description="Describe a protocol (.pp text): states, q, m, compile parameters and per-pair null probabilities.")
def describe_protocol(protocol_text: str) -> dict[str, Any]:
    try:
        return protocol_summary(parse_protocol(protocol_text))
    except PopsimError as e:
        logger.error(f"Protocol description failed: {e}")
        return {"error": str(e)}
