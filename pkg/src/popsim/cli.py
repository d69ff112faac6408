"""
Command-line entry point.

Every command writes its result (CSV, JSON or protocol text) to ``--out`` or
stdout; logs go to stderr. Exit code 2 means the input was rejected, 3 means
the simulation itself failed.
"""

import csv
import io
import json
from collections import Counter
from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Annotated, Any

import typer

from popsim import __version__
from popsim.common.config import Config
from popsim.common.errors import DiscreteTimeUnsupported, InputError, PopsimError
from popsim.common.logging import get_logger, set_level
from popsim.core.model import Configuration, TimeModel
from popsim.crn_domain.crn_compile import compile_crn
from popsim.dsl_domain.emitter import emit_protocol, protocol_summary
from popsim.dsl_domain.parsers import parse_crn, parse_init, parse_protocol, parse_weights
from popsim.engine_domain.gillespie import crn_sample_endpoint
from popsim.rng.samplers import RngStream
from popsim.simulation_domain.bench import DEFAULT_METHODS, bench
from popsim.simulation_domain.loading import LoadedModel, ModelKind, load_model, read_text
from popsim.simulation_domain.scheduler import Method, RunSpec, run, sample_endpoint

logger = get_logger(__name__)

app = typer.Typer(
    name="popsim",
    help="Exact stochastic simulation of population protocols and chemical reaction networks.",
    no_args_is_help=True,
    add_completion=False,
)


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


ProtocolOpt = Annotated[Path | None, typer.Option("--protocol", help="Protocol file (.pp)", dir_okay=False)]
CrnOpt = Annotated[Path | None, typer.Option("--crn", help="Reaction network file (.crn)", dir_okay=False)]
NOpt = Annotated[int | None, typer.Option("--n", help="Population size; required with --crn")]
VolumeOpt = Annotated[float | None, typer.Option("--volume", help="CRN volume (default n)")]
InitOpt = Annotated[str, typer.Option("--init", help='Initial counts, e.g. "A=51,B=49"')]
TimeModelOpt = Annotated[TimeModel, typer.Option("--time-model", help="Discrete or continuous time")]
MethodOpt = Annotated[Method, typer.Option("--method", help="Simulation engine")]
SwitchOpt = Annotated[
    float | None, typer.Option("--switch-factor", help="Gillespie/batch switch threshold factor (default 2)")
]
SeedOpt = Annotated[int | None, typer.Option("--seed", envvar="POPSIM_SEED", help="Random seed (default: OS entropy)")]
FormatOpt = Annotated[OutputFormat, typer.Option("--format", help="Output format")]
OutOpt = Annotated[Path | None, typer.Option("--out", help="Output file (default stdout)", dir_okay=False)]


@contextmanager
def _reported() -> Iterator[None]:
    """Turn popsim errors into a message on stderr and the matching exit code."""
    try:
        yield
    except PopsimError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(exc.exit_code) from None


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        typer.echo(text, nl=False)
        return
    try:
        out.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc.strerror or exc}") from None
    logger.info(f"Wrote {out}")


def _csv_text(header: list[str], rows: list[list[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _json_text(payload: dict[str, Any]) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _model_source(protocol: Path | None, crn: Path | None, time_model: TimeModel) -> tuple[ModelKind, Path]:
    if (protocol is None) == (crn is None):
        raise InputError("exactly one of --protocol or --crn is required")
    if crn is not None:
        if time_model is TimeModel.DISCRETE:
            raise DiscreteTimeUnsupported()
        return ModelKind.CRN, crn
    assert protocol is not None
    return ModelKind.PROTOCOL, protocol


def _load(
    protocol: Path | None, crn: Path | None, time_model: TimeModel, init: str, n: int | None, volume: float | None
) -> LoadedModel:
    kind, path = _model_source(protocol, crn, time_model)
    counts = parse_init(init)
    return load_model(kind, read_text(path), counts, n=n, volume=volume)


@app.callback()
def main(
    log_level: Annotated[str, typer.Option("--log-level", help="Log level for stderr")] = Config.LOG_LEVEL,
) -> None:
    set_level(log_level)


@app.command("run")
def cmd_run(
    init: InitOpt,
    time: Annotated[float, typer.Option("--time", help="Simulated duration")],
    protocol: ProtocolOpt = None,
    crn: CrnOpt = None,
    n: NOpt = None,
    volume: VolumeOpt = None,
    interval: Annotated[float | None, typer.Option("--interval", help="Snapshot spacing (default --time)")] = None,
    time_model: TimeModelOpt = TimeModel.CONTINUOUS,
    method: MethodOpt = Method.AUTO,
    switch_factor: SwitchOpt = None,
    seed: SeedOpt = None,
    output_format: FormatOpt = OutputFormat.CSV,
    out: OutOpt = None,
) -> None:
    """Simulate one trajectory and write its snapshots."""
    with _reported():
        model = _load(protocol, crn, time_model, init, n, volume)
        spec = RunSpec(
            horizon=time,
            snapshot_interval=interval if interval is not None else (time if time > 0 else 1.0),
            method=method,
            switch_factor=Config.SWITCH_FACTOR if switch_factor is None else switch_factor,
            time_model=time_model,
        )
        trajectory = run(model.config, model.protocol, spec, RngStream(seed))
        text = trajectory.to_csv_text() if output_format is OutputFormat.CSV else _json_text(trajectory.to_json_dict())
        _emit(text, out)


@app.command("compile")
def cmd_compile(
    crn: Annotated[Path, typer.Option("--crn", help="Reaction network file (.crn)", dir_okay=False)],
    n: Annotated[int, typer.Option("--n", help="Population size")],
    volume: VolumeOpt = None,
    out: OutOpt = None,
) -> None:
    """Compile a CRN into a protocol file for population size n."""
    with _reported():
        network = parse_crn(read_text(crn), volume=float(n) if volume is None else volume)
        _emit(emit_protocol(compile_crn(network, n)), out)


def _histogram_rows(histogram: Counter[tuple[int, ...] | int]) -> list[list[Any]]:
    return [[value, count] for value, count in sorted(histogram.items())]


@app.command("sample")
def cmd_sample(
    init: InitOpt,
    trials: Annotated[int, typer.Option("--trials", help="Independent runs")],
    at: Annotated[float, typer.Option("--at", help="Time of the sampled endpoint")],
    protocol: ProtocolOpt = None,
    crn: CrnOpt = None,
    n: NOpt = None,
    volume: VolumeOpt = None,
    state: Annotated[str | None, typer.Option("--state", help="Histogram this state's count")] = None,
    time_model: TimeModelOpt = TimeModel.CONTINUOUS,
    method: MethodOpt = Method.AUTO,
    switch_factor: SwitchOpt = None,
    workers: Annotated[int | None, typer.Option("--workers", help="Worker processes")] = None,
    ssa: Annotated[bool, typer.Option("--ssa", help="Sample the raw CRN with Gillespie's algorithm instead")] = False,
    seed: SeedOpt = None,
    output_format: FormatOpt = OutputFormat.CSV,
    out: OutOpt = None,
) -> None:
    """Histogram the configuration (or one state's count) at time --at over many runs."""
    with _reported():
        if output_format is OutputFormat.CSV and state is None:
            raise InputError("--state is required for CSV histograms; use --format json for full configurations")
        model = _load(protocol, crn, time_model, init, n, volume)
        rng = RngStream(seed)
        if ssa:
            if model.crn is None:
                raise InputError("--ssa needs a --crn input")
            if trials < 1:
                raise InputError(f"trials must be at least 1, got {trials}")
            histogram = crn_sample_endpoint(model.config, model.crn, at, trials, rng, state=state)
        else:
            histogram = sample_endpoint(
                model.config,
                model.protocol,
                at,
                trials,
                rng,
                state=state,
                method=method,
                time_model=time_model,
                switch_factor=switch_factor,
                workers=workers,
            )

        if output_format is OutputFormat.CSV:
            _emit(_csv_text(["value", "count"], _histogram_rows(histogram)), out)
            return
        payload = {
            "metadata": {
                "seed": rng.seed,
                "trials": trials,
                "at": at,
                "engine": "ssa" if ssa else method.value,
                "protocol_hash": model.protocol.fingerprint,
            },
            "state": state,
            "histogram": [
                {"value": value, "count": count}
                if state is not None
                else {"counts": Configuration(model.protocol.states, list(value)).as_dict(), "count": count}
                for value, count in sorted(histogram.items())
            ],
        }
        _emit(_json_text(payload), out)


def _parse_sizes(text: str) -> list[int]:
    sizes = []
    for item in text.split(","):
        try:
            value = float(item)
        except ValueError:
            raise InputError(f"--n-list entries must be numbers, got {item.strip()!r}") from None
        if not value.is_integer():
            raise InputError(f"population sizes must be whole numbers, got {item.strip()}")
        sizes.append(int(value))
    return sizes


def _parse_methods(text: str) -> list[Method]:
    try:
        return [Method(item.strip()) for item in text.split(",")]
    except ValueError:
        choices = ", ".join(m.value for m in Method)
        raise InputError(f"--methods entries must be among: {choices}") from None


@app.command("bench")
def cmd_bench(
    protocol: Annotated[Path, typer.Option("--protocol", help="Protocol file (.pp)", dir_okay=False)],
    n_list: Annotated[str, typer.Option("--n-list", help='Population sizes, e.g. "1e4,1e5,1e6"')],
    time: Annotated[float, typer.Option("--time", help="Interactions per agent")],
    reps: Annotated[int, typer.Option("--reps", help="Repetitions per size and method")] = 1,
    methods: Annotated[str, typer.Option("--methods", help="Engines to time")] = ",".join(
        m.value for m in DEFAULT_METHODS
    ),
    init: Annotated[str | None, typer.Option("--init", help='Initial weights, e.g. "A=0.51,B=0.49"')] = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
) -> None:
    """Time simulations across population sizes."""
    with _reported():
        model = parse_protocol(read_text(protocol))
        rows = bench(
            model,
            _parse_sizes(n_list),
            time,
            reps=reps,
            methods=_parse_methods(methods),
            init=parse_weights(init) if init else None,
            seed=seed,
        )
        table = [[row.n, row.method, f"{row.wall_seconds:.6f}", row.interactions] for row in rows]
        _emit(_csv_text(["n", "method", "wall_seconds", "interactions"], table), out)


@app.command("describe")
def cmd_describe(
    path: Annotated[Path, typer.Argument(help="Protocol (.pp) or reaction network (.crn) file", dir_okay=False)],
    n: NOpt = None,
    volume: VolumeOpt = None,
) -> None:
    """Print states, m and per-pair null probabilities as JSON."""
    with _reported():
        text = read_text(path)
        if ModelKind.from_path(path) is ModelKind.CRN:
            if n is None:
                raise InputError("--n is required to describe a CRN")
            model = compile_crn(parse_crn(text, volume=float(n) if volume is None else volume), n)
        else:
            model = parse_protocol(text)
        typer.echo(_json_text(protocol_summary(model)), nl=False)


@app.command("serve")
def cmd_serve() -> None:
    """Run the MCP server over stdio."""
    from popsim.server import main as serve

    serve()


@app.command("version")
def cmd_version() -> None:
    typer.echo(__version__)


if __name__ == "__main__":
    app()
