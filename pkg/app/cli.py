"""`synapse` command line: simulate devices, run protocols, fit traces, extract bandgaps."""

import json
import logging
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated

import pandas as pd
import typer
from pydantic import ValidationError

from app.core.config import settings
from app.core.logging import configure_logging
from app.exceptions.synapse_exceptions import DegenerateFitError, InputError, SynapseError
from app.schemas.fitting import FitReport
from app.schemas.kinetic_model import ModelKind, ModelSpec
from app.schemas.protocol import SweepAxis
from app.schemas.run_config import OutputFormat, ProtocolName, RunConfig
from app.services.analysis import tauc_bandgap
from app.services.fitting import fit_transient, fit_wickelgren, model_select
from app.services.kinetics import simulate_hall
from app.services.presets import load_config
from app.services.protocols import stm_ltm_sweep
from app.services.runs import run_protocol, run_simulation
from app.services.trace_io import (
    read_spectrum_csv,
    read_trace,
    write_fit_report,
    write_fit_summary,
    write_hall_csv,
    write_protocol_record,
    write_table,
    write_trace,
)

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, help="Optoelectronic synapse simulator and analysis toolkit.")

ConfigOption = Annotated[str, typer.Option("--config", "-c", help="Config file or shipped config name")]
OutOption = Annotated[Path | None, typer.Option("--out", "-o", help="Output directory")]
FormatOption = Annotated[OutputFormat | None, typer.Option("--format", help="csv, json or both")]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Seed for synthetic noise")]
TemperatureOption = Annotated[
    float | None, typer.Option("--temperature", "-T", help="Temperature override, K")
]

SELECT_CANDIDATES = (
    ModelSpec(kind=ModelKind.EXP_DECAY, n_terms=1),
    ModelSpec(kind=ModelKind.EXP_DECAY, n_terms=2),
    ModelSpec(kind=ModelKind.EXP_DECAY, n_terms=3),
    ModelSpec(kind=ModelKind.STRETCHED),
)


@app.callback()
def main() -> None:
    configure_logging(settings.log_level)


@contextmanager
def reporting_errors() -> Iterator[None]:
    """Turn domain errors into an error JSON on stderr and exit code 2."""
    try:
        yield
    except SynapseError as exc:
        typer.echo(json.dumps(exc.to_dict(), default=str), err=True)
        raise typer.Exit(code=2) from exc
    except ValidationError as exc:
        error = InputError(str(exc))
        typer.echo(json.dumps(error.to_dict()), err=True)
        raise typer.Exit(code=2) from exc


def _prepare(
    config: str, out: Path | None, fmt: OutputFormat | None, seed: int | None
) -> tuple[RunConfig, Path, OutputFormat]:
    run = load_config(config)
    if seed is not None:
        run = run.model_copy(update={"seed": seed})
    return run, out or Path(run.output.directory), fmt or run.output.formats


@app.command()
def simulate(
    config: ConfigOption,
    out: OutOption = None,
    fmt: FormatOption = None,
    seed: SeedOption = None,
    temperature: TemperatureOption = None,
) -> None:
    """Photocurrent trace (and photo-Hall series) of the configured stimulus."""
    with reporting_errors():
        run, out, fmt = _prepare(config, out, fmt, seed)
        trace = run_simulation(run, temperature)
        stem = out / run.device.label
        written = write_trace(trace, stem, fmt)
        env = run.environment
        hall = simulate_hall(
            run.params,
            run.stimulus.train(),
            temperature if temperature is not None else env.temperature,
            env.sample_dt,
            env.t_end,
        )
        written.append(write_hall_csv(hall, out / f"{run.device.label}-hall.csv"))
        for path in written:
            typer.echo(str(path))


@app.command()
def protocol(
    which: Annotated[ProtocolName, typer.Argument(help="stm-ltm, learning, ppf, filter, stdp or logic")],
    config: ConfigOption,
    out: OutOption = None,
    fmt: FormatOption = None,
    seed: SeedOption = None,
    temperature: TemperatureOption = None,
) -> None:
    """Run a synaptic protocol and write its record."""
    with reporting_errors():
        run, out, fmt = _prepare(config, out, fmt, seed)
        record = run_protocol(run, which, temperature)
        for path in write_protocol_record(record, out / f"{run.device.label}-{which}", fmt):
            typer.echo(str(path))


def _trace_files(paths: list[Path]) -> list[Path]:
    files = []
    for path in paths:
        files.extend(sorted(path.glob("*.csv")) if path.is_dir() else [path])
    if not files:
        raise InputError("no trace files found")
    return files


@app.command()
def fit(
    paths: Annotated[list[Path], typer.Argument(help="Trace CSV/JSON files or directories of CSVs")],
    model: Annotated[ModelKind, typer.Option("--model", "-m")] = ModelKind.EXP_DECAY,
    terms: Annotated[int, typer.Option("--terms", "-n", min=1, max=4)] = 1,
    start: Annotated[float | None, typer.Option("--start", help="Window start / light-off, s")] = None,
    end: Annotated[float | None, typer.Option("--end", help="Window end, s")] = None,
    select: Annotated[bool, typer.Option("--select", help="Rank the candidate library by AICc")] = False,
    out: Annotated[Path, typer.Option("--out", "-o")] = Path("out/fits"),
) -> None:
    """Fit every trace and write one report per file plus a summary table."""
    with reporting_errors():
        window = None if start is None and end is None else (
            start if start is not None else float("-inf"),
            end if end is not None else float("inf"),
        )
        reports: dict[str, FitReport] = {}
        for path in _trace_files(paths):
            trace = read_trace(path)
            if select:
                selection = model_select(trace, SELECT_CANDIDATES, window)
                if not selection.ranked:
                    raise DegenerateFitError(f"no candidate fits {path.name}", excluded=selection.excluded)
                report = selection.ranked[0]
                for ranked in selection.ranked:
                    write_fit_report(ranked, out / f"{path.stem}-{ranked.name}.json")
            elif model is ModelKind.WICKELGREN:
                report = fit_wickelgren(trace, start if start is not None else trace.t[0])
            else:
                report = fit_transient(trace, model, terms, window)
            write_fit_report(report, out / f"{path.stem}.json")
            reports[path.name] = report
            logger.info("%s: %s rss=%.3g", path.name, report.name, report.rss)
        typer.echo(str(write_fit_summary(reports, out / "summary.csv")))


@app.command()
def tauc(
    spectrum: Annotated[Path, typer.Argument(help="Spectrum CSV wavelength_nm,transmittance,reflectance")],
    thickness: Annotated[float | None, typer.Option("--thickness", help="Film thickness, cm")] = None,
    low: Annotated[float | None, typer.Option("--low", help="Fit window start, eV")] = None,
    high: Annotated[float | None, typer.Option("--high", help="Fit window end, eV")] = None,
    out: Annotated[Path | None, typer.Option("--out", "-o")] = None,
) -> None:
    """Direct optical bandgap from a transmission/reflection spectrum."""
    with reporting_errors():
        if (low is None) != (high is None):
            raise InputError("--low and --high go together")
        window = (low, high) if low is not None else None
        result = tauc_bandgap(read_spectrum_csv(spectrum, thickness), window)
        payload = json.dumps(result.model_dump(mode="json"), indent=2, sort_keys=True)
        if out is None:
            typer.echo(payload)
        else:
            out.mkdir(parents=True, exist_ok=True)
            target = out / f"{spectrum.stem}-tauc.json"
            target.write_text(payload + "\n")
            typer.echo(str(target))


@app.command()
def sweep(
    config: ConfigOption,
    axis: Annotated[SweepAxis, typer.Option("--axis", help="number, duration, intensity or frequency")],
    values: Annotated[str, typer.Option("--values", help="Comma-separated ascending values")],
    out: OutOption = None,
    fmt: FormatOption = None,
    seed: SeedOption = None,
    temperature: TemperatureOption = None,
) -> None:
    """STM/LTM retention along one stimulus axis, runs fanned out over worker threads."""
    with reporting_errors():
        run, out, fmt = _prepare(config, out, fmt, seed)
        try:
            points = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise InputError(f"cannot parse values {values!r}") from exc
        if points != sorted(points) or not points:
            raise InputError("sweep values must be non-empty and ascending")
        temperature = temperature if temperature is not None else run.environment.temperature
        params = run.params

        def one(value: float):
            return stm_ltm_sweep(params, axis, [value], temperature)[0]

        with ThreadPoolExecutor(max_workers=settings.sweep_workers) as pool:
            results = list(pool.map(one, points))
        frame = pd.DataFrame(
            {
                str(axis): points,
                "retention_s": [r.retention_time for r in results],
                "delta_i_at_off_A": [r.delta_i_at_off for r in results],
                "classification": [str(r.classification) for r in results],
                "open_ended": [r.open_ended for r in results],
            }
        )
        for path in write_table(frame, out / f"{run.device.label}-sweep-{axis}", fmt):
            typer.echo(str(path))


if __name__ == "__main__":
    app()
