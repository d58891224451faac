"""CSV/JSON artifacts for traces, spectra, Hall series, protocol records and fit reports."""

import json
import logging
from collections.abc import Mapping
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from app.exceptions.synapse_exceptions import InputError
from app.schemas.analysis import HallSeries, OpticalSpectrum, SpectrumPoint
from app.schemas.device import Trace
from app.schemas.fitting import FitReport
from app.schemas.protocol import ProtocolRecord
from app.schemas.run_config import OutputFormat

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("t_s", "I_A")
SPECTRUM_COLUMNS = ("wavelength_nm", "transmittance", "reflectance")
HALL_COLUMNS = ("t_s", "n_cm3", "mu_cm2Vs")
FLOAT_FORMAT = "%.12g"


def _write_csv(frame: pd.DataFrame, path: Path, metadata: Mapping[str, object] = {}) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = "".join(f"# {key}: {value}\n" for key, value in metadata.items())
    path.write_text(header + frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
    logger.debug("wrote %s", path)
    return path


def _read_csv(path: Path, columns: tuple[str, ...]) -> tuple[pd.DataFrame, dict[str, str]]:
    metadata = {}
    try:
        with path.open() as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
        frame = pd.read_csv(path, comment="#")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InputError(f"{path} lacks columns {missing}", expected=list(columns))
    return frame, metadata


def _write_json(payload: object, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    logger.debug("wrote %s", path)
    return path


def _trace_metadata(trace: Trace) -> dict[str, object]:
    metadata: dict[str, object] = {
        "label": trace.label,
        "read_voltage": trace.read_voltage,
        "temperature": trace.temperature,
    }
    if trace.baseline is not None:
        metadata["baseline"] = trace.baseline
    return metadata


def write_trace_csv(trace: Trace, path: Path) -> Path:
    frame = pd.DataFrame({"t_s": trace.t, "I_A": trace.current})
    return _write_csv(frame, path, _trace_metadata(trace))


def write_trace_json(trace: Trace, path: Path) -> Path:
    return _write_json(
        {**_trace_metadata(trace), "t_s": list(trace.t), "I_A": list(trace.current)}, path
    )


def write_trace(trace: Trace, stem: Path, formats: OutputFormat) -> list[Path]:
    written = []
    if formats in (OutputFormat.CSV, OutputFormat.BOTH):
        written.append(write_trace_csv(trace, stem.with_suffix(".csv")))
    if formats in (OutputFormat.JSON, OutputFormat.BOTH):
        written.append(write_trace_json(trace, stem.with_suffix(".json")))
    return written


def _build_trace(t, current, metadata: Mapping[str, object]) -> Trace:
    try:
        return Trace(
            t=tuple(float(v) for v in t),
            current=tuple(float(v) for v in current),
            read_voltage=float(metadata.get("read_voltage", 1.0)),
            temperature=float(metadata.get("temperature", 300.0)),
            label=str(metadata.get("label", "")),
            baseline=float(metadata["baseline"]) if "baseline" in metadata else None,
        )
    except (ValidationError, ValueError) as exc:
        raise InputError(f"invalid trace: {exc}") from exc


def read_trace(path: Path) -> Trace:
    """Load a trace from its CSV or JSON form."""
    path = Path(path)
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read {path}: {exc}") from exc
        if not all(c in data for c in TRACE_COLUMNS):
            raise InputError(f"{path} lacks fields {list(TRACE_COLUMNS)}")
        return _build_trace(data["t_s"], data["I_A"], data)
    frame, metadata = _read_csv(path, TRACE_COLUMNS)
    return _build_trace(frame["t_s"], frame["I_A"], metadata)


def write_spectrum_csv(spectrum: OpticalSpectrum, path: Path) -> Path:
    frame = pd.DataFrame(
        [(p.wavelength, p.transmittance, p.reflectance) for p in spectrum.points],
        columns=list(SPECTRUM_COLUMNS),
    )
    return _write_csv(frame, path, {"thickness_cm": spectrum.thickness})


def read_spectrum_csv(path: Path, thickness: float | None = None) -> OpticalSpectrum:
    """Spectrum CSV; the film thickness (cm) comes from the argument or the metadata block."""
    frame, metadata = _read_csv(Path(path), SPECTRUM_COLUMNS)
    if thickness is None:
        if "thickness_cm" not in metadata:
            raise InputError(f"{path} has no thickness_cm metadata and none was given")
        thickness = float(metadata["thickness_cm"])
    try:
        return OpticalSpectrum(
            points=tuple(
                SpectrumPoint(wavelength=w, transmittance=t, reflectance=r)
                for w, t, r in frame[list(SPECTRUM_COLUMNS)].itertuples(index=False)
            ),
            thickness=thickness,
        )
    except ValidationError as exc:
        raise InputError(f"invalid spectrum in {path}: {exc}") from exc


def write_hall_csv(series: HallSeries, path: Path) -> Path:
    frame = pd.DataFrame({"t_s": series.t, "n_cm3": series.n, "mu_cm2Vs": series.mu})
    return _write_csv(frame, path)


def read_hall_csv(path: Path) -> HallSeries:
    frame, _ = _read_csv(Path(path), HALL_COLUMNS)
    try:
        return HallSeries(
            t=tuple(frame["t_s"]), n=tuple(frame["n_cm3"]), mu=tuple(frame["mu_cm2Vs"])
        )
    except ValidationError as exc:
        raise InputError(f"invalid Hall series in {path}: {exc}") from exc


def write_protocol_record(
    record: ProtocolRecord, stem: Path, formats: OutputFormat
) -> list[Path]:
    """JSON record plus the plot-ready two-column CSV; the CSV is always emitted."""
    written = []
    if formats in (OutputFormat.JSON, OutputFormat.BOTH):
        written.append(_write_json(record.model_dump(mode="json"), stem.with_suffix(".json")))
    frame = pd.DataFrame({record.x_label: record.x, record.y_label: record.y})
    written.append(_write_csv(frame, stem.with_suffix(".csv"), {"protocol": record.protocol}))
    return written


def write_table(frame: pd.DataFrame, stem: Path, formats: OutputFormat) -> list[Path]:
    """CSV of the frame, plus its rows as JSON records when asked; the CSV is always emitted."""
    written = [_write_csv(frame, stem.with_suffix(".csv"))]
    if formats in (OutputFormat.JSON, OutputFormat.BOTH):
        written.append(_write_json(frame.to_dict(orient="records"), stem.with_suffix(".json")))
    return written


def write_fit_report(report: FitReport, path: Path) -> Path:
    return _write_json(report.model_dump(mode="json"), path)


def fit_summary(reports: Mapping[str, FitReport]) -> pd.DataFrame:
    """One row per source file: model, time constants, goodness of fit."""
    rows = []
    for source, report in reports.items():
        row = {
            "source": source,
            "model": report.name,
            "rss": report.rss,
            "aicc": report.aicc,
            "converged": report.converged,
            "iterations": report.iterations,
        }
        for i, tau in enumerate(report.model.taus, start=1):
            row[f"tau{i}_s"] = tau
        if report.model.psi is not None:
            row["psi"] = report.model.psi
        rows.append(row)
    return pd.DataFrame(rows)


def write_fit_summary(reports: Mapping[str, FitReport], path: Path) -> Path:
    return _write_csv(fit_summary(reports), path)
