import json

import numpy as np
import pandas as pd
import pytest

from app.exceptions.synapse_exceptions import InputError
from app.schemas.analysis import HallSeries
from app.schemas.device import Trace
from app.schemas.kinetic_model import KineticModelParams, ModelKind
from app.schemas.protocol import ProtocolRecord
from app.schemas.run_config import OutputFormat
from app.services.analysis import direct_gap_spectrum
from app.services.fitting import fit_transient, synthesize_trace
from app.services.trace_io import (
    fit_summary,
    read_hall_csv,
    read_spectrum_csv,
    read_trace,
    write_fit_summary,
    write_hall_csv,
    write_protocol_record,
    write_spectrum_csv,
    write_trace,
)


@pytest.fixture
def trace() -> Trace:
    return Trace(
        t=(0.0, 0.5, 1.0, 1.5),
        current=(1.25e-6, 1.2e-6, 1.1e-6, 1.05e-6),
        read_voltage=0.02,
        temperature=80.0,
        label="film",
        baseline=1.25e-6,
    )


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_trace_files_keep_samples_and_metadata(tmp_path, trace, suffix):
    written = write_trace(trace, tmp_path / "film", OutputFormat.BOTH)
    assert sorted(p.suffix for p in written) == [".csv", ".json"]
    loaded = read_trace(tmp_path / f"film{suffix}")
    assert loaded.t == trace.t
    assert loaded.current == pytest.approx(trace.current, rel=1e-11)
    assert (loaded.label, loaded.read_voltage, loaded.temperature) == ("film", 0.02, 80.0)
    assert loaded.baseline == pytest.approx(1.25e-6)


def test_trace_csv_layout(tmp_path, trace):
    (path,) = write_trace(trace, tmp_path / "film", OutputFormat.CSV)
    lines = path.read_text().splitlines()
    assert lines[0] == "# label: film"
    assert "t_s,I_A" in lines


def test_plain_csv_without_metadata(tmp_path):
    path = tmp_path / "bench.csv"
    pd.DataFrame({"t_s": [0.0, 1.0, 2.0], "I_A": [3.0, 2.0, 1.5]}).to_csv(path, index=False)
    loaded = read_trace(path)
    assert loaded.current == (3.0, 2.0, 1.5)
    assert loaded.baseline is None


def test_trace_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    pd.DataFrame({"time": [0.0, 1.0], "I_A": [1.0, 1.0]}).to_csv(path, index=False)
    with pytest.raises(InputError):
        read_trace(path)


def test_trace_with_unsorted_times(tmp_path):
    path = tmp_path / "bad.csv"
    pd.DataFrame({"t_s": [1.0, 0.0], "I_A": [1.0, 1.0]}).to_csv(path, index=False)
    with pytest.raises(InputError):
        read_trace(path)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        read_trace(tmp_path / "absent.csv")


def test_spectrum_csv_carries_thickness(tmp_path):
    spectrum = direct_gap_spectrum(2.26, np.arange(300.0, 700.0, 10.0))
    path = write_spectrum_csv(spectrum, tmp_path / "spectrum.csv")
    loaded = read_spectrum_csv(path)
    assert loaded.thickness == pytest.approx(250e-7)
    assert len(loaded.points) == len(spectrum.points)
    assert read_spectrum_csv(path, thickness=1e-5).thickness == 1e-5


def test_spectrum_csv_needs_thickness(tmp_path):
    path = tmp_path / "spectrum.csv"
    pd.DataFrame(
        {"wavelength_nm": [400.0], "transmittance": [0.5], "reflectance": [0.2]}
    ).to_csv(path, index=False)
    with pytest.raises(InputError):
        read_spectrum_csv(path)


def test_hall_csv(tmp_path):
    series = HallSeries(t=(0.0, 1.0), n=(3e20, 3e20), mu=(67.0, 60.5))
    loaded = read_hall_csv(write_hall_csv(series, tmp_path / "hall.csv"))
    assert loaded.mu == (67.0, 60.5)
    assert loaded.sigma == pytest.approx(series.sigma)


def test_protocol_record_csv_always_written(tmp_path):
    record = ProtocolRecord(
        protocol="ppf",
        config={"frequency": 0.5},
        metrics={"pulse": [2, 3], "index_percent": [12.5, 20.0]},
        x=[2, 3],
        y=[12.5, 20.0],
        x_label="pulse",
        y_label="index_percent",
    )
    written = write_protocol_record(record, tmp_path / "film-ppf", OutputFormat.CSV)
    assert [p.name for p in written] == ["film-ppf.csv"]

    written = write_protocol_record(record, tmp_path / "film-ppf", OutputFormat.BOTH)
    assert sorted(p.name for p in written) == ["film-ppf.csv", "film-ppf.json"]
    payload = json.loads((tmp_path / "film-ppf.json").read_text())
    assert payload["metrics"]["index_percent"] == [12.5, 20.0]
    frame = pd.read_csv(tmp_path / "film-ppf.csv", comment="#")
    assert list(frame.columns) == ["pulse", "index_percent"]


def test_fit_summary(tmp_path):
    truth = KineticModelParams(
        model=ModelKind.EXP_DECAY, i0=0.2, amplitudes=(1.0, 0.5), taus=(5.0, 60.0)
    )
    trace = synthesize_trace(truth, np.arange(0.0, 300.0))
    reports = {"a.csv": fit_transient(trace, ModelKind.EXP_DECAY, 2)}
    frame = fit_summary(reports)
    assert list(frame["source"]) == ["a.csv"]
    assert frame.loc[0, "model"] == "exp_decay2"
    assert frame.loc[0, "tau1_s"] == pytest.approx(5.0, rel=1e-4)
    assert frame.loc[0, "tau2_s"] == pytest.approx(60.0, rel=1e-4)

    path = write_fit_summary(reports, tmp_path / "summary.csv")
    assert pd.read_csv(path, comment="#").shape[0] == 1
