import numpy as np
import pytest

from app.exceptions.synapse_exceptions import DomainError, InputError, NoEdgeError
from app.schemas.analysis import HallSeries, OpticalSpectrum, SpectrumPoint
from app.schemas.device import Pulse, PulseTrain
from app.services.analysis import (
    absorption_coefficient,
    direct_gap_spectrum,
    hall_consistency,
    tauc_bandgap,
)
from app.services.kinetics import simulate, simulate_hall

WAVELENGTHS = np.arange(300.0, 1500.0, 2.0)


def test_absorption_coefficient_example():
    spectrum = OpticalSpectrum(
        points=(SpectrumPoint(wavelength=500.0, transmittance=0.5, reflectance=0.2),),
        thickness=250e-7,
    )
    ((energy, alpha),) = absorption_coefficient(spectrum)
    assert energy == pytest.approx(1239.842 / 500.0)
    assert alpha == pytest.approx(1.88e4, rel=1e-3)


def test_absorption_coefficient_transparent_film_and_ordering():
    spectrum = OpticalSpectrum(
        points=tuple(
            SpectrumPoint(wavelength=w, transmittance=0.7, reflectance=0.3)
            for w in (400.0, 800.0, 600.0)
        ),
        thickness=1e-5,
    )
    pairs = absorption_coefficient(spectrum)
    assert [e for e, _ in pairs] == sorted(e for e, _ in pairs)
    assert all(alpha == pytest.approx(0.0, abs=1e-9) for _, alpha in pairs)


def test_absorption_coefficient_rejects_opaque_point():
    spectrum = OpticalSpectrum(
        points=(SpectrumPoint(wavelength=400.0, transmittance=0.0, reflectance=0.2),),
        thickness=1e-5,
    )
    with pytest.raises(DomainError):
        absorption_coefficient(spectrum)


@pytest.mark.parametrize("eg", [2.26, 1.0])
def test_tauc_recovers_synthetic_direct_gap(eg):
    result = tauc_bandgap(direct_gap_spectrum(eg, WAVELENGTHS))
    assert result.eg == pytest.approx(eg, abs=0.02)
    assert result.slope > 0
    assert result.window[0] >= eg


def test_tauc_with_explicit_window():
    result = tauc_bandgap(direct_gap_spectrum(2.26, WAVELENGTHS), window=(2.5, 3.5))
    assert result.eg == pytest.approx(2.26, abs=1e-6)
    assert result.r_squared == pytest.approx(1.0)


def test_tauc_is_invariant_to_alpha_scaling():
    spectrum = direct_gap_spectrum(2.26, WAVELENGTHS)
    doubled = spectrum.model_copy(update={"thickness": 2 * spectrum.thickness})
    assert tauc_bandgap(doubled, (2.5, 3.5)).eg == pytest.approx(
        tauc_bandgap(spectrum, (2.5, 3.5)).eg, abs=1e-9
    )


def test_tauc_flat_spectrum_has_no_edge():
    spectrum = OpticalSpectrum(
        points=tuple(
            SpectrumPoint(wavelength=w, transmittance=0.6, reflectance=0.2)
            for w in np.linspace(400.0, 800.0, 20)
        ),
        thickness=250e-7,
    )
    with pytest.raises(NoEdgeError):
        tauc_bandgap(spectrum)


def test_tauc_needs_points_in_window():
    with pytest.raises(InputError):
        tauc_bandgap(direct_gap_spectrum(2.26, WAVELENGTHS), window=(5.0, 6.0))


def test_tauc_below_the_edge_has_no_edge():
    spectrum = direct_gap_spectrum(2.26, WAVELENGTHS)
    with pytest.raises(NoEdgeError):
        tauc_bandgap(spectrum, window=(1.0, 2.0))


def _inhibitory_run(params):
    train = PulseTrain(pulses=(Pulse(start=10.0, duration=100.0),))
    trace = simulate(params, train, t_end=300.0)
    hall = simulate_hall(params, train, t_end=300.0)
    return trace, hall


def test_hall_series_from_the_same_run_is_consistent(inhibitory_default):
    trace, hall = _inhibitory_run(inhibitory_default)
    r, deviation = hall_consistency(hall, trace)
    assert r == pytest.approx(1.0, abs=1e-12)
    assert deviation < 1e-12
    assert r > 0.99


def test_time_shifted_hall_series_loses_correlation(inhibitory_default):
    trace, hall = _inhibitory_run(inhibitory_default)
    shifted = hall.model_copy(update={"t": tuple(t + 60.0 for t in hall.t)})
    r, deviation = hall_consistency(shifted, trace)
    assert r < 0.99
    assert deviation > 1e-3


def test_hall_consistency_needs_overlap(inhibitory_default):
    trace, hall = _inhibitory_run(inhibitory_default)
    late = hall.model_copy(update={"t": tuple(t + 1e4 for t in hall.t)})
    with pytest.raises(InputError):
        hall_consistency(late, trace)


def test_hall_series_sigma():
    series = HallSeries(t=(0.0,), n=(1e18,), mu=(10.0,))
    assert series.sigma[0] == pytest.approx(1e18 * 1.602176634e-19 * 10.0)
