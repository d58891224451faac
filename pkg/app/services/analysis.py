"""Photo-Hall cross-checks and optical bandgap extraction."""

import logging
from collections.abc import Sequence

import numpy as np
from scipy import stats

from app.core.constants import HC_EV_NM
from app.exceptions.synapse_exceptions import DomainError, InputError, NoEdgeError
from app.schemas.analysis import HallSeries, OpticalSpectrum, SpectrumPoint, TaucResult
from app.schemas.device import Trace

logger = logging.getLogger(__name__)

MIN_TAUC_POINTS = 5


def hall_consistency(series: HallSeries, trace: Trace) -> tuple[float, float]:
    """Pearson r and max relative deviation between normalized n*mu and photocurrent."""
    t_series = np.asarray(series.t)
    t_trace = np.asarray(trace.t)
    overlap = (t_series >= t_trace[0]) & (t_series <= t_trace[-1])
    if np.count_nonzero(overlap) < 3:
        raise InputError("Hall series and trace share fewer than 3 instants")
    sigma = np.asarray(series.sigma)[overlap]
    current = np.interp(t_series[overlap], t_trace, np.asarray(trace.current))
    if current[0] == 0:
        raise DomainError("photocurrent is zero at the first shared instant")
    sigma = sigma / sigma[0]
    current = current / current[0]

    flat_sigma, flat_current = np.ptp(sigma) == 0, np.ptp(current) == 0
    if flat_sigma and flat_current:
        r = 1.0
    elif flat_sigma or flat_current:
        r = 0.0
    else:
        r = float(np.corrcoef(sigma, current)[0, 1])
    deviation = float(np.max(np.abs(sigma - current) / np.abs(current)))
    return r, deviation


def absorption_coefficient(spec: OpticalSpectrum) -> list[tuple[float, float]]:
    """(photon energy eV, alpha cm^-1) pairs, ascending in energy."""
    out = []
    for p in spec.points:
        if p.transmittance <= 0:
            raise DomainError(f"transmittance is zero at {p.wavelength} nm", wavelength=p.wavelength)
        alpha = np.log((1.0 - p.reflectance) / p.transmittance) / spec.thickness
        out.append((HC_EV_NM / p.wavelength, float(alpha)))
    return sorted(out)


def _steepest_window(energy: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    m = max(MIN_TAUC_POINTS, energy.size // 10)
    best, best_slope = 0, -np.inf
    for start in range(energy.size - m + 1):
        slope = stats.linregress(energy[start : start + m], y[start : start + m]).slope
        if slope > best_slope:
            best, best_slope = start, slope
    return float(energy[best]), float(energy[best + m - 1])


def tauc_bandgap(
    spec: OpticalSpectrum, window: tuple[float, float] | None = None
) -> TaucResult:
    """Direct gap from the x-intercept of (alpha*E)^2 against E.

    Without a window the steepest contiguous stretch of the Tauc curve is used.
    """
    pairs = absorption_coefficient(spec)
    energy = np.array([e for e, _ in pairs])
    alpha = np.array([a for _, a in pairs])
    if energy.size < MIN_TAUC_POINTS:
        raise InputError(f"Tauc fit needs at least {MIN_TAUC_POINTS} points, got {energy.size}")
    if np.ptp(alpha) <= 1e-6 * np.max(np.abs(alpha)):
        raise NoEdgeError()
    y = (alpha * energy) ** 2

    window = window or _steepest_window(energy, y)
    inside = (energy >= window[0]) & (energy <= window[1])
    if np.count_nonzero(inside) < MIN_TAUC_POINTS:
        raise InputError(
            f"Tauc window {window} holds fewer than {MIN_TAUC_POINTS} points",
            window=list(window),
        )
    fit = stats.linregress(energy[inside], y[inside])
    if fit.slope <= 0:
        raise NoEdgeError()
    eg = -fit.intercept / fit.slope
    logger.info("Tauc gap %.3f eV over %.3f-%.3f eV", eg, *window)
    return TaucResult(
        eg=float(eg),
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue**2),
        window=(float(window[0]), float(window[1])),
    )


def direct_gap_spectrum(
    eg: float,
    wavelengths: Sequence[float],
    thickness: float = 250e-7,
    reflectance: float = 0.2,
    strength: float = 1e11,
) -> OpticalSpectrum:
    """Synthetic film spectrum with (alpha*E)^2 = strength * (E - eg) above the gap."""
    points = []
    for wavelength in wavelengths:
        energy = HC_EV_NM / wavelength
        alpha = np.sqrt(strength * max(energy - eg, 0.0)) / energy
        points.append(
            SpectrumPoint(
                wavelength=wavelength,
                transmittance=(1.0 - reflectance) * float(np.exp(-alpha * thickness)),
                reflectance=reflectance,
            )
        )
    return OpticalSpectrum(points=tuple(points), thickness=thickness)
