"""Stimulation protocols on simulated devices and the derived synaptic metrics."""

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.core.constants import (
    DEFAULT_INTENSITY,
    DEFAULT_PULSE_DURATION,
    MM2_PER_CM2,
    NW_PER_W,
    W_PER_MW,
)
from app.exceptions.synapse_exceptions import (
    DomainError,
    InputError,
    ProtocolError,
    UndefinedIndexError,
    UnsatisfiableGateError,
)
from app.schemas.device import DeviceParams, DeviceState, Polarity, Pulse, PulseTrain, Trace
from app.schemas.kinetic_model import ModelKind
from app.schemas.protocol import (
    GATE_INPUTS,
    TRUTH_TABLES,
    GateEvaluation,
    GateResult,
    GateSpec,
    LearningCycle,
    MemoryClass,
    OpticalPulse,
    RetentionResult,
    SeriesPair,
    StdpPoint,
    SweepAxis,
)
from app.services.fitting import fit_transient
from app.services.kinetics import (
    advance,
    dark_conductivity,
    observe_current,
    pool_taus,
    relax,
    run_train,
    sample_decay,
    step_segment,
)

logger = logging.getLogger(__name__)


class SweepBase(BaseModel):
    """Stimulus held fixed while one axis of an STM/LTM sweep varies."""

    model_config = ConfigDict(frozen=True)

    n_pulses: int = Field(default=1, ge=1)
    duration: float = Field(default=DEFAULT_PULSE_DURATION, gt=0)
    intensity: float = Field(default=DEFAULT_INTENSITY, ge=0)
    frequency: float = Field(default=0.5, gt=0)
    frequency_pulses: int = Field(default=10, ge=1)
    frequency_pulse_width: float = Field(default=0.2, gt=0)
    sample_dt: float = Field(default=0.5, gt=0)


def _current(state: DeviceState, params: DeviceParams) -> float:
    return observe_current(state, params)[2]


def _check_width(frequency: float, width: float) -> float:
    period = 1.0 / frequency
    if width >= period:
        raise InputError(f"pulse width {width} s does not fit a {frequency} Hz train")
    return period


def retention(
    trace: Trace,
    off_time: float,
    fraction: float | None = None,
    ltm_threshold: float | None = None,
) -> RetentionResult:
    """Time after light-off until |I - I_dark| falls to `fraction` of its value at off."""
    fraction = settings.retention_fraction if fraction is None else fraction
    ltm_threshold = settings.ltm_threshold_s if ltm_threshold is None else ltm_threshold
    if not 0 < fraction < 1:
        raise InputError(f"fraction must lie in (0, 1), got {fraction}")
    t = np.asarray(trace.t)
    current = np.asarray(trace.current)
    if not t[0] <= off_time <= t[-1]:
        raise InputError(f"off_time {off_time} s lies outside the trace")
    baseline = trace.baseline if trace.baseline is not None else float(current[0])
    delta_off = abs(float(np.interp(off_time, t, current)) - baseline)
    if delta_off == 0.0:
        return RetentionResult(delta_i_at_off=0.0, retention_time=0.0, classification=MemoryClass.STM)

    after = t > off_time
    times = np.concatenate([[off_time], t[after]])
    deltas = np.concatenate([[delta_off], np.abs(current[after] - baseline)])
    limit = fraction * delta_off
    below = np.nonzero(deltas <= limit)[0]
    if below.size == 0:
        held = float(times[-1] - off_time)
        return RetentionResult(
            delta_i_at_off=delta_off,
            retention_time=held,
            classification=MemoryClass.LTM if held > ltm_threshold else MemoryClass.STM,
            open_ended=True,
        )
    i = int(below[0])
    t_a, t_b, d_a, d_b = times[i - 1], times[i], deltas[i - 1], deltas[i]
    crossing = t_b if d_a == d_b else t_a + (d_a - limit) / (d_a - d_b) * (t_b - t_a)
    held = float(crossing - off_time)
    return RetentionResult(
        delta_i_at_off=delta_off,
        retention_time=held,
        classification=MemoryClass.LTM if held > ltm_threshold else MemoryClass.STM,
    )


def sweep_train(axis: SweepAxis, value: float, base: SweepBase) -> PulseTrain:
    gap = max(1.0 / base.frequency - base.duration, 0.0)
    match axis:
        case SweepAxis.NUMBER:
            if not float(value).is_integer():
                raise InputError(f"pulse count must be a whole number, got {value}")
            return PulseTrain.uniform(
                int(value), 1.0 / (base.duration + gap), base.duration, base.intensity
            )
        case SweepAxis.DURATION:
            return PulseTrain.uniform(base.n_pulses, 1.0 / (value + gap), value, base.intensity)
        case SweepAxis.INTENSITY:
            return PulseTrain.uniform(
                base.n_pulses, 1.0 / (base.duration + gap), base.duration, value
            )
        case SweepAxis.FREQUENCY:
            _check_width(value, base.frequency_pulse_width)
            return PulseTrain.uniform(
                base.frequency_pulses, value, base.frequency_pulse_width, base.intensity
            )
    raise InputError(f"unknown sweep axis {axis}")


def retention_after(
    params: DeviceParams,
    train: PulseTrain,
    temperature: float | None = None,
    horizon: float | None = None,
    sample_dt: float = 0.5,
) -> tuple[Trace, RetentionResult]:
    """Drive the train, record the dark relaxation and classify the memory."""
    horizon = settings.retention_horizon_s if horizon is None else horizon
    state = run_train(params, train, temperature)
    decay = sample_decay(state, params, horizon, sample_dt)
    return decay, retention(decay, decay.t[0])


def stm_ltm_sweep(
    params: DeviceParams,
    axis: SweepAxis,
    values: Sequence[float],
    temperature: float | None = None,
    base: SweepBase | None = None,
    horizon: float | None = None,
) -> list[RetentionResult]:
    if not values:
        raise InputError("sweep needs at least one value")
    if any(v <= 0 for v in values) and axis is not SweepAxis.INTENSITY:
        raise InputError(f"{axis} values must be positive")
    if any(v < 0 for v in values):
        raise InputError("intensities must be non-negative")
    if list(values) != sorted(values):
        raise InputError("sweep values must be sorted ascending")
    base = base or SweepBase()
    results = []
    for value in values:
        train = sweep_train(axis, value, base)
        _, result = retention_after(params, train, temperature, horizon, base.sample_dt)
        logger.info(
            "%s %s=%g: retention %.1f s (%s)",
            params.label,
            axis,
            value,
            result.retention_time,
            result.classification,
        )
        results.append(result)
    return results


# Trap load a learning cycle must reach: mu0/mu - 1 (inhibitory) or n/n0 - 1 (excitatory).
LEARNING_TARGET_LOAD = {Polarity.INHIBITORY: 91.2, Polarity.EXCITATORY: 0.35}


def default_learning_threshold(params: DeviceParams) -> float:
    """|dI| (A) at which the target load is reached."""
    load = LEARNING_TARGET_LOAD[params.polarity]
    i_dark = abs(dark_conductivity(params)[2])
    if params.polarity is Polarity.INHIBITORY:
        return i_dark * load / (1.0 + load)
    return i_dark * load


def learning_forgetting(
    params: DeviceParams,
    threshold_delta: float,
    n_cycles: int = 3,
    rest: float = 60.0,
    temperature: float | None = None,
    pulse: OpticalPulse | None = None,
    frequency: float = 0.5,
    max_pulses: int = 500,
    forgetting_samples: int = 121,
) -> list[LearningCycle]:
    """Pulse until |dI| reaches the threshold, rest, repeat."""
    if threshold_delta <= 0 or n_cycles < 1 or rest <= 0:
        raise InputError("threshold_delta, n_cycles and rest must be positive")
    pulse = pulse or OpticalPulse()
    gap = _check_width(frequency, pulse.duration) - pulse.duration
    i_dark = dark_conductivity(params)[2]
    state = DeviceState.dark(params, temperature)
    cycles = []
    for index in range(1, n_cycles + 1):
        count = 0
        while True:
            state = step_segment(state, params, pulse.intensity, pulse.duration)
            count += 1
            if abs(_current(state, params) - i_dark) >= threshold_delta:
                break
            if count >= max_pulses:
                fullest = max(
                    range(len(params.pools)),
                    key=lambda i: state.occupancies[i] / params.pools[i].capacity,
                )
                raise ProtocolError(
                    f"threshold {threshold_delta:.4g} A not reached after {max_pulses} pulses; "
                    f"pool {fullest} is saturating",
                    pool=fullest,
                    occupancy=state.occupancies[fullest],
                )
            state = advance(state, params, 0.0, gap)
        forgetting, state = relax(
            state, params, rest, rest / (forgetting_samples - 1), label=f"cycle-{index}"
        )
        logger.info("%s cycle %d: %d pulses to threshold", params.label, index, count)
        cycles.append(
            LearningCycle(cycle_index=index, pulses_to_threshold=count, forgetting_trace=forgetting)
        )
    return cycles


def ppf_index(
    params: DeviceParams,
    frequency: float,
    n_pulses: int = 20,
    temperature: float | None = None,
    pulse_width: float = 0.2,
    intensity: float = DEFAULT_INTENSITY,
) -> list[float]:
    """|A_k / A_1| x 100 for k = 2..n, amplitudes measured from the dark level."""
    if n_pulses < 2:
        raise InputError("paired-pulse index needs at least 2 pulses")
    period = _check_width(frequency, pulse_width)
    i_dark = dark_conductivity(params)[2]
    state = DeviceState.dark(params, temperature)
    amplitudes = []
    for k in range(n_pulses):
        state = step_segment(state, params, intensity, pulse_width)
        amplitudes.append(abs(_current(state, params) - i_dark))
        if k < n_pulses - 1:
            state = step_segment(state, params, 0.0, period - pulse_width)
    if amplitudes[0] == 0.0:
        raise UndefinedIndexError()
    return [a / amplitudes[0] * 100.0 for a in amplitudes[1:]]


def filter_response(
    params: DeviceParams,
    frequencies: Sequence[float],
    n_pulses: int = 20,
    temperature: float | None = None,
    pulse_width: float = 0.2,
    intensity: float = DEFAULT_INTENSITY,
) -> list[tuple[float, float]]:
    if any(f <= 0 for f in frequencies):
        raise InputError("frequencies must be positive")
    return [
        (f, ppf_index(params, f, n_pulses, temperature, pulse_width, intensity)[-1])
        for f in frequencies
    ]


def _conductance_after(
    params: DeviceParams,
    pulse: OpticalPulse | None,
    elapsed: float,
    temperature: float | None,
) -> float:
    """Device conductance (S) `elapsed` seconds after its pulse ended."""
    state = DeviceState.dark(params, temperature)
    if pulse is not None:
        state = step_segment(state, params, pulse.intensity, pulse.duration)
        state = advance(state, params, 0.0, elapsed)
    return _current(state, params) / params.read_voltage


def _series(g_a: float, g_b: float) -> float:
    return 1.0 / (1.0 / g_a + 1.0 / g_b)


def stdp(
    pair: SeriesPair,
    delta_ts: Sequence[float],
    pulse: OpticalPulse | None = None,
    measure_delay: float = 1.0,
    temperature: float | None = None,
) -> list[StdpPoint]:
    """Series-conductance change for pre/post pulses separated by delta_t."""
    if measure_delay < 0:
        raise InputError("measure_delay must be non-negative")
    pulse = pulse or OpticalPulse()
    g_dark = _series(
        _conductance_after(pair.pre, None, 0.0, temperature),
        _conductance_after(pair.post, None, 0.0, temperature),
    )
    points = []
    for delta_t in delta_ts:
        # Read-out at the later pulse end + delay; elapsed times measured from each pulse.
        latest = max(0.0, delta_t)
        g_pre = _conductance_after(pair.pre, pulse, (latest - 0.0) + measure_delay, temperature)
        g_post = _conductance_after(
            pair.post, pulse, (latest - delta_t) + measure_delay, temperature
        )
        points.append(StdpPoint(delta_t=delta_t, delta_g=_series(g_pre, g_post) - g_dark))
    return points


def gate_conductances(
    pair: SeriesPair,
    pulse: OpticalPulse | None = None,
    measure_delay: float = 1.0,
    temperature: float | None = None,
) -> dict[tuple[int, int], float]:
    pulse = pulse or OpticalPulse()
    out = {}
    for bits in GATE_INPUTS:
        g_pre = _conductance_after(pair.pre, pulse if bits[0] else None, measure_delay, temperature)
        g_post = _conductance_after(pair.post, pulse if bits[1] else None, measure_delay, temperature)
        out[bits] = _series(g_pre, g_post)
    return out


def evaluate_gate(
    spec: GateSpec,
    pair: SeriesPair,
    pulse: OpticalPulse | None = None,
    measure_delay: float = 1.0,
    temperature: float | None = None,
) -> GateEvaluation:
    """Full truth table; the threshold defaults to the midpoint of the feasible interval."""
    if pair.pre.polarity is not spec.polarity:
        raise InputError(f"{spec.gate} needs {spec.polarity} devices, got {pair.pre.polarity}")
    conductances = gate_conductances(pair, pulse, measure_delay, temperature)
    table = dict(zip(GATE_INPUTS, TRUTH_TABLES[spec.gate]))
    lower = max(g for bits, g in conductances.items() if table[bits] == 0)
    upper = min(g for bits, g in conductances.items() if table[bits] == 1)
    named = {f"{a}{b}": g for (a, b), g in conductances.items()}
    threshold = spec.threshold if spec.threshold is not None else 0.5 * (lower + upper)
    if not lower < threshold <= upper:
        raise UnsatisfiableGateError(str(spec.gate), named, threshold)
    rows = [
        GateResult(inputs=bits, g_net=g, output=int(g >= threshold))
        for bits, g in conductances.items()
    ]
    return GateEvaluation(gate=spec.gate, threshold=threshold, feasible=(lower, upper), rows=rows)


def logic_gate(
    spec: GateSpec,
    pair: SeriesPair,
    inputs: tuple[int, int],
    pulse: OpticalPulse | None = None,
    measure_delay: float = 1.0,
    temperature: float | None = None,
) -> GateResult:
    if inputs not in GATE_INPUTS:
        raise InputError(f"inputs must be a pair of bits, got {inputs}")
    evaluation = evaluate_gate(spec, pair, pulse, measure_delay, temperature)
    return next(row for row in evaluation.rows if row.inputs == inputs)


def power_density(
    voltage: float, delta_i: float, area_mm2: float, pulse_width: float | None = None
) -> float:
    """Per-area read power V x dI in nW/mm^2; pulse width only matters for energy."""
    if area_mm2 <= 0:
        raise DomainError(f"area must be positive, got {area_mm2} mm^2")
    return abs(voltage * delta_i) / area_mm2 * NW_PER_W


def pulse_energy_optical(area_mm2: float, intensity: float, dt: float) -> float:
    """Incident optical energy S x P x dt in J (S in mm^2, P in mW/cm^2)."""
    if min(area_mm2, intensity, dt) < 0:
        raise InputError("area, intensity and pulse width must be non-negative")
    return area_mm2 / MM2_PER_CM2 * intensity * W_PER_MW * dt


def pulse_energy_electrical(voltage: float, current: float, dt: float) -> float:
    """Electrical read energy V x I x dt in J."""
    if min(voltage, current, dt) < 0:
        raise InputError("voltage, current and pulse width must be non-negative")
    return voltage * current * dt


def thermal_time_constants(
    params: DeviceParams,
    temperatures: Sequence[float],
    n_terms: int | None = None,
    illumination: float = 1800.0,
    decay_window: float | None = None,
    intensity: float = DEFAULT_INTENSITY,
    samples: int = 2000,
) -> list[tuple[float, tuple[float, ...]]]:
    """Fit the recovery after a long exposure at each temperature with n exponentials.

    The decay window defaults to five times the slowest pool time constant.
    """
    n_terms = n_terms or len(params.pools)
    train = PulseTrain(pulses=(Pulse(start=0.0, duration=illumination, intensity=intensity),))
    out = []
    for temperature in temperatures:
        window = decay_window or 5.0 * max(pool_taus(params, temperature))
        state = run_train(params, train, temperature)
        decay = sample_decay(state, params, window, window / samples)
        report = fit_transient(decay, ModelKind.EXP_DECAY, n_terms)
        logger.info("%.1f K: taus %s", temperature, report.model.taus)
        out.append((temperature, report.model.taus))
    return out
