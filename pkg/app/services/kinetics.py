"""Trap-pool device model and closed-form transient evaluators.

Each pool obeys dh/dt = g*phi*(1 - h/H) - h/tau(T). For constant illumination
this is linear in h, so a segment is advanced with its exact solution
h(dt) = h_inf + (h0 - h_inf) * exp(-k*dt), k = g*phi/H + 1/tau.
"""

import logging
import math

import numpy as np

from app.core.constants import BOLTZMANN_MEV, ELEMENTARY_CHARGE
from app.exceptions.synapse_exceptions import DomainError, InputError
from app.schemas.analysis import HallSeries
from app.schemas.device import DeviceParams, DeviceState, Polarity, PulseTrain, Trace
from app.schemas.kinetic_model import KineticModelParams, ModelKind

logger = logging.getLogger(__name__)


def dark_conductivity(params: DeviceParams) -> tuple[float, float, float]:
    """Return (sigma S/cm, resistance Ohm, dark current A) of the unlit device."""
    geometry = (params.n0, params.mu0, params.length, params.width, params.thickness)
    if min(geometry) <= 0:
        raise DomainError("carrier density, mobility and geometry must be positive")
    sigma = params.n0 * ELEMENTARY_CHARGE * params.mu0
    resistance = params.length / (sigma * params.width * params.thickness)
    current = params.read_voltage * sigma * params.width * params.thickness / params.length
    return sigma, resistance, current


def arrhenius_tau(tau0: float, ea: float, temperature: float) -> float:
    if temperature <= 0:
        raise DomainError(f"temperature must be positive, got {temperature} K")
    if tau0 <= 0:
        raise DomainError(f"tau0 must be positive, got {tau0} s")
    return tau0 * math.exp(ea / (BOLTZMANN_MEV * temperature))


def pool_taus(params: DeviceParams, temperature: float) -> list[float]:
    return [arrhenius_tau(p.tau0, p.ea, temperature) for p in params.pools]


def step_segment(
    state: DeviceState, params: DeviceParams, intensity: float, dt: float
) -> DeviceState:
    if dt <= 0:
        raise InputError(f"segment length must be positive, got {dt} s")
    if intensity < 0:
        raise InputError(f"intensity must be non-negative, got {intensity}")
    occupancies = []
    for h0, pool in zip(state.occupancies, params.pools, strict=True):
        tau = arrhenius_tau(pool.tau0, pool.ea, state.temperature)
        drive = pool.fill_coeff * intensity
        k = drive / pool.capacity + 1.0 / tau
        h_inf = drive / k
        h = h_inf + (h0 - h_inf) * math.exp(-k * dt)
        occupancies.append(min(max(h, 0.0), pool.capacity))
    return DeviceState(
        occupancies=tuple(occupancies),
        time=state.time + dt,
        temperature=state.temperature,
    )


def observe_current(
    state: DeviceState, params: DeviceParams
) -> tuple[float, float, float]:
    """Return (n cm^-3, mu cm^2/Vs, I A) for the given trap occupancy."""
    load = sum(
        pool.coupling * h for pool, h in zip(params.pools, state.occupancies, strict=True)
    )
    if params.polarity is Polarity.INHIBITORY:
        n, mu = params.n0, params.mu0 / (1.0 + load)
    else:
        n, mu = params.n0 * (1.0 + load), params.mu0
    sigma = n * ELEMENTARY_CHARGE * mu
    current = params.read_voltage * sigma * params.width * params.thickness / params.length
    return n, mu, current


def illumination_at(train: PulseTrain, t: float) -> float:
    for pulse in train.pulses:
        if pulse.start <= t < pulse.end:
            return pulse.intensity
    return 0.0


def _sample_instants(sample_dt: float, t_end: float) -> list[float]:
    n = int(math.floor(t_end / sample_dt + 1e-9))
    instants = [k * sample_dt for k in range(n + 1)]
    if t_end - instants[-1] > 1e-9 * max(t_end, 1.0):
        instants.append(t_end)
    return instants


def _run(
    params: DeviceParams,
    train: PulseTrain,
    temperature: float,
    sample_dt: float,
    t_end: float,
) -> tuple[list[float], list[DeviceState]]:
    if sample_dt <= 0:
        raise InputError(f"sample_dt must be positive, got {sample_dt}")
    if t_end < train.end:
        raise InputError(f"t_end={t_end} s does not cover the train ending at {train.end} s")
    instants = _sample_instants(sample_dt, t_end)
    edges = sorted({e for p in train.pulses for e in (p.start, p.end) if 0 < e < t_end})

    state = DeviceState.dark(params, temperature)
    now = 0.0
    states = [state]
    edge_idx = 0
    for target in instants[1:]:
        while edge_idx < len(edges) and edges[edge_idx] < target:
            edge = edges[edge_idx]
            if edge > now:
                state = step_segment(state, params, illumination_at(train, now), edge - now)
                now = edge
            edge_idx += 1
        state = step_segment(state, params, illumination_at(train, now), target - now)
        now = target
        states.append(state)
    return instants, states


def simulate(
    params: DeviceParams,
    train: PulseTrain,
    temperature: float | None = None,
    sample_dt: float = 1.0,
    t_end: float | None = None,
) -> Trace:
    """Photocurrent trace of a device starting dark at t = 0."""
    temperature = params.temperature_ref if temperature is None else temperature
    t_end = t_end if t_end is not None else train.end
    instants, states = _run(params, train, temperature, sample_dt, t_end)
    logger.debug(
        "simulated %s: %d pulses, %d samples at %.1f K",
        params.label,
        len(train.pulses),
        len(instants),
        temperature,
    )
    return Trace(
        t=tuple(instants),
        current=tuple(observe_current(s, params)[2] for s in states),
        read_voltage=params.read_voltage,
        temperature=temperature,
        label=params.label,
        baseline=dark_conductivity(params)[2],
    )


def simulate_hall(
    params: DeviceParams,
    train: PulseTrain,
    temperature: float | None = None,
    sample_dt: float = 1.0,
    t_end: float | None = None,
) -> HallSeries:
    """Photo-Hall record (n, mu) of the same run `simulate` would produce."""
    temperature = params.temperature_ref if temperature is None else temperature
    t_end = t_end if t_end is not None else train.end
    instants, states = _run(params, train, temperature, sample_dt, t_end)
    observed = [observe_current(s, params) for s in states]
    return HallSeries(
        t=tuple(instants),
        n=tuple(o[0] for o in observed),
        mu=tuple(o[1] for o in observed),
    )


def eval_model(m: KineticModelParams, t: float | np.ndarray) -> float | np.ndarray:
    x = np.asarray(t, dtype=float) - m.t0
    if np.any(x < 0):
        raise DomainError(f"model evaluated before t0={m.t0}")
    match m.model:
        case ModelKind.EXP_DECAY:
            y = m.i0 + sum(a * np.exp(-x / tau) for a, tau in zip(m.amplitudes, m.taus))
        case ModelKind.EXP_RISE:
            y = m.i0 + sum(
                a * (1.0 - np.exp(-x / tau)) for a, tau in zip(m.amplitudes, m.taus)
            )
        case ModelKind.STRETCHED:
            y = m.i0 + m.amplitudes[0] * np.exp(-((x / m.taus[0]) ** m.beta_stretch))
        case ModelKind.WICKELGREN:
            y = m.lam * (1.0 + m.beta_scale * x) ** (-m.psi)
        case _:
            raise DomainError(f"unknown model {m.model}")
    return float(y) if np.ndim(y) == 0 else y


def advance(state: DeviceState, params: DeviceParams, intensity: float, dt: float) -> DeviceState:
    """step_segment that tolerates empty segments."""
    return step_segment(state, params, intensity, dt) if dt > 0 else state


def run_train(
    params: DeviceParams, train: PulseTrain, temperature: float | None = None
) -> DeviceState:
    """Device state at the end of the last pulse, starting dark at t = 0."""
    state = DeviceState.dark(params, temperature)
    for pulse in train.pulses:
        state = advance(state, params, 0.0, pulse.start - state.time)
        state = step_segment(state, params, pulse.intensity, pulse.duration)
    return state


def relax(
    state: DeviceState, params: DeviceParams, duration: float, sample_dt: float, label: str = ""
) -> tuple[Trace, DeviceState]:
    """Dark relaxation from `state`, sampled every `sample_dt` from its own time origin.

    Returns the sampled trace and the state at its last sample.
    """
    if sample_dt <= 0 or duration <= 0:
        raise InputError("decay duration and sample_dt must be positive")
    origin = state.time
    n = max(int(math.floor(duration / sample_dt + 1e-9)), 1)
    times = [origin]
    currents = [observe_current(state, params)[2]]
    for k in range(1, n + 1):
        state = step_segment(state, params, 0.0, sample_dt)
        times.append(origin + k * sample_dt)
        currents.append(observe_current(state, params)[2])
    trace = Trace(
        t=tuple(times),
        current=tuple(currents),
        read_voltage=params.read_voltage,
        temperature=state.temperature,
        label=label or params.label,
        baseline=dark_conductivity(params)[2],
    )
    return trace, state.model_copy(update={"time": times[-1]})


def sample_decay(
    state: DeviceState, params: DeviceParams, duration: float, sample_dt: float, label: str = ""
) -> Trace:
    return relax(state, params, duration, sample_dt, label)[0]
