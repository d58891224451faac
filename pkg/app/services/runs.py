"""Run-config driven simulations and protocol records, shared by the CLI and the API."""

import logging

import numpy as np

from app.exceptions.synapse_exceptions import InputError
from app.schemas.device import Polarity, Trace
from app.schemas.protocol import Gate, GateSpec, OpticalPulse, ProtocolRecord, SeriesPair
from app.schemas.run_config import ProtocolName, RunConfig
from app.services import protocols
from app.services.fitting import fit_wickelgren
from app.services.kinetics import simulate

logger = logging.getLogger(__name__)

DEFAULT_GATE = {Polarity.EXCITATORY: Gate.OR, Polarity.INHIBITORY: Gate.NOR}


def add_noise(trace: Trace, noise_rel: float, seed: int | None) -> Trace:
    """Seeded Gaussian read noise scaled to the trace's current swing (or level when flat)."""
    if noise_rel <= 0:
        return trace
    current = np.asarray(trace.current)
    scale = float(np.ptp(current)) or float(np.max(np.abs(current)))
    rng = np.random.default_rng(seed)
    noisy = current + rng.normal(0.0, noise_rel * scale, size=current.shape)
    return trace.model_copy(update={"current": tuple(float(v) for v in noisy)})


def run_simulation(config: RunConfig, temperature: float | None = None) -> Trace:
    env = config.environment
    temperature = temperature if temperature is not None else env.temperature
    trace = simulate(config.params, config.stimulus.train(), temperature, env.sample_dt, env.t_end)
    return add_noise(trace, env.noise_rel, config.seed)


def run_protocol(
    config: RunConfig, which: ProtocolName | None = None, temperature: float | None = None
) -> ProtocolRecord:
    """Run one protocol on the configured device and collect plot-ready metrics."""
    which = which or config.protocol.name
    if which is None:
        raise InputError("no protocol named on the command line or in [protocol]")
    params = config.params
    proto = config.protocol
    temperature = temperature if temperature is not None else config.environment.temperature
    pulse = OpticalPulse(intensity=config.stimulus.intensity)
    settings_dump = proto.model_dump(mode="json")
    logger.info("running %s on %s", which, params.label)

    match which:
        case ProtocolName.STM_LTM:
            results = protocols.stm_ltm_sweep(params, proto.axis, proto.values, temperature)
            return ProtocolRecord(
                protocol=which,
                config=settings_dump,
                metrics={
                    "retention_time": [r.retention_time for r in results],
                    "delta_i_at_off": [r.delta_i_at_off for r in results],
                    "classification": [str(r.classification) for r in results],
                    "open_ended": [r.open_ended for r in results],
                },
                x=list(proto.values),
                y=[r.retention_time for r in results],
                x_label=str(proto.axis),
                y_label="retention_s",
            )
        case ProtocolName.LEARNING:
            threshold = proto.threshold_delta or protocols.default_learning_threshold(params)
            cycles = protocols.learning_forgetting(
                params, threshold, proto.n_cycles, proto.rest, temperature, pulse
            )
            psis = [fit_wickelgren(c.forgetting_trace, c.forgetting_trace.t[0]).model.psi for c in cycles]
            return ProtocolRecord(
                protocol=which,
                config={**settings_dump, "threshold_delta": threshold},
                metrics={
                    "pulses_to_threshold": [c.pulses_to_threshold for c in cycles],
                    "psi": psis,
                },
                x=[c.cycle_index for c in cycles],
                y=[c.pulses_to_threshold for c in cycles],
                x_label="cycle",
                y_label="pulses_to_threshold",
            )
        case ProtocolName.PPF:
            index = protocols.ppf_index(
                params, proto.frequency, proto.ppf_pulses, temperature, proto.pulse_width,
                pulse.intensity,
            )
            pulses = list(range(2, proto.ppf_pulses + 1))
            return ProtocolRecord(
                protocol=which,
                config=settings_dump,
                metrics={"pulse": pulses, "index_percent": index},
                x=pulses,
                y=index,
                x_label="pulse",
                y_label="index_percent",
            )
        case ProtocolName.FILTER:
            response = protocols.filter_response(
                params, proto.frequencies, proto.ppf_pulses, temperature, proto.pulse_width,
                pulse.intensity,
            )
            return ProtocolRecord(
                protocol=which,
                config=settings_dump,
                metrics={"frequency": [f for f, _ in response], "gain": [g for _, g in response]},
                x=[f for f, _ in response],
                y=[g for _, g in response],
                x_label="frequency_hz",
                y_label="gain_percent",
            )
        case ProtocolName.STDP:
            points = protocols.stdp(
                SeriesPair.identical(params), proto.delta_ts, pulse, proto.measure_delay, temperature
            )
            return ProtocolRecord(
                protocol=which,
                config=settings_dump,
                metrics={
                    "delta_t": [p.delta_t for p in points],
                    "delta_g": [p.delta_g for p in points],
                },
                x=[p.delta_t for p in points],
                y=[p.delta_g for p in points],
                x_label="delta_t_s",
                y_label="delta_g_S",
            )
        case ProtocolName.LOGIC:
            spec = GateSpec(gate=proto.gate or DEFAULT_GATE[params.polarity], threshold=proto.threshold)
            evaluation = protocols.evaluate_gate(
                spec, SeriesPair.identical(params), pulse, proto.measure_delay, temperature
            )
            return ProtocolRecord(
                protocol=which,
                config={**settings_dump, "gate": str(spec.gate)},
                metrics={
                    "inputs": [f"{a}{b}" for a, b in (r.inputs for r in evaluation.rows)],
                    "g_net": [r.g_net for r in evaluation.rows],
                    "output": [r.output for r in evaluation.rows],
                    "threshold": [evaluation.threshold],
                    "feasible": list(evaluation.feasible),
                },
                x=list(range(len(evaluation.rows))),
                y=[r.output for r in evaluation.rows],
                x_label="case",
                y_label="output",
            )
    raise InputError(f"unknown protocol {which}")
