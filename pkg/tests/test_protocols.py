import math

import numpy as np
import pytest

from app.core.constants import BOLTZMANN_MEV
from app.exceptions.synapse_exceptions import (
    DomainError,
    InputError,
    ProtocolError,
    UndefinedIndexError,
    UnsatisfiableGateError,
)
from app.schemas.device import Polarity, PulseTrain, Trace
from app.schemas.kinetic_model import KineticModelParams, ModelKind
from app.schemas.protocol import Gate, GateSpec, MemoryClass, SeriesPair, SweepAxis
from app.services.fitting import fit_arrhenius, fit_wickelgren, synthesize_trace
from app.services.kinetics import dark_conductivity
from app.services.protocols import (
    default_learning_threshold,
    evaluate_gate,
    filter_response,
    learning_forgetting,
    logic_gate,
    power_density,
    ppf_index,
    pulse_energy_electrical,
    pulse_energy_optical,
    retention,
    retention_after,
    stdp,
    stm_ltm_sweep,
    thermal_time_constants,
)
from tests.factories import ExcitatoryDeviceFactory, InhibitoryDeviceFactory, TrapPoolFactory

SWEEPS = {
    SweepAxis.NUMBER: [1, 2, 5, 10, 20],
    SweepAxis.DURATION: [0.5, 1.0, 2.0, 5.0, 10.0],
    SweepAxis.INTENSITY: [5.0, 10.0, 20.0, 40.0, 80.0],
    SweepAxis.FREQUENCY: [0.1, 0.5, 1.0, 2.0],
}
FREQUENCIES = [0.05, 0.2, 0.5, 1.0, 2.0]
ROOM_FACTOR = math.exp(30.0 / (BOLTZMANN_MEV * 300.0))


@pytest.fixture(params=["inhibitory", "excitatory"])
def default_device(request, inhibitory_default, excitatory_default):
    return inhibitory_default if request.param == "inhibitory" else excitatory_default


def _decay(tau: float, baseline: float = 0.0) -> Trace:
    model = KineticModelParams(
        model=ModelKind.EXP_DECAY, i0=baseline, amplitudes=(1.0,), taus=(tau,)
    )
    trace = synthesize_trace(model, np.arange(0.0, 200.0, 0.01))
    return trace.model_copy(update={"baseline": baseline})


def test_retention_of_single_exponential():
    result = retention(_decay(10.0), off_time=0.0, fraction=0.1)
    assert result.retention_time == pytest.approx(10.0 * math.log(10.0), abs=1e-3)
    assert result.classification is MemoryClass.STM
    assert not result.open_ended


def test_retention_uses_configured_ltm_threshold():
    result = retention(_decay(40.0, baseline=1.0), off_time=0.0, ltm_threshold=60.0)
    assert result.retention_time == pytest.approx(40.0 * math.log(10.0), abs=1e-3)
    assert result.classification is MemoryClass.LTM


def test_retention_of_flat_trace_is_zero():
    trace = Trace(t=(0.0, 1.0, 2.0), current=(1.0, 1.0, 1.0), read_voltage=1.0, temperature=300.0)
    result = retention(trace, off_time=1.0)
    assert result.retention_time == 0.0
    assert result.classification is MemoryClass.STM


def test_retention_open_ended_when_never_recovering():
    trace = _decay(1e6)
    result = retention(trace, off_time=0.0)
    assert result.open_ended
    assert result.retention_time == pytest.approx(trace.t[-1])


@pytest.mark.parametrize(("off_time", "fraction"), [(-1.0, 0.1), (0.0, 0.0), (0.0, 1.0)])
def test_retention_rejects_bad_arguments(off_time, fraction):
    with pytest.raises(InputError):
        retention(_decay(10.0), off_time=off_time, fraction=fraction)


def test_excitatory_transition_from_short_to_long_term(excitatory_default):
    _, single = retention_after(excitatory_default, PulseTrain.uniform(1, 0.5))
    _, burst = retention_after(excitatory_default, PulseTrain.uniform(20, 2.0, duration=0.2))
    assert single.classification is MemoryClass.STM
    assert burst.classification is MemoryClass.LTM
    assert burst.retention_time > single.retention_time


@pytest.mark.parametrize("axis", list(SWEEPS))
def test_retention_non_decreasing_along_every_axis(default_device, axis):
    results = stm_ltm_sweep(default_device, axis, SWEEPS[axis])
    times = [r.retention_time for r in results]
    assert all(b >= a * (1 - 1e-9) for a, b in zip(times, times[1:])), times
    assert times[-1] > times[0]


def test_sweep_with_zero_intensity_is_short_term(excitatory_default):
    results = stm_ltm_sweep(excitatory_default, SweepAxis.INTENSITY, [0.0])
    assert results[0].delta_i_at_off == 0.0
    assert results[0].classification is MemoryClass.STM


@pytest.mark.parametrize(
    ("axis", "values"),
    [
        (SweepAxis.NUMBER, []),
        (SweepAxis.NUMBER, [5, 1]),
        (SweepAxis.NUMBER, [1, 2.5]),
        (SweepAxis.DURATION, [0.0, 1.0]),
        (SweepAxis.FREQUENCY, [10.0]),
    ],
)
def test_sweep_rejects_bad_values(excitatory_default, axis, values):
    with pytest.raises(InputError):
        stm_ltm_sweep(excitatory_default, axis, values)


def test_learning_gets_faster_and_forgetting_slows(default_device):
    threshold = default_learning_threshold(default_device)
    cycles = learning_forgetting(default_device, threshold, n_cycles=3, rest=60.0)
    counts = [c.pulses_to_threshold for c in cycles]
    assert all(b <= a for a, b in zip(counts, counts[1:])), counts
    assert counts[0] > counts[-1]

    psis = [fit_wickelgren(c.forgetting_trace, c.forgetting_trace.t[0]).model.psi for c in cycles]
    expected_sign = -1.0 if default_device.polarity is Polarity.INHIBITORY else 1.0
    assert all(math.copysign(1.0, psi) == expected_sign for psi in psis), psis
    assert all(abs(b) <= abs(a) for a, b in zip(psis, psis[1:])), psis


def test_inhibitory_learning_needs_fewer_pulses_every_cycle(inhibitory_default):
    threshold = default_learning_threshold(inhibitory_default)
    cycles = learning_forgetting(inhibitory_default, threshold, n_cycles=3, rest=60.0)
    counts = [c.pulses_to_threshold for c in cycles]
    assert all(b < a for a, b in zip(counts, counts[1:])), counts
    assert counts[0] == 27


def test_learning_cycles_chain_through_the_rest(excitatory_default):
    threshold = default_learning_threshold(excitatory_default)
    first, second = learning_forgetting(excitatory_default, threshold, n_cycles=2, rest=60.0)
    # 1 s pulses at 0.5 Hz: the threshold pulse of cycle 2 ends 2n - 1 s after the rest.
    elapsed = 2 * second.pulses_to_threshold - 1
    assert second.forgetting_trace.t[0] == pytest.approx(first.forgetting_trace.t[-1] + elapsed)


def test_learning_forgetting_trace_shape(excitatory_default):
    threshold = default_learning_threshold(excitatory_default)
    (cycle,) = learning_forgetting(excitatory_default, threshold, n_cycles=1, rest=60.0)
    trace = cycle.forgetting_trace
    assert len(trace.t) == 121
    assert trace.t[-1] - trace.t[0] == pytest.approx(60.0)
    assert math.isfinite(fit_wickelgren(trace, trace.t[0]).model.psi)


def test_full_forgetting_makes_cycles_equal():
    params = ExcitatoryDeviceFactory(
        pools=(
            TrapPoolFactory(fill_coeff=0.01, tau0=5.0),
            TrapPoolFactory(fill_coeff=0.01, tau0=5.0),
            TrapPoolFactory(fill_coeff=0.01, tau0=5.0),
        )
    )
    threshold = 0.135 * dark_conductivity(params)[2]
    cycles = learning_forgetting(params, threshold, n_cycles=3, rest=1000.0)
    assert len({c.pulses_to_threshold for c in cycles}) == 1


def test_unreachable_threshold_names_a_pool(excitatory_default):
    with pytest.raises(ProtocolError) as exc:
        learning_forgetting(
            excitatory_default, 10.0 * dark_conductivity(excitatory_default)[2], max_pulses=20
        )
    assert "pool" in exc.value.context


def test_ppf_index_near_100_for_independent_pulses():
    pools = (TrapPoolFactory(tau0=1.0), TrapPoolFactory(tau0=1.0))
    index = ppf_index(InhibitoryDeviceFactory(pools=pools), 0.01, n_pulses=5)
    assert index == pytest.approx([100.0] * 4, rel=1e-6)


def test_ppf_index_grows_with_frequency(default_device):
    slow = ppf_index(default_device, 0.1)
    fast = ppf_index(default_device, 2.0)
    assert len(fast) == 19
    assert fast[0] > slow[0]
    assert fast[-1] > slow[-1]


def test_ppf_index_undefined_without_response(excitatory_default):
    with pytest.raises(UndefinedIndexError):
        ppf_index(excitatory_default, 1.0, intensity=0.0)


def test_ppf_index_rejects_overlapping_pulses(excitatory_default):
    with pytest.raises(InputError):
        ppf_index(excitatory_default, 5.0)


def test_filter_gain_increases_with_frequency(default_device):
    response = filter_response(default_device, FREQUENCIES)
    gains = [g for _, g in response]
    assert [f for f, _ in response] == FREQUENCIES
    assert all(b > a for a, b in zip(gains, gains[1:])), gains


def test_filter_response_is_deterministic(excitatory_default):
    assert filter_response(excitatory_default, [0.5, 0.5]) == filter_response(
        excitatory_default, [0.5, 0.5]
    )


def test_stdp_is_symmetric_and_peaks_at_coincidence(default_device):
    delta_ts = [0.0, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0, 10.0, -10.0]
    points = {p.delta_t: p.delta_g for p in stdp(SeriesPair.identical(default_device), delta_ts)}
    for d in (1.0, 2.0, 5.0, 10.0):
        assert points[d] == points[-d]
    magnitudes = [abs(points[d]) for d in (0.0, 1.0, 2.0, 5.0, 10.0)]
    assert all(b < a for a, b in zip(magnitudes, magnitudes[1:])), magnitudes


@pytest.mark.parametrize(
    ("gate", "table"),
    [
        (Gate.OR, [0, 1, 1, 1]),
        (Gate.AND, [0, 0, 0, 1]),
        (Gate.NOR, [1, 0, 0, 0]),
        (Gate.NAND, [1, 1, 1, 0]),
    ],
)
def test_gate_truth_tables(gate, table, inhibitory_default, excitatory_default):
    spec = GateSpec(gate=gate)
    device = excitatory_default if spec.polarity is Polarity.EXCITATORY else inhibitory_default
    evaluation = evaluate_gate(spec, SeriesPair.identical(device))
    assert [row.output for row in evaluation.rows] == table
    lower, upper = evaluation.feasible
    assert lower < evaluation.threshold <= upper


def test_logic_gate_single_case(excitatory_default):
    pair = SeriesPair.identical(excitatory_default)
    assert logic_gate(GateSpec(gate=Gate.AND), pair, (1, 0)).output == 0
    assert logic_gate(GateSpec(gate=Gate.OR), pair, (1, 0)).output == 1


def test_gate_rejects_wrong_polarity(inhibitory_default):
    with pytest.raises(InputError):
        evaluate_gate(GateSpec(gate=Gate.OR), SeriesPair.identical(inhibitory_default))


def test_gate_rejects_unreachable_threshold(excitatory_default):
    with pytest.raises(UnsatisfiableGateError) as exc:
        evaluate_gate(GateSpec(gate=Gate.OR, threshold=1e3), SeriesPair.identical(excitatory_default))
    assert set(exc.value.context["conductances"]) == {"00", "01", "10", "11"}


def test_power_density_matches_published_values(inhibitory_default, excitatory_default):
    assert inhibitory_default.area_mm2 == pytest.approx(12.24)
    assert excitatory_default.area_mm2 == pytest.approx(14.03)
    assert power_density(0.02, 79.6e-9, 12.24, 1.0) == pytest.approx(0.13, rel=0.01)
    assert power_density(1.0, 9.12e-9, 14.03, 1.0) == pytest.approx(0.65, rel=0.01)
    assert power_density(1.0, 0.0, 14.03) == 0.0


def test_power_density_rejects_empty_area():
    with pytest.raises(DomainError):
        power_density(1.0, 1e-9, 0.0)


def test_pulse_energies():
    assert pulse_energy_optical(12.24, 40.0, 1.0) == pytest.approx(4.896e-3)
    assert pulse_energy_electrical(0.02, 79.6e-9, 1.0) == pytest.approx(1.592e-9)
    assert pulse_energy_optical(12.24, 0.0, 1.0) == 0.0
    assert pulse_energy_electrical(0.02, 0.0, 1.0) == 0.0
    with pytest.raises(InputError):
        pulse_energy_optical(-1.0, 40.0, 1.0)


def test_thermal_time_constants_recover_activation_energy():
    params = ExcitatoryDeviceFactory(
        pools=(
            TrapPoolFactory(tau0=20.0 / ROOM_FACTOR, ea=30.0),
            TrapPoolFactory(tau0=100.0 / ROOM_FACTOR, ea=30.0),
            TrapPoolFactory(tau0=500.0 / ROOM_FACTOR, ea=30.0),
        )
    )
    results = thermal_time_constants(params, [250.0, 300.0, 350.0])
    by_temperature = dict(results)
    assert by_temperature[300.0] == pytest.approx((20.0, 100.0, 500.0), rel=1e-3)
    slowest = [(t, taus[-1]) for t, taus in results]
    assert fit_arrhenius(slowest).ea == pytest.approx(30.0, abs=0.1)
