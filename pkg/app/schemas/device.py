import math
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.constants import DEFAULT_INTENSITY, DEFAULT_PULSE_DURATION


class Polarity(StrEnum):
    INHIBITORY = "inhibitory"
    EXCITATORY = "excitatory"


MIN_POOLS = {Polarity.INHIBITORY: 2, Polarity.EXCITATORY: 3}


class TrapPool(BaseModel):
    """First-order saturable trap reservoir.

    `coupling` is the mobility-degradation weight per unit occupancy on an
    inhibitory device and the free-carrier gain (fraction of n0) per unit
    occupancy on an excitatory one.
    """

    model_config = ConfigDict(frozen=True)

    capacity: float = Field(gt=0)
    fill_coeff: float = Field(ge=0)  # occupancy per (mW/cm^2)*s
    tau0: float = Field(gt=0)  # s
    ea: float = Field(default=0.0, ge=0)  # meV
    coupling: float = Field(ge=0)


class DeviceParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = "device"
    polarity: Polarity
    n0: float = Field(gt=0)  # cm^-3
    mu0: float = Field(gt=0)  # cm^2/(V s)
    length: float = Field(gt=0)  # cm
    width: float = Field(gt=0)  # cm
    thickness: float = Field(gt=0)  # cm
    read_voltage: float
    pools: tuple[TrapPool, ...]
    temperature_ref: float = Field(default=300.0, gt=0)  # K

    @model_validator(mode="after")
    def check_device(self) -> "DeviceParams":
        if self.read_voltage == 0:
            raise ValueError("read_voltage must be non-zero")
        needed = MIN_POOLS[self.polarity]
        if len(self.pools) < needed:
            raise ValueError(
                f"{self.polarity} device needs at least {needed} trap pools, got {len(self.pools)}"
            )
        return self

    @property
    def area_mm2(self) -> float:
        """Illuminated top area (length x width) in mm^2."""
        return self.length * self.width * 100.0


class DeviceState(BaseModel):
    occupancies: tuple[float, ...]
    time: float = 0.0
    temperature: float = Field(gt=0)

    @classmethod
    def dark(cls, params: DeviceParams, temperature: float | None = None) -> "DeviceState":
        return cls(
            occupancies=tuple(0.0 for _ in params.pools),
            time=0.0,
            temperature=params.temperature_ref if temperature is None else temperature,
        )

    def check_bounds(self, params: DeviceParams) -> None:
        for h, pool in zip(self.occupancies, params.pools, strict=True):
            if not 0.0 <= h <= pool.capacity:
                raise ValueError(f"occupancy {h} outside [0, {pool.capacity}]")


class Pulse(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float = Field(ge=0)
    duration: float = Field(gt=0)
    intensity: float = Field(default=DEFAULT_INTENSITY, ge=0)

    @property
    def end(self) -> float:
        return self.start + self.duration


class PulseTrain(BaseModel):
    model_config = ConfigDict(frozen=True)

    pulses: tuple[Pulse, ...] = ()

    @model_validator(mode="after")
    def check_order(self) -> "PulseTrain":
        for prev, nxt in zip(self.pulses, self.pulses[1:]):
            if nxt.start < prev.start:
                raise ValueError("pulses must be sorted by start time")
            if nxt.start < prev.end:
                raise ValueError(
                    f"pulse at {nxt.start} s overlaps the pulse ending at {prev.end} s"
                )
        return self

    @classmethod
    def uniform(
        cls,
        n_pulses: int,
        frequency: float,
        duration: float = DEFAULT_PULSE_DURATION,
        intensity: float = DEFAULT_INTENSITY,
        start: float = 0.0,
    ) -> "PulseTrain":
        """n equally spaced pulses at `frequency` Hz (period 1/frequency)."""
        period = 1.0 / frequency
        return cls(
            pulses=tuple(
                Pulse(start=start + k * period, duration=duration, intensity=intensity)
                for k in range(n_pulses)
            )
        )

    @property
    def end(self) -> float:
        return self.pulses[-1].end if self.pulses else 0.0

    @property
    def frequency(self) -> float | None:
        """Repetition rate in Hz when the pulses are uniformly spaced."""
        if len(self.pulses) < 2:
            return None
        gaps = [b.start - a.start for a, b in zip(self.pulses, self.pulses[1:])]
        if max(gaps) - min(gaps) > 1e-9 * max(gaps):
            return None
        return 1.0 / gaps[0]


class Trace(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: tuple[float, ...]
    current: tuple[float, ...]
    read_voltage: float
    temperature: float
    label: str = ""
    baseline: float | None = None  # dark current, A

    @model_validator(mode="after")
    def check_samples(self) -> "Trace":
        if len(self.t) != len(self.current):
            raise ValueError("t and current must have the same length")
        if not all(math.isfinite(v) for v in (*self.t, *self.current)):
            raise ValueError("trace contains non-finite values")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise ValueError("trace times must be strictly increasing")
        return self

    def window(self, t_start: float, t_end: float) -> "Trace":
        keep = [i for i, t in enumerate(self.t) if t_start <= t <= t_end]
        return self.model_copy(
            update={
                "t": tuple(self.t[i] for i in keep),
                "current": tuple(self.current[i] for i in keep),
            }
        )
