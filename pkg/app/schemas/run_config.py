from enum import StrEnum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.constants import DEFAULT_INTENSITY, DEFAULT_PULSE_DURATION
from app.schemas.device import DeviceParams, Pulse, PulseTrain, TrapPool
from app.schemas.protocol import Gate, SweepAxis

SCHEMA_VERSION = 1


class ProtocolName(StrEnum):
    STM_LTM = "stm-ltm"
    LEARNING = "learning"
    PPF = "ppf"
    FILTER = "filter"
    STDP = "stdp"
    LOGIC = "logic"


class OutputFormat(StrEnum):
    CSV = "csv"
    JSON = "json"
    BOTH = "both"


class PoolSection(TrapPool):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DeviceSection(DeviceParams):
    model_config = ConfigDict(frozen=True, extra="forbid")

    pools: tuple[PoolSection, ...]


class StimulusSection(BaseModel):
    """Either an explicit pulse list or a uniform train."""

    model_config = ConfigDict(extra="forbid")

    pulses: list[Pulse] | None = None
    n_pulses: int = Field(default=1, ge=1)
    frequency: float = Field(default=0.5, gt=0)
    duration: float = Field(default=DEFAULT_PULSE_DURATION, gt=0)
    intensity: float = Field(default=DEFAULT_INTENSITY, ge=0)
    start: float = Field(default=0.0, ge=0)

    def train(self) -> PulseTrain:
        if self.pulses is not None:
            return PulseTrain(pulses=tuple(self.pulses))
        return PulseTrain.uniform(
            self.n_pulses, self.frequency, self.duration, self.intensity, self.start
        )


class ProtocolSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: ProtocolName | None = None

    # stm-ltm
    axis: SweepAxis = SweepAxis.NUMBER
    values: list[float] = [1, 2, 5, 10, 20]

    # learning; threshold derived from the device polarity when unset
    threshold_delta: float | None = Field(default=None, gt=0)
    n_cycles: int = Field(default=3, ge=1)
    rest: float = Field(default=60.0, gt=0)

    # ppf / filter
    frequency: float = Field(default=0.5, gt=0)
    frequencies: list[float] = [0.05, 0.2, 0.5, 1.0, 2.0]
    ppf_pulses: int = Field(default=20, ge=2)
    pulse_width: float = Field(default=0.2, gt=0)

    # stdp / logic
    delta_ts: list[float] = [-10, -5, -2, -1, 0, 1, 2, 5, 10]
    gate: Gate | None = None
    threshold: float | None = None
    measure_delay: float = Field(default=1.0, ge=0)


class EnvironmentSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    temperature: float | None = Field(default=None, gt=0)  # K; device reference when unset
    sample_dt: float = Field(default=1.0, gt=0)
    t_end: float | None = Field(default=None, gt=0)
    noise_rel: float = Field(default=0.0, ge=0)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "out"
    formats: OutputFormat = OutputFormat.BOTH


class RunConfig(BaseModel):
    """Versioned TOML run configuration; unknown keys are rejected at every level."""

    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    device: DeviceSection
    stimulus: StimulusSection = StimulusSection()
    protocol: ProtocolSection = ProtocolSection()
    environment: EnvironmentSection = EnvironmentSection()
    output: OutputSection = OutputSection()
    seed: int | None = None

    @model_validator(mode="after")
    def check_window(self) -> "RunConfig":
        t_end = self.environment.t_end
        if t_end is not None and t_end < self.stimulus.train().end:
            raise ValueError("environment.t_end ends before the stimulus")
        return self

    @property
    def params(self) -> DeviceParams:
        return DeviceParams.model_validate(self.device.model_dump())
