from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.constants import DEFAULT_INTENSITY, DEFAULT_PULSE_DURATION
from app.schemas.device import DeviceParams, Polarity, Trace


class MemoryClass(StrEnum):
    STM = "STM"
    LTM = "LTM"


class SweepAxis(StrEnum):
    NUMBER = "number"
    DURATION = "duration"
    INTENSITY = "intensity"
    FREQUENCY = "frequency"


class Gate(StrEnum):
    OR = "OR"
    AND = "AND"
    NOR = "NOR"
    NAND = "NAND"


GATE_POLARITY = {
    Gate.OR: Polarity.EXCITATORY,
    Gate.AND: Polarity.EXCITATORY,
    Gate.NOR: Polarity.INHIBITORY,
    Gate.NAND: Polarity.INHIBITORY,
}

TRUTH_TABLES = {
    Gate.OR: (0, 1, 1, 1),
    Gate.AND: (0, 0, 0, 1),
    Gate.NOR: (1, 0, 0, 0),
    Gate.NAND: (1, 1, 1, 0),
}

GATE_INPUTS = ((0, 0), (0, 1), (1, 0), (1, 1))


class OpticalPulse(BaseModel):
    model_config = ConfigDict(frozen=True)

    duration: float = Field(default=DEFAULT_PULSE_DURATION, gt=0)
    intensity: float = Field(default=DEFAULT_INTENSITY, ge=0)


class RetentionResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta_i_at_off: float  # A
    retention_time: float = Field(ge=0)  # s
    classification: MemoryClass
    open_ended: bool = False


class LearningCycle(BaseModel):
    model_config = ConfigDict(frozen=True)

    cycle_index: int
    pulses_to_threshold: int = Field(ge=1)
    forgetting_trace: Trace


class GateSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    gate: Gate
    threshold: float | None = None  # S; auto-derived when None

    @property
    def polarity(self) -> Polarity:
        return GATE_POLARITY[self.gate]


class SeriesPair(BaseModel):
    """Two devices in series; both start from the dark state for every run."""

    model_config = ConfigDict(frozen=True)

    pre: DeviceParams
    post: DeviceParams

    @model_validator(mode="after")
    def check_polarity(self) -> "SeriesPair":
        if self.pre.polarity != self.post.polarity:
            raise ValueError("series devices must share a polarity")
        return self

    @classmethod
    def identical(cls, params: DeviceParams) -> "SeriesPair":
        return cls(pre=params, post=params)


class StdpPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta_t: float
    delta_g: float


class GateResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    inputs: tuple[int, int]
    g_net: float
    output: int


class GateEvaluation(BaseModel):
    gate: Gate
    threshold: float
    feasible: tuple[float, float]
    rows: list[GateResult]


class ProtocolRecord(BaseModel):
    """JSON record of a protocol run; `x`/`y` are the plot-ready pair."""

    protocol: str
    config: dict
    metrics: dict[str, list]
    x: list[float] = []
    y: list[float] = []
    x_label: str = "x"
    y_label: str = "y"
