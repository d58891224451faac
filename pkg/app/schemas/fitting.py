from pydantic import BaseModel, ConfigDict, Field

from app.schemas.device import Trace
from app.schemas.kinetic_model import KineticModelParams, ModelKind, ModelSpec


class FitReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    model: KineticModelParams
    variances: dict[str, float]
    rss: float = Field(ge=0)
    n_samples: int
    n_params: int
    aicc: float
    iterations: int
    converged: bool
    grad_norm: float
    weight: float | None = None  # Akaike weight within a model_select ranking


class ArrheniusFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    tau0: float = Field(gt=0)  # s
    ea: float  # meV
    r_squared: float


class ModelSelection(BaseModel):
    ranked: list[FitReport]
    excluded: dict[str, str] = {}


class FitRequest(BaseModel):
    trace: Trace
    model: ModelKind = ModelKind.EXP_DECAY
    n_terms: int = Field(default=1, ge=1, le=4)
    window: tuple[float, float] | None = None
    # Rank these instead of fitting `model` alone.
    candidates: list[ModelSpec] | None = None
