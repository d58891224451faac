from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.constants import ELEMENTARY_CHARGE


class HallSeries(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: tuple[float, ...]
    n: tuple[float, ...]  # cm^-3
    mu: tuple[float, ...]  # cm^2/Vs

    @model_validator(mode="after")
    def check_series(self) -> "HallSeries":
        if not len(self.t) == len(self.n) == len(self.mu):
            raise ValueError("t, n and mu must have the same length")
        if any(v <= 0 for v in (*self.n, *self.mu)):
            raise ValueError("carrier density and mobility must be positive")
        return self

    @property
    def sigma(self) -> tuple[float, ...]:
        """Conductivity n*mu*e per sample, S/cm."""
        return tuple(n * ELEMENTARY_CHARGE * mu for n, mu in zip(self.n, self.mu))


class SpectrumPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    wavelength: float = Field(gt=0)  # nm
    transmittance: float = Field(ge=0, le=1)
    reflectance: float = Field(ge=0, le=1)

    @model_validator(mode="after")
    def check_sum(self) -> "SpectrumPoint":
        if self.transmittance + self.reflectance > 1 + 1e-12:
            raise ValueError(f"T + R exceeds 1 at {self.wavelength} nm")
        return self


class OpticalSpectrum(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: tuple[SpectrumPoint, ...]
    thickness: float = Field(gt=0)  # cm


class TaucResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    eg: float  # eV
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


class TaucRequest(BaseModel):
    spectrum: OpticalSpectrum
    window: tuple[float, float] | None = None  # eV
