from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelKind(StrEnum):
    EXP_DECAY = "exp_decay"
    EXP_RISE = "exp_rise"
    STRETCHED = "stretched"
    WICKELGREN = "wickelgren"


class KineticModelParams(BaseModel):
    """Closed-form transient model.

    exp_decay:  I0 + sum A_i exp(-(t-t0)/tau_i)
    exp_rise:   I0 + sum A_i (1 - exp(-(t-t0)/tau_i))
    stretched:  I0 + A exp(-((t-t0)/tau)^beta_stretch)
    wickelgren: lam * (1 + beta_scale (t-t0))^(-psi)
    """

    model_config = ConfigDict(frozen=True)

    model: ModelKind
    i0: float = 0.0
    amplitudes: tuple[float, ...] = ()
    taus: tuple[float, ...] = ()
    beta_stretch: float | None = None
    lam: float | None = None
    beta_scale: float | None = None
    psi: float | None = None
    t0: float = 0.0

    @model_validator(mode="after")
    def check_params(self) -> "KineticModelParams":
        if self.model is ModelKind.WICKELGREN:
            if None in (self.lam, self.beta_scale, self.psi):
                raise ValueError("wickelgren needs lam, beta_scale and psi")
            if self.beta_scale < 0:
                raise ValueError("beta_scale must be non-negative")
            return self
        if len(self.amplitudes) != len(self.taus) or not self.taus:
            raise ValueError("amplitudes and taus must be non-empty and the same length")
        if any(tau <= 0 for tau in self.taus):
            raise ValueError("taus must be positive")
        if self.model is ModelKind.STRETCHED:
            if len(self.taus) != 1:
                raise ValueError("stretched model has exactly one term")
            if self.beta_stretch is None or not 0 < self.beta_stretch <= 1:
                raise ValueError("beta_stretch must lie in (0, 1]")
        return self

    @property
    def n_terms(self) -> int:
        return len(self.taus)

    def canonical(self) -> "KineticModelParams":
        """Same model with taus sorted ascending, amplitudes carried along."""
        if len(self.taus) < 2:
            return self
        pairs = sorted(zip(self.taus, self.amplitudes))
        return self.model_copy(
            update={
                "taus": tuple(tau for tau, _ in pairs),
                "amplitudes": tuple(a for _, a in pairs),
            }
        )


class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ModelKind
    n_terms: int = Field(default=1, ge=1, le=4)

    @property
    def name(self) -> str:
        if self.kind in (ModelKind.EXP_DECAY, ModelKind.EXP_RISE):
            return f"{self.kind}{self.n_terms}"
        return str(self.kind)
