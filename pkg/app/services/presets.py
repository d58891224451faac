"""Shipped run configs and published reference data."""

import logging
import tomllib
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.constants import ELEMENTARY_CHARGE
from app.exceptions.synapse_exceptions import InputError
from app.schemas.run_config import RunConfig

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def config_names() -> list[str]:
    return sorted(p.stem for p in CONFIG_DIR.glob("*.toml"))


def resolve_config(name_or_path: str | Path) -> Path:
    """A shipped config name or a path to a TOML file."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    shipped = CONFIG_DIR / f"{name_or_path}.toml"
    if shipped.is_file():
        return shipped
    raise InputError(
        f"no config file or shipped config named {name_or_path!r}",
        available=config_names(),
    )


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise InputError(
            "invalid run config",
            errors=[f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors()],
        ) from exc


def load_config(name_or_path: str | Path) -> RunConfig:
    path = resolve_config(name_or_path)
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path} is not valid TOML: {exc}") from exc
    logger.debug("loaded config %s", path)
    return parse_config(data)


class ReferenceSample(BaseModel):
    """Room-temperature Hall transport of a film as published."""

    model_config = ConfigDict(frozen=True)

    name: str
    carrier: str
    n: float  # cm^-3
    mu: float  # cm^2/Vs
    resistivity: float  # Ohm cm, listed
    thickness_nm: float


REFERENCE_SAMPLES = (
    ReferenceSample(
        name="n-type ScN", carrier="electrons", n=3e20, mu=67.0, resistivity=0.0003, thickness_nm=250
    ),
    ReferenceSample(
        name="Mg doped ScN-1", carrier="holes", n=2e17, mu=0.2, resistivity=50.0, thickness_nm=200
    ),
    ReferenceSample(
        name="Mg doped ScN-2", carrier="holes", n=5e18, mu=9.7, resistivity=0.127, thickness_nm=220
    ),
)


def resistivity_check(sample: ReferenceSample) -> tuple[float, float, float]:
    """(computed 1/(n e mu), listed, relative mismatch); mismatches are reported, not fixed."""
    computed = 1.0 / (sample.n * ELEMENTARY_CHARGE * sample.mu)
    mismatch = abs(computed - sample.resistivity) / sample.resistivity
    if mismatch > 0.05:
        logger.warning(
            "%s: computed resistivity %.4g Ohm cm differs from listed %.4g",
            sample.name,
            computed,
            sample.resistivity,
        )
    return computed, sample.resistivity, mismatch


# Two-terminal optoelectronic synapses, nW/mm^2.
POWER_DENSITY_BENCHMARKS = {
    "Nb:SrTiO3": 51.0,
    "ZnO/AlO": 22.0,
    "MoS2": 178.0,
    "Si nanocrystals": 0.625,
    "CsPbBr3 QD": 28.0,
    "AlN": 255e9,
    "ScN": 0.13,
    "ScN:Mg": 0.65,
}


def rank_power_density(value: float, label: str = "this device") -> list[tuple[str, float]]:
    """Benchmarks plus `value`, lowest power density first."""
    entries = {**POWER_DENSITY_BENCHMARKS, label: value}
    return sorted(entries.items(), key=lambda item: item[1])
