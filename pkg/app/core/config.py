# app/core/config.py
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    log_level: str = "INFO"

    # Memory classification
    ltm_threshold_s: float = 60.0
    retention_fraction: float = 0.1
    retention_horizon_s: float = 3600.0

    # Optimizer
    fit_max_iterations: int = 200
    fit_ftol: float = 1e-10
    fit_gtol: float = 1e-8

    sweep_workers: int = 4

    # Tell Pydantic to load environment variables from synapse.env
    model_config = SettingsConfigDict(env_prefix="SYNAPSE_", env_file="synapse.env")


settings = Settings()
