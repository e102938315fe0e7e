"""
Simulation Configuration
Monte Carlo defaults and worker-pool size. DIDCAP_THREADS caps the workers.
"""
import os

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class SimulationSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="DIDCAP_", extra="ignore")

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    default_n: int = 10**6
    default_samples: int = 10
    default_seed: int = 20240101
    confidence: float = Field(0.95, gt=0.0, lt=1.0)


settings = SimulationSettings()
