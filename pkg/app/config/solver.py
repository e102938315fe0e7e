"""
Solver Configuration
Barrier schedule, Newton tolerances, series truncation and enumeration guards.
Every field can be overridden from the environment as DIDCAP_<FIELD_NAME>.
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class SolverSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="DIDCAP_", extra="ignore")

    # Log-barrier interior point (upper bound)
    barrier_mu_start: float = 1e-2
    barrier_mu_final: float = 1e-10
    barrier_mu_factor: float = 10.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 100
    line_search_beta: float = 0.5
    line_search_c: float = 1e-4
    fraction_to_boundary: float = 0.99

    # Series truncation (second entropy term, low-noise expansion)
    series_tol: float = 1e-12
    series_cap: int = 2_000_000

    # Enumeration guards
    max_upper_L: int = 12
    max_enumeration_n: int = 10

    cache_max_entries: int = 256


settings = SolverSettings()
