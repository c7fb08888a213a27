from __future__ import annotations

from typing import Final
from functools import lru_cache

from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    DEV: bool = Field(False)

    VERSION: str = Field("1.0.0")

    LOG_LEVEL: str = Field("INFO")
    LOG_TO_FILE: bool = Field(False)

    WORKERS: int = Field(1, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="CPD_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class SolverSettings(BaseSettings):
    FUSION_RTOL: float = Field(1e-8, gt=0)

    GROUP_TOL: float = Field(1e-8, gt=0)
    MAX_ITER_FACTOR: int = Field(50, ge=1)

    ORACLE_MAX_N: int = Field(64, ge=2)
    ORACLE_TOL: float = Field(1e-12, gt=0)
    ORACLE_MAX_SWEEPS: int = Field(2_000_000, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="SOLVER_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class BoundsSettings(BaseSettings):
    SUB_EXP_CONSTANT: float = Field(2.0, gt=0)
    MC_SLACK_SIGMAS: float = Field(3.0, ge=0)
    CI_LEVEL: float = Field(0.95, gt=0, lt=1)

    model_config = SettingsConfigDict(
        env_prefix="BOUNDS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @model_validator(mode="after")
    def check_level(self):
        if self.CI_LEVEL < 0.5:
            raise ValueError("CI_LEVEL below 0.5 is not a confidence level")
        return self


@lru_cache
def get_settings() -> Settings:
    return Settings()


@lru_cache
def get_solver_settings() -> SolverSettings:
    return SolverSettings()


@lru_cache
def get_bounds_settings() -> BoundsSettings:
    return BoundsSettings()


settings: Final = get_settings()
solver_settings: Final = get_solver_settings()
bounds_settings: Final = get_bounds_settings()
