import os
from functools import lru_cache
from typing import List

from dotenv import load_dotenv
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    # Application settings
    PROJECT_NAME: str = "HGTIB inverse NFT"
    VERSION: str = "0.1.0"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "info").upper()
    LOG_JSON: bool = os.getenv("LOG_JSON", "False").lower() in ("true", "1", "t")

    # Spectral domain
    MXI: int = 2049
    LXI: float = 40.0

    # Signal interval and the default chirped sech
    SIGNAL_LENGTH: float = 50.0
    CHIRP_AMPLITUDE: float = 5.2
    CHIRP_FACTOR: float = 4.0

    # Solver guards
    CONDITION_LIMIT: float = 1e12

    # Forward oracle
    NEWTON_MAX_ITER: int = 50
    NEWTON_TOL: float = 1e-10
    EIGEN_RE_HALFWIDTH: float = 5.0
    EIGEN_SEED_STEP: float = 0.5
    ORACLE_REFINE: int = 16
    SCATTER_RTOL: float = 1e-13
    SCATTER_ATOL: float = 1e-15
    BOUNDARY_TOL: float = 1e-6

    # Experiment runner
    WORKERS: int = int(os.getenv("WORKERS", "1"))
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "results")
    ACCURACY_TARGET: float = 1e-4
    DEFAULT_LADDER: List[int] = [2**10, 2**11, 2**12, 2**13]

    @field_validator("DEFAULT_LADDER", mode="before")
    @classmethod
    def split_ladder(cls, v):
        if isinstance(v, str) and not v.startswith("["):
            return [int(i.strip()) for i in v.split(",")]
        return v

    # Model configuration
    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
