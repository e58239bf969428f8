import logging
from functools import lru_cache
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="PALM_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    app_name: str = "PALM Streaming Regression"
    debug: bool = False
    database_url: str = "sqlite:///data/palm.db"
    data_dir: str = "data"
    output_dir: str = "runs"
    workers: int = 2
    log_level: str = "INFO"
    fetch_timeout: int = 30

    @field_validator("data_dir")
    @classmethod
    def warn_missing_data_dir(cls, v: str) -> str:
        if not Path(v).is_dir():
            logger.warning(
                f"PALM_DATA_DIR '{v}' does not exist. Real-world datasets will be unavailable."
            )
        return v

    @field_validator("workers")
    @classmethod
    def check_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("PALM_WORKERS must be at least 1")
        return v

    @field_validator("log_level")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        level = v.upper()
        # getLevelNamesMapping is Python 3.11+; _nameToLevel holds the same mapping.
        levels = getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))()
        if level not in levels:
            raise ValueError(f"unknown log level '{v}'")
        return level


@lru_cache
def get_settings() -> Settings:
    return Settings()
