"""Configuration management using pydantic-settings."""

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Run settings loaded from RELNET_* environment variables and .env."""

    model_config = SettingsConfigDict(
        env_prefix="RELNET_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Sampling
    seed: int | None = Field(
        default=None,
        description="Scenario seed; overrides --seed when set",
    )
    samples: int = Field(default=1000, description="Default number of MC scenarios")

    # Execution
    workers: int = Field(default=1, description="Worker processes for scenario evaluation")
    node_limit: int = Field(default=20000, description="Branch-and-bound node limit")

    # Cases Configuration
    cases_config_path: str = Field(
        default="cases.yaml",
        description="Path to case studies configuration file",
    )

    # Logging
    log_level: str = Field(default="INFO", description="Logging level")

    @field_validator("samples", "workers", "node_limit")
    @classmethod
    def at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v


def get_settings() -> Settings:
    """Get run settings."""
    return Settings()
