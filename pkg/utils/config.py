"""Runtime settings (environment, .env file and CLI overrides)."""

import random
import secrets
from functools import lru_cache
from typing import Optional, Union

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

Rng = Union[random.Random, secrets.SystemRandom]


class Settings(BaseSettings):
    """
    Toolkit settings.

    Every field can be overridden with an environment variable prefixed by
    ZKCNN_ (for example ZKCNN_RING_DEGREE=128) or through a .env file; CLI
    flags are applied on top with `override`.
    """

    model_config = SettingsConfigDict(env_prefix="ZKCNN_", env_file=".env", extra="ignore")

    ring_degree: int = Field(64, description="Ring degree d of Z_q[x]/(x^d+1)")
    ring_modulus_bits: int = Field(60, description="Bit size of the prime coefficient modulus q")
    relu_bits: int = Field(16, description="Two's-complement window Q for relu/argmax/avgpool gadgets")
    seed: Optional[int] = Field(None, description="Seed for every random choice; unset means OS randomness")
    bench_dim_cap: int = Field(128, description="Largest matrix dimension accepted by the benchmarks")
    bench_trials: int = Field(5, description="Trials per benchmark point")
    log_level: str = Field("INFO", description="Logging level name")

    @field_validator("ring_degree")
    @classmethod
    def validate_ring_degree(cls, v: int) -> int:
        if v < 2 or v & (v - 1):
            raise ValueError("ring_degree must be a power of two >= 2")
        return v

    @field_validator("ring_modulus_bits")
    @classmethod
    def validate_modulus_bits(cls, v: int) -> int:
        # q must stay below the pairing group order (255 bits)
        if not 8 <= v <= 250:
            raise ValueError("ring_modulus_bits must lie in [8, 250]")
        return v

    @field_validator("relu_bits")
    @classmethod
    def validate_relu_bits(cls, v: int) -> int:
        if not 2 <= v <= 128:
            raise ValueError("relu_bits must lie in [2, 128]")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        v = v.upper()
        if v not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {v}")
        return v

    def override(self, **flags) -> "Settings":
        """Return a copy with every non-None flag applied."""
        updates = {k: v for k, v in flags.items() if v is not None}
        if not updates:
            return self
        return Settings.model_validate({**self.model_dump(), **updates})


@lru_cache()
def get_settings() -> Settings:
    """Cached settings instance built from the environment."""
    return Settings()


def make_rng(seed: Optional[int] = None) -> Rng:
    """
    Build the randomness source used by setups and provers.

    Args:
        seed: Fixed seed for reproducible runs, or None for OS randomness

    Returns:
        A random.Random-compatible generator
    """
    if seed is None:
        return secrets.SystemRandom()
    return random.Random(seed)
