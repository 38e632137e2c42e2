"""Utility functions and helpers."""

from .config import Settings, get_settings, make_rng
from .errors import ArtifactError, ConfigError, ProverError, ShapeError, ZkCnnError
from .logger import setup_logger
from .validators import check_dims, validate_name

__all__ = [
    "ArtifactError",
    "ConfigError",
    "ProverError",
    "Settings",
    "ShapeError",
    "ZkCnnError",
    "check_dims",
    "get_settings",
    "make_rng",
    "setup_logger",
    "validate_name",
]
