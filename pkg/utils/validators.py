"""Input validation utilities."""

import re
from typing import Iterable, List

from utils.errors import ConfigError

_NAME_PATTERN = re.compile(r"^[a-z0-9][a-z0-9_\-]*$")
_HEX_PATTERN = re.compile(r"^[0-9a-f]*$")

ROLES: List[str] = ["developer", "provider", "tester", "verifier"]


def validate_name(name: str) -> bool:
    """
    Validate a model or tester name.

    Names become file names inside bundle directories, so only lowercase
    letters, digits, underscores and hyphens are allowed.

    Args:
        name: Name to validate

    Returns:
        True if valid, False otherwise
    """
    return bool(_NAME_PATTERN.match(name)) and len(name) <= 64


def normalize_name(name: str) -> str:
    """
    Normalize a name (lowercase, strip whitespace, spaces to hyphens).

    Args:
        name: Name to normalize

    Returns:
        Normalized name
    """
    return re.sub(r"\s+", "-", name.strip().lower())


def is_hex(text: str, length: int = 0) -> bool:
    """True iff text is lowercase hex (of exactly `length` chars when given)."""
    if length and len(text) != length:
        return False
    return bool(_HEX_PATTERN.match(text)) and len(text) % 2 == 0


def check_dims(dims: Iterable[int], cap: int) -> List[int]:
    """
    Validate benchmark dimensions against the configured cap.

    Args:
        dims: Requested matrix dimensions
        cap: Largest accepted dimension

    Returns:
        The dimensions as a list, in the given order

    Raises:
        ConfigError: If a dimension is below 1 or above the cap
    """
    out = [int(d) for d in dims]
    if not out:
        raise ConfigError("at least one --dim is required")
    for d in out:
        if d < 1:
            raise ConfigError(f"dimension {d} must be >= 1")
        if d > cap:
            raise ConfigError(
                f"dimension {d} exceeds the cap of {cap}; raise ZKCNN_BENCH_DIM_CAP to allow it"
            )
    return out
