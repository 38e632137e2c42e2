"""
Settings and input validators.

Covers:
  - Settings field validation, env overrides, CLI override copies
  - make_rng determinism
  - name / hex / dimension validators
"""

import random

import pytest
from pydantic import ValidationError

from utils.config import Settings, make_rng
from utils.errors import ConfigError
from utils.validators import check_dims, is_hex, normalize_name, validate_name


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------

class TestSettings:
    """Environment-driven settings."""

    def test_defaults(self):
        s = Settings(_env_file=None)
        assert s.ring_degree == 64
        assert s.relu_bits == 16
        assert s.log_level == "INFO"

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("ZKCNN_RING_DEGREE", "128")
        assert Settings(_env_file=None).ring_degree == 128

    @pytest.mark.parametrize("field,value", [
        ("ring_degree", 3),
        ("ring_degree", 1),
        ("ring_modulus_bits", 4),
        ("ring_modulus_bits", 251),
        ("relu_bits", 1),
        ("relu_bits", 129),
        ("log_level", "LOUD"),
    ])
    def test_rejects_invalid(self, field, value):
        with pytest.raises(ValidationError):
            Settings(_env_file=None, **{field: value})

    def test_log_level_is_uppercased(self):
        assert Settings(_env_file=None, log_level="debug").log_level == "DEBUG"

    def test_override_returns_copy(self):
        base = Settings(_env_file=None)
        changed = base.override(ring_degree=32, seed=None)
        assert changed.ring_degree == 32
        assert base.ring_degree == 64
        assert base.override() is base

    def test_override_validates(self):
        with pytest.raises(ValidationError):
            Settings(_env_file=None).override(ring_degree=6)


class TestRng:
    def test_seeded_rng_is_deterministic(self):
        a, b = make_rng(5), make_rng(5)
        assert [a.randrange(1000) for _ in range(5)] == [b.randrange(1000) for _ in range(5)]
        assert isinstance(a, random.Random)

    def test_unseeded_rng(self):
        assert 0 <= make_rng(None).randrange(10) < 10


# ---------------------------------------------------------------------------
# Validators
# ---------------------------------------------------------------------------

class TestValidators:
    def test_names(self):
        assert validate_name("tester-1")
        assert validate_name("a_b")
        assert not validate_name("-lead")
        assert not validate_name("Upper")
        assert not validate_name("x" * 65)
        assert normalize_name(" Big  Model ") == "big-model"

    def test_hex(self):
        assert is_hex("00ff")
        assert is_hex("ab" * 32, 64)
        assert not is_hex("abc")
        assert not is_hex("AB")
        assert not is_hex("ab", 64)

    def test_dims(self):
        assert check_dims([4, 2], cap=8) == [4, 2]

    @pytest.mark.parametrize("dims", [[], [0], [9]])
    def test_bad_dims(self, dims):
        with pytest.raises(ConfigError):
            check_dims(dims, cap=8)
