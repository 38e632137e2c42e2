"""
Shared fixtures.

The end-to-end fixtures run the micro model (3×3 inputs, batch of 2, two
testers) once per session; everything else builds its own tiny instances.
"""

import os
import random

import pytest

from models.cnn import micro_model, random_inputs
from models.schemas import SCHEMA_VERSION, DataFile
from services.pipeline import commit_model, prove_bundle, setup
from utils.config import Settings

MICRO_BATCH = 2
MICRO_TESTERS = 2


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def trials():
    """Trial count for randomized checks; ZKCNN_TEST_TRIALS overrides the default."""

    def count(default: int) -> int:
        return int(os.environ.get("ZKCNN_TEST_TRIALS", default))

    return count


@pytest.fixture(scope="session")
def settings():
    return Settings(ring_degree=64, ring_modulus_bits=60, relu_bits=16, log_level="WARNING")


@pytest.fixture(scope="session")
def micro():
    return micro_model(0)


def make_data(model, tester: str, batch: int, seed: int) -> DataFile:
    inputs, labels = random_inputs(model, batch, seed=seed)
    return DataFile(version=SCHEMA_VERSION, tester=tester, inputs=inputs.tolist(), labels=labels)


@pytest.fixture(scope="session")
def data_factory():
    return make_data


@pytest.fixture(scope="session")
def micro_keys(micro, settings):
    return setup(micro, MICRO_BATCH, MICRO_TESTERS, random.Random(7), settings)


@pytest.fixture(scope="session")
def micro_commitments(micro_keys, micro):
    return commit_model(micro_keys, micro, random.Random(8))


@pytest.fixture(scope="session")
def micro_data(micro):
    return [make_data(micro, f"tester-{t}", MICRO_BATCH, seed=100 + t) for t in range(MICRO_TESTERS)]


@pytest.fixture(scope="session")
def micro_bundles(micro_keys, micro, micro_commitments, micro_data):
    commitments, openings = micro_commitments
    return [
        prove_bundle(micro_keys, micro, commitments, openings, data, random.Random(20 + t))
        for t, data in enumerate(micro_data)
    ]
