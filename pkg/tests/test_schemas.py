"""
File schemas.

Covers:
  - DataFile / ModelFile validation and round trip
  - Architecture hashing and derived layout
  - Step-1 degree bound
  - statements, bench records and role material
"""

import numpy as np
import pytest
from pydantic import ValidationError

from models.cnn import LayerSpec, SplitModel
from models.ringpoly import RingParams
from models.schemas import (
    SCHEMA_VERSION,
    Architecture,
    BenchRecord,
    BundleStatement,
    DataFile,
    ModelCommitmentsFile,
    ModelFile,
    RoleConfig,
    Step1Statement,
    step1_degree_bound,
)

RING = RingParams.from_bits(64, 60)


# ---------------------------------------------------------------------------
# Model and data files
# ---------------------------------------------------------------------------

class TestDataFile:
    """A tester's batch."""

    def _make(self, **overrides):
        fields = dict(version=SCHEMA_VERSION, tester="alice", inputs=[[[1]], [[2]]], labels=[0, 1])
        fields.update(overrides)
        return DataFile(**fields)

    def test_valid(self):
        data = self._make()
        assert data.batch_size == 2
        assert data.batch().shape == (2, 1, 1)

    def test_name_is_normalized(self):
        assert self._make(tester="  Tester One ").tester == "tester-one"

    def test_bad_name(self):
        with pytest.raises(ValidationError):
            self._make(tester="../etc")

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            self._make(labels=[0])

    def test_empty_batch(self):
        with pytest.raises(ValidationError):
            self._make(inputs=[], labels=[])

    def test_negative_label(self):
        with pytest.raises(ValidationError):
            self._make(labels=[0, -1])

    def test_version_is_checked(self):
        with pytest.raises(ValidationError):
            self._make(version=2)


class TestModelFile:
    def test_round_trip(self, micro):
        restored = ModelFile.from_model(micro).to_model()
        assert restored.name == micro.name
        assert np.array_equal(restored.prior[0].filters, micro.prior[0].filters)
        assert np.array_equal(restored.later[3].weights, micro.later[3].weights)
        assert restored.later[1].bits == micro.later[1].bits

    def test_json_round_trip(self, micro):
        text = ModelFile.from_model(micro).model_dump_json()
        assert ModelFile.model_validate_json(text).to_model().shapes() == micro.shapes()


# ---------------------------------------------------------------------------
# Architecture
# ---------------------------------------------------------------------------

class TestArchitecture:
    """Public description bound into every artifact."""

    def test_hash_is_stable(self, micro):
        a = Architecture.from_model(micro, 2, RING, 16)
        b = Architecture.from_model(micro, 2, RING, 16)
        assert a.hash_hex() == b.hash_hex()
        assert len(a.hash_hex()) == 64

    def test_hash_depends_on_batch_size(self, micro):
        a = Architecture.from_model(micro, 2, RING, 16)
        b = Architecture.from_model(micro, 3, RING, 16)
        assert a.hash_hex() != b.hash_hex()

    def test_derived_layout(self, micro):
        arch = Architecture.from_model(micro, 2, RING, 16)
        assert arch.layout.L == 8
        assert arch.pool_window == 2
        assert arch.num_classes == 2
        assert [l.kind for l in arch.prior_layers] == ["conv", "square_act", "avgpool"]

    def test_gadget_widths(self, micro):
        arch = Architecture.from_model(micro, 2, RING, 16)
        assert arch.layers[1].bits is None
        assert arch.later_layers[1].bits == 24

    def test_prior_layout_is_enforced(self, micro):
        arch = Architecture.from_model(micro, 2, RING, 16)
        data = arch.model_dump()
        data["layers"][1]["kind"] = "relu"
        with pytest.raises(ValidationError):
            Architecture.model_validate(data)


class TestStep1Degree:
    def test_all_ones_filters(self, micro):
        model = SplitModel(
            name="ones",
            input_dim=3,
            prior=(
                LayerSpec.conv(np.ones((2, 1, 2, 2), dtype=int)),
                LayerSpec("square_act"),
                LayerSpec("avgpool", window=2),
            ),
            later=micro.later,
        )
        # conv output <= 4·255 = 1020, square_act output 1020² + 1020 needs 20 bits
        assert step1_degree_bound(model) == 19

    def test_architecture_carries_bound(self, micro):
        assert Architecture.from_model(micro, 2, RING, 16).step1_degree == step1_degree_bound(micro)


# ---------------------------------------------------------------------------
# Statements and records
# ---------------------------------------------------------------------------

class TestStatements:
    def _statement(self, **overrides):
        fields = dict(
            version=SCHEMA_VERSION,
            tester="alice",
            architecture_hash="ab" * 32,
            batch_size=2,
            labels=[0, 1],
            predictions=[0, 0],
            correct_count=1,
            accuracy=0.5,
            step1=Step1Statement(commitments={}, eval_commitments={}, k="1", digest="00"),
        )
        fields.update(overrides)
        return BundleStatement(**fields)

    def test_valid(self):
        assert self._statement().correct_count == 1

    def test_prediction_count(self):
        with pytest.raises(ValidationError):
            self._statement(predictions=[0])

    def test_correct_count_bound(self):
        with pytest.raises(ValidationError):
            self._statement(correct_count=3)

    def test_commitments_need_hex_hash(self):
        with pytest.raises(ValidationError):
            ModelCommitmentsFile(version=SCHEMA_VERSION, architecture_hash="xyz", commitments={})


class TestBenchRecord:
    def test_csv_row(self):
        rec = BenchRecord(
            scheme="qmp", L=4, trial=0,
            setup_ms=1.23456, prove_ms=2.0, verify_ms=0.5,
            crs_bytes=100, proof_bytes=50,
        )
        row = rec.csv_row()
        assert row["setup_ms"] == "1.235"
        assert row["scheme"] == "qmp"
        assert list(row) == BenchRecord.csv_fields()

    def test_unknown_scheme(self):
        with pytest.raises(ValidationError):
            BenchRecord(
                scheme="plonk", L=4, trial=0, setup_ms=0, prove_ms=0,
                verify_ms=0, crs_bytes=0, proof_bytes=0,
            )


class TestRoleConfig:
    """Each role only sees its own material."""

    def test_verifier_holds_public_material_only(self):
        with pytest.raises(ValidationError):
            RoleConfig(role="verifier", keys_dir="keys", model_path="model.json")

    def test_tester_needs_data(self):
        with pytest.raises(ValidationError):
            RoleConfig(role="tester", keys_dir="keys")

    def test_provider_needs_model(self):
        with pytest.raises(ValidationError):
            RoleConfig(role="provider", keys_dir="keys")

    def test_valid_roles(self):
        assert RoleConfig(role="developer", keys_dir="keys", model_path="m.json").role == "developer"
        assert RoleConfig(role="verifier", keys_dir="keys", bundle_dirs=["b"]).bundle_dirs == ["b"]
