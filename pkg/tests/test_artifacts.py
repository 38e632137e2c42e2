"""
Artifact directories.

Covers:
  - keys, commitments, bundles and aggregates written and read back
  - manifest checks (altered, missing and foreign files)
  - model and data files
"""

import json

import pytest

from models.cnn import micro_model
from models.schemas import DataFile
from services import artifacts
from services.artifacts import (
    COMMITMENTS,
    MANIFEST,
    OPENINGS,
    check_manifest,
    load_data,
    load_model,
    read_aggregate,
    read_bundle,
    read_commitments,
    read_json,
    read_keys,
    read_openings,
    save_model,
    write_aggregate,
    write_bundle,
    write_commitments,
    write_json,
    write_keys,
)
from services.pipeline import aggregate_bundles
from utils.errors import ArtifactError


@pytest.fixture(scope="module")
def keys_dir(tmp_path_factory, micro_keys):
    return write_keys(tmp_path_factory.mktemp("keys"), micro_keys)


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory, micro_bundles):
    return write_bundle(tmp_path_factory.mktemp("bundle"), micro_bundles[0])


def flip_byte(path):
    data = bytearray(path.read_bytes())
    data[len(data) // 2] ^= 0x01
    path.write_bytes(bytes(data))


# ---------------------------------------------------------------------------
# Keys
# ---------------------------------------------------------------------------

class TestKeys:
    def test_round_trip(self, keys_dir, micro_keys):
        keys = read_keys(keys_dir)
        assert keys.arch.hash_hex() == micro_keys.arch.hash_hex()
        assert keys.ck_s1.to_bytes() == micro_keys.ck_s1.to_bytes()
        assert keys.agg.to_bytes() == micro_keys.agg.to_bytes()
        for rel in micro_keys.plan.qmp_dims:
            assert keys.qmp[rel].to_bytes() == micro_keys.qmp[rel].to_bytes()
        for rel in micro_keys.plan.cap_relations:
            assert keys.cap[rel].to_bytes() == micro_keys.cap[rel].to_bytes()

    def test_manifest_lists_every_key(self, keys_dir, micro_keys):
        manifest = check_manifest(keys_dir, "keys", micro_keys.arch.hash_hex())
        assert "architecture.json" in manifest.files
        assert "keys/cap.later.1.relu.bin" in manifest.files
        assert "keys/qmp.prior.conv.bin" in manifest.files

    def test_wrong_kind(self, keys_dir):
        with pytest.raises(ArtifactError, match="expected bundle"):
            check_manifest(keys_dir, "bundle")

    def test_foreign_architecture(self, keys_dir):
        with pytest.raises(ArtifactError):
            check_manifest(keys_dir, "keys", "0" * 64)

    def test_altered_key(self, tmp_path, micro_keys):
        root = write_keys(tmp_path, micro_keys)
        flip_byte(root / "keys" / "agg.bin")
        with pytest.raises(ArtifactError, match="manifest hash"):
            read_keys(root)

    def test_missing_manifest(self, tmp_path, micro_keys):
        root = write_keys(tmp_path, micro_keys)
        (root / MANIFEST).unlink()
        with pytest.raises(ArtifactError, match="missing"):
            read_keys(root)


# ---------------------------------------------------------------------------
# Commitments
# ---------------------------------------------------------------------------

class TestCommitments:
    def test_openings_stay_out_of_the_manifest(self, tmp_path, micro_commitments):
        commitments, openings = micro_commitments
        write_commitments(tmp_path, commitments, openings)
        manifest = check_manifest(tmp_path, "commitments")
        assert list(manifest.files) == [COMMITMENTS]
        assert (tmp_path / OPENINGS).is_file()
        assert read_commitments(tmp_path, commitments.architecture_hash) == commitments
        assert read_openings(tmp_path).scalars() == openings.scalars()

    def test_public_only(self, tmp_path, micro_commitments):
        commitments, _ = micro_commitments
        write_commitments(tmp_path, commitments)
        assert not (tmp_path / OPENINGS).exists()
        with pytest.raises(ArtifactError):
            read_openings(tmp_path)


# ---------------------------------------------------------------------------
# Bundles and aggregates
# ---------------------------------------------------------------------------

class TestBundle:
    def test_round_trip(self, bundle_dir, micro_bundles):
        original = micro_bundles[0]
        bundle = read_bundle(bundle_dir, original.statement.architecture_hash)
        assert bundle.statement == original.statement
        assert bundle.eval_proof.to_bytes() == original.eval_proof.to_bytes()
        assert set(bundle.qmp) == set(original.qmp)
        assert set(bundle.cap) == set(original.cap)
        assert set(bundle.links) == set(original.links)
        for rel, proof in original.cap.items():
            assert bundle.cap[rel].to_bytes() == proof.to_bytes()
        for edge, proof in original.links.items():
            assert bundle.links[edge].to_bytes() == proof.to_bytes()

    def test_flipped_byte(self, tmp_path, micro_bundles):
        root = write_bundle(tmp_path, micro_bundles[0])
        flip_byte(root / "links" / "prior.step1--prior.conv.bin")
        with pytest.raises(ArtifactError):
            read_bundle(root)

    def test_deleted_link_is_missing(self, tmp_path, micro_bundles):
        root = write_bundle(tmp_path, micro_bundles[0])
        manifest = json.loads((root / MANIFEST).read_text())
        del manifest["files"]["links/prior.conv--prior.square.bin"]
        (root / MANIFEST).write_text(json.dumps(manifest))
        (root / "links" / "prior.conv--prior.square.bin").unlink()
        bundle = read_bundle(root)
        assert "prior.conv--prior.square" not in bundle.links
        assert len(bundle.links) == len(micro_bundles[0].links) - 1

    def test_unknown_proof_file(self, tmp_path, micro_bundles):
        root = write_bundle(tmp_path, micro_bundles[0])
        (root / "proofs" / "extra.bin").write_bytes(b"JUNKJUNK")
        manifest = json.loads((root / MANIFEST).read_text())
        manifest["files"]["proofs/extra.bin"] = artifacts.sha256_file(root / "proofs" / "extra.bin")
        (root / MANIFEST).write_text(json.dumps(manifest))
        with pytest.raises(ArtifactError, match="neither"):
            read_bundle(root)


class TestAggregate:
    def test_round_trip(self, tmp_path, micro_keys, micro_bundles):
        proofs = aggregate_bundles(micro_keys, micro_bundles)
        arch_hash = micro_keys.arch.hash_hex()
        testers = [b.tester for b in micro_bundles]
        write_aggregate(tmp_path, arch_hash, testers, proofs)
        index, back = read_aggregate(tmp_path, arch_hash)
        assert index.testers == testers
        assert index.relations == list(proofs)
        for rel, proof in proofs.items():
            assert back[rel].to_bytes() == proof.to_bytes()


# ---------------------------------------------------------------------------
# Model and data files
# ---------------------------------------------------------------------------

class TestPlainFiles:
    def test_model_round_trip(self, tmp_path):
        model = micro_model(3)
        save_model(tmp_path / "model.json", model)
        back = load_model(tmp_path / "model.json")
        assert back.name == model.name
        assert back.split_index == model.split_index
        assert (back.prior[0].filters == model.prior[0].filters).all()

    def test_data_file(self, tmp_path, micro_data):
        write_json(tmp_path / "data.json", micro_data[0])
        assert load_data(tmp_path / "data.json") == micro_data[0]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ArtifactError, match="missing"):
            read_json(tmp_path / "nope.json", DataFile)

    def test_not_json(self, tmp_path):
        (tmp_path / "bad.json").write_text("{not json")
        with pytest.raises(ArtifactError, match="not valid JSON"):
            read_json(tmp_path / "bad.json", DataFile)
