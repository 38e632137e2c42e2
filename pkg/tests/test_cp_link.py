"""
Linking proofs across commitment keys.

Covers:
  - instance construction and validation
  - prove / verify; wrong and missing witnesses
  - simulated transcripts (honest-verifier zero knowledge)
  - witness extraction from two transcripts (special soundness)
"""

import random
from dataclasses import replace

import pytest

from snark.algebra import G1_GEN, G1_ZERO, P, gmul, sparse_msm
from snark.cp_link import (
    LinkedCommitment,
    LinkProof,
    check_transcript,
    commit_round,
    extract,
    link_build_instance,
    link_prove,
    link_verify,
    pair_rows,
    respond,
    simulate,
)
from utils.errors import ProverError, ShapeError

# independent bases for two "keys"
KEY_A = [gmul(G1_GEN, 1000 + i) for i in range(3)]
KEY_B = [gmul(G1_GEN, 2000 + i) for i in range(3)]
WITNESS = {"a": 5, "b": 11, "r1": 77, "r2": 99}


def linked(bases, labels, witness=WITNESS):
    value = sparse_msm(((b, witness[l]) for b, l in zip(bases, labels)), G1_ZERO)
    return LinkedCommitment(value, tuple(zip(bases, labels)))


def instance(witness=WITNESS):
    left = linked(KEY_A, ["a", "b", "r1"], witness)
    right = linked(KEY_B, ["a", "b", "r2"], witness)
    return link_build_instance(left, right)


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

class TestInstance:
    def test_columns_are_union_in_order(self):
        inst = instance()
        assert inst.columns == ("a", "b", "r1", "r2")
        assert inst.shape == (2, 4)
        assert inst.is_satisfied(WITNESS)

    def test_basis_matrix_has_identity_gaps(self):
        matrix = instance().basis_matrix()
        assert matrix[0][3] == G1_ZERO
        assert matrix[1][2] == G1_ZERO

    def test_empty(self):
        with pytest.raises(ShapeError):
            link_build_instance()

    def test_row_without_terms(self):
        with pytest.raises(ShapeError):
            link_build_instance(LinkedCommitment(G1_ZERO, ()))

    def test_repeated_label(self):
        with pytest.raises(ShapeError):
            link_build_instance(linked(KEY_A[:2], ["a", "a"]))

    def test_pair_rows_lengths(self):
        row = linked(KEY_A, ["a", "b", "r1"])
        with pytest.raises(ShapeError):
            pair_rows([row], [])
        assert pair_rows([row], [linked(KEY_B, ["a", "b", "r2"])]).shape == (2, 4)


# ---------------------------------------------------------------------------
# Prove / verify
# ---------------------------------------------------------------------------

class TestLinkProof:
    """Commitments under different keys open to the same values."""

    def test_accepts(self):
        inst = instance()
        assert link_verify(inst, link_prove(inst, WITNESS, random.Random(1)))

    def test_rejects_other_instance(self):
        proof = link_prove(instance(), WITNESS, random.Random(2))
        other = instance({**WITNESS, "r2": 100})
        assert not link_verify(other, proof)

    def test_rejects_tampered_response(self):
        inst = instance()
        proof = link_prove(inst, WITNESS, random.Random(3))
        z = list(proof.z)
        z[0] = (z[0] + 1) % P
        assert not link_verify(inst, replace(proof, z=tuple(z)))

    def test_context_is_bound(self):
        inst = instance()
        proof = link_prove(inst, WITNESS, random.Random(9), context=b"proof bytes")
        assert link_verify(inst, proof, context=b"proof bytes")
        assert not link_verify(inst, proof, context=b"other bytes")
        assert not link_verify(inst, proof)

    def test_rejects_wrong_shape(self):
        inst = instance()
        proof = link_prove(inst, WITNESS, random.Random(4))
        assert not link_verify(inst, replace(proof, z=proof.z[:-1]))

    def test_mismatched_values_are_refused(self):
        left = linked(KEY_A, ["a", "b", "r1"])
        right = linked(KEY_B, ["a", "b", "r2"], {**WITNESS, "a": 6})
        inst = link_build_instance(left, right)
        assert not inst.is_satisfied(WITNESS)
        with pytest.raises(ProverError):
            link_prove(inst, WITNESS, random.Random(5))

    def test_mismatched_values_fail_verification(self):
        left = linked(KEY_A, ["a", "b", "r1"])
        right = linked(KEY_B, ["a", "b", "r2"], {**WITNESS, "a": 6})
        inst = link_build_instance(left, right)
        proof = link_prove(inst, WITNESS, random.Random(6), check=False)
        assert not link_verify(inst, proof)

    def test_missing_label(self):
        with pytest.raises(ProverError):
            link_prove(instance(), {"a": 5}, random.Random(7))

    def test_bytes(self):
        inst = instance()
        proof = link_prove(inst, WITNESS, random.Random(8))
        assert link_verify(inst, LinkProof.from_bytes(proof.to_bytes()))


# ---------------------------------------------------------------------------
# Zero knowledge and soundness
# ---------------------------------------------------------------------------

class TestSimulationAndExtraction:
    def test_simulated_transcript(self):
        inst = instance()
        fake = simulate(inst, random.Random(9))
        assert check_transcript(inst, fake.R, fake.e, fake.z)
        assert not link_verify(inst, fake)

    def test_extract_recovers_witness(self):
        inst = instance()
        R, rho = commit_round(inst, random.Random(10))
        first = LinkProof(R, 777, respond(inst, rho, WITNESS, 777))
        second = LinkProof(R, 12345, respond(inst, rho, WITNESS, 12345))
        assert check_transcript(inst, first.R, first.e, first.z)
        assert check_transcript(inst, second.R, second.e, second.z)
        assert extract(inst, first, second) == WITNESS

    def test_extract_needs_shared_first_message(self):
        inst = instance()
        a = link_prove(inst, WITNESS, random.Random(11))
        b = link_prove(inst, WITNESS, random.Random(12))
        with pytest.raises(ShapeError):
            extract(inst, a, b)

    def test_extract_needs_different_challenges(self):
        inst = instance()
        a = link_prove(inst, WITNESS, random.Random(13))
        with pytest.raises(ShapeError):
            extract(inst, a, a)