"""
Commit-and-prove Groth16.

Covers:
  - prove / verify for a committed-only circuit and a circuit with public inputs
  - D is the commitment to the committed block
  - tampering, wrong public inputs, foreign CRS, points off the curve
  - CRS / proof byte encodings and sizes
"""

import random
from dataclasses import replace

import pytest

from py_ecc.optimized_bls12_381 import FQ

from snark.algebra import G1_GEN, gadd, geq
from snark.cap import (
    CapCrs,
    CapProof,
    cap_crs_size,
    cap_prove,
    cap_verify,
    commit_block,
    compile_and_setup,
    io_commitment,
    prove_circuit,
    public_values,
)
from snark.gadgets import gadget_argmax, gadget_square_act
from utils.errors import ArtifactError, ProverError, ShapeError


@pytest.fixture(scope="module")
def square():
    circuit = gadget_square_act(2)
    qap, crs = compile_and_setup(circuit, random.Random(31))
    return circuit, qap, crs


@pytest.fixture(scope="module")
def square_proof(square):
    circuit, qap, crs = square
    return prove_circuit(crs, qap, circuit, {"x[0]": 3, "x[1]": 4}, random.Random(32))


@pytest.fixture(scope="module")
def argmax():
    circuit = gadget_argmax(2, 4)
    qap, crs = compile_and_setup(circuit, random.Random(33))
    return circuit, qap, crs


# ---------------------------------------------------------------------------
# Committed-only circuit
# ---------------------------------------------------------------------------

class TestCommittedCircuit:
    """square_act: every variable is committed, no public inputs."""

    def test_accepts(self, square, square_proof):
        _, _, crs = square
        proof, _, _ = square_proof
        assert crs.vk.num_public == 0
        assert cap_verify(crs.vk, [], proof)

    def test_d_commits_to_block(self, square, square_proof):
        circuit, _, crs = square
        proof, v, assignment = square_proof
        block = [assignment[i] for i in circuit.r1cs.committed_indices]
        assert geq(commit_block(crs, block, v), proof.D)

    def test_rejects_tampered_d(self, square, square_proof):
        _, _, crs = square
        proof, _, _ = square_proof
        assert not cap_verify(crs.vk, [], replace(proof, D=gadd(proof.D, G1_GEN)))

    def test_rejects_point_off_the_curve(self, square, square_proof):
        _, _, crs = square
        proof, _, _ = square_proof
        off = (FQ(1), FQ(1), FQ(1))
        assert not cap_verify(crs.vk, [], replace(proof, A=off))
        assert not cap_verify(crs.vk, [], replace(proof, C=off))

    def test_rejects_point_in_the_wrong_group(self, square, square_proof):
        _, _, crs = square
        proof, _, _ = square_proof
        assert not cap_verify(crs.vk, [], replace(proof, B=G1_GEN))

    def test_wrong_public_count_is_rejected(self, square, square_proof):
        _, _, crs = square
        proof, _, _ = square_proof
        assert not cap_verify(crs.vk, [1], proof)

    def test_unsatisfying_assignment(self, square):
        circuit, qap, crs = square
        w = circuit.solve({"x[0]": 3, "x[1]": 4})
        w[circuit.index_of("y[0]")] = 13
        with pytest.raises(ProverError):
            cap_prove(crs, qap, w, random.Random(0))

    def test_forced_bad_assignment_fails(self, square):
        circuit, qap, crs = square
        w = circuit.solve({"x[0]": 3, "x[1]": 4})
        w[circuit.index_of("y[0]")] = 13
        proof, _ = cap_prove(crs, qap, w, random.Random(0), check=False)
        assert not cap_verify(crs.vk, [], proof)

    def test_foreign_crs(self, square, argmax):
        circuit, qap, _ = square
        _, _, other_crs = argmax
        w = circuit.solve({"x[0]": 1, "x[1]": 1})
        with pytest.raises(ShapeError):
            cap_prove(other_crs, qap, w, random.Random(0))

    def test_block_length(self, square):
        _, _, crs = square
        with pytest.raises(ShapeError):
            commit_block(crs, [1], 0)


# ---------------------------------------------------------------------------
# Public inputs
# ---------------------------------------------------------------------------

class TestPublicInputs:
    """argmax exposes its label as a public input."""

    def test_label_is_bound(self, argmax):
        circuit, qap, crs = argmax
        proof, _, w = prove_circuit(crs, qap, circuit, {"x[0][0]": -3, "x[0][1]": 5}, random.Random(34))
        assert public_values(circuit.r1cs, w) == [1]
        assert cap_verify(crs.vk, [1], proof)
        assert not cap_verify(crs.vk, [0], proof)

    def test_io_commitment_count(self, argmax):
        _, _, crs = argmax
        with pytest.raises(ShapeError):
            io_commitment(crs.vk, [])


# ---------------------------------------------------------------------------
# Encodings
# ---------------------------------------------------------------------------

class TestEncoding:
    def test_proof_bytes(self, square, square_proof):
        _, _, crs = square
        proof, _, _ = square_proof
        data = proof.to_bytes()
        assert len(data) == CapProof.SIZE
        assert cap_verify(crs.vk, [], CapProof.from_bytes(data))

    def test_crs_bytes(self, square):
        circuit, _, crs = square
        data = crs.to_bytes()
        assert len(data) == cap_crs_size(circuit.r1cs)
        back = CapCrs.from_bytes(data)
        assert back.digest == crs.digest
        assert back.N == crs.N
        assert len(back.com_keys) == len(crs.com_keys)

    def test_truncated_proof(self, square_proof):
        proof, _, _ = square_proof
        with pytest.raises(ArtifactError):
            CapProof.from_bytes(proof.to_bytes()[:-1])
