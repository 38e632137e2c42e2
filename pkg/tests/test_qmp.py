"""
Single-gate quadratic matrix program SNARK.

Covers:
  - field-side oracle of the verification equation
  - prove / verify on satisfied and unsatisfied witnesses
  - binding D to the d1/d2/d3 slots; a substituted slot is caught
  - dimension and program checks
  - serialized sizes, byte round trips and their growth with L
"""

import random
from dataclasses import replace

import numpy as np
import pytest

from py_ecc.optimized_bls12_381 import FQ

from snark.algebra import P, ScalarMatrix, gmul, rand_scalar
from snark.cap import cap_crs_size
from snark.cp_link import link_build_instance, link_prove, link_verify
from snark.gadgets import gadget_matmul_baseline
from snark.qmp import (
    QmpCrs,
    QmpProgram,
    QmpProof,
    QmpWitness,
    _slot_matrix,
    binding_rows,
    binding_witness,
    field_sides,
    qmp_prove,
    qmp_setup,
    qmp_verify,
)
from utils.errors import ProverError, ShapeError

L = 2


def witness(seed: int, dim: int = L) -> QmpWitness:
    rng = random.Random(seed)
    W = ScalarMatrix.random(dim, rng, bound=100)
    X = ScalarMatrix.random(dim, rng, bound=100)
    return QmpWitness(W, X, W @ X)


@pytest.fixture(scope="module")
def crs():
    return qmp_setup(L, random.Random(21))


@pytest.fixture(scope="module")
def proved(crs):
    return qmp_prove(crs, witness(1), random.Random(22))


# ---------------------------------------------------------------------------
# Field-side oracle
# ---------------------------------------------------------------------------

class TestFieldSides:
    """Both sides of the pairing equation, computed in the exponent."""

    def _params(self, seed):
        rng = random.Random(seed)
        return [rand_scalar(rng) for _ in range(8)], ScalarMatrix.random(3, rng)

    def test_balanced_when_satisfied(self):
        scalars, Z = self._params(3)
        wt = witness(4, dim=3)
        lhs, rhs = field_sides(*scalars, Z, wt.W, wt.X, wt.Y)
        assert lhs == rhs

    def test_gap_is_masked_error(self):
        scalars, Z = self._params(5)
        wt = witness(6, dim=3)
        Y_bad = wt.Y.with_entry(1, 2, wt.Y[1, 2] + 1)
        lhs, rhs = field_sides(*scalars, Z, wt.W, wt.X, Y_bad)
        expected = (Z.T @ (wt.W @ wt.X - Y_bad)).trace()
        assert (lhs - rhs) % P == expected
        assert expected != 0

    @pytest.mark.parametrize("dim", [2, 3])
    def test_gap_fuzz(self, dim, trials):
        rng = random.Random(dim)
        for _ in range(trials(100)):
            scalars = [rand_scalar(rng) for _ in range(8)]
            Z, W, X, Y = (ScalarMatrix.random(dim, rng) for _ in range(4))
            lhs, rhs = field_sides(*scalars, Z, W, X, Y)
            assert (lhs - rhs) % P == (Z.T @ (W @ X - Y)).trace()


# ---------------------------------------------------------------------------
# Prove / verify
# ---------------------------------------------------------------------------

class TestQmpProof:
    """Y = W·X proven in one gate."""

    def test_accepts(self, crs, proved):
        proof, v = proved
        assert 0 <= v < P
        assert qmp_verify(crs, proof)

    def test_rejects_swapped_matrices(self, crs, proved):
        proof, _ = proved
        assert not qmp_verify(crs, replace(proof, C=proof.D))

    def test_rejects_proof_for_other_crs(self, proved):
        other = qmp_setup(L, random.Random(99))
        assert not qmp_verify(other, proved[0])

    def test_unsatisfied_witness_refused(self, crs):
        wt = witness(7)
        bad = QmpWitness(wt.W, wt.X, wt.Y.with_entry(0, 0, wt.Y[0, 0] + 1))
        with pytest.raises(ProverError):
            qmp_prove(crs, bad, random.Random(0))

    def test_unsatisfied_witness_fails_verification(self, crs):
        wt = witness(8)
        bad = QmpWitness(wt.W, wt.X, wt.Y.with_entry(1, 0, wt.Y[1, 0] + 1))
        proof, _ = qmp_prove(crs, bad, random.Random(0), check=False)
        assert not qmp_verify(crs, proof)

    def test_dimension_mismatch(self, crs):
        with pytest.raises(ShapeError):
            qmp_prove(crs, witness(9, dim=3), random.Random(0))

    def test_rejects_mismatched_proof_dimension(self, proved):
        big = qmp_setup(1, random.Random(23))
        assert not qmp_verify(big, proved[0])

    def test_rejects_point_off_the_curve(self, crs, proved):
        proof, _ = proved
        off = (FQ(1), FQ(1), FQ(1))
        assert not qmp_verify(crs, replace(proof, A=proof.A.with_entry(0, 0, off)))


def label(name, i, j):
    return f"{name}[{i}][{j}]"


class TestSlotBinding:
    """D and the d1/d2/d3 slots open over one (W, X, Y, v)."""

    W = ScalarMatrix([[1, 2], [3, 4]])
    X = ScalarMatrix([[5, 6], [7, 8]])

    @pytest.fixture(scope="class")
    def honest(self, crs):
        wt = QmpWitness(self.W, self.X, self.W @ self.X)
        proof, v = qmp_prove(crs, wt, random.Random(40))
        return wt, proof, v

    def test_rows(self, crs, honest):
        _, proof, _ = honest
        rows = binding_rows(crs, proof, label, "v")
        assert len(rows) == L + 3 * L * L
        assert len(rows[0].terms) == 2 * L + 2

    def test_honest_proof_links(self, crs, honest):
        wt, proof, v = honest
        inst = link_build_instance(binding_rows(crs, proof, label, "v"))
        values = binding_witness(wt, v, label, "v")
        assert inst.is_satisfied(values)
        assert link_verify(inst, link_prove(inst, values, random.Random(41)))

    def test_substituted_output_slot(self, crs, honest):
        wt, proof, v = honest
        fake_Y = ScalarMatrix([[0, 0], [0, 999]])
        forged = replace(proof, d3=_slot_matrix(crs.g_one_gamma, fake_Y, gmul(crs.g_eta_gamma, v)))
        # the pairing equation alone never reads d3
        assert qmp_verify(crs, forged)

        inst = link_build_instance(binding_rows(crs, forged, label, "v"))
        claimed = binding_witness(QmpWitness(wt.W, wt.X, fake_Y), v, label, "v")
        assert not inst.is_satisfied(claimed)
        assert not inst.is_satisfied(binding_witness(wt, v, label, "v"))
        assert not link_verify(inst, link_prove(inst, claimed, random.Random(42), check=False))

    def test_substituted_weight_slot(self, crs, honest):
        wt, proof, v = honest
        fake_W = wt.W.with_entry(0, 1, 7)
        forged = replace(proof, d1=_slot_matrix(crs.g_beta_gamma, fake_W, gmul(crs.g_eta_gamma, v)))
        inst = link_build_instance(binding_rows(crs, forged, label, "v"))
        claimed = binding_witness(QmpWitness(fake_W, wt.X, wt.Y), v, label, "v")
        assert not link_verify(inst, link_prove(inst, claimed, random.Random(43), check=False))

    def test_dimension_mismatch(self, honest):
        _, proof, _ = honest
        with pytest.raises(ShapeError):
            binding_rows(qmp_setup(1, random.Random(23)), proof, label, "v")


class TestProgram:
    def test_single_gate_only(self):
        with pytest.raises(ShapeError):
            QmpProgram(2, gates=2)
        with pytest.raises(ShapeError):
            QmpProgram(0)
        assert QmpProgram(4).basis_values() == (1, 1, 1)


class TestEncoding:
    """Byte sizes are fixed by the dimension."""

    def test_proof_size(self, proved):
        proof, _ = proved
        data = proof.to_bytes()
        assert len(data) == QmpProof.serialized_size(L)
        back = QmpProof.from_bytes(data)
        assert back.dim == L
        assert back.B.group == "G2"

    def test_crs_size(self, crs):
        data = crs.to_bytes()
        assert len(data) == QmpCrs.serialized_size(L)
        assert QmpCrs.from_bytes(data).L == L

    def test_size_formula(self):
        assert QmpProof.serialized_size(1) == 10 + 6 * 48 + 96
        assert QmpCrs.serialized_size(1) == 10 + 10 * 48 + 4 * 96 + 3 * 48 + 576


def loglog_slope(sizes):
    dims = sorted(sizes)
    return float(np.polyfit(np.log(dims), np.log([sizes[d] for d in dims]), 1)[0])


class TestScaling:
    def test_crs_grows_quadratically(self):
        sizes = {dim: QmpCrs.serialized_size(dim) for dim in (8, 16, 32, 64)}
        assert abs(loglog_slope(sizes) - 2.0) <= 0.1

    @pytest.mark.slow
    def test_baseline_crs_grows_cubically(self):
        sizes = {dim: cap_crs_size(gadget_matmul_baseline(dim).r1cs) for dim in (8, 16, 32, 64)}
        assert abs(loglog_slope(sizes) - 3.0) <= 0.15
