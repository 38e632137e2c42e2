"""
Dual commitments and the simultaneous evaluation proof.

Covers:
  - setup / commit capacity checks
  - dual_check on honest and tampered commitments
  - quotient identity, fixed and random
  - prove_eval / verify_eval acceptance and every tampering path
  - byte encodings of keys and proofs
"""

import random
from dataclasses import replace

import pytest

from models.ringpoly import BivariatePoly
from snark.algebra import G1_GEN, P, gadd, geq
from snark.mpoly_commit import (
    CommitKeyS1,
    DualCommitment,
    EvalProof,
    commit,
    dual_check,
    prove_eval,
    quotient,
    quotient_identity_holds,
    s1_setup,
    statement_digest,
    verify_eval,
)
from utils.errors import ArtifactError, ProverError, ShapeError

POLYS = {
    "A": BivariatePoly(((1, -2, 0, 3), (4, 0, 1, 0), (0, 5, 0, -1))),
    "B": BivariatePoly(((7, 0, 0, 1), (0, -3, 2, 2))),
}


@pytest.fixture(scope="module")
def ck():
    return s1_setup(2, 4, random.Random(11))


@pytest.fixture(scope="module")
def opening(ck):
    rands = {"A": 101, "B": 202}
    return prove_eval(ck, POLYS, rands, random.Random(12), digest=statement_digest(b"ctx"))


# ---------------------------------------------------------------------------
# Commitments
# ---------------------------------------------------------------------------

class TestCommit:
    """Capacity checks and the knowledge-of-exponent pairing."""

    def test_setup_rejects_bad_capacity(self):
        with pytest.raises(ShapeError):
            s1_setup(-1, 1, random.Random(0))
        with pytest.raises(ShapeError):
            s1_setup(0, 0, random.Random(0))

    def test_polynomial_must_fit(self, ck):
        too_deep = BivariatePoly(((1,), (0,), (0,), (1,)))
        with pytest.raises(ShapeError):
            commit(too_deep, ck, 1)
        with pytest.raises(ShapeError):
            commit(BivariatePoly.from_slots([1] * 5), ck, 1)

    def test_commitment_is_additive(self, ck):
        a = BivariatePoly.from_slots([1, 2, 3, 4])
        b = BivariatePoly.from_slots([5, 6, 7, 8])
        s = BivariatePoly.from_slots([6, 8, 10, 12])
        both = commit(a, ck, 3) + commit(b, ck, 4)
        assert geq(both.c1, commit(s, ck, 7).c1)

    def test_dual_check(self, ck):
        c = commit(POLYS["A"], ck, 9)
        assert dual_check(ck, [c])
        assert dual_check(ck, [])
        assert not dual_check(ck, [DualCommitment(c.c1, gadd(c.c2, G1_GEN))])

    def test_hex_round_trip(self, ck):
        c = commit(POLYS["B"], ck, 5)
        back = DualCommitment.from_hex(c.to_hex())
        assert geq(back.c1, c.c1) and geq(back.c2, c.c2)

    def test_hex_needs_two_points(self, ck):
        c = commit(POLYS["B"], ck, 5)
        with pytest.raises(ArtifactError):
            DualCommitment.from_hex(c.to_hex()[:1])


class TestQuotient:
    def test_identity(self):
        poly = POLYS["A"]
        t, at_k = quotient(poly, 17)
        assert t.deg_x == poly.deg_x - 1
        assert at_k == poly.eval_x(17)
        assert quotient_identity_holds(poly, t, 17)

    def test_wrong_quotient_fails(self):
        poly = POLYS["A"]
        t, _ = quotient(poly, 17)
        assert not quotient_identity_holds(poly, t, 18)

    def test_constant_polynomial(self):
        t, at_k = quotient(BivariatePoly.from_slots([-1, 2]), 5)
        assert at_k == [P - 1, 2]
        assert t.coeffs == ((0, 0),)


# ---------------------------------------------------------------------------
# Evaluation proof
# ---------------------------------------------------------------------------

class TestEvalProof:
    """Simultaneous evaluation at the transcript point."""

    def test_accepts(self, ck, opening):
        assert verify_eval(ck, opening.statement, opening.proof)

    def test_evaluations_match(self, opening):
        k = opening.k
        assert opening.evaluations["A"] == POLYS["A"].eval_x(k)
        assert opening.statement.names == ["A", "B"]

    def test_rejects_other_point(self, ck, opening):
        bad = replace(opening.statement, k=(opening.k + 1) % P)
        assert not verify_eval(ck, bad, opening.proof)

    def test_rejects_other_statement_digest(self, ck, opening):
        bad = replace(opening.statement, digest=statement_digest(b"other"))
        assert not verify_eval(ck, bad, opening.proof)

    def test_rejects_tampered_response(self, ck, opening):
        assert not verify_eval(ck, opening.statement, replace(opening.proof, e=(opening.proof.e + 1) % P))
        assert not verify_eval(ck, opening.statement, replace(opening.proof, sigma=(opening.proof.sigma + 1) % P))

    def test_rejects_substituted_evaluation(self, ck, opening):
        fake = commit(BivariatePoly.from_slots([1, 1, 1, 1]), ck, opening.eval_rands["A"])
        evals = dict(opening.statement.eval_commitments, A=fake)
        bad = replace(opening.statement, eval_commitments=evals)
        assert not verify_eval(ck, bad, opening.proof)

    def test_rejects_values_traded_between_components(self, ck, opening):
        ev = opening.evaluations
        claimed = {"A": [ev["A"][0] + 777] + ev["A"][1:], "B": [ev["B"][0] - 777] + ev["B"][1:]}
        forged = prove_eval(ck, POLYS, {"A": 101, "B": 202}, random.Random(12),
                            digest=statement_digest(b"ctx"), check=False, claimed=claimed)
        assert forged.k == opening.k
        # the plain sum of the evaluation commitments is unchanged
        honest = [opening.statement.eval_commitments[n].c1 for n in ("A", "B")]
        traded = [forged.statement.eval_commitments[n].c1 for n in ("A", "B")]
        assert geq(gadd(*traded), gadd(*honest))
        assert not verify_eval(ck, forged.statement, forged.proof)

    def test_claimed_evaluations_are_checked(self, ck, opening):
        claimed = {"A": [v + 1 for v in opening.evaluations["A"]]}
        with pytest.raises(ProverError):
            prove_eval(ck, POLYS, {"A": 101, "B": 202}, random.Random(12), claimed=claimed)

    def test_rejects_missing_component(self, ck, opening):
        evals = {"A": opening.statement.eval_commitments["A"]}
        bad = replace(opening.statement, eval_commitments=evals)
        assert not verify_eval(ck, bad, opening.proof)

    def test_empty_bundle(self, ck):
        with pytest.raises(ProverError):
            prove_eval(ck, {}, {}, random.Random(0))

    def test_missing_randomness(self, ck):
        with pytest.raises(ProverError):
            prove_eval(ck, POLYS, {"A": 1}, random.Random(0))

    def test_proof_bytes(self, ck, opening):
        data = opening.proof.to_bytes()
        assert len(data) == 6 + 2 * 48 + 3 * 32
        assert verify_eval(ck, opening.statement, EvalProof.from_bytes(data))

    def test_proof_bytes_trailing_garbage(self, opening):
        with pytest.raises(ArtifactError):
            EvalProof.from_bytes(opening.proof.to_bytes() + b"\x00")

    def test_key_bytes(self, ck):
        back = CommitKeyS1.from_bytes(ck.to_bytes())
        assert (back.d_c, back.n_c) == (2, 4)
        assert geq(back.bases[2][3], ck.bases[2][3])
        assert geq(back.g_hat_star, ck.g_hat_star)


def test_quotient_identity_on_random_bundles(trials):
    rng = random.Random(13)
    for _ in range(trials(50)):
        deg, slots = rng.randrange(6), rng.randrange(1, 5)
        poly = BivariatePoly(tuple(
            tuple(rng.randrange(-1000, 1001) for _ in range(slots)) for _ in range(deg + 1)
        ))
        k = rng.randrange(P)
        t, at_k = quotient(poly, k)
        assert at_k == poly.eval_x(k)
        assert quotient_identity_holds(poly, t, k)
