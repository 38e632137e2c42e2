"""
Dual-group commitments to bivariate polynomials and the simultaneous
evaluation proof (Step 1 of the encrypted-data pipeline).

A bundle of named component polynomials (for PriorNet: W, X, Y1, Y2, Y3, R)
is committed, a challenge point k is derived from the commitments, and the
prover shows that the commitments to L(k, y) of every component open
consistently with the committed L(x, y). Components are folded with powers
of a transcript challenge ρ before the quotient argument, so no two of them
can trade value at k.
"""

import hashlib
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from snark import codec
from snark.algebra import (
    G1_GEN,
    G1_ZERO,
    G2_GEN,
    P,
    G1Point,
    G2Point,
    Scalar,
    gadd,
    gmul,
    gneg,
    gsub,
    gt_inv,
    gt_mul,
    gt_pow,
    pair,
    pairing_check,
    rand_scalar,
    sparse_msm,
)
from snark.transcript import Transcript
from models.ringpoly import BivariatePoly, bivariate_add
from utils.config import Rng
from utils.errors import ArtifactError, ProverError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

KEY_MAGIC = b"S1CK"
PROOF_MAGIC = b"EVLP"
_K_LABEL = b"zkcnn/step1"
_BATCH_LABEL = b"zkcnn/step1-dual-batch"


@dataclass(frozen=True)
class CommitKeyS1:
    """
    Commitment key for polynomials of x-degree <= d_c over n_c slots.

    bases[i][j] = g^{s^i t^j}; bases_hat[i][j] = bases[i][j]^α;
    h_hat = h^α; g_hat_star = g*^α; g_star_1 = g*^s; h_1 = h^s.
    """

    d_c: int
    n_c: int
    g: G1Point
    h: G1Point
    h_hat: G1Point
    h_1: G1Point
    g_star: G2Point
    g_hat_star: G2Point
    g_star_1: G2Point
    bases: Tuple[Tuple[G1Point, ...], ...]
    bases_hat: Tuple[Tuple[G1Point, ...], ...]

    def fits(self, poly: BivariatePoly) -> bool:
        return poly.deg_x <= self.d_c and poly.slots <= self.n_c

    def to_bytes(self) -> bytes:
        w = codec.Writer().header(KEY_MAGIC).u32(self.d_c).u32(self.n_c)
        for pt in (self.g, self.h, self.h_hat, self.h_1):
            w.g1(pt)
        for pt in (self.g_star, self.g_hat_star, self.g_star_1):
            w.g2(pt)
        for row in self.bases:
            for pt in row:
                w.g1(pt)
        for row in self.bases_hat:
            for pt in row:
                w.g1(pt)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CommitKeyS1":
        r = codec.Reader(data)
        r.header(KEY_MAGIC)
        d_c, n_c = r.u32(), r.u32()
        g, h, h_hat, h_1 = r.g1(), r.g1(), r.g1(), r.g1()
        g_star, g_hat_star, g_star_1 = r.g2(), r.g2(), r.g2()
        bases = tuple(tuple(r.g1() for _ in range(n_c)) for _ in range(d_c + 1))
        bases_hat = tuple(tuple(r.g1() for _ in range(n_c)) for _ in range(d_c + 1))
        r.done()
        return cls(d_c, n_c, g, h, h_hat, h_1, g_star, g_hat_star, g_star_1, bases, bases_hat)


@dataclass(frozen=True)
class DualCommitment:
    c1: G1Point
    c2: G1Point

    def __add__(self, other: "DualCommitment") -> "DualCommitment":
        return DualCommitment(gadd(self.c1, other.c1), gadd(self.c2, other.c2))

    def to_hex(self) -> List[str]:
        return [codec.g1_hex(self.c1), codec.g1_hex(self.c2)]

    @classmethod
    def from_hex(cls, values: Sequence[str]) -> "DualCommitment":
        if len(values) != 2:
            raise ArtifactError("dual commitment needs two points")
        return cls(codec.g1_from_hex(values[0]), codec.g1_from_hex(values[1]))


@dataclass(frozen=True)
class EvalProof:
    c_t: DualCommitment
    e: Scalar
    sigma: Scalar
    tau: Scalar

    def to_bytes(self) -> bytes:
        return (
            codec.Writer().header(PROOF_MAGIC)
            .g1(self.c_t.c1).g1(self.c_t.c2)
            .scalar(self.e).scalar(self.sigma).scalar(self.tau)
            .getvalue()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "EvalProof":
        r = codec.Reader(data)
        r.header(PROOF_MAGIC)
        c_t = DualCommitment(r.g1(), r.g1())
        e, sigma, tau = r.scalar(), r.scalar(), r.scalar()
        r.done()
        return cls(c_t, e, sigma, tau)


@dataclass(frozen=True)
class EvalStatement:
    """
    Public side of a Step-1 proof.

    Args:
        commitments: Component name -> commitment to L(x, y)
        eval_commitments: Component name -> commitment to L(k, y)
        k: Evaluation point
        digest: Digest of the public statement the point is bound to
    """

    commitments: Dict[str, DualCommitment]
    eval_commitments: Dict[str, DualCommitment]
    k: Scalar
    digest: bytes = b""

    @property
    def names(self) -> List[str]:
        return list(self.commitments)


@dataclass
class EvalOpening:
    """Prover-side result of prove_eval: what the next steps need to keep proving."""

    statement: EvalStatement
    proof: EvalProof
    evaluations: Dict[str, List[Scalar]]
    rands: Dict[str, Scalar]
    eval_rands: Dict[str, Scalar]

    @property
    def k(self) -> Scalar:
        return self.statement.k


def statement_digest(*parts: bytes) -> bytes:
    """sha256 over length-framed parts."""
    h = hashlib.sha256()
    for part in parts:
        h.update(len(part).to_bytes(8, "little") + part)
    return h.digest()


# ---------------------------------------------------------------------------
# Setup and commit
# ---------------------------------------------------------------------------

def s1_setup(d_c: int, n_c: int, rng: Rng) -> CommitKeyS1:
    """
    Generate a commitment key; the trapdoor (α, s, t) never leaves this call.

    Args:
        d_c: Maximum x-degree
        n_c: Maximum number of slots
        rng: Randomness source
    """
    if d_c < 0 or n_c < 1:
        raise ShapeError(f"invalid key capacity d_c={d_c}, n_c={n_c}")
    alpha, s, t = (rand_scalar(rng) for _ in range(3))
    g, g_star = G1_GEN, G2_GEN
    h = gmul(g, rand_scalar(rng))
    bases, bases_hat = [], []
    s_pow = 1
    for _ in range(d_c + 1):
        row, row_hat = [], []
        st = s_pow
        for _ in range(n_c):
            row.append(gmul(g, st))
            row_hat.append(gmul(g, st * alpha))
            st = st * t % P
        bases.append(tuple(row))
        bases_hat.append(tuple(row_hat))
        s_pow = s_pow * s % P
    logger.info(f"Step-1 commitment key ready: d_c={d_c}, n_c={n_c}, {2 * (d_c + 1) * n_c} bases")
    return CommitKeyS1(
        d_c=d_c,
        n_c=n_c,
        g=g,
        h=h,
        h_hat=gmul(h, alpha),
        h_1=gmul(h, s),
        g_star=g_star,
        g_hat_star=gmul(g_star, alpha),
        g_star_1=gmul(g_star, s),
        bases=tuple(bases),
        bases_hat=tuple(bases_hat),
    )


def commit(poly: BivariatePoly, ck: CommitKeyS1, rand: Scalar) -> DualCommitment:
    """
    C1 = h^r · Π g_{i,j}^{l_{i,j}}, C2 = ĥ^r · Π ĝ_{i,j}^{l_{i,j}}.

    Raises:
        ShapeError: If the polynomial exceeds the key capacity
    """
    if not ck.fits(poly):
        raise ShapeError(
            f"polynomial (deg_x={poly.deg_x}, slots={poly.slots}) exceeds key (d_c={ck.d_c}, n_c={ck.n_c})"
        )
    terms = [
        (i, j, c)
        for i in range(poly.deg_x + 1)
        for j, c in enumerate(poly.coeffs[i])
        if c % P
    ]
    c1 = sparse_msm([(ck.h, rand)] + [(ck.bases[i][j], c) for i, j, c in terms], G1_ZERO)
    c2 = sparse_msm([(ck.h_hat, rand)] + [(ck.bases_hat[i][j], c) for i, j, c in terms], G1_ZERO)
    return DualCommitment(c1, c2)


def dual_check(ck: CommitKeyS1, commitments: Sequence[DualCommitment]) -> bool:
    """
    e(C1, ĝ*) == e(C2, g*) for every commitment, batched with hash-derived
    weights into two pairings.
    """
    if not commitments:
        return True
    t = Transcript(_BATCH_LABEL)
    for c in commitments:
        t.absorb_points(b"dual", (c.c1, c.c2))
    acc1, acc2 = G1_ZERO, G1_ZERO
    for c in commitments:
        rho = t.challenge(b"rho")
        acc1 = gadd(acc1, gmul(c.c1, rho))
        acc2 = gadd(acc2, gmul(c.c2, rho))
    return pairing_check([(acc1, ck.g_hat_star), (gneg(acc2), ck.g_star)])


# ---------------------------------------------------------------------------
# Evaluation proof
# ---------------------------------------------------------------------------

def quotient(poly: BivariatePoly, k: Scalar) -> Tuple[BivariatePoly, List[Scalar]]:
    """
    Divide every slot's x-polynomial by (x − k).

    Returns:
        (T, L(k, y)) with (x − k)·T(x, y) + L(k, y) == L(x, y)
    """
    slots = poly.slots
    if poly.deg_x == 0:
        return BivariatePoly.zero(slots), [c % P for c in poly.coeffs[0]]
    rows: List[List[int]] = [[0] * slots for _ in range(poly.deg_x)]
    for j in range(slots):
        acc = poly.coeff(poly.deg_x, j) % P
        for i in range(poly.deg_x - 1, -1, -1):
            rows[i][j] = acc
            acc = (poly.coeff(i, j) + k * acc) % P
    return BivariatePoly(tuple(tuple(r) for r in rows)), poly.eval_x(k)


def quotient_identity_holds(poly: BivariatePoly, t: BivariatePoly, k: Scalar) -> bool:
    """Coefficientwise check of (x − k)·T + L(k, y) == L."""
    at_k = poly.eval_x(k)
    for j in range(poly.slots):
        for i in range(max(poly.deg_x, t.deg_x + 1) + 1):
            lhs = (t.coeff(i - 1, j) - k * t.coeff(i, j)) if i else (-k * t.coeff(0, j) + at_k[j])
            if (lhs - poly.coeff(i, j)) % P:
                return False
    return True


def _point_transcript(ck: CommitKeyS1, commitments: Mapping[str, DualCommitment], digest: bytes) -> Transcript:
    t = Transcript(_K_LABEL)
    t.absorb_int(b"d_c", ck.d_c)
    t.absorb_int(b"n_c", ck.n_c)
    t.absorb(b"statement", digest)
    for name, c in commitments.items():
        t.absorb(b"name", name.encode())
        t.absorb_points(b"commitment", (c.c1, c.c2))
    return t


def _fold_weights(t: Transcript, eval_commitments: Mapping[str, DualCommitment]) -> List[Scalar]:
    """
    Absorb the evaluation commitments and squeeze ρ; component i enters the
    folded bundle with weight ρ^i, in the order of the commitments.
    """
    for name, c in eval_commitments.items():
        t.absorb(b"name", name.encode())
        t.absorb_points(b"eval-commitment", (c.c1, c.c2))
    rho = t.challenge_nonzero(b"rho")
    return [pow(rho, i, P) for i in range(len(eval_commitments))]


def _fold_c1(commitments: Sequence[DualCommitment], weights: Sequence[Scalar]) -> G1Point:
    return sparse_msm(((c.c1, w) for c, w in zip(commitments, weights)), G1_ZERO)


def _response_challenge(
    t: Transcript,
    c_l1: G1Point,
    c_l1k: G1Point,
    c_t: DualCommitment,
    u,
    k: Scalar,
) -> Scalar:
    t.absorb_g1(b"C_L1", c_l1)
    t.absorb_g1(b"C_L1k", c_l1k)
    t.absorb_points(b"C_T", (c_t.c1, c_t.c2))
    t.absorb_gt(b"U", u)
    t.absorb_scalar(b"k", k)
    return t.challenge(b"e")


def _h_bar(ck: CommitKeyS1, k: Scalar) -> G1Point:
    """ḡ = h^{s−k} = h_1 / h^k."""
    return gsub(ck.h_1, gmul(ck.h, k))


def prove_eval(
    ck: CommitKeyS1,
    polys: Mapping[str, BivariatePoly],
    rands: Mapping[str, Scalar],
    rng: Rng,
    digest: bytes = b"",
    check: bool = True,
    claimed: Optional[Mapping[str, Sequence[Scalar]]] = None,
) -> EvalOpening:
    """
    Commit to a bundle, derive k and prove simultaneous evaluation at k.

    Args:
        ck: Commitment key
        polys: Component polynomials, all with the same slot count
        rands: Commitment randomness per component
        rng: Randomness for evaluation commitments and the sigma protocol
        digest: Public statement digest bound into k
        check: Verify the quotient identity and the evaluations before committing
        claimed: Evaluations to commit to in place of L(k, y) for some components
            (with check off, only to test soundness)

    Returns:
        EvalOpening holding the public statement, the proof and the
        prover-side openings of the evaluation commitments

    Raises:
        ProverError: If the bundle is empty, or with check a claimed evaluation
            is wrong or the quotient identity fails
    """
    if not polys:
        raise ProverError("step1", "empty polynomial bundle")
    if set(polys) != set(rands):
        raise ProverError("step1", "randomness missing for some components")

    commitments = {name: commit(poly, ck, rands[name]) for name, poly in polys.items()}
    t = _point_transcript(ck, commitments, digest)
    k = t.challenge(b"k")
    logger.debug(f"step1: derived evaluation point over {len(polys)} components")

    evaluations: Dict[str, List[Scalar]] = {}
    eval_rands: Dict[str, Scalar] = {}
    eval_commitments: Dict[str, DualCommitment] = {}
    for name, poly in polys.items():
        evaluations[name] = poly.eval_x(k)
        if claimed and name in claimed:
            if check and [v % P for v in claimed[name]] != evaluations[name]:
                raise ProverError("step1", f"claimed evaluations of {name} differ from L(k, y)")
            evaluations[name] = [v % P for v in claimed[name]]
        eval_rands[name] = rand_scalar(rng)
        eval_commitments[name] = commit(BivariatePoly.from_slots(evaluations[name]), ck, eval_rands[name])

    weights = _fold_weights(t, eval_commitments)
    names = list(polys)
    l1 = bivariate_add([polys[n] for n in names], weights)
    t_poly, _ = quotient(l1, k)
    if check and not quotient_identity_holds(l1, t_poly, k):
        raise ProverError("step1", "quotient identity failed")

    r_l1 = sum(w * rands[n] for n, w in zip(names, weights)) % P
    r_l1k = sum(w * eval_rands[n] for n, w in zip(names, weights)) % P
    r_t = rand_scalar(rng)
    c_t = commit(t_poly, ck, r_t)

    c_l1 = _fold_c1([commitments[n] for n in names], weights)
    c_l1k = _fold_c1([eval_commitments[n] for n in names], weights)

    a, b = rand_scalar(rng), rand_scalar(rng)
    u = pair(gadd(gmul(ck.h, a), gmul(_h_bar(ck, k), b)), ck.g_star)
    e = _response_challenge(t, c_l1, c_l1k, c_t, u, k)
    sigma = (a + (r_l1 - r_l1k) * e) % P
    tau = (b - r_t * e) % P

    statement = EvalStatement(commitments=commitments, eval_commitments=eval_commitments, k=k, digest=digest)
    return EvalOpening(
        statement=statement,
        proof=EvalProof(c_t=c_t, e=e, sigma=sigma, tau=tau),
        evaluations=evaluations,
        rands=dict(rands),
        eval_rands=eval_rands,
    )


def verify_eval(ck: CommitKeyS1, statement: EvalStatement, proof: EvalProof) -> bool:
    """
    Accept iff the point k is the transcript point, every commitment passes
    the dual check, and the recomputed response challenge equals e.
    """
    try:
        if not statement.commitments or set(statement.commitments) != set(statement.eval_commitments):
            logger.info("step1 rejected: component sets differ")
            return False
        t = _point_transcript(ck, statement.commitments, statement.digest)
        k = t.challenge(b"k")
        if k != statement.k % P:
            logger.info("step1 rejected: evaluation point is not the transcript point")
            return False

        duals = list(statement.commitments.values()) + list(statement.eval_commitments.values()) + [proof.c_t]
        if not dual_check(ck, duals):
            logger.info("step1 rejected: dual commitment check")
            return False

        eval_commitments = {name: statement.eval_commitments[name] for name in statement.commitments}
        weights = _fold_weights(t, eval_commitments)
        c_l1 = _fold_c1(list(statement.commitments.values()), weights)
        c_l1k = _fold_c1(list(eval_commitments.values()), weights)

        big_h = gt_mul(
            pair(proof.c_t.c1, gsub(ck.g_star_1, gmul(ck.g_star, k))),
            gt_inv(pair(gsub(c_l1, c_l1k), ck.g_star)),
        )
        u = gt_mul(
            pair(gadd(gmul(ck.h, proof.sigma), gmul(_h_bar(ck, k), proof.tau)), ck.g_star),
            gt_pow(big_h, proof.e),
        )
        e = _response_challenge(t, c_l1, c_l1k, proof.c_t, u, k)
        if e != proof.e % P:
            logger.info("step1 rejected: response challenge mismatch")
            return False
        return True
    except (ValueError, TypeError, ZeroDivisionError) as e:
        logger.info(f"step1 rejected: malformed input ({e})")
        return False
