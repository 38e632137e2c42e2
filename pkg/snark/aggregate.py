"""
Aggregation of CaP proofs that share one circuit.

The (A_i, B_i) pairs, the C_i and the D_i are committed under structured
pairing keys, a challenge r binds statements and commitments, and a
halving recursion shows that

    I_AB = Π e(A_i, B_i)^{r^i},   I_C = Π C_i^{r^i},   I_D = Π D_i^{r^i}

match the committed vectors. Batched Groth16 then reads

    I_AB == e(g^α, h^β)^{Σ r^i} · e(I_IO + I_D, h^γ) · e(I_C, h^δ)

The verifier folds the commitment keys itself (linear in n_t) instead of
checking a final-key opening.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from snark import codec
from snark.algebra import (
    G1_GEN,
    G1_ZERO,
    G2_GEN,
    P,
    G1Point,
    G2Point,
    GtElem,
    Scalar,
    gadd,
    geq,
    gmul,
    gt_mul,
    gt_pow,
    inv,
    pair,
    pairing_product,
    rand_scalar,
    sparse_msm,
)
from snark.cap import CapProof, CapVk, cap_verify, io_commitment
from snark.r1cs import next_pow2
from snark.transcript import Transcript
from utils.config import Rng
from utils.errors import ProverError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

KEY_MAGIC = b"AGGK"
PROOF_MAGIC = b"AGGP"
_LABEL = b"zkcnn/aggregate"

TwoGt = Tuple[GtElem, GtElem]


@dataclass(frozen=True)
class AggKey:
    """
    v1[i] = h^{a^i}, v2[i] = h^{b^i} commit G1 vectors;
    w1[i] = g^{a^{n+i}}, w2[i] = g^{b^{n+i}} commit G2 vectors.
    """

    n: int
    v1: Tuple[G2Point, ...]
    v2: Tuple[G2Point, ...]
    w1: Tuple[G1Point, ...]
    w2: Tuple[G1Point, ...]

    def is_structured(self, rng: Rng, samples: int = 4) -> bool:
        """Spot check e(w[i], v[j]) == e(w[i+j], h) for random i + j < n."""
        if self.n < 2:
            return True
        for _ in range(samples):
            i = rng.randrange(self.n - 1)
            j = rng.randrange(1, self.n - i)
            for v, w in ((self.v1, self.w1), (self.v2, self.w2)):
                if pair(w[i], v[j]) != pair(w[i + j], v[0]):
                    return False
        return True

    def to_bytes(self) -> bytes:
        return (
            codec.Writer().header(KEY_MAGIC).u32(self.n)
            .g2_list(self.v1).g2_list(self.v2).g1_list(self.w1).g1_list(self.w2)
            .getvalue()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "AggKey":
        r = codec.Reader(data)
        r.header(KEY_MAGIC)
        n = r.u32()
        v1, v2 = tuple(r.g2_list()), tuple(r.g2_list())
        w1, w2 = tuple(r.g1_list()), tuple(r.g1_list())
        r.done()
        if not (len(v1) == len(v2) == len(w1) == len(w2) == n):
            raise ShapeError("aggregation key vectors do not match n")
        return cls(n, v1, v2, w1, w2)


@dataclass(frozen=True)
class AggStatement:
    """Public side of one CaP proof: its public inputs and its D commitment."""

    public_inputs: Tuple[Scalar, ...]
    d: G1Point


@dataclass(frozen=True)
class GipaRound:
    """Cross terms of one halving step; *_l pair with x, *_r with x⁻¹."""

    ab_l: Tuple[GtElem, GtElem, GtElem]
    ab_r: Tuple[GtElem, GtElem, GtElem]
    c_l: Tuple[GtElem, GtElem, G1Point]
    c_r: Tuple[GtElem, GtElem, G1Point]
    d_l: Tuple[GtElem, GtElem, G1Point]
    d_r: Tuple[GtElem, GtElem, G1Point]

    def write(self, w: codec.Writer) -> None:
        for t in (self.ab_l, self.ab_r):
            for x in t:
                w.gt(x)
        for t in (self.c_l, self.c_r, self.d_l, self.d_r):
            w.gt(t[0]).gt(t[1]).g1(t[2])

    @classmethod
    def read(cls, r: codec.Reader) -> "GipaRound":
        ab = [tuple(r.gt() for _ in range(3)) for _ in range(2)]
        rest = [(r.gt(), r.gt(), r.g1()) for _ in range(4)]
        return cls(ab[0], ab[1], *rest)


@dataclass(frozen=True)
class AggProof:
    n_t: int
    digest: bytes
    com_ab: TwoGt
    com_c: TwoGt
    com_d: TwoGt
    i_ab: GtElem
    i_c: G1Point
    i_d: G1Point
    rounds: Tuple[GipaRound, ...]
    a_final: G1Point
    b_final: G2Point
    c_final: G1Point
    d_final: G1Point

    def to_bytes(self) -> bytes:
        w = codec.Writer().header(PROOF_MAGIC).u32(self.n_t).raw(self.digest)
        for pair_ in (self.com_ab, self.com_c, self.com_d):
            w.gt(pair_[0]).gt(pair_[1])
        w.gt(self.i_ab).g1(self.i_c).g1(self.i_d)
        w.u32(len(self.rounds))
        for rnd in self.rounds:
            rnd.write(w)
        return w.g1(self.a_final).g2(self.b_final).g1(self.c_final).g1(self.d_final).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AggProof":
        r = codec.Reader(data)
        r.header(PROOF_MAGIC)
        n_t, digest = r.u32(), r.raw()
        com_ab, com_c, com_d = ((r.gt(), r.gt()) for _ in range(3))
        i_ab, i_c, i_d = r.gt(), r.g1(), r.g1()
        rounds = tuple(GipaRound.read(r) for _ in range(r.u32()))
        finals = (r.g1(), r.g2(), r.g1(), r.g1())
        r.done()
        return cls(n_t, digest, com_ab, com_c, com_d, i_ab, i_c, i_d, rounds, *finals)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _commit_ab(A, B, v, w) -> GtElem:
    return pairing_product(list(zip(A, v)) + list(zip(w, B)))


def _commit_g1(C, v) -> GtElem:
    return pairing_product(zip(C, v))


def _ip_scalar(C, s) -> G1Point:
    return sparse_msm(zip(C, s), G1_ZERO)


def _fold(vec: Sequence, x: Scalar) -> List:
    half = len(vec) // 2
    return [gadd(lo, gmul(hi, x)) for lo, hi in zip(vec[:half], vec[half:])]


def _fold_scalars(vec: Sequence[Scalar], x: Scalar) -> List[Scalar]:
    half = len(vec) // 2
    return [(lo + x * hi) % P for lo, hi in zip(vec[:half], vec[half:])]


def _fold_gt(left: GtElem, mid: GtElem, right: GtElem, x: Scalar, x_inv: Scalar) -> GtElem:
    return gt_mul(gt_pow(left, x), mid, gt_pow(right, x_inv))


def _powers(r: Scalar, n: int) -> List[Scalar]:
    out, acc = [], 1
    for _ in range(n):
        out.append(acc)
        acc = acc * r % P
    return out


def pad(items: Sequence, n: int) -> List:
    """Repeat the last item up to length n."""
    if not items:
        raise ShapeError("nothing to aggregate")
    return list(items) + [items[-1]] * (n - len(items))


def _absorb_statements(t: Transcript, digest: bytes, statements: Sequence[AggStatement]) -> None:
    t.absorb(b"circuit", digest)
    t.absorb_int(b"n", len(statements))
    for st in statements:
        t.absorb_scalars(b"io", st.public_inputs)
        t.absorb_g1(b"D", st.d)


def _absorb_round(t: Transcript, rnd: GipaRound) -> Scalar:
    t.absorb(b"ab", b"".join(codec.encode_gt(x) for x in rnd.ab_l + rnd.ab_r))
    for label, (c1, c2, z) in ((b"c-l", rnd.c_l), (b"c-r", rnd.c_r), (b"d-l", rnd.d_l), (b"d-r", rnd.d_r)):
        t.absorb(label, codec.encode_gt(c1) + codec.encode_gt(c2) + codec.encode_g1(z))
    return t.challenge_nonzero(b"x")


def _weight_challenge(t: Transcript, com_ab: TwoGt, com_c: TwoGt, com_d: TwoGt) -> Scalar:
    for label, pair_ in ((b"C_AB", com_ab), (b"C_C", com_c), (b"C_D", com_d)):
        t.absorb(label, codec.encode_gt(pair_[0]) + codec.encode_gt(pair_[1]))
    return t.challenge_nonzero(b"r")


def _absorb_products(t: Transcript, i_ab: GtElem, i_c: G1Point, i_d: G1Point) -> None:
    t.absorb_gt(b"I_AB", i_ab)
    t.absorb_g1(b"I_C", i_c)
    t.absorb_g1(b"I_D", i_d)


# ---------------------------------------------------------------------------
# Setup / prove / verify
# ---------------------------------------------------------------------------

def agg_setup(n_t: int, rng: Rng) -> AggKey:
    """
    Key for up to n_t proofs, padded to the next power of two.

    Raises:
        ShapeError: If n_t < 1
    """
    if n_t < 1:
        raise ShapeError("aggregation needs at least one proof")
    n = next_pow2(n_t)
    a, b = rand_scalar(rng), rand_scalar(rng)
    g, h = G1_GEN, G2_GEN
    a_pows, b_pows = _powers(a, 2 * n), _powers(b, 2 * n)
    key = AggKey(
        n=n,
        v1=tuple(gmul(h, x) for x in a_pows[:n]),
        v2=tuple(gmul(h, x) for x in b_pows[:n]),
        w1=tuple(gmul(g, x) for x in a_pows[n:]),
        w2=tuple(gmul(g, x) for x in b_pows[n:]),
    )
    if n != n_t:
        logger.warning(f"aggregation key padded from {n_t} to {n} proofs")
    logger.info(f"aggregation key ready: n={n}")
    return key


def agg_prove(
    key: AggKey,
    vk: CapVk,
    statements: Sequence[AggStatement],
    proofs: Sequence[CapProof],
    check_inputs: bool = True,
) -> AggProof:
    """
    Aggregate proofs of one circuit; deterministic in its inputs.

    Args:
        key: Aggregation key with key.n >= len(proofs)
        vk: Verifying key of the circuit
        statements: Public inputs and D of every proof, in order
        proofs: The proofs
        check_inputs: Verify every input proof first

    Raises:
        ShapeError: On count mismatch or a key too small
        ProverError: If an input proof does not verify
    """
    n_t = len(proofs)
    if n_t != len(statements):
        raise ShapeError(f"{n_t} proofs but {len(statements)} statements")
    if n_t < 1 or next_pow2(n_t) != key.n:
        raise ShapeError(f"key is for {key.n} proofs, got {n_t}")
    for i, (st, pf) in enumerate(zip(statements, proofs)):
        if not geq(st.d, pf.D):
            raise ShapeError(f"statement {i} carries a different D than its proof")
        if check_inputs and not cap_verify(vk, st.public_inputs, pf):
            raise ProverError("aggregate", f"input proof {i} does not verify")

    n = key.n
    proofs = pad(proofs, n)
    statements = pad(statements, n)
    A = [p.A for p in proofs]
    B = [p.B for p in proofs]
    C = [p.C for p in proofs]
    D = [p.D for p in proofs]
    v1, v2, w1, w2 = list(key.v1), list(key.v2), list(key.w1), list(key.w2)

    com_ab = (_commit_ab(A, B, v1, w1), _commit_ab(A, B, v2, w2))
    com_c = (_commit_g1(C, v1), _commit_g1(C, v2))
    com_d = (_commit_g1(D, v1), _commit_g1(D, v2))

    t = Transcript(_LABEL)
    _absorb_statements(t, vk.digest, statements)
    r = _weight_challenge(t, com_ab, com_c, com_d)
    rs = _powers(r, n)
    r_inv = inv(r)
    # B_i·r^i under w_i·r^{-i} keeps the AB commitment unchanged
    B = [gmul(b, s) for b, s in zip(B, rs)]
    r_inv_pows = _powers(r_inv, n)
    w1 = [gmul(w, s) for w, s in zip(w1, r_inv_pows)]
    w2 = [gmul(w, s) for w, s in zip(w2, r_inv_pows)]

    i_ab = pairing_product(zip(A, B))
    i_c = _ip_scalar(C, rs)
    i_d = _ip_scalar(D, rs)
    _absorb_products(t, i_ab, i_c, i_d)

    rounds = []
    while len(A) > 1:
        h = len(A) // 2
        AL, AR, BL, BR = A[:h], A[h:], B[:h], B[h:]
        CL, CR, DL, DR = C[:h], C[h:], D[:h], D[h:]
        sL, sR = rs[:h], rs[h:]
        v1L, v1R, v2L, v2R = v1[:h], v1[h:], v2[:h], v2[h:]
        w1L, w1R, w2L, w2R = w1[:h], w1[h:], w2[:h], w2[h:]
        rnd = GipaRound(
            ab_l=(_commit_ab(AR, BL, v1L, w1R), _commit_ab(AR, BL, v2L, w2R), pairing_product(zip(AR, BL))),
            ab_r=(_commit_ab(AL, BR, v1R, w1L), _commit_ab(AL, BR, v2R, w2L), pairing_product(zip(AL, BR))),
            c_l=(_commit_g1(CR, v1L), _commit_g1(CR, v2L), _ip_scalar(CR, sL)),
            c_r=(_commit_g1(CL, v1R), _commit_g1(CL, v2R), _ip_scalar(CL, sR)),
            d_l=(_commit_g1(DR, v1L), _commit_g1(DR, v2L), _ip_scalar(DR, sL)),
            d_r=(_commit_g1(DL, v1R), _commit_g1(DL, v2R), _ip_scalar(DL, sR)),
        )
        x = _absorb_round(t, rnd)
        x_inv = inv(x)
        logger.debug(f"aggregation round {len(rounds)}: {len(A)} -> {h}")
        A, C, D = _fold(A, x), _fold(C, x), _fold(D, x)
        B = _fold(B, x_inv)
        rs = _fold_scalars(rs, x_inv)
        v1, v2 = _fold(v1, x_inv), _fold(v2, x_inv)
        w1, w2 = _fold(w1, x), _fold(w2, x)
        rounds.append(rnd)

    logger.info(f"aggregated {n_t} proofs in {len(rounds)} rounds")
    return AggProof(
        n_t=n_t,
        digest=vk.digest,
        com_ab=com_ab,
        com_c=com_c,
        com_d=com_d,
        i_ab=i_ab,
        i_c=i_c,
        i_d=i_d,
        rounds=tuple(rounds),
        a_final=A[0],
        b_final=B[0],
        c_final=C[0],
        d_final=D[0],
    )


def _final_keys(key: AggKey, r_inv: Scalar, xs: Sequence[Scalar]):
    v1, v2 = list(key.v1), list(key.v2)
    r_inv_pows = _powers(r_inv, key.n)
    w1 = [gmul(w, s) for w, s in zip(key.w1, r_inv_pows)]
    w2 = [gmul(w, s) for w, s in zip(key.w2, r_inv_pows)]
    for x in xs:
        x_inv = inv(x)
        v1, v2 = _fold(v1, x_inv), _fold(v2, x_inv)
        w1, w2 = _fold(w1, x), _fold(w2, x)
    return v1[0], v2[0], w1[0], w2[0]


def agg_verify(vk: CapVk, key: AggKey, statements: Sequence[AggStatement], agg: AggProof) -> bool:
    """
    Accept iff the recursion closes on the folded keys and the batched
    Groth16 equation holds with r recomputed from the statements.
    """
    try:
        if agg.digest != vk.digest:
            logger.info("aggregate rejected: circuit digest")
            return False
        n_t = len(statements)
        if n_t < 1 or agg.n_t != n_t or next_pow2(n_t) != key.n:
            logger.info("aggregate rejected: statement count")
            return False
        n = key.n
        if len(agg.rounds) != (n - 1).bit_length():
            logger.info("aggregate rejected: round count")
            return False
        statements = pad(statements, n)
        D = [st.d for st in statements]
        if (_commit_g1(D, key.v1), _commit_g1(D, key.v2)) != tuple(agg.com_d):
            logger.info("aggregate rejected: C_D does not commit to the statement D's")
            return False

        t = Transcript(_LABEL)
        _absorb_statements(t, vk.digest, statements)
        r = _weight_challenge(t, agg.com_ab, agg.com_c, agg.com_d)
        _absorb_products(t, agg.i_ab, agg.i_c, agg.i_d)

        ab = (agg.com_ab[0], agg.com_ab[1], agg.i_ab)
        c = (agg.com_c[0], agg.com_c[1], agg.i_c)
        d = (agg.com_d[0], agg.com_d[1], agg.i_d)
        rs = _powers(r, n)
        xs = []
        for rnd in agg.rounds:
            x = _absorb_round(t, rnd)
            x_inv = inv(x)
            xs.append(x)
            ab = tuple(_fold_gt(lo, mid, hi, x, x_inv) for lo, mid, hi in zip(rnd.ab_l, ab, rnd.ab_r))
            c = _fold_mixed(rnd.c_l, c, rnd.c_r, x, x_inv)
            d = _fold_mixed(rnd.d_l, d, rnd.d_r, x, x_inv)
            rs = _fold_scalars(rs, x_inv)

        v1, v2, w1, w2 = _final_keys(key, inv(r), xs)
        A, B, C, Dn = agg.a_final, agg.b_final, agg.c_final, agg.d_final
        checks = (
            ("AB commitment", ab[0] == pairing_product([(A, v1), (w1, B)])
             and ab[1] == pairing_product([(A, v2), (w2, B)])),
            ("AB product", ab[2] == pair(A, B)),
            ("C commitment", c[0] == pair(C, v1) and c[1] == pair(C, v2)),
            ("C product", geq(c[2], gmul(C, rs[0]))),
            ("D commitment", d[0] == pair(Dn, v1) and d[1] == pair(Dn, v2)),
            ("D product", geq(d[2], gmul(Dn, rs[0]))),
        )
        for name, ok in checks:
            if not ok:
                logger.info(f"aggregate rejected: {name}")
                return False

        weights = _powers(r, n)
        i_io = sparse_msm(
            ((io_commitment(vk, st.public_inputs), w) for st, w in zip(statements, weights)), G1_ZERO
        )
        rhs = gt_mul(
            gt_pow(vk.alpha_beta, sum(weights) % P),
            pairing_product([(gadd(i_io, agg.i_d), vk.h_gamma), (agg.i_c, vk.h_delta)]),
        )
        if agg.i_ab != rhs:
            logger.info("aggregate rejected: batched pairing equation")
            return False
        return True
    except (ValueError, TypeError, AttributeError, ZeroDivisionError) as e:
        logger.info(f"aggregate rejected: malformed input ({e})")
        return False


def _fold_mixed(left, mid, right, x: Scalar, x_inv: Scalar):
    """Fold (GT, GT, G1) triples: GT parts multiplicatively, the G1 part additively."""
    return (
        _fold_gt(left[0], mid[0], right[0], x, x_inv),
        _fold_gt(left[1], mid[1], right[1], x, x_inv),
        gadd(gadd(gmul(left[2], x), mid[2]), gmul(right[2], x_inv)),
    )
