"""
Linking proofs between commitments made under different keys.

Every commitment is a known linear form over labelled scalars:
C = Π base_t^{wt[label_t]}. Commitments that share a label are thereby
claimed to open to the same value, whichever key produced them. The proof
is a multi-base Schnorr protocol over the stacked basis matrix, made
non-interactive with a transcript challenge.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

from snark import codec
from snark.algebra import (
    G1_ZERO,
    P,
    G1Point,
    Scalar,
    gadd,
    geq,
    gmul,
    inv,
    rand_scalar,
    sparse_msm,
)
from snark.transcript import Transcript
from utils.config import Rng
from utils.errors import ProverError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

PROOF_MAGIC = b"LNKP"
_LABEL = b"zkcnn/link"


@dataclass(frozen=True)
class LinkedCommitment:
    """A group element claimed to equal Σ wt[label]·base over its terms."""

    value: G1Point
    terms: Tuple[Tuple[G1Point, str], ...]

    def labels(self) -> List[str]:
        return [label for _, label in self.terms]

    def opens_to(self, witness: Mapping[str, Scalar]) -> bool:
        expected = sparse_msm(((base, witness[label]) for base, label in self.terms), G1_ZERO)
        return geq(expected, self.value)


@dataclass(frozen=True)
class LinkInstance:
    """
    Stacked rows over the union of their labels.

    Row i of the basis matrix holds, in column j, the base multiplying
    columns[j] in rows[i] (the identity where the label is absent).
    """

    rows: Tuple[LinkedCommitment, ...]
    columns: Tuple[str, ...]

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), len(self.columns)

    def basis_matrix(self) -> List[List[G1Point]]:
        out = []
        for row in self.rows:
            by_label = {label: base for base, label in row.terms}
            out.append([by_label.get(c, G1_ZERO) for c in self.columns])
        return out

    def is_satisfied(self, witness: Mapping[str, Scalar]) -> bool:
        if any(c not in witness for c in self.columns):
            return False
        return all(row.opens_to(witness) for row in self.rows)


@dataclass(frozen=True)
class LinkProof:
    R: Tuple[G1Point, ...]
    e: Scalar
    z: Tuple[Scalar, ...]

    def to_bytes(self) -> bytes:
        w = codec.Writer().header(PROOF_MAGIC).u32(len(self.R))
        for pt in self.R:
            w.g1(pt)
        return w.scalar(self.e).scalars(self.z).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "LinkProof":
        r = codec.Reader(data)
        r.header(PROOF_MAGIC)
        R = tuple(r.g1() for _ in range(r.u32()))
        e = r.scalar()
        z = tuple(r.scalars())
        r.done()
        return cls(R, e, z)


RowGroup = Union[LinkedCommitment, Iterable[LinkedCommitment]]


def link_build_instance(*groups: RowGroup) -> LinkInstance:
    """
    Stack commitments (single ones or sequences of them) into one instance.

    Raises:
        ShapeError: If there are no rows, a row has no terms, or a row uses
            the same label twice
    """
    rows: List[LinkedCommitment] = []
    for group in groups:
        if isinstance(group, LinkedCommitment):
            rows.append(group)
        else:
            rows.extend(group)
    if not rows:
        raise ShapeError("link instance needs at least one commitment")
    columns: Dict[str, None] = {}
    for n, row in enumerate(rows):
        labels = row.labels()
        if not labels:
            raise ShapeError(f"link row {n} has no terms")
        if len(set(labels)) != len(labels):
            raise ShapeError(f"link row {n} repeats a label")
        for label in labels:
            columns.setdefault(label)
    return LinkInstance(tuple(rows), tuple(columns))


def pair_rows(left: Sequence[LinkedCommitment], right: Sequence[LinkedCommitment]) -> LinkInstance:
    """Instance for two equally long commitment vectors that must open alike."""
    if len(left) != len(right):
        raise ShapeError(f"cannot link {len(left)} commitments with {len(right)}")
    return link_build_instance(left, right)


def _transcript(inst: LinkInstance, R: Sequence[G1Point], context: bytes = b"") -> Transcript:
    t = Transcript(_LABEL)
    t.absorb(b"context", context)
    t.absorb_int(b"rows", len(inst.rows))
    t.absorb(b"columns", "\x1f".join(inst.columns).encode())
    for row in inst.rows:
        t.absorb_g1(b"C", row.value)
        t.absorb(b"labels", "\x1f".join(row.labels()).encode())
        t.absorb_points(b"bases", (base for base, _ in row.terms))
    t.absorb_points(b"R", R)
    return t


def _row_response(row: LinkedCommitment, values: Mapping[str, Scalar]) -> G1Point:
    return sparse_msm(((base, values[label]) for base, label in row.terms), G1_ZERO)


def commit_round(inst: LinkInstance, rng: Rng) -> Tuple[Tuple[G1Point, ...], Dict[str, Scalar]]:
    """First prover message: R[i] = Π base^{ρ} with fresh ρ per column."""
    rho = {c: rand_scalar(rng) for c in inst.columns}
    return tuple(_row_response(row, rho) for row in inst.rows), rho


def respond(inst: LinkInstance, rho: Mapping[str, Scalar], witness: Mapping[str, Scalar], e: Scalar) -> Tuple[Scalar, ...]:
    """z = ρ − e·wt, in column order."""
    return tuple((rho[c] - e * witness[c]) % P for c in inst.columns)


def check_transcript(inst: LinkInstance, R: Sequence[G1Point], e: Scalar, z: Sequence[Scalar]) -> bool:
    """Interactive verifier: Π base^{z} · C^e == R[i] for every row."""
    if len(R) != len(inst.rows) or len(z) != len(inst.columns):
        return False
    zs = dict(zip(inst.columns, z))
    for row, r in zip(inst.rows, R):
        if not geq(gadd(_row_response(row, zs), gmul(row.value, e)), r):
            return False
    return True


def link_prove(
    inst: LinkInstance,
    witness: Mapping[str, Scalar],
    rng: Rng,
    check: bool = True,
    context: bytes = b"",
) -> LinkProof:
    """
    Prove knowledge of one witness opening every row of the instance.

    Args:
        inst: Instance from link_build_instance
        witness: Label -> scalar for every column
        rng: Randomness for ρ
        check: Refuse a witness that does not open every row
        context: Bytes bound into the challenge; the verifier must pass the same

    Raises:
        ProverError: If a label is missing or (with check) a row does not open
    """
    missing = [c for c in inst.columns if c not in witness]
    if missing:
        raise ProverError("link", f"witness misses {len(missing)} labels, e.g. {missing[0]!r}")
    if check:
        for n, row in enumerate(inst.rows):
            if not row.opens_to(witness):
                raise ProverError("link", f"row {n} does not open to the witness")
    R, rho = commit_round(inst, rng)
    e = _transcript(inst, R, context).challenge_nonzero(b"e")
    proof = LinkProof(R, e, respond(inst, rho, witness, e))
    logger.debug(f"link proof: {len(inst.rows)} rows x {len(inst.columns)} columns")
    return proof


def link_verify(inst: LinkInstance, proof: LinkProof, context: bytes = b"") -> bool:
    try:
        if len(proof.R) != len(inst.rows) or len(proof.z) != len(inst.columns):
            logger.info("link rejected: proof shape does not match the instance")
            return False
        e = _transcript(inst, proof.R, context).challenge_nonzero(b"e")
        if e != proof.e % P:
            logger.info("link rejected: challenge is not the transcript challenge")
            return False
        if not check_transcript(inst, proof.R, proof.e, proof.z):
            logger.info("link rejected: response check")
            return False
        return True
    except (ValueError, TypeError, AttributeError, AssertionError) as e:
        logger.info(f"link rejected: malformed input ({e})")
        return False


def simulate(inst: LinkInstance, rng: Rng) -> LinkProof:
    """
    Witness-free transcript: sample (e, z), then solve R = Π base^{z} · C^e.
    Passes check_transcript; the challenge is not the transcript one.
    """
    e = rand_scalar(rng)
    z = tuple(rand_scalar(rng, nonzero=False) for _ in inst.columns)
    zs = dict(zip(inst.columns, z))
    R = tuple(gadd(_row_response(row, zs), gmul(row.value, e)) for row in inst.rows)
    return LinkProof(R, e, z)


def extract(inst: LinkInstance, first: LinkProof, second: LinkProof) -> Dict[str, Scalar]:
    """
    Recover the witness from two accepting transcripts with the same R and
    different challenges: wt = (z1 − z2)/(e2 − e1).

    Raises:
        ShapeError: If the transcripts do not share R or share the challenge
    """
    if len(first.R) != len(second.R) or not all(geq(a, b) for a, b in zip(first.R, second.R)):
        raise ShapeError("transcripts must share the first message")
    de = (second.e - first.e) % P
    if de == 0:
        raise ShapeError("transcripts must use different challenges")
    de_inv = inv(de)
    return {c: (z1 - z2) * de_inv % P for c, z1, z2 in zip(inst.columns, first.z, second.z)}
