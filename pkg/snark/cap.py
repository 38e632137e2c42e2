"""
Commit-and-prove Groth16 over a QAP.

Variables are split into public inputs (with the constant one), a
committed block and private witnesses. Public and committed variables get
γ-slot keys; the proof's D element is a Pedersen-style commitment to the
committed block under those keys, blinded by v·g^{η/γ}:

    e(A, B) == e(g^α, h^β) · e(IO + D, h^γ) · e(C, h^δ)
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from snark import codec
from snark.algebra import (
    G1_GEN,
    G1_ZERO,
    G2_GEN,
    G2_ZERO,
    P,
    G1Point,
    G2Point,
    GtElem,
    Scalar,
    gadd,
    gmul,
    gneg,
    group_of,
    inv,
    on_curve,
    pair,
    pairing_product,
    rand_scalar,
    sparse_msm,
)
from snark.r1cs import Circuit, QapInstance, R1cs, compile_r1cs, next_pow2
from utils.config import Rng
from utils.errors import ProverError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

CRS_MAGIC = b"CAPC"
PROOF_MAGIC = b"CAPP"


@dataclass(frozen=True)
class CapVk:
    """Verifying key: everything cap_verify and agg_verify read."""

    digest: bytes
    g_alpha: G1Point
    h_beta: G2Point
    h_gamma: G2Point
    h_delta: G2Point
    alpha_beta: GtElem
    io_keys: Tuple[G1Point, ...]

    @property
    def num_public(self) -> int:
        """Number of public inputs, not counting the constant one."""
        return len(self.io_keys) - 1


@dataclass(frozen=True)
class CapCrs:
    """
    Proving and verifying material for one circuit.

    g_u[i] = g^{u_i(τ)}, h_v[i] = h^{v_i(τ)}, g_v[i] = g^{v_i(τ)} for every
    variable; io_keys / com_keys / priv_keys hold g^{(βu_i+αv_i+w_i)/γ} for
    public and committed variables and the same over δ for private ones;
    h_query[i] = g^{τ^i t(τ)/δ}.
    """

    digest: bytes
    num_vars: int
    N: int
    g_alpha: G1Point
    g_beta: G1Point
    h_beta: G2Point
    g_delta: G1Point
    h_delta: G2Point
    h_gamma: G2Point
    g_eta_gamma: G1Point
    g_eta_delta: G1Point
    alpha_beta: GtElem
    g_u: Tuple[G1Point, ...]
    h_v: Tuple[G2Point, ...]
    g_v: Tuple[G1Point, ...]
    io_keys: Tuple[G1Point, ...]
    com_keys: Tuple[G1Point, ...]
    priv_keys: Tuple[G1Point, ...]
    h_query: Tuple[G1Point, ...]

    @property
    def vk(self) -> CapVk:
        return CapVk(self.digest, self.g_alpha, self.h_beta, self.h_gamma, self.h_delta,
                     self.alpha_beta, self.io_keys)

    def to_bytes(self) -> bytes:
        w = codec.Writer().header(CRS_MAGIC).raw(self.digest).u32(self.num_vars).u32(self.N)
        for pt in (self.g_alpha, self.g_beta, self.g_delta, self.g_eta_gamma, self.g_eta_delta):
            w.g1(pt)
        for pt in (self.h_beta, self.h_delta, self.h_gamma):
            w.g2(pt)
        w.gt(self.alpha_beta)
        w.g1_list(self.g_u).g2_list(self.h_v).g1_list(self.g_v)
        w.g1_list(self.io_keys).g1_list(self.com_keys).g1_list(self.priv_keys).g1_list(self.h_query)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CapCrs":
        r = codec.Reader(data)
        r.header(CRS_MAGIC)
        digest = r.raw()
        num_vars, N = r.u32(), r.u32()
        g_alpha, g_beta, g_delta, g_eta_gamma, g_eta_delta = (r.g1() for _ in range(5))
        h_beta, h_delta, h_gamma = (r.g2() for _ in range(3))
        alpha_beta = r.gt()
        g_u, h_v, g_v = tuple(r.g1_list()), tuple(r.g2_list()), tuple(r.g1_list())
        io_keys, com_keys = tuple(r.g1_list()), tuple(r.g1_list())
        priv_keys, h_query = tuple(r.g1_list()), tuple(r.g1_list())
        r.done()
        return cls(digest, num_vars, N, g_alpha, g_beta, h_beta, g_delta, h_delta, h_gamma,
                   g_eta_gamma, g_eta_delta, alpha_beta, g_u, h_v, g_v, io_keys, com_keys,
                   priv_keys, h_query)


def cap_crs_size(r1cs: R1cs) -> int:
    """Exact size of CapCrs.to_bytes() for a circuit, without running setup."""
    N = next_pow2(r1cs.num_constraints)
    n = r1cs.num_vars
    g1, g2 = codec.G1_BYTES, codec.G2_BYTES
    header = 6 + 4 + 32 + 4 + 4
    singles = 5 * g1 + 3 * g2 + codec.GT_BYTES
    lists = 7 * 4 + n * (2 * g1 + g2) + n * g1 + (N - 1) * g1
    return header + singles + lists


@dataclass(frozen=True)
class CapProof:
    A: G1Point
    B: G2Point
    C: G1Point
    D: G1Point

    def to_bytes(self) -> bytes:
        return codec.Writer().header(PROOF_MAGIC).g1(self.A).g2(self.B).g1(self.C).g1(self.D).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CapProof":
        r = codec.Reader(data)
        r.header(PROOF_MAGIC)
        proof = cls(r.g1(), r.g2(), r.g1(), r.g1())
        r.done()
        return proof

    SIZE = 6 + 3 * codec.G1_BYTES + codec.G2_BYTES


def cap_setup(qap: QapInstance, rng: Rng) -> CapCrs:
    """
    Trusted setup for a compiled circuit; (α, β, γ, δ, η, τ) stay local.

    Args:
        qap: Compiled circuit
        rng: Randomness source
    """
    r1cs = qap.r1cs
    alpha, beta, gamma, delta, eta = (rand_scalar(rng) for _ in range(5))
    tau = rand_scalar(rng)
    while qap.target_at(tau) == 0:
        tau = rand_scalar(rng)
    u, v, w = qap.evaluate_columns(tau)
    g, h = G1_GEN, G2_GEN
    gamma_inv, delta_inv = inv(gamma), inv(delta)

    def key(i: int, scale: int) -> G1Point:
        return gmul(g, (beta * u[i] + alpha * v[i] + w[i]) * scale)

    t_tau = qap.target_at(tau)
    h_query = []
    power = 1
    for _ in range(qap.N - 1):
        h_query.append(gmul(g, power * t_tau % P * delta_inv))
        power = power * tau % P

    g_alpha, h_beta = gmul(g, alpha), gmul(h, beta)
    crs = CapCrs(
        digest=r1cs.digest(),
        num_vars=r1cs.num_vars,
        N=qap.N,
        g_alpha=g_alpha,
        g_beta=gmul(g, beta),
        h_beta=h_beta,
        g_delta=gmul(g, delta),
        h_delta=gmul(h, delta),
        h_gamma=gmul(h, gamma),
        g_eta_gamma=gmul(g, eta * gamma_inv),
        g_eta_delta=gmul(g, eta * delta_inv),
        alpha_beta=pair(g_alpha, h_beta),
        g_u=tuple(gmul(g, x) for x in u),
        h_v=tuple(gmul(h, x) for x in v),
        g_v=tuple(gmul(g, x) for x in v),
        io_keys=tuple(key(i, gamma_inv) for i in r1cs.public_indices),
        com_keys=tuple(key(i, gamma_inv) for i in r1cs.committed_indices),
        priv_keys=tuple(key(i, delta_inv) for i in r1cs.private_indices),
        h_query=tuple(h_query),
    )
    logger.info(
        f"CaP CRS ready: {r1cs.num_constraints} constraints, {r1cs.num_vars} variables, "
        f"{len(crs.com_keys)} committed"
    )
    return crs


def commit_block(crs: CapCrs, values: Sequence[Scalar], v: Scalar) -> G1Point:
    """D = Σ values[j]·com_keys[j] + v·g^{η/γ}; the commitment a CaP proof carries."""
    if len(values) != len(crs.com_keys):
        raise ShapeError(f"committed block has {len(crs.com_keys)} entries, got {len(values)}")
    return sparse_msm(list(zip(crs.com_keys, values)) + [(crs.g_eta_gamma, v)], G1_ZERO)


def cap_prove(
    crs: CapCrs,
    qap: QapInstance,
    assignment: Sequence[Scalar],
    rng: Rng,
    check: bool = True,
    relation: str = "cap",
) -> Tuple[CapProof, Scalar]:
    """
    Prove a full assignment.

    Args:
        crs: CRS from cap_setup on the same circuit
        qap: Compiled circuit
        assignment: Full witness vector (index 0 is 1)
        rng: Randomness for (r, s, v)
        check: Refuse unsatisfying assignments
        relation: Name reported in ProverError

    Returns:
        (proof, v) with v the blinding exponent of D

    Raises:
        ProverError: If the assignment does not satisfy the circuit
    """
    r1cs = qap.r1cs
    if crs.digest != r1cs.digest():
        raise ShapeError("CRS was generated for a different circuit")
    if len(assignment) != r1cs.num_vars:
        raise ShapeError(f"assignment has {len(assignment)} entries, expected {r1cs.num_vars}")
    a = [x % P for x in assignment]
    if check:
        bad = r1cs.first_violation(a)
        if bad is not None:
            raise ProverError(relation, f"assignment violates constraint {bad}")
    h = qap.quotient(a)

    r, s, v = rand_scalar(rng), rand_scalar(rng), rand_scalar(rng)
    A = sparse_msm(list(zip(crs.g_u, a)), gadd(crs.g_alpha, gmul(crs.g_delta, r)))
    B = sparse_msm(list(zip(crs.h_v, a)), G2_ZERO)
    B = gadd(B, gadd(crs.h_beta, gmul(crs.h_delta, s)))
    B1 = sparse_msm(list(zip(crs.g_v, a)), gadd(crs.g_beta, gmul(crs.g_delta, s)))
    D = commit_block(crs, [a[i] for i in r1cs.committed_indices], v)
    C = sparse_msm(
        [(k, a[i]) for k, i in zip(crs.priv_keys, r1cs.private_indices)]
        + list(zip(crs.h_query, h))
        + [(A, s), (B1, r), (crs.g_delta, -r * s), (crs.g_eta_delta, -v)],
        G1_ZERO,
    )
    return CapProof(A, B, C, D), v


def io_commitment(vk: CapVk, public_inputs: Sequence[Scalar]) -> G1Point:
    """IO = K_0 + Σ x_i·K_i over the public inputs (constant one first)."""
    if len(public_inputs) != vk.num_public:
        raise ShapeError(f"expected {vk.num_public} public inputs, got {len(public_inputs)}")
    return sparse_msm(zip(vk.io_keys[1:], public_inputs), vk.io_keys[0])


def cap_verify(vk: CapVk, public_inputs: Sequence[Scalar], proof: CapProof) -> bool:
    """Three pairings plus the precomputed e(g^α, h^β)."""
    try:
        points = ((proof.A, "G1"), (proof.B, "G2"), (proof.C, "G1"), (proof.D, "G1"))
        if not all(group_of(pt) == group and on_curve(pt) for pt, group in points):
            logger.info("CaP rejected: point off the curve or in the wrong group")
            return False
        io = io_commitment(vk, public_inputs)
        lhs = pairing_product([
            (proof.A, proof.B),
            (gneg(gadd(io, proof.D)), vk.h_gamma),
            (gneg(proof.C), vk.h_delta),
        ])
        ok = lhs == vk.alpha_beta
        if not ok:
            logger.info("CaP rejected: pairing equation")
        return ok
    except (ValueError, TypeError, AttributeError, AssertionError) as e:
        logger.info(f"CaP rejected: malformed input ({e})")
        return False


def prove_circuit(
    crs: CapCrs, qap: QapInstance, circuit: Circuit, args, rng: Rng
) -> Tuple[CapProof, Scalar, List[Scalar]]:
    """Solve the circuit from named inputs and prove it; returns (proof, v, assignment)."""
    assignment = circuit.solve(args)
    proof, v = cap_prove(crs, qap, assignment, rng, relation=circuit.name)
    return proof, v, assignment


def public_values(r1cs: R1cs, assignment: Sequence[Scalar]) -> List[Scalar]:
    """Public inputs of an assignment, without the constant one."""
    return [assignment[i] for i in r1cs.public_indices[1:]]


def compile_and_setup(circuit: Circuit, rng: Rng) -> Tuple[QapInstance, CapCrs]:
    qap = compile_r1cs(circuit.r1cs)
    return qap, cap_setup(qap, rng)

