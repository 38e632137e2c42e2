"""
Commit-and-prove SNARK over a quadratic matrix program.

One matrix multiplication Y = W·X is a single gate whose wire labels are L×L
matrices. With one gate every basis polynomial is the constant 1 and the
quotient vanishes, so the check collapses to

    tr e(A, B) == e(g^α, h^β)^L · Π_i e(D_ii, h^γ) · Π_i e(C_ii, h^δ)

which holds iff tr(Zᵀ(WX − Y)) = 0 for the secret Z hidden in the CRS.
Scalars mixed with matrices always mean scalar·I.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

from snark import codec
from snark.algebra import (
    G1_GEN,
    G1_ZERO,
    G2_GEN,
    P,
    G1Point,
    G2Point,
    GroupMatrix,
    GtElem,
    Scalar,
    ScalarMatrix,
    gadd,
    gmul,
    gneg,
    gt_pow,
    inv,
    mat_exp,
    on_curve,
    pair,
    pairing_product,
    rand_scalar,
    sparse_msm,
)
from snark.cp_link import LinkedCommitment
from utils.config import Rng
from utils.errors import ArtifactError, ProverError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

CRS_MAGIC = b"QMPC"
PROOF_MAGIC = b"QMPP"
_HEADER = 6 + 4


@dataclass(frozen=True)
class QmpProgram:
    """
    Matrix program with `gates` multiplication gates over L×L labels.

    Only the single-gate program is supported: its basis polynomials L_W,
    R_X, O_Y are the constant 1 and the target is t(x) = x − 1.
    """

    L: int
    gates: int = 1

    def __post_init__(self):
        if self.L < 1:
            raise ShapeError("QMP dimension must be >= 1")
        if self.gates != 1:
            raise ShapeError("only single-gate matrix programs are supported")

    def basis_values(self) -> Tuple[int, int, int]:
        """(L_W, R_X, O_Y) at any point."""
        return 1, 1, 1


@dataclass(frozen=True)
class QmpWitness:
    W: ScalarMatrix
    X: ScalarMatrix
    Y: ScalarMatrix

    @property
    def dim(self) -> int:
        return self.W.dim

    def is_satisfied(self) -> bool:
        return self.W @ self.X == self.Y


@dataclass(frozen=True)
class QmpCrs:
    L: int
    g: G1Point
    h: G2Point
    g_alpha: G1Point
    g_beta: G1Point
    h_beta: G2Point
    h_gamma: G2Point
    g_delta: G1Point
    h_delta: G2Point
    g_eta_delta: G1Point
    g_eta_gamma: G1Point
    g_beta_gamma: G1Point
    g_alpha_gamma: G1Point
    g_one_gamma: G1Point
    op: G1Point
    g_z: GroupMatrix
    g_beta_z_gamma: GroupMatrix
    g_z_gamma: GroupMatrix
    alpha_beta: GtElem

    @property
    def slot_bases(self) -> Dict[str, G1Point]:
        """Bases of the d1/d2/d3 commitment slots (W, X, Y)."""
        return {"d1": self.g_beta_gamma, "d2": self.g_alpha_gamma, "d3": self.g_one_gamma}

    def _g1_singles(self):
        return (self.g, self.g_alpha, self.g_beta, self.g_delta, self.g_eta_delta, self.g_eta_gamma,
                self.g_beta_gamma, self.g_alpha_gamma, self.g_one_gamma, self.op)

    def _g2_singles(self):
        return (self.h, self.h_beta, self.h_gamma, self.h_delta)

    def to_bytes(self) -> bytes:
        w = codec.Writer().header(CRS_MAGIC).u32(self.L)
        for pt in self._g1_singles():
            w.g1(pt)
        for pt in self._g2_singles():
            w.g2(pt)
        for m in (self.g_z, self.g_beta_z_gamma, self.g_z_gamma):
            for pt in m.flat():
                w.g1(pt)
        w.gt(self.alpha_beta)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "QmpCrs":
        r = codec.Reader(data)
        r.header(CRS_MAGIC)
        L = r.u32()
        g1s = [r.g1() for _ in range(10)]
        g2s = [r.g2() for _ in range(4)]
        mats = [_read_matrix(r, L, r.g1) for _ in range(3)]
        alpha_beta = r.gt()
        r.done()
        g, g_alpha, g_beta, g_delta, g_eta_delta, g_eta_gamma, g_bg, g_ag, g_1g, op = g1s
        h, h_beta, h_gamma, h_delta = g2s
        return cls(L, g, h, g_alpha, g_beta, h_beta, h_gamma, g_delta, h_delta, g_eta_delta,
                   g_eta_gamma, g_bg, g_ag, g_1g, op, mats[0], mats[1], mats[2], alpha_beta)

    @staticmethod
    def serialized_size(L: int) -> int:
        """Byte size of to_bytes() for dimension L, without building a CRS."""
        return (_HEADER + 10 * codec.G1_BYTES + 4 * codec.G2_BYTES
                + 3 * L * L * codec.G1_BYTES + codec.GT_BYTES)


@dataclass(frozen=True)
class QmpProof:
    A: GroupMatrix
    B: GroupMatrix
    C: GroupMatrix
    D: GroupMatrix
    d1: GroupMatrix
    d2: GroupMatrix
    d3: GroupMatrix

    @property
    def dim(self) -> int:
        return self.A.dim

    def to_bytes(self) -> bytes:
        w = codec.Writer().header(PROOF_MAGIC).u32(self.dim)
        for pt in self.A.flat():
            w.g1(pt)
        for pt in self.B.flat():
            w.g2(pt)
        for m in (self.C, self.D, self.d1, self.d2, self.d3):
            for pt in m.flat():
                w.g1(pt)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "QmpProof":
        r = codec.Reader(data)
        r.header(PROOF_MAGIC)
        L = r.u32()
        A = _read_matrix(r, L, r.g1)
        B = _read_matrix(r, L, r.g2)
        rest = [_read_matrix(r, L, r.g1) for _ in range(5)]
        r.done()
        return cls(A, B, *rest)

    @staticmethod
    def serialized_size(L: int) -> int:
        return _HEADER + L * L * (6 * codec.G1_BYTES + codec.G2_BYTES)


def _read_matrix(r: codec.Reader, L: int, read) -> GroupMatrix:
    if L < 1:
        raise ArtifactError("matrix dimension must be >= 1")
    return GroupMatrix([[read() for _ in range(L)] for _ in range(L)])


# ---------------------------------------------------------------------------
# Setup / prove / verify
# ---------------------------------------------------------------------------

def qmp_setup(L: int, rng: Rng, gates: int = 1) -> QmpCrs:
    """
    Generate the CRS for an L×L single-gate program.

    The trapdoor (α, β, γ, δ, η, Z) is local to this call.
    """
    QmpProgram(L, gates)
    alpha, beta, gamma, delta, eta = (rand_scalar(rng) for _ in range(5))
    Z = ScalarMatrix.random(L, rng)
    g, h = G1_GEN, G2_GEN
    gamma_inv, delta_inv = inv(gamma), inv(delta)
    g_alpha = gmul(g, alpha)
    h_beta = gmul(h, beta)
    crs = QmpCrs(
        L=L,
        g=g,
        h=h,
        g_alpha=g_alpha,
        g_beta=gmul(g, beta),
        h_beta=h_beta,
        h_gamma=gmul(h, gamma),
        g_delta=gmul(g, delta),
        h_delta=gmul(h, delta),
        g_eta_delta=gmul(g, eta * delta_inv),
        g_eta_gamma=gmul(g, eta * gamma_inv),
        g_beta_gamma=gmul(g, beta * gamma_inv),
        g_alpha_gamma=gmul(g, alpha * gamma_inv),
        g_one_gamma=gmul(g, gamma_inv),
        op=gmul(g, (alpha + beta + 1) * gamma_inv),
        g_z=mat_exp(g, Z),
        g_beta_z_gamma=mat_exp(g, Z.scale(beta * gamma_inv)),
        g_z_gamma=mat_exp(g, Z.scale(gamma_inv)),
        alpha_beta=pair(g_alpha, h_beta),
    )
    logger.info(f"QMP CRS ready: L={L}, {QmpCrs.serialized_size(L)} bytes")
    return crs


def _slot_matrix(base: G1Point, m: ScalarMatrix, blind: G1Point) -> GroupMatrix:
    """Entrywise base^{m[i][j]} · blind."""
    return GroupMatrix([[gadd(gmul(base, m[i, j]), blind) for j in range(m.dim)] for i in range(m.dim)])


def qmp_prove(crs: QmpCrs, wt: QmpWitness, rng: Rng, check: bool = True) -> Tuple[QmpProof, Scalar]:
    """
    Prove Y = W·X for the witness matrices.

    Args:
        crs: CRS of matching dimension
        wt: Witness (W, X, Y)
        rng: Randomness for (t, s, v)
        check: Refuse unsatisfied witnesses (disable only to test soundness)

    Returns:
        (proof, v) where v is the randomizer shared by D and the d-slots

    Raises:
        ShapeError: On dimension mismatch with the CRS
        ProverError: If check is set and Y != W·X
    """
    L = crs.L
    if not (wt.W.dim == wt.X.dim == wt.Y.dim == L):
        raise ShapeError(f"witness dims ({wt.W.dim}, {wt.X.dim}, {wt.Y.dim}) do not match CRS dim {L}")
    if check and not wt.is_satisfied():
        raise ProverError("qmp", "Y != W·X")

    t, s, v = rand_scalar(rng), rand_scalar(rng), rand_scalar(rng)
    W, X, Y = wt.W, wt.X, wt.Y

    a_diag = gadd(crs.g_alpha, gmul(crs.g_delta, t))
    b_diag = gadd(crs.h_beta, gmul(crs.h_delta, s))
    b1_diag = gadd(crs.g_beta, gmul(crs.g_delta, s))
    c_diag = gadd(gmul(crs.g_delta, -t * s), gneg(gmul(crs.g_eta_delta, v)))
    v_blind = gmul(crs.g_eta_gamma, v)

    A_rows, B_rows, B1_rows, C_rows, D_rows = [], [], [], [], []
    for i in range(L):
        a_row, b_row, b1_row, c_row, d_row = [], [], [], [], []
        for j in range(L):
            # (ZᵀW)[i][j] = Σ_k Z[k][i]·W[k][j]
            a = sparse_msm(((crs.g_z[k, i], W[k, j]) for k in range(L)), G1_ZERO)
            b = gmul(crs.h, X[i, j])
            b1 = gmul(crs.g, X[i, j])
            d = sparse_msm(
                [(crs.g_beta_z_gamma[k, i], W[k, j]) for k in range(L)]
                + [(crs.g_z_gamma[k, i], Y[k, j]) for k in range(L)]
                + [(crs.g_alpha_gamma, X[i, j])],
                G1_ZERO,
            )
            if i == j:
                a = gadd(a, a_diag)
                b = gadd(b, b_diag)
                b1 = gadd(b1, b1_diag)
                d = gadd(d, v_blind)
            c = gadd(gmul(a, s), gmul(b1, t))
            if i == j:
                c = gadd(c, c_diag)
            a_row.append(a)
            b_row.append(b)
            b1_row.append(b1)
            c_row.append(c)
            d_row.append(d)
        A_rows.append(a_row)
        B_rows.append(b_row)
        C_rows.append(c_row)
        D_rows.append(d_row)

    proof = QmpProof(
        A=GroupMatrix(A_rows, "G1"),
        B=GroupMatrix(B_rows, "G2"),
        C=GroupMatrix(C_rows, "G1"),
        D=GroupMatrix(D_rows, "G1"),
        d1=_slot_matrix(crs.g_beta_gamma, W, v_blind),
        d2=_slot_matrix(crs.g_alpha_gamma, X, v_blind),
        d3=_slot_matrix(crs.g_one_gamma, Y, v_blind),
    )
    logger.debug(f"QMP proof built: L={L}")
    return proof, v


def qmp_verify(crs: QmpCrs, proof: QmpProof) -> bool:
    """tr e(A, B) == e(g^α, h^β)^L · Π e(D_ii, h^γ) · Π e(C_ii, h^δ)."""
    try:
        L = crs.L
        mats = (proof.A, proof.B, proof.C, proof.D, proof.d1, proof.d2, proof.d3)
        if any(m.dim != L for m in mats):
            logger.info("QMP rejected: dimension mismatch")
            return False
        if proof.B.group != "G2" or any(m.group != "G1" for m in mats if m is not proof.B):
            logger.info("QMP rejected: wrong groups")
            return False
        if not all(on_curve(pt) for m in mats for pt in m.flat()):
            logger.info("QMP rejected: point off the curve")
            return False
        pairs = [(proof.A[i, k], proof.B[k, i]) for i in range(L) for k in range(L)]
        pairs += [(gneg(proof.D[i, i]), crs.h_gamma) for i in range(L)]
        pairs += [(gneg(proof.C[i, i]), crs.h_delta) for i in range(L)]
        ok = pairing_product(pairs) == gt_pow(crs.alpha_beta, L)
        if not ok:
            logger.info("QMP rejected: trace equation")
        return ok
    except (ValueError, TypeError, AttributeError, AssertionError) as e:
        logger.info(f"QMP rejected: malformed proof ({e})")
        return False


# ---------------------------------------------------------------------------
# Binding D to the commitment slots
# ---------------------------------------------------------------------------

SlotLabel = Callable[[str, int, int], str]


def binding_rows(crs: QmpCrs, proof: QmpProof, label: SlotLabel, blind: str) -> List[LinkedCommitment]:
    """
    Link rows proving that D opens over the same W, X, Y and v as d1, d2, d3.

    Only the diagonal of D enters qmp_verify, so there is one row per D_ii,

        D_ii = Π_k (g^{βZ/γ})[k][i]^{W[k][i]} · Π_k (g^{Z/γ})[k][i]^{Y[k][i]} · (g^{α/γ})^{X[i][i]} · (g^{η/γ})^v

    followed by one row per d1/d2/d3 cell.

    Args:
        crs: CRS of the proof
        proof: The QMP proof
        label: (matrix name "W" | "X" | "Y", i, j) -> link label
        blind: Link label of v

    Raises:
        ShapeError: If the proof dimension differs from the CRS
    """
    L = crs.L
    if any(m.dim != L for m in (proof.D, proof.d1, proof.d2, proof.d3)):
        raise ShapeError(f"proof dim {proof.dim} does not match CRS dim {L}")
    rows = []
    for i in range(L):
        terms = [(crs.g_beta_z_gamma[k, i], label("W", k, i)) for k in range(L)]
        terms += [(crs.g_z_gamma[k, i], label("Y", k, i)) for k in range(L)]
        terms += [(crs.g_alpha_gamma, label("X", i, i)), (crs.g_eta_gamma, blind)]
        rows.append(LinkedCommitment(proof.D[i, i], tuple(terms)))
    for slot, name in (("d1", "W"), ("d2", "X"), ("d3", "Y")):
        base, matrix = crs.slot_bases[slot], getattr(proof, slot)
        for i in range(L):
            for j in range(L):
                rows.append(LinkedCommitment(matrix[i, j], ((base, label(name, i, j)), (crs.g_eta_gamma, blind))))
    return rows


def binding_witness(wt: QmpWitness, v: Scalar, label: SlotLabel, blind: str) -> Dict[str, Scalar]:
    """Label -> value for every row of binding_rows."""
    out = {blind: v}
    for name, m in (("W", wt.W), ("X", wt.X), ("Y", wt.Y)):
        for i in range(m.dim):
            for j in range(m.dim):
                out[label(name, i, j)] = m[i, j]
    return out


# ---------------------------------------------------------------------------
# Field-side oracle
# ---------------------------------------------------------------------------

def field_sides(
    alpha: Scalar, beta: Scalar, gamma: Scalar, delta: Scalar, eta: Scalar,
    s: Scalar, t: Scalar, v: Scalar,
    Z: ScalarMatrix, W: ScalarMatrix, X: ScalarMatrix, Y: ScalarMatrix,
) -> Tuple[Scalar, Scalar]:
    """
    Exponents of both sides of the verification equation, computed over Z_P
    from the same formulas the prover uses.

    Returns:
        (lhs, rhs) with lhs − rhs == tr(Zᵀ(WX − Y)) mod P
    """
    L = W.dim
    I = ScalarMatrix.identity(L)
    A = I.scale(alpha + delta * t) + Z.T @ W
    B = I.scale(beta + delta * s) + X
    C = A.scale(s) + B.scale(t) - I.scale(t * s * delta + v * eta * inv(delta))
    D = (Z.T @ W).scale(beta * inv(gamma)) + X.scale(alpha * inv(gamma)) \
        + (Z.T @ Y).scale(inv(gamma)) + I.scale(v * eta * inv(gamma))
    lhs = (A @ B).trace()
    rhs = (L * alpha * beta + gamma * D.trace() + delta * C.trace()) % P
    return lhs, rhs
