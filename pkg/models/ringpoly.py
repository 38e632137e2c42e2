"""
Polynomial-ring arithmetic for FHE-shaped data.

Elements of Z_q[x]/(x^d+1) are kept with *lazy reduction*: ring products
used inside proved relations are left unreduced (exact integer coefficients,
no folding mod x^d+1 and no reduction mod q), because evaluation at a point
k is a ring homomorphism Z[x] -> Z_P but not one of the quotient ring.
`ring_reduce` brings an element back to canonical form outside the proofs.

The stub cipher is *not* encryption: it packs a value into signed binary
digits so the pipeline runs over genuinely ring-shaped data and decrypts by
evaluation at 2.
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from snark.algebra import P, ScalarMatrix
from utils.config import Settings
from utils.errors import ShapeError

RingMatrix = List[List["RingElem"]]

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_probable_prime(n: int) -> bool:
    """Miller–Rabin with fixed bases (deterministic below 3.3·10^24)."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def largest_prime_below(bound: int) -> int:
    candidate = bound - 1
    if candidate % 2 == 0:
        candidate -= 1
    while candidate > 2 and not is_probable_prime(candidate):
        candidate -= 2
    return candidate


@dataclass(frozen=True)
class RingParams:
    """Ring Z_q[x]/(x^d+1) with d a power of two and q < P."""

    d: int
    q: int

    def __post_init__(self):
        if self.d < 2 or self.d & (self.d - 1):
            raise ValueError(f"ring degree {self.d} is not a power of two >= 2")
        if not 2 < self.q < P:
            raise ValueError("coefficient modulus must satisfy 2 < q < P")

    @classmethod
    def from_bits(cls, d: int, modulus_bits: int) -> "RingParams":
        return cls(d=d, q=largest_prime_below(1 << modulus_bits))

    @classmethod
    def from_settings(cls, settings: Settings) -> "RingParams":
        return cls.from_bits(settings.ring_degree, settings.ring_modulus_bits)

    def center(self, c: int) -> int:
        """Representative of c mod q in (-q/2, q/2]."""
        c %= self.q
        return c - self.q if c > self.q // 2 else c


def _trim(coeffs: Iterable[int]) -> Tuple[int, ...]:
    out = [int(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class RingElem:
    """
    Ring element with integer coefficients (index i holds the x^i term).

    Trailing zeros are stripped, so the zero element has no coefficients.
    """

    params: RingParams
    coeffs: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))
        if self.degree > 2 * self.params.d - 2:
            raise ShapeError(f"degree {self.degree} exceeds the unreduced bound {2 * self.params.d - 2}")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def reduced(self) -> bool:
        """Degree < d and every coefficient a centered residue mod q."""
        half = self.params.q // 2
        return self.degree < self.params.d and all(-half < c <= half for c in self.coeffs)

    def coeff(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def is_zero(self) -> bool:
        return not self.coeffs


def ring_zero(params: RingParams) -> RingElem:
    return RingElem(params)


def ring_const(params: RingParams, c: int) -> RingElem:
    return RingElem(params, (c,))


def _check_params(a: RingElem, b: RingElem) -> None:
    if a.params != b.params:
        raise ValueError("ring parameter mismatch")


def ring_add(a: RingElem, b: RingElem) -> RingElem:
    """
    Coefficientwise sum. Two reduced inputs give a reduced result (mod q);
    if either side is unreduced the sum stays exact.
    """
    _check_params(a, b)
    n = max(len(a.coeffs), len(b.coeffs))
    raw = [a.coeff(i) + b.coeff(i) for i in range(n)]
    if a.reduced and b.reduced:
        raw = [a.params.center(c) for c in raw]
    return RingElem(a.params, raw)


def ring_scale(a: RingElem, c: int) -> RingElem:
    """Exact multiplication by an integer constant."""
    return RingElem(a.params, [c * x for x in a.coeffs])


def ring_mul_unreduced(a: RingElem, b: RingElem) -> RingElem:
    """
    Schoolbook product without reduction mod x^d+1 (or mod q).

    Raises:
        ShapeError: If the product degree would exceed 2d-2
    """
    _check_params(a, b)
    if a.is_zero() or b.is_zero():
        return ring_zero(a.params)
    if a.degree + b.degree > 2 * a.params.d - 2:
        raise ShapeError(f"unreduced product degree {a.degree + b.degree} exceeds {2 * a.params.d - 2}")
    out = [0] * (len(a.coeffs) + len(b.coeffs) - 1)
    for i, x in enumerate(a.coeffs):
        if x == 0:
            continue
        for j, y in enumerate(b.coeffs):
            out[i + j] += x * y
    return RingElem(a.params, out)


def ring_reduce(a: RingElem) -> RingElem:
    """Fold mod x^d+1 (negacyclic) and reduce coefficients mod q."""
    d = a.params.d
    out = [0] * d
    for i, c in enumerate(a.coeffs):
        # x^d = -1
        sign = -1 if (i // d) % 2 else 1
        out[i % d] += sign * c
    return RingElem(a.params, [a.params.center(c) for c in out])


def ring_mul(a: RingElem, b: RingElem) -> RingElem:
    """Negacyclic product in Z_q[x]/(x^d+1)."""
    return ring_reduce(ring_mul_unreduced(ring_reduce(a), ring_reduce(b)))


def ring_eval(a: RingElem, k: int) -> int:
    """a(k) mod P (Horner); integer coefficients embed directly into Z_P."""
    acc = 0
    for c in reversed(a.coeffs):
        acc = (acc * k + c) % P
    return acc


# ---------------------------------------------------------------------------
# Matrices of ring elements
# ---------------------------------------------------------------------------

def _square_dim(m: Sequence[Sequence[RingElem]]) -> int:
    n = len(m)
    if n == 0 or any(len(row) != n for row in m):
        raise ShapeError("ring matrix must be square and non-empty")
    return n


def ring_matrix_params(m: Sequence[Sequence[RingElem]]) -> RingParams:
    params = {e.params for row in m for e in row}
    if len(params) != 1:
        raise ValueError("ring matrix entries must share parameters")
    return params.pop()


def ring_matmul_unreduced(a: RingMatrix, b: RingMatrix) -> RingMatrix:
    """Matrix product with unreduced entry products and exact sums."""
    n = _square_dim(a)
    if _square_dim(b) != n:
        raise ShapeError("ring matrix dimension mismatch")
    params = a[0][0].params
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc: List[int] = []
            for t in range(n):
                prod = ring_mul_unreduced(a[i][t], b[t][j])
                if len(prod.coeffs) > len(acc):
                    acc.extend([0] * (len(prod.coeffs) - len(acc)))
                for idx, c in enumerate(prod.coeffs):
                    acc[idx] += c
            row.append(RingElem(params, acc))
        out.append(row)
    return out


def ring_square_act(m: RingMatrix) -> RingMatrix:
    """Entrywise x·x + x with unreduced products."""
    out = []
    for row in m:
        new_row = []
        for x in row:
            sq = ring_mul_unreduced(x, x)
            n = max(len(sq.coeffs), len(x.coeffs))
            new_row.append(RingElem(x.params, [sq.coeff(i) + x.coeff(i) for i in range(n)]))
        out.append(new_row)
    return out


def eval_at(m: Sequence[Sequence[RingElem]], k: int) -> ScalarMatrix:
    """Entrywise evaluation at k, embedded into Z_P."""
    _square_dim(m)
    return ScalarMatrix([[ring_eval(e, k) for e in row] for row in m])


def max_degree(m: Sequence[Sequence[RingElem]]) -> int:
    return max((e.degree for row in m for e in row), default=-1)


# ---------------------------------------------------------------------------
# Bivariate encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BivariatePoly:
    """
    Σ l[i][j] x^i y^j with slot j = row-major matrix cell.

    `coeffs[i][j]` holds l_{i,j}; the table has deg_x + 1 rows and `slots`
    columns. Coefficients are integers (negative values allowed).
    """

    coeffs: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if not self.coeffs or len({len(r) for r in self.coeffs}) != 1 or not self.coeffs[0]:
            raise ShapeError("bivariate coefficient table must be rectangular and non-empty")

    @property
    def deg_x(self) -> int:
        return len(self.coeffs) - 1

    @property
    def slots(self) -> int:
        return len(self.coeffs[0])

    def coeff(self, i: int, j: int) -> int:
        if 0 <= i <= self.deg_x:
            return self.coeffs[i][j]
        return 0

    def eval_x(self, k: int) -> List[int]:
        """Coefficients of L(k, y), one scalar per slot (mod P)."""
        out = [0] * self.slots
        for i in range(self.deg_x, -1, -1):
            row = self.coeffs[i]
            out = [(acc * k + c) % P for acc, c in zip(out, row)]
        return out

    @classmethod
    def zero(cls, slots: int, deg_x: int = 0) -> "BivariatePoly":
        return cls(tuple(tuple(0 for _ in range(slots)) for _ in range(deg_x + 1)))

    @classmethod
    def from_slots(cls, values: Sequence[int]) -> "BivariatePoly":
        """Degree-0 polynomial holding one value per slot."""
        return cls((tuple(int(v) for v in values),))


def bivariate_add(polys: Sequence[BivariatePoly], weights: Optional[Sequence[int]] = None) -> BivariatePoly:
    """Sum (or weighted sum Σ w_i·p_i) of polynomials with the same slot count, in exact integers."""
    if not polys:
        raise ValueError("nothing to add")
    slots = polys[0].slots
    if any(p.slots != slots for p in polys):
        raise ShapeError("slot count mismatch")
    if weights is None:
        weights = [1] * len(polys)
    elif len(weights) != len(polys):
        raise ShapeError(f"{len(weights)} weights for {len(polys)} polynomials")
    deg = max(p.deg_x for p in polys)
    return BivariatePoly(tuple(
        tuple(sum(w * p.coeff(i, j) for p, w in zip(polys, weights)) for j in range(slots))
        for i in range(deg + 1)
    ))


def encode_matrix(m: Sequence[Sequence[RingElem]]) -> BivariatePoly:
    """Row-major cells become slots; ring coefficients become x-coefficients."""
    n = _square_dim(m)
    ring_matrix_params(m)
    cells = [e for row in m for e in row]
    deg = max(max_degree(m), 0)
    return BivariatePoly(tuple(
        tuple(cell.coeff(i) for cell in cells)
        for i in range(deg + 1)
    ))


def decode_matrix(poly: BivariatePoly, params: RingParams) -> RingMatrix:
    """Inverse of encode_matrix."""
    n = int(round(poly.slots ** 0.5))
    if n * n != poly.slots:
        raise ShapeError(f"slot count {poly.slots} is not a perfect square")
    cells = [RingElem(params, [poly.coeff(i, j) for i in range(poly.deg_x + 1)]) for j in range(poly.slots)]
    return [cells[r * n:(r + 1) * n] for r in range(n)]


# ---------------------------------------------------------------------------
# Stub cipher
# ---------------------------------------------------------------------------

def stub_encrypt_value(v: int, params: RingParams) -> RingElem:
    """Signed binary digits of v as coefficients (x = 2 recovers v)."""
    v = int(v)
    if abs(v) >= params.q // 2 or abs(v).bit_length() > params.d:
        raise ValueError(f"value {v} does not fit the ring parameters")
    sign = -1 if v < 0 else 1
    mag = abs(v)
    return RingElem(params, [sign * ((mag >> i) & 1) for i in range(mag.bit_length())])


def stub_decrypt_value(c: RingElem) -> int:
    total = 0
    for i, coeff in enumerate(c.coeffs):
        total += coeff << i
    return c.params.center(total)


def stub_encrypt(plain, params: RingParams) -> RingMatrix:
    """Entrywise stub_encrypt_value over a square integer matrix."""
    arr = np.asarray(plain, dtype=object)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError("stub_encrypt expects a square matrix")
    return [[stub_encrypt_value(int(v), params) for v in row] for row in arr]


def stub_decrypt(cipher: Sequence[Sequence[RingElem]]) -> np.ndarray:
    """Inverse of stub_encrypt; returns an int64 matrix."""
    return np.array([[stub_decrypt_value(c) for c in row] for row in cipher], dtype=np.int64)
