"""
Pairing-group arithmetic over BLS12-381.

Scalars are plain Python ints reduced mod the group order P. Group elements
are py_ecc optimized (projective) points; GT elements are FQ12 values. On
top of that this module provides square matrices of scalars and of group
elements, multi-exponentiation, and the trace-of-pairing check used by the
matrix SNARK.
"""

from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from py_ecc.optimized_bls12_381 import (
    FQ12,
    G1,
    G2,
    Z1,
    Z2,
    add,
    b as B1_COEFF,
    b2 as B2_COEFF,
    curve_order,
    eq,
    final_exponentiate,
    is_inf,
    is_on_curve,
    multiply,
    neg,
    pairing,
)

from utils.config import Rng

P = curve_order
"""Prime order of G1, G2 and GT; every scalar lives in Z_P."""

Scalar = int
G1Point = tuple
G2Point = tuple
GroupPoint = Union[G1Point, G2Point]
GtElem = FQ12

G1_GEN: G1Point = G1
G2_GEN: G2Point = G2
G1_ZERO: G1Point = Z1
G2_ZERO: G2Point = Z2


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------

def rand_scalar(rng: Rng, nonzero: bool = True) -> Scalar:
    """Uniform scalar; trapdoors and randomizers use nonzero=True."""
    low = 1 if nonzero else 0
    return rng.randrange(low, P)


def inv(x: Scalar) -> Scalar:
    """Multiplicative inverse mod P."""
    x %= P
    if x == 0:
        raise ZeroDivisionError("zero has no inverse mod P")
    return pow(x, -1, P)


def to_scalar(x: int) -> Scalar:
    """Embed a (possibly negative) integer into Z_P."""
    return int(x) % P


def centered(x: Scalar) -> int:
    """Lift a scalar back to a signed integer in (-P/2, P/2]."""
    x %= P
    return x - P if x > P // 2 else x


# ---------------------------------------------------------------------------
# Group elements
# ---------------------------------------------------------------------------

def group_of(pt: GroupPoint) -> str:
    """Return "G1" or "G2" depending on the coordinate field of the point."""
    return "G2" if hasattr(pt[0], "coeffs") else "G1"


def identity_like(pt: GroupPoint) -> GroupPoint:
    return G2_ZERO if group_of(pt) == "G2" else G1_ZERO


def gmul(pt: GroupPoint, s: Scalar) -> GroupPoint:
    """pt^s (additively: s*pt). Negative-looking scalars use the negated base."""
    s %= P
    if s == 0 or is_inf(pt):
        return identity_like(pt)
    # small negative exponents are common (weights, remainders)
    if s > P // 2:
        return multiply(neg(pt), P - s)
    return multiply(pt, s)


def gadd(a: GroupPoint, b: GroupPoint) -> GroupPoint:
    return add(a, b)


def gsub(a: GroupPoint, b: GroupPoint) -> GroupPoint:
    return add(a, neg(b))


def gneg(a: GroupPoint) -> GroupPoint:
    return neg(a)


def geq(a: GroupPoint, b: GroupPoint) -> bool:
    return eq(a, b)


def is_identity(a: GroupPoint) -> bool:
    return is_inf(a)


def on_curve(pt: GroupPoint) -> bool:
    """Whether pt lies on the curve of its group; the identity does."""
    try:
        return is_on_curve(pt, B2_COEFF if group_of(pt) == "G2" else B1_COEFF)
    except (TypeError, ValueError, AttributeError, IndexError):
        return False


def msm(bases: Sequence[GroupPoint], scalars: Sequence[Scalar]) -> GroupPoint:
    """
    Multi-exponentiation Π bases[i]^{scalars[i]}.

    Args:
        bases: Non-empty list of points of one group
        scalars: Exponents, same length as bases

    Returns:
        The product as a point of the bases' group

    Raises:
        ValueError: If the lengths differ or the input is empty
    """
    if len(bases) != len(scalars):
        raise ValueError(f"msm length mismatch: {len(bases)} bases vs {len(scalars)} scalars")
    if not bases:
        raise ValueError("msm needs at least one term")
    acc = identity_like(bases[0])
    for base, s in zip(bases, scalars):
        if s % P:
            acc = add(acc, gmul(base, s))
    return acc


def sparse_msm(terms: Iterable[Tuple[GroupPoint, Scalar]], zero: GroupPoint) -> GroupPoint:
    """msm over (base, scalar) pairs that may be empty; `zero` fixes the group."""
    acc = zero
    for base, s in terms:
        if s % P:
            acc = add(acc, gmul(base, s))
    return acc


# ---------------------------------------------------------------------------
# Pairings
# ---------------------------------------------------------------------------

def gt_one() -> GtElem:
    return FQ12.one()


def pair(p: G1Point, q: G2Point) -> GtElem:
    """e(p, q) with the final exponentiation applied."""
    return pairing(q, p)


def miller(p: G1Point, q: G2Point) -> GtElem:
    """Miller loop of e(p, q) without the final exponentiation."""
    return pairing(q, p, final_exponentiate=False)


def pairing_product(pairs: Iterable[Tuple[G1Point, G2Point]]) -> GtElem:
    """Π e(p_i, q_i) with one shared final exponentiation."""
    acc = FQ12.one()
    for p, q in pairs:
        if is_inf(p) or is_inf(q):
            continue
        acc = acc * miller(p, q)
    return final_exponentiate(acc)


def pairing_check(pairs: Iterable[Tuple[G1Point, G2Point]]) -> bool:
    """True iff Π e(p_i, q_i) is the GT identity."""
    return pairing_product(pairs) == FQ12.one()


def gt_pow(x: GtElem, e: Scalar) -> GtElem:
    e %= P
    if e == 0:
        return FQ12.one()
    return x ** e


def gt_inv(x: GtElem) -> GtElem:
    return x.inv()


def gt_mul(*xs: GtElem) -> GtElem:
    acc = FQ12.one()
    for x in xs:
        acc = acc * x
    return acc


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

class ScalarMatrix:
    """
    Square L×L matrix over Z_P.

    Entries are stored in a read-only numpy object array of Python ints so
    products never overflow; every operation returns a new matrix.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=object)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ValueError(f"ScalarMatrix must be square and non-empty, got shape {arr.shape}")
        arr = np.vectorize(lambda v: int(v) % P, otypes=[object])(arr)
        arr.flags.writeable = False
        self._a = arr

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "ScalarMatrix":
        m = cls.__new__(cls)
        arr = arr % P
        arr.flags.writeable = False
        m._a = arr
        return m

    @classmethod
    def zeros(cls, dim: int) -> "ScalarMatrix":
        return cls._wrap(np.zeros((dim, dim), dtype=object))

    @classmethod
    def identity(cls, dim: int, value: Scalar = 1) -> "ScalarMatrix":
        arr = np.zeros((dim, dim), dtype=object)
        for i in range(dim):
            arr[i, i] = value
        return cls._wrap(arr)

    @classmethod
    def random(cls, dim: int, rng: Rng, bound: Optional[int] = None) -> "ScalarMatrix":
        """Uniform matrix, or entries in [0, bound) when bound is given."""
        top = P if bound is None else bound
        return cls([[rng.randrange(top) for _ in range(dim)] for _ in range(dim)])

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._a

    def __getitem__(self, idx: Tuple[int, int]) -> Scalar:
        return self._a[idx]

    def rows(self) -> List[List[Scalar]]:
        return [[int(v) for v in row] for row in self._a]

    def flat(self) -> List[Scalar]:
        """Entries in row-major order."""
        return [int(v) for v in self._a.reshape(-1)]

    def with_entry(self, i: int, j: int, value: Scalar) -> "ScalarMatrix":
        arr = self._a.copy()
        arr[i, j] = value
        return ScalarMatrix._wrap(arr)

    def _check(self, other: "ScalarMatrix") -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __matmul__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        self._check(other)
        return ScalarMatrix._wrap(self._a.dot(other._a))

    def __add__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        self._check(other)
        return ScalarMatrix._wrap(self._a + other._a)

    def __sub__(self, other: "ScalarMatrix") -> "ScalarMatrix":
        self._check(other)
        return ScalarMatrix._wrap(self._a - other._a)

    def scale(self, c: Scalar) -> "ScalarMatrix":
        return ScalarMatrix._wrap(self._a * (c % P))

    @property
    def T(self) -> "ScalarMatrix":
        return ScalarMatrix._wrap(self._a.T.copy())

    def trace(self) -> Scalar:
        return int(sum(self._a[i, i] for i in range(self.dim))) % P

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScalarMatrix) or other.dim != self.dim:
            return False
        return bool(np.all(self._a == other._a))

    def __hash__(self) -> int:
        return hash(tuple(self.flat()))

    def __repr__(self) -> str:
        return f"ScalarMatrix(dim={self.dim})"


class GroupMatrix:
    """Square L×L matrix of points from a single group (G1 or G2)."""

    __slots__ = ("group", "entries")

    def __init__(self, entries: Sequence[Sequence[GroupPoint]], group: Optional[str] = None):
        rows = tuple(tuple(row) for row in entries)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ValueError("GroupMatrix must be square and non-empty")
        groups = {group_of(pt) for row in rows for pt in row}
        if len(groups) != 1:
            raise ValueError("GroupMatrix entries must come from one group")
        found = groups.pop()
        if group is not None and group != found:
            raise ValueError(f"expected {group} entries, got {found}")
        self.group = found
        self.entries = rows

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx: Tuple[int, int]) -> GroupPoint:
        i, j = idx
        return self.entries[i][j]

    def diagonal(self) -> List[GroupPoint]:
        return [self.entries[i][i] for i in range(self.dim)]

    def flat(self) -> List[GroupPoint]:
        return [pt for row in self.entries for pt in row]

    def with_entry(self, i: int, j: int, pt: GroupPoint) -> "GroupMatrix":
        rows = [list(r) for r in self.entries]
        rows[i][j] = pt
        return GroupMatrix(rows, self.group)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupMatrix) or other.dim != self.dim or other.group != self.group:
            return False
        return all(eq(a, b) for a, b in zip(self.flat(), other.flat()))

    def __repr__(self) -> str:
        return f"GroupMatrix({self.group}, dim={self.dim})"


def mat_exp(base: GroupPoint, m: ScalarMatrix) -> GroupMatrix:
    """Entrywise base^{m[i][j]}."""
    return GroupMatrix([[gmul(base, m[i, j]) for j in range(m.dim)] for i in range(m.dim)])


def pair_trace(a: GroupMatrix, b: GroupMatrix) -> GtElem:
    """
    GT trace of the matrix product in the exponent: Π_{i,k} e(a[i][k], b[k][i]).

    Only the L² entry pairs that feed the diagonal are paired, with one final
    exponentiation for the whole product.

    Raises:
        ValueError: On dimension or group mismatch
    """
    if a.dim != b.dim:
        raise ValueError(f"pair_trace dimension mismatch: {a.dim} vs {b.dim}")
    if a.group != "G1" or b.group != "G2":
        raise ValueError("pair_trace expects a G1 matrix and a G2 matrix")
    n = a.dim
    return pairing_product((a[i, k], b[k, i]) for i in range(n) for k in range(n))
