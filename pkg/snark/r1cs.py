"""
Rank-1 constraint systems, a small circuit builder and QAP compilation.

Variables are linear combinations of witness entries, kept as
{index: coefficient} maps; index 0 is the constant 1. Each witness entry is
produced by a generator function, so a circuit carries its own witness
solver.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from snark.algebra import P, Scalar, centered, inv
from utils.errors import ProverError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

ONE = "one"
PUBLIC = "public"
COMMITTED = "committed"
PRIVATE = "private"
KINDS = (ONE, PUBLIC, COMMITTED, PRIVATE)

LinComb = Dict[int, int]


class Var:
    """Linear combination Σ c_i·w_i of witness entries."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, int]):
        self.terms: LinComb = {i: c % P for i, c in terms.items() if c % P}

    @classmethod
    def const(cls, c: int) -> "Var":
        return cls({0: c})

    def _combine(self, other: "Operand", sign: int) -> "Var":
        other = as_var(other)
        out = dict(self.terms)
        for i, c in other.terms.items():
            out[i] = (out.get(i, 0) + sign * c) % P
        return Var(out)

    def __add__(self, other: "Operand") -> "Var":
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other: "Operand") -> "Var":
        return self._combine(other, -1)

    def __rsub__(self, other: "Operand") -> "Var":
        return as_var(other)._combine(self, -1)

    def __neg__(self) -> "Var":
        return Var({i: -c for i, c in self.terms.items()})

    def __mul__(self, k: int) -> "Var":
        if not isinstance(k, int):
            raise TypeError("Var can only be scaled by an int; use CircuitBuilder.mul")
        return Var({i: c * k for i, c in self.terms.items()})

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Var({self.terms})"


Operand = Union[Var, int]


def as_var(x: Operand) -> Var:
    return x if isinstance(x, Var) else Var.const(x)


def var_sum(items: Sequence[Operand]) -> Var:
    acc = Var({})
    for x in items:
        acc = acc + x
    return acc


@dataclass(frozen=True)
class Constraint:
    a: LinComb
    b: LinComb
    c: LinComb
    label: str = ""


def dot(terms: LinComb, assignment: Sequence[int]) -> int:
    return sum(c * assignment[i] for i, c in terms.items()) % P


@dataclass
class R1cs:
    """
    Constraints ⟨a,w⟩·⟨b,w⟩ = ⟨c,w⟩ over `num_vars` witness entries.

    kinds[i] is one of one/public/committed/private; entry 0 is the
    constant 1 and always has kind "one".
    """

    constraints: List[Constraint]
    kinds: List[str]
    names: Dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.kinds or self.kinds[0] != ONE or ONE in self.kinds[1:]:
            raise ShapeError("variable 0 must be the constant one, and only it")
        if any(k not in KINDS for k in self.kinds):
            raise ShapeError("unknown variable kind")
        for con in self.constraints:
            for lc in (con.a, con.b, con.c):
                if any(i >= self.num_vars or i < 0 for i in lc):
                    raise ShapeError(f"constraint {con.label!r} references an unknown variable")

    @property
    def num_vars(self) -> int:
        return len(self.kinds)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def indices(self, *kinds: str) -> List[int]:
        return [i for i, k in enumerate(self.kinds) if k in kinds]

    @property
    def public_indices(self) -> List[int]:
        """Constant one followed by the public inputs."""
        return self.indices(ONE, PUBLIC)

    @property
    def committed_indices(self) -> List[int]:
        return self.indices(COMMITTED)

    @property
    def private_indices(self) -> List[int]:
        return self.indices(PRIVATE)

    def first_violation(self, assignment: Sequence[int]) -> Optional[int]:
        if len(assignment) != self.num_vars:
            raise ShapeError(f"assignment has {len(assignment)} entries, expected {self.num_vars}")
        if assignment[0] % P != 1:
            return -1
        for n, con in enumerate(self.constraints):
            if dot(con.a, assignment) * dot(con.b, assignment) % P != dot(con.c, assignment):
                return n
        return None

    def is_satisfied(self, assignment: Sequence[int]) -> bool:
        return self.first_violation(assignment) is None

    def digest(self) -> bytes:
        """Circuit hash binding statements to this exact constraint system."""
        h = hashlib.sha256()
        h.update(b"zkcnn/r1cs")
        h.update(",".join(self.kinds).encode())
        for con in self.constraints:
            for lc in (con.a, con.b, con.c):
                h.update(b"|" + ";".join(f"{i}:{c}" for i, c in sorted(lc.items())).encode())
        return h.digest()


WireFn = Callable[[Callable[[Operand], int], Mapping[str, int]], int]


class Circuit:
    """An R1CS together with the generators that solve its witness."""

    def __init__(self, name: str, r1cs: R1cs, wires: List[WireFn]):
        self.name = name
        self.r1cs = r1cs
        self._wires = wires

    def solve(self, args: Mapping[str, int]) -> List[int]:
        """
        Compute the full assignment from named inputs.

        Raises:
            ProverError: If a generator fails or a constraint is violated
        """
        values: List[int] = []

        def value(x: Operand) -> int:
            return dot(as_var(x).terms, values)

        for n, fn in enumerate(self._wires):
            try:
                values.append(fn(value, args) % P)
            except KeyError as e:
                raise ProverError(self.name, f"missing input {e}") from e
        bad = self.r1cs.first_violation(values)
        if bad is not None:
            label = self.r1cs.constraints[bad].label if bad >= 0 else "constant"
            raise ProverError(self.name, f"constraint {bad} ({label}) not satisfied")
        return values

    def named(self, assignment: Sequence[int]) -> Dict[str, int]:
        return {name: assignment[i] for i, name in self.r1cs.names.items()}

    def index_of(self, name: str) -> int:
        for i, n in self.r1cs.names.items():
            if n == name:
                return i
        raise KeyError(name)


class CircuitBuilder:
    """
    Incremental circuit construction.

    Example:
        cb = CircuitBuilder("square")
        x = cb.input("x", COMMITTED)
        y = cb.wire(lambda val, args: val(x) ** 2 + val(x), COMMITTED, "y")
        cb.constrain(x, x, y - x)
        circuit = cb.build()
    """

    def __init__(self, name: str):
        self.name = name
        self._wires: List[WireFn] = [lambda val, args: 1]
        self._kinds: List[str] = [ONE]
        self._names: Dict[int, str] = {0: "one"}
        self._constraints: List[Constraint] = []

    def wire(self, fn: WireFn, kind: str = PRIVATE, name: Optional[str] = None) -> Var:
        if kind not in (PUBLIC, COMMITTED, PRIVATE):
            raise ValueError(f"invalid wire kind {kind!r}")
        idx = len(self._wires)
        self._wires.append(fn)
        self._kinds.append(kind)
        if name is not None:
            self._names[idx] = name
        return Var({idx: 1})

    def input(self, name: str, kind: str = COMMITTED, default: Optional[WireFn] = None) -> Var:
        """Wire read from args[name]; `default` computes it when absent."""

        def read(val, args):
            if name in args:
                return int(args[name])
            if default is None:
                raise KeyError(name)
            return default(val, args)

        return self.wire(read, kind, name)

    def constrain(self, a: Operand, b: Operand, c: Operand, label: str = "") -> None:
        self._constraints.append(Constraint(as_var(a).terms, as_var(b).terms, as_var(c).terms, label))

    def mul(self, x: Operand, y: Operand, kind: str = PRIVATE, name: Optional[str] = None, label: str = "") -> Var:
        z = self.wire(lambda val, args: val(x) * val(y), kind, name)
        self.constrain(x, y, z, label or "mul")
        return z

    def assert_bool(self, b: Var, label: str = "bool") -> None:
        self.constrain(b, b, b, label)

    def binary(self, x: Operand, bits: int, label: str = "bits") -> List[Var]:
        """
        Decompose x into `bits` boolean wires; enforces 0 <= x < 2^bits.

        Costs bits + 1 constraints.
        """
        if not 0 < bits < P.bit_length() - 1:
            raise ValueError(f"invalid bit length {bits}")
        out = []
        for i in range(bits):
            b = self.wire(lambda val, args, i=i: (val(x) >> i) & 1)
            self.assert_bool(b, f"{label}.bool")
            out.append(b)
        self.constrain(var_sum([b * (1 << i) for i, b in enumerate(out)]), 1, x, f"{label}.recompose")
        return out

    def signed_range(self, x: Operand, bits: int, label: str = "range") -> List[Var]:
        """Enforce x ∈ [−2^{bits−1}, 2^{bits−1}) via the bits of x + 2^{bits−1}."""
        return self.binary(as_var(x) + (1 << (bits - 1)), bits, label)

    def build(self) -> Circuit:
        used = set()
        for con in self._constraints:
            used.update(con.a)
            used.update(con.b)
            used.update(con.c)
        constraints = list(self._constraints)
        for i, kind in enumerate(self._kinds):
            if kind in (PUBLIC, COMMITTED) and i not in used:
                # unconstrained public/committed entries still need a nonzero polynomial
                constraints.append(Constraint({i: 1}, {0: 1}, {i: 1}, "bind"))
        r1cs = R1cs(constraints, list(self._kinds), dict(self._names))
        logger.debug(f"circuit {self.name}: {r1cs.num_constraints} constraints, {r1cs.num_vars} variables")
        return Circuit(self.name, r1cs, list(self._wires))


# ---------------------------------------------------------------------------
# NTT over Z_P
# ---------------------------------------------------------------------------

_TWO_ADICITY = 32
_GENERATOR = 7
COSET_SHIFT = 7


def root_of_unity(n: int) -> int:
    """Primitive n-th root of unity for n a power of two <= 2^32."""
    if n < 1 or n & (n - 1) or n > 1 << _TWO_ADICITY:
        raise ValueError(f"no root of unity of order {n}")
    w = pow(_GENERATOR, (P - 1) >> _TWO_ADICITY, P)
    w = pow(w, (1 << _TWO_ADICITY) // n, P)
    if n >= 2 and pow(w, n // 2, P) != P - 1:
        raise ValueError("root of unity is not primitive")
    return w


def ntt(values: Sequence[int], root: int) -> List[int]:
    """Evaluate the coefficient vector at root^0 .. root^{n−1} (radix-2)."""
    n = len(values)
    if n == 1:
        return [values[0] % P]
    even = ntt(values[0::2], root * root % P)
    odd = ntt(values[1::2], root * root % P)
    out = [0] * n
    w = 1
    half = n // 2
    for i in range(half):
        t = w * odd[i] % P
        out[i] = (even[i] + t) % P
        out[i + half] = (even[i] - t) % P
        w = w * root % P
    return out


def intt(values: Sequence[int], root: int) -> List[int]:
    n = len(values)
    n_inv = inv(n)
    return [v * n_inv % P for v in ntt(values, inv(root))]


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


# ---------------------------------------------------------------------------
# QAP
# ---------------------------------------------------------------------------

@dataclass
class QapInstance:
    """
    QAP view of an R1CS over the domain of N-th roots of unity.

    N is the next power of two >= #constraints and the target is
    t(X) = X^N − 1; rows past the last constraint are all-zero.
    """

    r1cs: R1cs
    N: int
    omega: int

    @property
    def degree(self) -> int:
        return self.N

    def target_at(self, x: int) -> int:
        return (pow(x, self.N, P) - 1) % P

    def _column(self, var: int, which: str) -> List[int]:
        col = [0] * self.N
        for row, con in enumerate(self.r1cs.constraints):
            col[row] = getattr(con, which).get(var, 0)
        return col

    def interpolate(self, var: int) -> Tuple[List[int], List[int], List[int]]:
        """Coefficients of (l_var, r_var, o_var), each of degree < N."""
        return tuple(intt(self._column(var, w), self.omega) for w in ("a", "b", "c"))

    def lagrange_at(self, tau: int) -> List[int]:
        """Lagrange basis L_j(τ) of the domain (barycentric form)."""
        t_tau = self.target_at(tau)
        if t_tau == 0:
            # τ is a domain point
            pts = [pow(self.omega, j, P) for j in range(self.N)]
            return [1 if p == tau % P else 0 for p in pts]
        n_inv = inv(self.N)
        out = []
        w = 1
        for _ in range(self.N):
            out.append(t_tau * n_inv % P * w % P * inv(tau - w) % P)
            w = w * self.omega % P
        return out

    def evaluate_columns(self, tau: int) -> Tuple[List[int], List[int], List[int]]:
        """(u_i(τ), v_i(τ), w_i(τ)) for every variable i."""
        lag = self.lagrange_at(tau)
        n = self.r1cs.num_vars
        u, v, w = [0] * n, [0] * n, [0] * n
        for row, con in enumerate(self.r1cs.constraints):
            for i, c in con.a.items():
                u[i] = (u[i] + c * lag[row]) % P
            for i, c in con.b.items():
                v[i] = (v[i] + c * lag[row]) % P
            for i, c in con.c.items():
                w[i] = (w[i] + c * lag[row]) % P
        return u, v, w

    def _evals(self, assignment: Sequence[int]) -> Tuple[List[int], List[int], List[int]]:
        pad = [0] * (self.N - self.r1cs.num_constraints)
        a = [dot(con.a, assignment) for con in self.r1cs.constraints] + pad
        b = [dot(con.b, assignment) for con in self.r1cs.constraints] + pad
        c = [dot(con.c, assignment) for con in self.r1cs.constraints] + pad
        return a, b, c

    def divides(self, assignment: Sequence[int]) -> bool:
        """True iff t(X) divides A(X)·B(X) − C(X) for this assignment."""
        a, b, c = (intt(e, self.omega) for e in self._evals(assignment))
        big = 2 * self.N
        w2 = root_of_unity(big)
        pa = ntt(a + [0] * self.N, w2)
        pb = ntt(b + [0] * self.N, w2)
        prod = intt([x * y % P for x, y in zip(pa, pb)], w2)
        poly = [(prod[i] - (c[i] if i < self.N else 0)) % P for i in range(big)]
        # remainder mod X^N − 1 folds the upper half onto the lower
        return all((poly[i] + poly[i + self.N]) % P == 0 for i in range(self.N))

    def quotient(self, assignment: Sequence[int]) -> List[int]:
        """
        Coefficients of h(X) = (A·B − C)/t, degree <= N − 2, computed on the
        coset COSET_SHIFT·⟨ω⟩ where t is the nonzero constant shift^N − 1.
        """
        a, b, c = (intt(e, self.omega) for e in self._evals(assignment))
        shifts = [pow(COSET_SHIFT, i, P) for i in range(self.N)]

        def coset(coeffs):
            return ntt([x * s % P for x, s in zip(coeffs, shifts)], self.omega)

        ea, eb, ec = coset(a), coset(b), coset(c)
        t_inv = inv(self.target_at(COSET_SHIFT))
        eh = [(x * y - z) * t_inv % P for x, y, z in zip(ea, eb, ec)]
        shift_inv = inv(COSET_SHIFT)
        h = intt(eh, self.omega)
        return [x * pow(shift_inv, i, P) % P for i, x in enumerate(h)][: self.N - 1]


def compile_r1cs(r1cs: R1cs) -> QapInstance:
    """
    Interpolate an R1CS over the roots of unity.

    Raises:
        ShapeError: If the system has no constraints
    """
    if r1cs.num_constraints < 1:
        raise ShapeError("cannot compile an empty constraint system")
    N = next_pow2(r1cs.num_constraints)
    return QapInstance(r1cs=r1cs, N=N, omega=root_of_unity(N))


def signed(x: Scalar) -> int:
    """Field element as a signed integer."""
    return centered(x)
