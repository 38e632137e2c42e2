"""
R1CS gadgets for the non-linear layers and the naive matmul baseline.

Every gadget commits to its inputs and outputs (`x[i]`, `y[i]`), so the
CaP proof's D element can be linked to the neighbouring layers. Input and
output names are the contract with the pipeline.
"""

from typing import List

from snark.algebra import centered
from snark.r1cs import COMMITTED, PRIVATE, PUBLIC, Circuit, CircuitBuilder, Var, var_sum
from utils.errors import ShapeError

RELU_REFERENCE_CONSTRAINTS = 20
AVGPOOL_REFERENCE_CONSTRAINTS = 144


def _check_count(n: int, what: str = "elements") -> None:
    if n < 1:
        raise ShapeError(f"gadget needs at least one of its {what}")


def gadget_square_act(n: int) -> Circuit:
    """y = x² + x per element; one constraint each (x·x = y − x)."""
    _check_count(n)
    cb = CircuitBuilder("square_act")
    for i in range(n):
        x = cb.input(f"x[{i}]", COMMITTED)
        y = cb.wire(lambda val, args, x=x: val(x) * val(x) + val(x), COMMITTED, f"y[{i}]")
        cb.constrain(x, x, y - x, f"square[{i}]")
    return cb.build()


def gadget_relu(n: int, bits: int) -> Circuit:
    """
    y = max(x, 0) for x in the two's-complement window [−2^{Q−1}, 2^{Q−1}).

    Per element: Q booleanity constraints on the bits of x + 2^{Q−1}, one
    recomposition and one sign selection (Q + 2 constraints).
    """
    _check_count(n)
    if bits < 2:
        raise ShapeError("relu needs at least 2 bits")
    cb = CircuitBuilder("relu")
    for i in range(n):
        x = cb.input(f"x[{i}]", COMMITTED)
        digits = cb.signed_range(x, bits, f"relu[{i}]")
        # top bit of x + 2^{Q−1} is 1 exactly when x >= 0
        cb.mul(x, digits[-1], COMMITTED, f"y[{i}]", f"relu[{i}].select")
    return cb.build()


def pool_remainder_bits(window: int) -> int:
    return max(1, (window * window - 1).bit_length())


def _remainder_range(cb: CircuitBuilder, rem: Var, window: int, label: str) -> None:
    """0 <= rem < w²."""
    area, k = window * window, pool_remainder_bits(window)
    if area == 1:
        cb.constrain(rem, 1, 0, label)
        return
    cb.binary(rem, k, label)
    if area != 1 << k:
        cb.binary((area - 1) - rem, k, f"{label}-upper")


def gadget_avgpool(windows: int, window: int, bits: int = 16, range_check: bool = True) -> Circuit:
    """
    y·w² + rem = Σ window for each of `windows` pooling windows.

    Inputs are x[i][t] for t < w²; outputs y[i]; the remainder rem[i] is
    private when range-checked (0 <= rem < w², y in the signed Q-bit window)
    and committed otherwise. Without range checks (values evaluated at a
    random point) only the linear relation is enforced; y and rem must then
    be supplied as inputs.
    """
    _check_count(windows, "windows")
    if window < 1:
        raise ShapeError("pool window must be >= 1")
    area = window * window
    cb = CircuitBuilder("avgpool")
    for i in range(windows):
        xs = [cb.input(f"x[{i}][{t}]", COMMITTED) for t in range(area)]
        total = var_sum(xs)

        def floor_div(val, args, total=total):
            return centered(val(total)) // area

        def remainder(val, args, total=total):
            return centered(val(total)) % area

        y = cb.input(f"y[{i}]", COMMITTED, floor_div)
        rem = cb.input(f"rem[{i}]", PRIVATE if range_check else COMMITTED, remainder)
        cb.constrain(y * area + rem, 1, total, f"pool[{i}]")
        if range_check:
            _remainder_range(cb, rem, window, f"pool[{i}].rem")
            cb.signed_range(y, bits, f"pool[{i}].y")
    return cb.build()


def gadget_remainder(windows: int, window: int) -> Circuit:
    """
    0 <= rem[i] < w² for committed pooling remainders rem[i].

    Pairs with an unchecked avgpool proven at a random point: the
    remainders are linked to the decrypted remainder coefficients instead.
    """
    _check_count(windows, "windows")
    if window < 1:
        raise ShapeError("pool window must be >= 1")
    cb = CircuitBuilder("remainder")
    for i in range(windows):
        _remainder_range(cb, cb.input(f"rem[{i}]", COMMITTED), window, f"rem[{i}]")
    return cb.build()


def gadget_matmul_baseline(L: int) -> Circuit:
    """
    Y = W·X with one constraint per scalar product (L³ total).

    W[i][j], X[i][j], Y[i][j] are committed; the last product of every
    output cell absorbs the running sum.
    """
    _check_count(L, "dimensions")
    cb = CircuitBuilder("matmul")
    W = [[cb.input(f"W[{i}][{j}]", COMMITTED) for j in range(L)] for i in range(L)]
    X = [[cb.input(f"X[{i}][{j}]", COMMITTED) for j in range(L)] for i in range(L)]

    def cell(i, j):
        return lambda val, args: sum(val(W[i][t]) * val(X[t][j]) for t in range(L))

    Y = [[cb.input(f"Y[{i}][{j}]", COMMITTED, cell(i, j)) for j in range(L)] for i in range(L)]
    for i in range(L):
        for j in range(L):
            partial: List[Var] = [cb.mul(W[i][t], X[t][j], PRIVATE, label=f"prod[{i}][{j}]") for t in range(L - 1)]
            cb.constrain(W[i][L - 1], X[L - 1][j], Y[i][j] - var_sum(partial), f"prod[{i}][{j}].last")
    return cb.build()


def gadget_argmax(n: int, bits: int, items: int = 1) -> Circuit:
    """
    Public idx[b] = lowest index of the maximum of x[b][0..n−1].

    One-hot selectors s_i with Σ s_i = 1 pick m = Σ s_i·x_i; every
    m − x_i − before_i must fit Q bits, where before_i = 1 − Σ_{l<=i} s_l is
    1 only for indices preceding the winner (those must be strictly smaller).
    Inputs are range-checked to the signed Q-bit window.
    """
    _check_count(n)
    _check_count(items, "items")
    cb = CircuitBuilder("argmax")
    for b in range(items):
        xs = [cb.input(f"x[{b}][{i}]", COMMITTED) for i in range(n)]
        for i, x in enumerate(xs):
            cb.signed_range(x, bits, f"argmax[{b}].x[{i}]")

        def winner(val, args, xs=xs):
            vals = [centered(val(x)) for x in xs]
            return vals.index(max(vals))

        pick = cb.wire(winner)
        sel = []
        for i in range(n):
            s = cb.wire(lambda val, args, i=i, pick=pick: int(val(pick) == i))
            cb.assert_bool(s, f"argmax[{b}].s[{i}]")
            sel.append(s)
        cb.constrain(var_sum(sel), 1, 1, f"argmax[{b}].onehot")
        picked = [cb.mul(s, x, label=f"argmax[{b}].pick[{i}]") for i, (s, x) in enumerate(zip(sel, xs))]
        m = var_sum(picked)
        for i, x in enumerate(xs):
            before = 1 - var_sum(sel[: i + 1])
            cb.binary(m - x - before, bits, f"argmax[{b}].cmp[{i}]")
        idx = cb.wire(lambda val, args, pick=pick: val(pick), PUBLIC, f"idx[{b}]")
        cb.constrain(var_sum([s * i for i, s in enumerate(sel)]), 1, idx, f"argmax[{b}].idx")
    return cb.build()

