"""Batch convolution as one square matrix multiplication (im2col layout)."""

from dataclasses import dataclass
from typing import Iterator, Tuple, Union

import numpy as np

from snark.algebra import ScalarMatrix, centered
from utils.errors import ShapeError


@dataclass(frozen=True)
class ConvShape:
    """
    Shape of a batch convolution.

    Args:
        M: Number of filters
        m: Filter dimension (m×m)
        n: Input dimension (n×n)
        B: Batch size
    """

    M: int
    m: int
    n: int
    B: int

    def __post_init__(self):
        if min(self.M, self.m, self.n, self.B) < 1:
            raise ShapeError(f"all conv dimensions must be >= 1, got {self}")
        if self.m > self.n:
            raise ShapeError(f"filter dim {self.m} exceeds input dim {self.n}")

    @property
    def o(self) -> int:
        """Output dimension n − m + 1."""
        return self.n - self.m + 1

    @property
    def P(self) -> int:
        """Outputs per (filter, input) pair."""
        return self.o * self.o


@dataclass(frozen=True)
class ReshapeLayout:
    """
    Placement maps for W^r · X^r = Y^r.

    Row k of the weight block holds filter k flattened; column (b, p) of the
    input block holds patch p of input b. Everything else is zero.
    """

    shape: ConvShape
    L: int

    def idx_w(self, k: int, lr: int, lc: int) -> Tuple[int, int]:
        return k, lr * self.shape.m + lc

    def col(self, b: int, i: int, j: int) -> int:
        return b * self.shape.P + i * self.shape.o + j

    def idx_x(self, b: int, i: int, j: int, lr: int, lc: int) -> Tuple[int, int]:
        return lr * self.shape.m + lc, self.col(b, i, j)

    def idx_y(self, k: int, b: int, i: int, j: int) -> Tuple[int, int]:
        return k, self.col(b, i, j)

    def output_cells(self) -> Iterator[Tuple[Tuple[int, int, int, int], Tuple[int, int]]]:
        """Yield ((k, b, i, j), (row, col)) for every convolution output."""
        s = self.shape
        for k in range(s.M):
            for b in range(s.B):
                for i in range(s.o):
                    for j in range(s.o):
                        yield (k, b, i, j), self.idx_y(k, b, i, j)


def plan_layout(s: ConvShape) -> ReshapeLayout:
    """L = max(M, m², P·B)."""
    return ReshapeLayout(shape=s, L=max(s.M, s.m * s.m, s.P * s.B))


def weight_block(filters, layout: ReshapeLayout) -> np.ndarray:
    """Integer W^r (object dtype) from filters of shape (M, m, m)."""
    s = layout.shape
    f = np.asarray(filters, dtype=object)
    if f.shape != (s.M, s.m, s.m):
        raise ShapeError(f"filters have shape {f.shape}, layout expects {(s.M, s.m, s.m)}")
    out = np.zeros((layout.L, layout.L), dtype=object)
    for k in range(s.M):
        for lr in range(s.m):
            for lc in range(s.m):
                out[layout.idx_w(k, lr, lc)] = int(f[k, lr, lc])
    return out


def input_block(batch, layout: ReshapeLayout) -> np.ndarray:
    """Integer X^r (object dtype) from inputs of shape (B, n, n)."""
    s = layout.shape
    x = np.asarray(batch, dtype=object)
    if x.shape != (s.B, s.n, s.n):
        raise ShapeError(f"batch has shape {x.shape}, layout expects {(s.B, s.n, s.n)}")
    out = np.zeros((layout.L, layout.L), dtype=object)
    for b in range(s.B):
        for i in range(s.o):
            for j in range(s.o):
                for lr in range(s.m):
                    for lc in range(s.m):
                        out[layout.idx_x(b, i, j, lr, lc)] = int(x[b, i + lr, j + lc])
    return out


def build_weight_matrix(filters, layout: ReshapeLayout) -> ScalarMatrix:
    return ScalarMatrix(weight_block(filters, layout))


def build_input_matrix(batch, layout: ReshapeLayout) -> ScalarMatrix:
    return ScalarMatrix(input_block(batch, layout))


def extract_outputs(yr: Union[ScalarMatrix, np.ndarray], layout: ReshapeLayout) -> np.ndarray:
    """
    Read conv outputs back out of Y^r.

    Args:
        yr: L×L product, either over Z_P (entries are lifted to signed
            integers) or as an integer array
        layout: Layout used to build the factors

    Returns:
        Object array of shape (M, B, o, o)

    Raises:
        ShapeError: If yr does not have dimension L
    """
    s = layout.shape
    if isinstance(yr, ScalarMatrix):
        if yr.dim != layout.L:
            raise ShapeError(f"Y^r has dim {yr.dim}, layout expects {layout.L}")
        get = lambda cell: centered(yr[cell])
    else:
        arr = np.asarray(yr, dtype=object)
        if arr.shape != (layout.L, layout.L):
            raise ShapeError(f"Y^r has shape {arr.shape}, layout expects {(layout.L, layout.L)}")
        get = lambda cell: int(arr[cell])
    out = np.zeros((s.M, s.B, s.o, s.o), dtype=object)
    for key, cell in layout.output_cells():
        out[key] = get(cell)
    return out


def conv_as_dense(filters, in_shape: Tuple[int, int, int]) -> np.ndarray:
    """
    Lower a valid, stride-1, multi-channel conv to a dense matrix.

    Args:
        filters: Array of shape (M, C, m, m)
        in_shape: Input tensor shape (C, n, n)

    Returns:
        Integer matrix of shape (M·o·o, C·n·n) such that
        dense @ x.flatten() == conv(x).flatten() with output order (k, i, j)
    """
    f = np.asarray(filters, dtype=np.int64)
    if f.ndim != 4:
        raise ShapeError(f"filters must be 4-D (M, C, m, m), got {f.shape}")
    M, C, m, m2 = f.shape
    c_in, n, n2 = in_shape
    if m != m2 or n != n2 or C != c_in:
        raise ShapeError(f"filters {f.shape} do not fit input {in_shape}")
    if m > n:
        raise ShapeError(f"filter dim {m} exceeds input dim {n}")
    o = n - m + 1
    dense = np.zeros((M * o * o, C * n * n), dtype=np.int64)
    for k in range(M):
        for i in range(o):
            for j in range(o):
                row = (k * o + i) * o + j
                for c in range(C):
                    for lr in range(m):
                        for lc in range(m):
                            dense[row, (c * n + i + lr) * n + j + lc] = f[k, c, lr, lc]
    return dense
