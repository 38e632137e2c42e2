"""
Quantized toy CNN: layer definitions, PriorNet/LaterNet split and reference
integer inference producing per-layer witness traces.

Tensors are numpy object arrays of Python ints shaped (C, H, W), so no layer
can silently wrap around.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ShapeError
from utils.logger import setup_logger

logger = setup_logger()

LAYER_KINDS = ("conv", "square_act", "relu", "avgpool", "fc", "argmax")
PRIOR_KINDS = ("conv", "square_act", "avgpool")
MATMUL_KINDS = ("conv", "fc")

Shape = Tuple[int, int, int]


def as_int_array(x) -> np.ndarray:
    """Copy x into an object array of Python ints."""
    arr = np.asarray(x)
    return np.vectorize(int, otypes=[object])(arr) if arr.size else arr.astype(object)


@dataclass(frozen=True)
class QuantParams:
    """8-bit unsigned quantization; scale is informational only."""

    bits: int = 8
    zero_point: int = 0
    scale: float = 1.0

    @property
    def max_value(self) -> int:
        return (1 << self.bits) - 1

    def check(self, x) -> None:
        arr = np.asarray(x)
        if arr.size and (arr.min() < 0 or arr.max() > self.max_value):
            raise ValueError(f"inputs must lie in [0, {self.max_value}]")


# ---------------------------------------------------------------------------
# Layer operations
# ---------------------------------------------------------------------------

def conv2d(x, w) -> np.ndarray:
    """Valid, stride-1 2-D convolution (cross-correlation)."""
    x = as_int_array(x)
    w = as_int_array(w)
    if x.ndim != 2 or w.ndim != 2:
        raise ShapeError("conv2d expects 2-D input and filter")
    n, m = x.shape[0], w.shape[0]
    if m > n:
        raise ShapeError(f"filter dim {m} exceeds input dim {n}")
    o = n - m + 1
    out = np.zeros((o, o), dtype=object)
    for i in range(o):
        for j in range(o):
            out[i, j] = int(np.sum(x[i:i + m, j:j + m] * w))
    return out


def conv_layer(x, filters) -> np.ndarray:
    """(C, n, n) input, (M, C, m, m) filters -> (M, o, o); channels are summed."""
    x = as_int_array(x)
    f = as_int_array(filters)
    if f.ndim != 4 or x.ndim != 3 or f.shape[1] != x.shape[0]:
        raise ShapeError(f"filters {f.shape} do not fit input {x.shape}")
    return np.stack([
        sum(conv2d(x[c], f[k, c]) for c in range(x.shape[0]))
        for k in range(f.shape[0])
    ])


def square_act(x) -> np.ndarray:
    """x² + x, the degree-2 activation used before the split."""
    x = as_int_array(x)
    return x * x + x


def relu(x) -> np.ndarray:
    x = as_int_array(x)
    return np.where(x > 0, x, 0).astype(object)


def avgpool(x, w: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integer average pooling over non-overlapping w×w windows.

    Returns:
        (y, rem) with y·w² + rem = Σ window and 0 <= rem < w²

    Raises:
        ShapeError: If w does not divide the spatial dimensions
    """
    x = as_int_array(x)
    if x.ndim == 2:
        y, rem = avgpool(x[None], w)
        return y[0], rem[0]
    c, h, wd = x.shape
    if w < 1 or h % w or wd % w:
        raise ShapeError(f"pool window {w} does not divide {h}x{wd}")
    sums = x.reshape(c, h // w, w, wd // w, w).sum(axis=(2, 4))
    area = w * w
    return sums // area, sums % area


def fc(x, weights, out_shape: Optional[Shape] = None) -> np.ndarray:
    """Dense layer over the flattened input, reshaped to out_shape."""
    vec = as_int_array(x).reshape(-1)
    wm = as_int_array(weights)
    if wm.ndim != 2 or wm.shape[1] != vec.shape[0]:
        raise ShapeError(f"fc weights {wm.shape} do not fit input of size {vec.shape[0]}")
    out = wm.dot(vec)
    return out.reshape(out_shape or (wm.shape[0], 1, 1))


def argmax_label(v) -> int:
    """Index of the largest entry; ties go to the lowest index."""
    flat = [int(t) for t in np.asarray(v, dtype=object).reshape(-1)]
    if not flat:
        raise ShapeError("argmax of an empty vector")
    best = 0
    for i, t in enumerate(flat):
        if t > flat[best]:
            best = i
    return best


# ---------------------------------------------------------------------------
# Layer specs and split model
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LayerSpec:
    """
    One layer with its parameters.

    conv layers carry `filters` (M, C, m, m); fc layers carry `weights`
    (out, in) and an `out_shape`; avgpool carries `window`; relu, avgpool
    and argmax carry the two's-complement width `bits` used by their gadgets.
    """

    kind: str
    filters: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    out_shape: Optional[Shape] = None
    window: Optional[int] = None
    bits: Optional[int] = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ShapeError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv":
            if self.filters is None or np.asarray(self.filters).ndim != 4:
                raise ShapeError("conv layer needs 4-D filters (M, C, m, m)")
            object.__setattr__(self, "filters", as_int_array(self.filters))
        if self.kind == "fc":
            if self.weights is None or np.asarray(self.weights).ndim != 2:
                raise ShapeError("fc layer needs 2-D weights (out, in)")
            object.__setattr__(self, "weights", as_int_array(self.weights))
            rows = self.weights.shape[0]
            shape = tuple(self.out_shape) if self.out_shape is not None else (rows, 1, 1)
            if int(np.prod(shape)) != rows:
                raise ShapeError(f"fc out_shape {shape} does not hold {rows} outputs")
            object.__setattr__(self, "out_shape", shape)
        if self.kind == "avgpool" and (self.window is None or self.window < 1):
            raise ShapeError("avgpool layer needs a window >= 1")

    @classmethod
    def conv(cls, filters) -> "LayerSpec":
        return cls("conv", filters=filters)

    @classmethod
    def fc_layer(cls, weights, out_shape: Optional[Shape] = None) -> "LayerSpec":
        return cls("fc", weights=weights, out_shape=out_shape)

    @property
    def is_matmul(self) -> bool:
        return self.kind in MATMUL_KINDS

    def output_shape(self, in_shape: Shape) -> Shape:
        c, h, w = in_shape
        if self.kind == "conv":
            M, C, m, _ = self.filters.shape
            if C != c or h != w or m > h:
                raise ShapeError(f"conv filters {self.filters.shape} do not fit input {in_shape}")
            return (M, h - m + 1, w - m + 1)
        if self.kind == "fc":
            if self.weights.shape[1] != c * h * w:
                raise ShapeError(f"fc weights {self.weights.shape} do not fit input {in_shape}")
            return self.out_shape
        if self.kind == "avgpool":
            if h % self.window or w % self.window:
                raise ShapeError(f"pool window {self.window} does not divide {h}x{w}")
            return (c, h // self.window, w // self.window)
        if self.kind == "argmax":
            return (1, 1, 1)
        return in_shape

    def apply(self, x) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        """Run the layer on one item; returns (output, pooling remainder or None)."""
        if self.kind == "conv":
            return conv_layer(x, self.filters), None
        if self.kind == "fc":
            return fc(x, self.weights, self.out_shape), None
        if self.kind == "square_act":
            return square_act(x), None
        if self.kind == "relu":
            return relu(x), None
        if self.kind == "avgpool":
            return avgpool(x, self.window)
        return np.array([[[argmax_label(x)]]], dtype=object), None


@dataclass(frozen=True, eq=False)
class SplitModel:
    """
    A CNN cut into PriorNet (developer, runs on ring-shaped data) and
    LaterNet (provider).

    PriorNet is exactly conv -> square_act -> avgpool over a single-channel
    input. LaterNet starts with a matmul layer (conv or fc) and ends with
    argmax.
    """

    name: str
    input_dim: int
    prior: Tuple[LayerSpec, ...]
    later: Tuple[LayerSpec, ...]
    quant: QuantParams = field(default_factory=QuantParams)

    def __post_init__(self):
        object.__setattr__(self, "prior", tuple(self.prior))
        object.__setattr__(self, "later", tuple(self.later))
        kinds = tuple(layer.kind for layer in self.prior)
        if kinds != PRIOR_KINDS:
            raise ShapeError(f"PriorNet must be {PRIOR_KINDS}, got {kinds}")
        if self.prior[0].filters.shape[1] != 1:
            raise ShapeError("PriorNet conv must take a single input channel")
        if not self.later or not self.later[0].is_matmul:
            raise ShapeError("LaterNet must start with a conv or fc layer")
        if self.later[-1].kind != "argmax" or any(l.kind == "argmax" for l in self.later[:-1]):
            raise ShapeError("LaterNet must end with its only argmax layer")
        if any(l.kind == "square_act" for l in self.later):
            raise ShapeError("square_act belongs to PriorNet")
        # raises on any broken chain
        self.shapes()

    @property
    def split_index(self) -> int:
        return len(self.prior)

    @property
    def layers(self) -> Tuple[LayerSpec, ...]:
        return self.prior + self.later

    @property
    def input_shape(self) -> Shape:
        return (1, self.input_dim, self.input_dim)

    def shapes(self) -> List[Tuple[Shape, Shape]]:
        """(input shape, output shape) of every layer in order."""
        out = []
        shape = self.input_shape
        for layer in self.layers:
            nxt = layer.output_shape(shape)
            out.append((shape, nxt))
            shape = nxt
        return out

    @property
    def prior_output_shape(self) -> Shape:
        return self.shapes()[self.split_index - 1][1]

    @property
    def num_classes(self) -> int:
        shape = self.shapes()[-1][0]
        return int(np.prod(shape))


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

@dataclass
class LayerRecord:
    """Inputs and outputs of one layer for the whole batch (leading axis B)."""

    index: int
    kind: str
    inputs: np.ndarray
    outputs: np.ndarray
    remainder: Optional[np.ndarray] = None


@dataclass
class InferenceTrace:
    records: List[LayerRecord]
    labels: List[int]

    @property
    def batch_size(self) -> int:
        return len(self.labels)

    def record(self, index: int) -> LayerRecord:
        return self.records[index]

    def is_consistent(self, model: SplitModel) -> bool:
        """Re-run every layer on its recorded input and compare."""
        for rec, layer in zip(self.records, model.layers):
            for b in range(self.batch_size):
                out, rem = layer.apply(rec.inputs[b])
                if not np.array_equal(out, rec.outputs[b]):
                    return False
                if rem is not None and not np.array_equal(rem, rec.remainder[b]):
                    return False
        return len(self.records) == len(model.layers)


def run_split(model: SplitModel, batch, labels: Sequence[int]) -> Tuple[InferenceTrace, int]:
    """
    Plaintext inference recording every intermediate.

    Args:
        model: Split model
        batch: Inputs of shape (B, n, n) with quantized values
        labels: True labels, one per input

    Returns:
        (trace, number of inputs whose predicted label equals the true one)

    Raises:
        ShapeError: On an empty batch or shape mismatch
    """
    x = as_int_array(batch)
    if x.ndim != 3 or x.shape[0] == 0:
        raise ShapeError("batch must be a non-empty (B, n, n) array")
    if x.shape[1:] != (model.input_dim, model.input_dim):
        raise ShapeError(f"inputs are {x.shape[1:]}, model expects {model.input_dim}x{model.input_dim}")
    if len(labels) != x.shape[0]:
        raise ShapeError(f"{len(labels)} labels for {x.shape[0]} inputs")
    model.quant.check(x)

    current = [item[None] for item in x]
    records = []
    for index, layer in enumerate(model.layers):
        outs, rems = [], []
        for item in current:
            out, rem = layer.apply(item)
            outs.append(out)
            rems.append(rem)
        records.append(LayerRecord(
            index=index,
            kind=layer.kind,
            inputs=np.stack(current),
            outputs=np.stack(outs),
            remainder=np.stack(rems) if layer.kind == "avgpool" else None,
        ))
        current = outs

    predicted = [int(out.reshape(-1)[0]) for out in current]
    correct = sum(int(p == int(t)) for p, t in zip(predicted, labels))
    logger.debug(f"run_split: {len(predicted)} inputs, {correct} correct")
    return InferenceTrace(records=records, labels=predicted), correct


# ---------------------------------------------------------------------------
# Shipped models
# ---------------------------------------------------------------------------

def _ints(rng: np.random.Generator, low: int, high: int, shape) -> np.ndarray:
    return as_int_array(rng.integers(low, high + 1, size=shape))


def toy_model(seed: int = 0) -> SplitModel:
    """conv(M=2, m=3) -> square_act -> avgpool 2 || fc -> relu -> avgpool -> fc -> argmax on 8×8 inputs."""
    rng = np.random.default_rng(seed)
    bits = 40
    return SplitModel(
        name="toy",
        input_dim=8,
        prior=(
            LayerSpec.conv(_ints(rng, -2, 2, (2, 1, 3, 3))),
            LayerSpec("square_act"),
            LayerSpec("avgpool", window=2),
        ),
        later=(
            LayerSpec.fc_layer(_ints(rng, -2, 2, (16, 18)), (1, 4, 4)),
            LayerSpec("relu", bits=bits),
            LayerSpec("avgpool", window=2, bits=bits),
            LayerSpec.fc_layer(_ints(rng, -2, 2, (4, 4)), (4, 1, 1)),
            LayerSpec("argmax", bits=bits),
        ),
    )


def micro_model(seed: int = 0) -> SplitModel:
    """Smallest model with the same layer sequence as toy_model (3×3 inputs)."""
    rng = np.random.default_rng(seed)
    bits = 24
    return SplitModel(
        name="micro",
        input_dim=3,
        prior=(
            LayerSpec.conv(_ints(rng, -1, 1, (2, 1, 2, 2))),
            LayerSpec("square_act"),
            LayerSpec("avgpool", window=2),
        ),
        later=(
            LayerSpec.fc_layer(_ints(rng, -1, 1, (4, 2)), (1, 2, 2)),
            LayerSpec("relu", bits=bits),
            LayerSpec("avgpool", window=2, bits=bits),
            LayerSpec.fc_layer(_ints(rng, -2, 2, (2, 1)), (2, 1, 1)),
            LayerSpec("argmax", bits=bits),
        ),
    )


def random_inputs(model: SplitModel, count: int, seed: int = 0) -> Tuple[np.ndarray, List[int]]:
    """Random quantized inputs and labels for a model."""
    rng = np.random.default_rng(seed)
    n = model.input_dim
    x = _ints(rng, 0, model.quant.max_value, (count, n, n))
    labels = [int(v) for v in rng.integers(0, model.num_classes, size=count)]
    return x, labels
