"""Pydantic schemas for model, data, key, statement and benchmark files."""

import hashlib
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from models.cnn import LAYER_KINDS, LayerSpec, QuantParams, SplitModel, as_int_array
from models.conv2mm import ConvShape, ReshapeLayout, plan_layout
from models.ringpoly import RingParams
from utils.validators import ROLES, is_hex, normalize_name, validate_name

SCHEMA_VERSION = 1

LayerKind = Literal["conv", "square_act", "relu", "avgpool", "fc", "argmax"]
Triple = Tuple[int, int, int]


class VersionedFile(BaseModel):
    """Base for every JSON file the toolkit writes; the version is mandatory."""

    version: int = Field(..., description="File format version")

    @field_validator("version")
    @classmethod
    def validate_version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported file version {v} (expected {SCHEMA_VERSION})")
        return v


def _check_name(v: str) -> str:
    v = normalize_name(v)
    if not validate_name(v):
        raise ValueError("name must contain only lowercase letters, digits, underscores and hyphens")
    return v


# ---------------------------------------------------------------------------
# Model and data files
# ---------------------------------------------------------------------------

class LayerFile(BaseModel):
    """One layer as stored in a model file."""

    kind: LayerKind
    filters: Optional[List[List[List[List[int]]]]] = Field(None, description="(M, C, m, m) for conv")
    weights: Optional[List[List[int]]] = Field(None, description="(out, in) for fc")
    out_shape: Optional[Triple] = None
    window: Optional[int] = Field(None, ge=1)
    bits: Optional[int] = Field(None, ge=2, le=128)

    def to_spec(self) -> LayerSpec:
        return LayerSpec(
            kind=self.kind,
            filters=self.filters,
            weights=self.weights,
            out_shape=self.out_shape,
            window=self.window,
            bits=self.bits,
        )

    @classmethod
    def from_spec(cls, spec: LayerSpec) -> "LayerFile":
        return cls(
            kind=spec.kind,
            filters=spec.filters.tolist() if spec.filters is not None else None,
            weights=spec.weights.tolist() if spec.weights is not None else None,
            out_shape=spec.out_shape if spec.kind == "fc" else None,
            window=spec.window,
            bits=spec.bits,
        )


class QuantFile(BaseModel):
    bits: int = Field(8, ge=1, le=16)
    zero_point: int = 0
    scale: float = Field(1.0, gt=0)


class ModelFile(VersionedFile):
    """Split CNN with weights; held by the developer (prior) and provider (later)."""

    name: str = Field(..., min_length=1, max_length=64)
    input_dim: int = Field(..., ge=1)
    quant: QuantFile = Field(default_factory=QuantFile)
    prior: List[LayerFile]
    later: List[LayerFile]

    @field_validator("name")
    @classmethod
    def validate_model_name(cls, v: str) -> str:
        return _check_name(v)

    def to_model(self) -> SplitModel:
        """
        Build the in-memory model.

        Raises:
            ShapeError: If the layers do not chain or break the split layout
        """
        return SplitModel(
            name=self.name,
            input_dim=self.input_dim,
            prior=tuple(layer.to_spec() for layer in self.prior),
            later=tuple(layer.to_spec() for layer in self.later),
            quant=QuantParams(self.quant.bits, self.quant.zero_point, self.quant.scale),
        )

    @classmethod
    def from_model(cls, model: SplitModel) -> "ModelFile":
        return cls(
            version=SCHEMA_VERSION,
            name=model.name,
            input_dim=model.input_dim,
            quant=QuantFile(bits=model.quant.bits, zero_point=model.quant.zero_point, scale=model.quant.scale),
            prior=[LayerFile.from_spec(layer) for layer in model.prior],
            later=[LayerFile.from_spec(layer) for layer in model.later],
        )


class DataFile(VersionedFile):
    """A tester's batch of quantized inputs with their true labels."""

    tester: str = Field(..., min_length=1, max_length=64)
    inputs: List[List[List[int]]]
    labels: List[int]

    @field_validator("tester")
    @classmethod
    def validate_tester(cls, v: str) -> str:
        return _check_name(v)

    @field_validator("labels")
    @classmethod
    def validate_labels(cls, v: List[int]) -> List[int]:
        if any(label < 0 for label in v):
            raise ValueError("labels must be non-negative")
        return v

    @model_validator(mode="after")
    def check_lengths(self) -> "DataFile":
        if not self.inputs:
            raise ValueError("a data file needs at least one input")
        if len(self.inputs) != len(self.labels):
            raise ValueError(f"{len(self.inputs)} inputs but {len(self.labels)} labels")
        return self

    @property
    def batch_size(self) -> int:
        return len(self.labels)

    def batch(self) -> np.ndarray:
        return as_int_array(self.inputs)


# ---------------------------------------------------------------------------
# Architecture (public shapes, no weights)
# ---------------------------------------------------------------------------

class LayerShape(BaseModel):
    kind: LayerKind
    in_shape: Triple
    out_shape: Triple
    window: Optional[int] = None
    bits: Optional[int] = None

    @property
    def in_features(self) -> int:
        return int(np.prod(self.in_shape))

    @property
    def out_features(self) -> int:
        return int(np.prod(self.out_shape))


class Architecture(VersionedFile):
    """
    Everything the verifier may know about the model and the proving setup.

    The hash of this file binds keys, model commitments and bundles together.
    """

    name: str
    input_dim: int = Field(..., ge=1)
    batch_size: int = Field(..., ge=1)
    quant_bits: int = Field(..., ge=1)
    split_index: int = Field(..., ge=1)
    layers: List[LayerShape]
    step1_degree: int = Field(..., ge=0, description="x-degree bound d_c of the Step-1 key")
    relu_bits: int = Field(..., ge=2, le=128, description="Gadget width for layers that set none")
    ring_degree: int = Field(..., ge=2)
    ring_modulus: int = Field(..., gt=2)

    @model_validator(mode="after")
    def check_layout(self) -> "Architecture":
        kinds = tuple(layer.kind for layer in self.layers[: self.split_index])
        if kinds != ("conv", "square_act", "avgpool"):
            raise ValueError(f"prior layers must be conv, square_act, avgpool; got {kinds}")
        if any(layer.kind not in LAYER_KINDS for layer in self.layers):
            raise ValueError("unknown layer kind")
        return self

    @classmethod
    def from_model(
        cls,
        model: SplitModel,
        batch_size: int,
        ring: RingParams,
        relu_bits: int,
    ) -> "Architecture":
        """
        Public description of a model for one batch size.

        Args:
            model: Split model (weights are only read for the degree bound)
            batch_size: Inputs per tester batch
            ring: Ring parameters of the encrypted-data layer
            relu_bits: Default width for gadgets whose layer sets no bits
        """
        layers = []
        for index, (spec, (in_shape, out_shape)) in enumerate(zip(model.layers, model.shapes())):
            bits = None
            if spec.kind in ("relu", "avgpool", "argmax") and index >= model.split_index:
                bits = spec.bits or relu_bits
            layers.append(LayerShape(
                kind=spec.kind,
                in_shape=in_shape,
                out_shape=out_shape,
                window=spec.window,
                bits=bits,
            ))
        return cls(
            version=SCHEMA_VERSION,
            name=model.name,
            input_dim=model.input_dim,
            batch_size=batch_size,
            quant_bits=model.quant.bits,
            split_index=model.split_index,
            layers=layers,
            step1_degree=step1_degree_bound(model),
            relu_bits=relu_bits,
            ring_degree=ring.d,
            ring_modulus=ring.q,
        )

    def digest(self) -> bytes:
        return hashlib.sha256(self.model_dump_json().encode()).digest()

    def hash_hex(self) -> str:
        return self.digest().hex()

    @property
    def ring(self) -> RingParams:
        return RingParams(d=self.ring_degree, q=self.ring_modulus)

    @property
    def prior_layers(self) -> List[LayerShape]:
        return self.layers[: self.split_index]

    @property
    def later_layers(self) -> List[LayerShape]:
        return self.layers[self.split_index:]

    @property
    def conv_shape(self) -> ConvShape:
        conv = self.layers[0]
        M = conv.out_shape[0]
        m = self.input_dim - conv.out_shape[1] + 1
        return ConvShape(M=M, m=m, n=self.input_dim, B=self.batch_size)

    @property
    def layout(self) -> ReshapeLayout:
        return plan_layout(self.conv_shape)

    @property
    def pool_window(self) -> int:
        return self.layers[self.split_index - 1].window

    @property
    def num_classes(self) -> int:
        return self.layers[-1].in_features


def step1_degree_bound(model: SplitModel) -> int:
    """
    Largest x-degree of any PriorNet ring polynomial for this model.

    Weights and inputs are packed in signed binary, so the weight block has
    degree bitlen(max|w|) − 1 and the input block quant.bits − 1. The conv
    output adds the two, square_act doubles that, and the pooled output Y3
    holds a fresh packing of a value bounded by the square_act output.
    """
    filters = model.prior[0].filters
    max_w = max((abs(int(v)) for v in np.asarray(filters).reshape(-1)), default=0)
    m = filters.shape[-1]
    dw = max(max_w.bit_length() - 1, 0)
    dx = model.quant.bits - 1
    d_conv = dw + dx
    d_square = 2 * d_conv
    v_conv = m * m * max_w * model.quant.max_value
    v_square = v_conv * v_conv + v_conv
    return max(d_square, v_square.bit_length() - 1, 0)


# ---------------------------------------------------------------------------
# Commitments, statements, manifests
# ---------------------------------------------------------------------------

HexPair = List[str]


class ModelCommitmentsFile(VersionedFile):
    """Published model commitments: the prior weight block and every LaterNet matmul."""

    architecture_hash: str
    commitments: Dict[str, HexPair]

    @field_validator("architecture_hash")
    @classmethod
    def validate_hash(cls, v: str) -> str:
        if not is_hex(v, 64):
            raise ValueError("architecture_hash must be 64 hex characters")
        return v


class ModelOpeningsFile(VersionedFile):
    """Private commitment randomness kept by the model owners."""

    architecture_hash: str
    rands: Dict[str, str] = Field(..., description="Relation -> decimal randomness")

    def scalars(self) -> Dict[str, int]:
        return {k: int(v) for k, v in self.rands.items()}


class Step1Statement(BaseModel):
    commitments: Dict[str, HexPair]
    eval_commitments: Dict[str, HexPair]
    k: str = Field(..., description="Evaluation point, decimal")
    digest: str


class BundleStatement(VersionedFile):
    """Public statement of one tester's bundle."""

    tester: str
    architecture_hash: str
    batch_size: int = Field(..., ge=1)
    labels: List[int]
    predictions: List[int]
    correct_count: int = Field(..., ge=0)
    accuracy: float = Field(..., ge=0.0, le=1.0)
    step1: Step1Statement

    @model_validator(mode="after")
    def check_counts(self) -> "BundleStatement":
        if len(self.labels) != self.batch_size or len(self.predictions) != self.batch_size:
            raise ValueError("labels and predictions must both hold batch_size entries")
        if self.correct_count > self.batch_size:
            raise ValueError("correct_count exceeds batch_size")
        return self


ManifestKind = Literal["keys", "commitments", "bundle", "aggregate"]


class ManifestFile(VersionedFile):
    """sha256 of every file in an artifact directory."""

    kind: ManifestKind
    architecture_hash: str
    files: Dict[str, str]


class AggregateFile(VersionedFile):
    """Index of an aggregation directory: which testers, in which order."""

    architecture_hash: str
    testers: List[str]
    relations: List[str]


# ---------------------------------------------------------------------------
# Benchmarks and roles
# ---------------------------------------------------------------------------

class BenchRecord(BaseModel):
    """One benchmark trial."""

    scheme: Literal["qmp", "qap"]
    L: int = Field(..., ge=1)
    trial: int = Field(..., ge=0)
    setup_ms: float = Field(..., ge=0)
    prove_ms: float = Field(..., ge=0)
    verify_ms: float = Field(..., ge=0)
    crs_bytes: int = Field(..., ge=0)
    proof_bytes: int = Field(..., ge=0)

    @classmethod
    def csv_fields(cls) -> List[str]:
        return list(cls.model_fields)

    def csv_row(self) -> Dict[str, str]:
        row = self.model_dump()
        for key in ("setup_ms", "prove_ms", "verify_ms"):
            row[key] = f"{row[key]:.3f}"
        return {k: str(v) for k, v in row.items()}


class RoleConfig(BaseModel):
    """
    Which files a role may read.

    The developer holds PriorNet weights and the provider LaterNet weights;
    testers hold their data; the verifier only public material.
    """

    role: Literal["developer", "provider", "tester", "verifier"]
    keys_dir: str
    commitments_dir: Optional[str] = None
    model_path: Optional[str] = None
    data_path: Optional[str] = None
    bundle_dirs: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_material(self) -> "RoleConfig":
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role}")
        if self.role == "verifier" and (self.model_path or self.data_path):
            raise ValueError("the verifier holds public material only")
        if self.role in ("developer", "provider") and not self.model_path:
            raise ValueError(f"the {self.role} needs the model file")
        if self.role == "tester" and not self.data_path:
            raise ValueError("the tester needs a data file")
        return self
