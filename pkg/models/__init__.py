"""Model layer: the split CNN, its matrix layouts, ring data and file schemas."""

from .cnn import LayerSpec, QuantParams, SplitModel, micro_model, run_split, toy_model
from .schemas import (
    Architecture,
    BenchRecord,
    BundleStatement,
    DataFile,
    ModelFile,
    RoleConfig,
)

__all__ = [
    "Architecture",
    "BenchRecord",
    "BundleStatement",
    "DataFile",
    "LayerSpec",
    "ModelFile",
    "QuantParams",
    "RoleConfig",
    "SplitModel",
    "micro_model",
    "run_split",
    "toy_model",
]
