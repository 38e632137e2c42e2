"""Service modules: the proving pipeline, artifact directories and benchmarks."""

from .pipeline import (
    BundleVerifier,
    PipelineKeys,
    ProofBundle,
    VerificationReport,
    aggregate_bundles,
    commit_model,
    prove_bundle,
    setup,
    verify_bundle,
    verify_testers,
)

__all__ = [
    "BundleVerifier",
    "PipelineKeys",
    "ProofBundle",
    "VerificationReport",
    "aggregate_bundles",
    "commit_model",
    "prove_bundle",
    "setup",
    "verify_bundle",
    "verify_testers",
]
