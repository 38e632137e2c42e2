"""Exception hierarchy shared by the proving toolkit."""


class ZkCnnError(Exception):
    """Base class for every error raised on purpose by the toolkit."""


class ShapeError(ZkCnnError, ValueError):
    """Tensor, matrix or layout dimensions do not fit together."""


class ProverError(ZkCnnError):
    """
    A prover refused to produce a proof.

    Args:
        relation: Name of the relation that could not be proven (e.g. "later.relu")
        message: Human readable reason
    """

    def __init__(self, relation: str, message: str):
        self.relation = relation
        super().__init__(f"[{relation}] {message}")


class ArtifactError(ZkCnnError):
    """A key, proof, bundle or manifest file is missing, corrupt or mismatched."""


class ConfigError(ZkCnnError):
    """Invalid settings or command-line arguments."""
