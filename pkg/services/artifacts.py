"""
Key, commitment, bundle and aggregate directories on disk.

Every directory carries a manifest.json with the sha256 of each file it
holds and the architecture hash it belongs to; readers check both before
decoding anything.
"""

import hashlib
import json
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

from snark import cap, qmp
from snark.aggregate import AggKey, AggProof
from snark.cap import CapCrs, CapProof
from snark.cp_link import LinkProof
from snark.mpoly_commit import CommitKeyS1, EvalProof
from snark.qmp import QmpCrs, QmpProof
from models.cnn import SplitModel
from models.schemas import (
    SCHEMA_VERSION,
    AggregateFile,
    Architecture,
    BundleStatement,
    DataFile,
    ManifestFile,
    ModelCommitmentsFile,
    ModelFile,
    ModelOpeningsFile,
)
from services.linking import STEP1
from services.pipeline import PipelineKeys, ProofBundle
from utils.errors import ArtifactError
from utils.logger import setup_logger

logger = setup_logger()

MANIFEST = "manifest.json"
ARCHITECTURE = "architecture.json"
COMMITMENTS = "commitments.json"
OPENINGS = "openings.json"
STATEMENTS = "statements.json"
AGGREGATE = "aggregate.json"

S = TypeVar("S", bound=BaseModel)


# ---------------------------------------------------------------------------
# Plain files
# ---------------------------------------------------------------------------

def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_json(path: Path, model: BaseModel) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n")


def read_json(path: Path, schema: Type[S]) -> S:
    """
    Read and validate a JSON file.

    Raises:
        ArtifactError: If the file is missing or not valid JSON
        ValidationError: If it does not match the schema
    """
    if not path.is_file():
        raise ArtifactError(f"missing file {path}")
    try:
        data = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ArtifactError(f"{path} is not valid JSON: {e}") from e
    return schema.model_validate(data)


def load_model(path: Path) -> SplitModel:
    return read_json(Path(path), ModelFile).to_model()


def save_model(path: Path, model: SplitModel) -> None:
    write_json(Path(path), ModelFile.from_model(model))


def load_data(path: Path) -> DataFile:
    return read_json(Path(path), DataFile)


def _write_bin(root: Path, rel: str, data: bytes) -> str:
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return rel


def _read_bin(root: Path, rel: str) -> bytes:
    path = root / rel
    if not path.is_file():
        raise ArtifactError(f"missing file {path}")
    return path.read_bytes()


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def write_manifest(root: Path, kind: str, architecture_hash: str, files: Sequence[str]) -> ManifestFile:
    manifest = ManifestFile(
        version=SCHEMA_VERSION,
        kind=kind,
        architecture_hash=architecture_hash,
        files={name: sha256_file(root / name) for name in sorted(files)},
    )
    write_json(root / MANIFEST, manifest)
    return manifest


def check_manifest(root: Path, kind: str, architecture_hash: Optional[str] = None) -> ManifestFile:
    """
    Check a directory against its manifest.

    Args:
        root: Artifact directory
        kind: Expected manifest kind
        architecture_hash: Expected architecture, when known

    Raises:
        ArtifactError: On a missing or altered file, or a foreign architecture
    """
    try:
        manifest = read_json(root / MANIFEST, ManifestFile)
    except ValidationError as e:
        raise ArtifactError(f"{root / MANIFEST} is malformed: {e.error_count()} errors") from e
    if manifest.kind != kind:
        raise ArtifactError(f"{root} holds {manifest.kind}, expected {kind}")
    if architecture_hash is not None and manifest.architecture_hash != architecture_hash:
        raise ArtifactError(f"{root} belongs to a different architecture")
    for name, digest in manifest.files.items():
        path = root / name
        if not path.is_file():
            raise ArtifactError(f"{path} listed in the manifest is missing")
        if sha256_file(path) != digest:
            raise ArtifactError(f"{path} does not match its manifest hash")
    return manifest


# ---------------------------------------------------------------------------
# Keys
# ---------------------------------------------------------------------------

def _key_file(prefix: str, rel: str) -> str:
    return f"keys/{prefix}.{rel}.bin"


def write_keys(root: Path, keys: PipelineKeys) -> Path:
    """Write architecture.json, keys/*.bin and the manifest."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_json(root / ARCHITECTURE, keys.arch)
    files = [ARCHITECTURE]
    files.append(_write_bin(root, "keys/ck_s1.bin", keys.ck_s1.to_bytes()))
    files.append(_write_bin(root, "keys/ck_model.bin", keys.ck_model.to_bytes()))
    files.append(_write_bin(root, "keys/agg.bin", keys.agg.to_bytes()))
    for rel, crs in keys.qmp.items():
        files.append(_write_bin(root, _key_file("qmp", rel), crs.to_bytes()))
    for rel, crs in keys.cap.items():
        files.append(_write_bin(root, _key_file("cap", rel), crs.to_bytes()))
    write_manifest(root, "keys", keys.arch.hash_hex(), files)
    logger.info(f"wrote {len(files)} key files to {root}")
    return root


def read_architecture(root: Path) -> Architecture:
    try:
        return read_json(Path(root) / ARCHITECTURE, Architecture)
    except ValidationError as e:
        raise ArtifactError(f"{root}/{ARCHITECTURE} is malformed: {e.error_count()} errors") from e


def read_keys(root: Path) -> PipelineKeys:
    """
    Load every key of a keys directory.

    Raises:
        ArtifactError: If the manifest, the architecture or a key file is off
    """
    root = Path(root)
    arch = read_architecture(root)
    check_manifest(root, "keys", arch.hash_hex())
    ck_s1 = CommitKeyS1.from_bytes(_read_bin(root, "keys/ck_s1.bin"))
    ck_model = CommitKeyS1.from_bytes(_read_bin(root, "keys/ck_model.bin"))
    agg = AggKey.from_bytes(_read_bin(root, "keys/agg.bin"))
    keys = PipelineKeys(arch, ck_s1, ck_model, {}, {}, agg)
    for rel in keys.plan.qmp_dims:
        keys.qmp[rel] = QmpCrs.from_bytes(_read_bin(root, _key_file("qmp", rel)))
    for rel in keys.plan.cap_relations:
        keys.cap[rel] = CapCrs.from_bytes(_read_bin(root, _key_file("cap", rel)))
    keys.check_complete()
    logger.info(f"loaded keys for {arch.name} from {root}")
    return keys


# ---------------------------------------------------------------------------
# Model commitments
# ---------------------------------------------------------------------------

def write_commitments(
    root: Path, commitments: ModelCommitmentsFile, openings: Optional[ModelOpeningsFile] = None
) -> Path:
    """
    Write the public commitments and, for the model owners, the openings.

    Only commitments.json is listed in the manifest; openings.json stays
    with the prover.
    """
    root = Path(root)
    write_json(root / COMMITMENTS, commitments)
    if openings is not None:
        write_json(root / OPENINGS, openings)
    write_manifest(root, "commitments", commitments.architecture_hash, [COMMITMENTS])
    return root


def read_commitments(root: Path, architecture_hash: Optional[str] = None) -> ModelCommitmentsFile:
    root = Path(root)
    check_manifest(root, "commitments", architecture_hash)
    try:
        return read_json(root / COMMITMENTS, ModelCommitmentsFile)
    except ValidationError as e:
        raise ArtifactError(f"{root}/{COMMITMENTS} is malformed: {e.error_count()} errors") from e


def read_openings(root: Path) -> ModelOpeningsFile:
    try:
        return read_json(Path(root) / OPENINGS, ModelOpeningsFile)
    except ValidationError as e:
        raise ArtifactError(f"{root}/{OPENINGS} is malformed: {e.error_count()} errors") from e


# ---------------------------------------------------------------------------
# Bundles
# ---------------------------------------------------------------------------

def _proof_file(rel: str) -> str:
    return f"proofs/{rel}.bin"


def _link_file(edge: str) -> str:
    return f"links/{edge}.bin"


def write_bundle(root: Path, bundle: ProofBundle) -> Path:
    """Write statements.json, one file per proof and link, and the manifest."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_json(root / STATEMENTS, bundle.statement)
    files = [STATEMENTS, _write_bin(root, _proof_file(STEP1), bundle.eval_proof.to_bytes())]
    for rel, proof in bundle.qmp.items():
        files.append(_write_bin(root, _proof_file(rel), proof.to_bytes()))
    for rel, proof in bundle.cap.items():
        files.append(_write_bin(root, _proof_file(rel), proof.to_bytes()))
    for edge, proof in bundle.links.items():
        files.append(_write_bin(root, _link_file(edge), proof.to_bytes()))
    write_manifest(root, "bundle", bundle.statement.architecture_hash, files)
    logger.info(f"wrote bundle of {bundle.tester} to {root} ({len(files)} files)")
    return root


def read_bundle(root: Path, architecture_hash: Optional[str] = None) -> ProofBundle:
    """
    Read a bundle directory; proofs are told apart by their file magic.

    Proofs or links absent from the directory are absent from the bundle,
    so the verifier rejects them by name.

    Raises:
        ArtifactError: On a manifest mismatch or an undecodable file
    """
    root = Path(root)
    manifest = check_manifest(root, "bundle", architecture_hash)
    try:
        statement = read_json(root / STATEMENTS, BundleStatement)
    except ValidationError as e:
        raise ArtifactError(f"{root}/{STATEMENTS} is malformed: {e.error_count()} errors") from e

    step1_name = _proof_file(STEP1)
    eval_proof = EvalProof.from_bytes(_read_bin(root, step1_name))
    qmp_proofs: Dict[str, QmpProof] = {}
    cap_proofs: Dict[str, CapProof] = {}
    links: Dict[str, LinkProof] = {}
    for name in manifest.files:
        if name == step1_name:
            continue
        if name.startswith("proofs/") and name.endswith(".bin"):
            rel = name[len("proofs/"):-len(".bin")]
            data = _read_bin(root, name)
            if data[:4] == qmp.PROOF_MAGIC:
                qmp_proofs[rel] = QmpProof.from_bytes(data)
            elif data[:4] == cap.PROOF_MAGIC:
                cap_proofs[rel] = CapProof.from_bytes(data)
            else:
                raise ArtifactError(f"{root / name} is neither a QMP nor a gadget proof")
        elif name.startswith("links/") and name.endswith(".bin"):
            links[name[len("links/"):-len(".bin")]] = LinkProof.from_bytes(_read_bin(root, name))
    return ProofBundle(statement, eval_proof, qmp_proofs, cap_proofs, links)


# ---------------------------------------------------------------------------
# Aggregates
# ---------------------------------------------------------------------------

def write_aggregate(root: Path, architecture_hash: str, testers: List[str], proofs: Mapping[str, AggProof]) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    index = AggregateFile(
        version=SCHEMA_VERSION,
        architecture_hash=architecture_hash,
        testers=testers,
        relations=list(proofs),
    )
    write_json(root / AGGREGATE, index)
    files = [AGGREGATE] + [_write_bin(root, _proof_file(rel), p.to_bytes()) for rel, p in proofs.items()]
    write_manifest(root, "aggregate", architecture_hash, files)
    logger.info(f"wrote {len(proofs)} aggregated proofs over {len(testers)} testers to {root}")
    return root


def read_aggregate(root: Path, architecture_hash: Optional[str] = None) -> Tuple[AggregateFile, Dict[str, AggProof]]:
    root = Path(root)
    check_manifest(root, "aggregate", architecture_hash)
    try:
        index = read_json(root / AGGREGATE, AggregateFile)
    except ValidationError as e:
        raise ArtifactError(f"{root}/{AGGREGATE} is malformed: {e.error_count()} errors") from e
    proofs = {rel: AggProof.from_bytes(_read_bin(root, _proof_file(rel))) for rel in index.relations}
    return index, proofs
