"""
QMP against QAP benchmarks.

Each point runs setup, prove and verify of both schemes on the same
witness and records one BenchRecord per scheme and trial; sizes come from
the serialized CRS and proof.
"""

import csv
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from snark.algebra import ScalarMatrix
from snark.cap import cap_prove, cap_setup, cap_verify
from snark.gadgets import (
    AVGPOOL_REFERENCE_CONSTRAINTS,
    RELU_REFERENCE_CONSTRAINTS,
    gadget_avgpool,
    gadget_matmul_baseline,
    gadget_relu,
)
from snark.qmp import QmpWitness, qmp_prove, qmp_setup, qmp_verify
from snark.r1cs import Circuit, compile_r1cs
from models.conv2mm import ConvShape, build_input_matrix, build_weight_matrix, plan_layout
from models.schemas import BenchRecord
from utils.config import Rng
from utils.errors import ProverError
from utils.logger import setup_logger

logger = setup_logger()

ENTRY_BOUND = 10


def _ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def _timed(fn: Callable):
    start = time.perf_counter()
    out = fn()
    return out, _ms(start)


def random_matrix(L: int, rng: Rng) -> ScalarMatrix:
    """Entries drawn uniformly from [0, 10]."""
    return ScalarMatrix.random(L, rng, bound=ENTRY_BOUND + 1)


# ---------------------------------------------------------------------------
# Single trials
# ---------------------------------------------------------------------------

def qmp_trial(W: ScalarMatrix, X: ScalarMatrix, trial: int, rng: Rng) -> BenchRecord:
    """
    One QMP setup/prove/verify run over Y = W·X.

    Raises:
        ProverError: If the fresh proof does not verify
    """
    L = W.dim
    crs, setup_ms = _timed(lambda: qmp_setup(L, rng))
    (proof, _), prove_ms = _timed(lambda: qmp_prove(crs, QmpWitness(W, X, W @ X), rng))
    ok, verify_ms = _timed(lambda: qmp_verify(crs, proof))
    if not ok:
        raise ProverError("bench.qmp", f"honest proof rejected at L={L}")
    return BenchRecord(
        scheme="qmp", L=L, trial=trial,
        setup_ms=setup_ms, prove_ms=prove_ms, verify_ms=verify_ms,
        crs_bytes=len(crs.to_bytes()), proof_bytes=len(proof.to_bytes()),
    )


def circuit_trial(circuit: Circuit, args: Dict[str, int], L: int, trial: int, rng: Rng) -> BenchRecord:
    """
    One CaP setup/prove/verify run; setup includes compiling the QAP.

    Raises:
        ProverError: If the fresh proof does not verify
    """
    assignment = circuit.solve(args)

    def setup() -> Tuple:
        qap = compile_r1cs(circuit.r1cs)
        return qap, cap_setup(qap, rng)

    (qap, crs), setup_ms = _timed(setup)
    (proof, _), prove_ms = _timed(lambda: cap_prove(crs, qap, assignment, rng, relation=f"bench.{circuit.name}"))
    public = [assignment[i] for i in circuit.r1cs.public_indices[1:]]
    ok, verify_ms = _timed(lambda: cap_verify(crs.vk, public, proof))
    if not ok:
        raise ProverError(f"bench.{circuit.name}", f"honest proof rejected at L={L}")
    return BenchRecord(
        scheme="qap", L=L, trial=trial,
        setup_ms=setup_ms, prove_ms=prove_ms, verify_ms=verify_ms,
        crs_bytes=len(crs.to_bytes()), proof_bytes=len(proof.to_bytes()),
    )


def matmul_args(W: ScalarMatrix, X: ScalarMatrix) -> Dict[str, int]:
    L = W.dim
    args = {f"W[{i}][{j}]": W[i, j] for i in range(L) for j in range(L)}
    args.update({f"X[{i}][{j}]": X[i, j] for i in range(L) for j in range(L)})
    return args


def qap_matmul_trial(W: ScalarMatrix, X: ScalarMatrix, trial: int, rng: Rng) -> BenchRecord:
    """Baseline: one constraint per scalar product (L³ constraints)."""
    return circuit_trial(gadget_matmul_baseline(W.dim), matmul_args(W, X), W.dim, trial, rng)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def bench_matmul(dims: Sequence[int], trials: int, rng: Rng) -> List[BenchRecord]:
    """
    QMP and QAP on the same random L×L product for every L.

    Args:
        dims: Matrix dimensions, already checked against the cap
        trials: Trials per dimension and scheme
        rng: Randomness for entries and proofs

    Returns:
        2·trials records per dimension
    """
    records: List[BenchRecord] = []
    for L in dims:
        for trial in range(trials):
            W, X = random_matrix(L, rng), random_matrix(L, rng)
            records.append(qmp_trial(W, X, trial, rng))
            records.append(qap_matmul_trial(W, X, trial, rng))
        logger.info(f"bench-matmul L={L}: {trials} trials per scheme")
    return records


def conv_matrices(shape: ConvShape, rng: np.random.Generator) -> Tuple[ScalarMatrix, ScalarMatrix]:
    layout = plan_layout(shape)
    filters = rng.integers(0, ENTRY_BOUND + 1, size=(shape.M, shape.m, shape.m))
    batch = rng.integers(0, ENTRY_BOUND + 1, size=(shape.B, shape.n, shape.n))
    return build_weight_matrix(filters, layout), build_input_matrix(batch, layout)


def bench_conv(
    filters: Sequence[int],
    inputs: Sequence[int],
    n: int,
    m: int,
    trials: int,
    rng: Rng,
    seed: int = 0,
) -> List[BenchRecord]:
    """
    A batch convolution as one QMP gate against the QAP baseline over the
    same reshaped matrices, for every (filters, inputs) pair.
    """
    gen = np.random.default_rng(seed)
    records: List[BenchRecord] = []
    for M in filters:
        for B in inputs:
            shape = ConvShape(M=M, m=m, n=n, B=B)
            for trial in range(trials):
                W, X = conv_matrices(shape, gen)
                records.append(qmp_trial(W, X, trial, rng))
                records.append(qap_matmul_trial(W, X, trial, rng))
            logger.info(f"bench-conv M={M} B={B} n={n} m={m}: L={W.dim}")
    return records


@dataclass(frozen=True)
class GadgetCount:
    name: str
    constraints: int
    reference: int


def gadget_counts(bits: int) -> List[GadgetCount]:
    """Constraints of one relu element and one 2×2 pooling window."""
    return [
        GadgetCount("relu", gadget_relu(1, bits).r1cs.num_constraints, RELU_REFERENCE_CONSTRAINTS),
        GadgetCount("avgpool", gadget_avgpool(1, 2, bits).r1cs.num_constraints, AVGPOOL_REFERENCE_CONSTRAINTS),
    ]


def bench_gadgets(elements: int, bits: int, trials: int, rng: Rng) -> Dict[str, List[BenchRecord]]:
    """
    CaP runs of a relu circuit over `elements` values and an avgpool circuit
    over `elements` 2×2 windows; L in the records is the element count.
    """
    relu = gadget_relu(elements, bits)
    pool = gadget_avgpool(elements, 2, bits)
    half = 1 << (bits - 2)
    out: Dict[str, List[BenchRecord]] = {"relu": [], "avgpool": []}
    for trial in range(trials):
        relu_args = {f"x[{i}]": rng.randrange(-half, half) for i in range(elements)}
        pool_args = {f"x[{i}][{t}]": rng.randrange(0, ENTRY_BOUND + 1) for i in range(elements) for t in range(4)}
        out["relu"].append(circuit_trial(relu, relu_args, elements, trial, rng))
        out["avgpool"].append(circuit_trial(pool, pool_args, elements, trial, rng))
    logger.info(f"bench-gadgets: {elements} elements, {bits} bits, {trials} trials")
    return out


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def write_csv(path: Path, records: Sequence[BenchRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=BenchRecord.csv_fields())
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.csv_row())
    logger.info(f"wrote {len(records)} records to {path}")
    return path


def medians(records: Sequence[BenchRecord]) -> Dict[Tuple[str, int], Dict[str, float]]:
    """Median of every timing per (scheme, L)."""
    groups: Dict[Tuple[str, int], List[BenchRecord]] = {}
    for rec in records:
        groups.setdefault((rec.scheme, rec.L), []).append(rec)
    return {
        key: {
            field: float(np.median([getattr(r, field) for r in recs]))
            for field in ("setup_ms", "prove_ms", "verify_ms", "crs_bytes", "proof_bytes")
        }
        for key, recs in groups.items()
    }


def speedup_table(records: Sequence[BenchRecord]) -> List[Dict[str, float]]:
    """
    QAP over QMP median ratios per dimension (above 1 means QMP is faster).

    Dimensions measured under only one scheme are skipped.
    """
    med = medians(records)
    rows = []
    for L in sorted({L for _, L in med}):
        qmp, qap = med.get(("qmp", L)), med.get(("qap", L))
        if qmp is None or qap is None:
            continue
        row: Dict[str, float] = {"L": L}
        for field in ("setup_ms", "prove_ms", "verify_ms", "crs_bytes"):
            row[field.replace("_ms", "").replace("_bytes", "")] = qap[field] / max(qmp[field], 1e-9)
        rows.append(row)
    return rows


def format_speedup(rows: Sequence[Dict[str, float]]) -> str:
    lines = [f"{'L':>6} {'setup':>9} {'prove':>9} {'verify':>9} {'crs':>9}"]
    for row in rows:
        lines.append(
            f"{int(row['L']):>6} {row['setup']:>8.2f}x {row['prove']:>8.2f}x {row['verify']:>8.2f}x {row['crs']:>8.2f}x"
        )
    return "\n".join(lines)
