"""
End-to-end proving of a split CNN over tester batches.

Roles, in order: setup generates every key from the public architecture;
the model owners commit to their weights; the prover runs PriorNet over
ring-shaped data (Step 1 at a transcript point k, then QMP and gadget proofs
at k) and LaterNet in the clear, and links every adjacent pair of proofs;
verifiers check bundles one by one, or several testers at once with one
aggregated proof per gadget relation.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from snark.aggregate import AggKey, AggProof, AggStatement, agg_prove, agg_setup, agg_verify
from snark.algebra import P, Scalar, ScalarMatrix, geq, rand_scalar
from snark.cap import CapCrs, CapProof, cap_prove, cap_setup, cap_verify, public_values
from snark.cp_link import LinkProof, link_build_instance, link_prove, link_verify
from snark.mpoly_commit import (
    CommitKeyS1,
    DualCommitment,
    EvalOpening,
    EvalProof,
    EvalStatement,
    commit,
    prove_eval,
    s1_setup,
    statement_digest,
    verify_eval,
)
from snark.qmp import QmpCrs, QmpProof, QmpWitness, binding_witness, qmp_prove, qmp_setup, qmp_verify
from models.cnn import InferenceTrace, LayerSpec, SplitModel, run_split
from models.conv2mm import conv_as_dense, input_block, weight_block
from models.ringpoly import (
    BivariatePoly,
    RingElem,
    RingMatrix,
    RingParams,
    encode_matrix,
    ring_matmul_unreduced,
    ring_square_act,
    ring_zero,
    stub_decrypt_value,
    stub_encrypt,
    stub_encrypt_value,
)
from models.schemas import (
    SCHEMA_VERSION,
    Architecture,
    BundleStatement,
    DataFile,
    ModelCommitmentsFile,
    ModelOpeningsFile,
    Step1Statement,
)
from services.linking import (
    CONV,
    POOL,
    PRIOR_WEIGHTS,
    REMAINDER,
    SQUARE,
    STEP1,
    STEP1_COMPONENTS,
    LinkRows,
    PublicParts,
    RelationPlan,
    Stage,
    coeff_label,
    edge_name,
    eval_label,
    eval_rand_label,
    find_missing,
    model_rand_label,
    rand_label,
    slot_labeller,
    v_label,
)
from utils.config import Rng, Settings, get_settings
from utils.errors import ArtifactError, ProverError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

Witness = Dict[str, Scalar]


# ---------------------------------------------------------------------------
# Keys
# ---------------------------------------------------------------------------

@dataclass
class PipelineKeys:
    """
    Every key of one architecture.

    ck_s1 commits PriorNet ring polynomials (L² slots); ck_model commits
    LaterNet weight matrices as degree-0 polynomials; qmp and cap are keyed
    by relation name; agg serves every gadget relation.
    """

    arch: Architecture
    ck_s1: CommitKeyS1
    ck_model: CommitKeyS1
    qmp: Dict[str, QmpCrs]
    cap: Dict[str, CapCrs]
    agg: AggKey
    plan: RelationPlan = field(init=False, repr=False)

    def __post_init__(self):
        self.plan = RelationPlan(self.arch)

    def check_complete(self) -> None:
        """
        Raises:
            ArtifactError: If a relation of the plan has no key
        """
        missing = [r for r in self.plan.qmp_dims if r not in self.qmp]
        missing += [r for r in self.plan.cap_relations if r not in self.cap]
        if missing:
            raise ArtifactError(f"keys miss relations: {', '.join(missing)}")
        for rel, L in self.plan.qmp_dims.items():
            if self.qmp[rel].L != L:
                raise ArtifactError(f"{rel} key has dimension {self.qmp[rel].L}, expected {L}")
        for rel in self.plan.cap_relations:
            if self.cap[rel].digest != self.plan.circuit(rel).r1cs.digest():
                raise ArtifactError(f"{rel} key was made for a different circuit")
        if self.ck_s1.d_c < self.arch.step1_degree or self.ck_s1.n_c < self.plan.n_slots:
            raise ArtifactError("Step-1 commitment key is too small for the architecture")


def architecture_for(model: SplitModel, batch_size: int, settings: Optional[Settings] = None) -> Architecture:
    settings = settings or get_settings()
    return Architecture.from_model(model, batch_size, RingParams.from_settings(settings), settings.relu_bits)


def setup(
    model: SplitModel,
    batch_size: int,
    testers: int,
    rng: Rng,
    settings: Optional[Settings] = None,
) -> PipelineKeys:
    """
    Generate every key for a model shape.

    Args:
        model: Split model (only its shapes and weight magnitudes are read)
        batch_size: Inputs per tester
        testers: Number of tester bundles aggregated together
        rng: Randomness source for every trapdoor
        settings: Ring parameters and default gadget width

    Raises:
        ShapeError: If the shapes are invalid or a value bound exceeds the ring
    """
    arch = architecture_for(model, batch_size, settings)
    plan = RelationPlan(arch)
    if arch.step1_degree > arch.ring_degree - 1:
        raise ShapeError(
            f"PriorNet values need {arch.step1_degree + 1} ring coefficients, ring degree is {arch.ring_degree}"
        )
    logger.info(f"setup for {arch.name}: L={plan.L}, d_c={arch.step1_degree}, batch={batch_size}, testers={testers}")
    ck_s1 = s1_setup(arch.step1_degree, plan.n_slots, rng)
    ck_model = s1_setup(0, plan.model_slots, rng)
    qmp = {rel: qmp_setup(L, rng) for rel, L in plan.qmp_dims.items()}
    cap = {rel: cap_setup(plan.qap(rel), rng) for rel in plan.cap_relations}
    keys = PipelineKeys(arch, ck_s1, ck_model, qmp, cap, agg_setup(testers, rng))
    keys.plan = plan
    return keys


def check_model(keys: PipelineKeys, model: SplitModel) -> None:
    """
    Raises:
        ArtifactError: If the model does not have the architecture the keys were made for
    """
    arch = keys.arch
    mine = Architecture.from_model(model, arch.batch_size, arch.ring, arch.relu_bits)
    if mine.digest() != arch.digest():
        raise ArtifactError(
            f"model hash {mine.hash_hex()[:16]} does not match the architecture hash {arch.hash_hex()[:16]}"
        )


# ---------------------------------------------------------------------------
# Model commitments
# ---------------------------------------------------------------------------

def prior_weight_poly(plan: RelationPlan, model: SplitModel) -> BivariatePoly:
    filters = model.prior[0].filters[:, 0]
    return encode_matrix(stub_encrypt(weight_block(filters, plan.layout), plan.arch.ring))


def stage_weights(spec: LayerSpec, st: Stage) -> np.ndarray:
    """Dense (out, in) matrix of a LaterNet matmul layer."""
    if spec.kind == "fc":
        return np.asarray(spec.weights, dtype=object)
    return np.asarray(conv_as_dense(spec.filters, st.shape.in_shape), dtype=object)


def padded_weights(spec: LayerSpec, st: Stage) -> ScalarMatrix:
    w = stage_weights(spec, st)
    L = st.dim
    out = np.zeros((L, L), dtype=object)
    out[: w.shape[0], : w.shape[1]] = w
    return ScalarMatrix(out)


def commit_model(
    keys: PipelineKeys, model: SplitModel, rng: Rng
) -> Tuple[ModelCommitmentsFile, ModelOpeningsFile]:
    """
    Commit to the PriorNet weight block and every LaterNet matmul.

    Returns:
        (public commitments, private openings)

    Raises:
        ArtifactError: If the model does not fit the keys
    """
    check_model(keys, model)
    plan = keys.plan
    rands: Dict[str, Scalar] = {}
    commitments: Dict[str, DualCommitment] = {}

    rands[PRIOR_WEIGHTS] = rand_scalar(rng)
    commitments[PRIOR_WEIGHTS] = commit(prior_weight_poly(plan, model), keys.ck_s1, rands[PRIOR_WEIGHTS])
    for st in plan.stages:
        if not st.is_matmul:
            continue
        rands[st.rel] = rand_scalar(rng)
        commitments[st.rel] = _commit_weights(keys, padded_weights(model.later[st.index], st), rands[st.rel])
    logger.info(f"committed {len(commitments)} weight blocks of {model.name}")
    arch_hash = keys.arch.hash_hex()
    return (
        ModelCommitmentsFile(
            version=SCHEMA_VERSION,
            architecture_hash=arch_hash,
            commitments={k: c.to_hex() for k, c in commitments.items()},
        ),
        ModelOpeningsFile(
            version=SCHEMA_VERSION,
            architecture_hash=arch_hash,
            rands={k: str(v) for k, v in rands.items()},
        ),
    )


def _commit_weights(keys: PipelineKeys, w: ScalarMatrix, rand: Scalar) -> DualCommitment:
    return commit(BivariatePoly.from_slots(w.flat()), keys.ck_model, rand)


def decode_commitments(keys: PipelineKeys, published: ModelCommitmentsFile) -> Dict[str, DualCommitment]:
    """
    Raises:
        ArtifactError: On a foreign architecture hash or a missing entry
    """
    if published.architecture_hash != keys.arch.hash_hex():
        raise ArtifactError("model commitments belong to a different architecture")
    needed = [PRIOR_WEIGHTS] + keys.plan.model_relations
    missing = [k for k in needed if k not in published.commitments]
    if missing:
        raise ArtifactError(f"model commitments miss {', '.join(missing)}")
    return {k: DualCommitment.from_hex(published.commitments[k]) for k in needed}


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

def bundle_digest(arch: Architecture, tester: str, labels: Sequence[int]) -> bytes:
    """Public statement the Step-1 point is bound to."""
    return statement_digest(arch.digest(), tester.encode(), ",".join(str(int(t)) for t in labels).encode())


def step1_to_file(st: EvalStatement) -> Step1Statement:
    return Step1Statement(
        commitments={k: c.to_hex() for k, c in st.commitments.items()},
        eval_commitments={k: c.to_hex() for k, c in st.eval_commitments.items()},
        k=str(st.k),
        digest=st.digest.hex(),
    )


def step1_from_file(f: Step1Statement) -> EvalStatement:
    """
    Raises:
        ArtifactError: On malformed points, point or digest
    """
    try:
        return EvalStatement(
            commitments={k: DualCommitment.from_hex(v) for k, v in f.commitments.items()},
            eval_commitments={k: DualCommitment.from_hex(v) for k, v in f.eval_commitments.items()},
            k=int(f.k),
            digest=bytes.fromhex(f.digest),
        )
    except (ValueError, TypeError) as e:
        raise ArtifactError(f"malformed Step-1 statement: {e}") from e


@dataclass
class ProofBundle:
    """Everything one tester publishes: statement, proofs and links."""

    statement: BundleStatement
    eval_proof: EvalProof
    qmp: Dict[str, QmpProof]
    cap: Dict[str, CapProof]
    links: Dict[str, LinkProof]

    @property
    def tester(self) -> str:
        return self.statement.tester


# ---------------------------------------------------------------------------
# PriorNet
# ---------------------------------------------------------------------------

@dataclass
class PriorResult:
    opening: EvalOpening
    qmp: QmpProof
    cap: Dict[str, CapProof]
    witness: Witness


def _cell(L: int, slot: int) -> Tuple[int, int]:
    return slot // L, slot % L


def _ring_sum(cells: Sequence[RingElem]) -> RingElem:
    """Exact coefficientwise sum (no reduction)."""
    n = max(len(c.coeffs) for c in cells)
    return RingElem(cells[0].params, [sum(c.coeff(i) for c in cells) for i in range(n)])


class PriorProver:
    """Proves PriorNet over stub-encrypted batches."""

    def __init__(self, keys: PipelineKeys, model: SplitModel, rng: Rng):
        """
        Args:
            keys: Pipeline keys
            model: The split model (only PriorNet weights are read)
            rng: Randomness source
        """
        self.keys = keys
        self.model = model
        self.plan = keys.plan
        self.rng = rng

    def ring_layers(self, batch) -> Dict[str, RingMatrix]:
        """
        Ring matrices W, X, Y1 = W·X, Y2 = square_act(Y1), pooled Y3 and its
        remainder R, with Σ window = w²·Y3 + R exactly.
        """
        plan, ring = self.plan, self.plan.arch.ring
        W = stub_encrypt(weight_block(self.model.prior[0].filters[:, 0], plan.layout), ring)
        X = stub_encrypt(input_block(batch, plan.layout), ring)
        Y1 = ring_matmul_unreduced(W, X)
        Y2 = ring_square_act(Y1)
        L = plan.L
        Y3 = [[ring_zero(ring) for _ in range(L)] for _ in range(L)]
        R = [[ring_zero(ring) for _ in range(L)] for _ in range(L)]
        area = plan.arch.pool_window ** 2
        for ins, out in plan.pool_windows:
            total = _ring_sum([Y2[r][c] for r, c in (_cell(L, s) for s in ins)])
            pooled = stub_encrypt_value(stub_decrypt_value(total) // area, ring)
            n = max(len(total.coeffs), len(pooled.coeffs))
            r, c = _cell(L, out)
            Y3[r][c] = pooled
            R[r][c] = RingElem(ring, [total.coeff(i) - area * pooled.coeff(i) for i in range(n)])
        return {"W": W, "X": X, "Y1": Y1, "Y2": Y2, "Y3": Y3, "R": R}

    def prove(self, batch, digest: bytes, weight_rand: Scalar, expected_output=None) -> PriorResult:
        """
        Step 1 over every ring component, then QMP (conv), square_act and
        avgpool at the Step-1 point.

        Args:
            batch: Inputs of shape (B, n, n)
            digest: Statement digest bound into the point
            weight_rand: Randomness of the published weight commitment
            expected_output: Plaintext pooled output (B, M, o3, o3) to cross-check

        Raises:
            ProverError: Naming the relation that failed
        """
        plan, keys, rng = self.plan, self.keys, self.rng
        L = plan.L
        ring_mats = self.ring_layers(batch)
        self._check_output(ring_mats["Y3"], expected_output)

        polys = {name: encode_matrix(ring_mats[name]) for name in STEP1_COMPONENTS}
        for name, poly in polys.items():
            if poly.deg_x > keys.ck_s1.d_c:
                raise ProverError(STEP1, f"{name} has degree {poly.deg_x} above the key bound {keys.ck_s1.d_c}")
        rands = {name: rand_scalar(rng) for name in STEP1_COMPONENTS}
        rands["W"] = weight_rand
        logger.info(f"proving {STEP1}: {len(polys)} components, {plan.n_slots} slots")
        opening = prove_eval(keys.ck_s1, polys, rands, rng, digest)
        ev = opening.evaluations

        witness: Witness = {}
        for name in STEP1_COMPONENTS:
            for s, value in enumerate(ev[name]):
                witness[eval_label(name, s)] = value
            witness[eval_rand_label(name)] = opening.eval_rands[name]
        for name in ("Y3", "R"):
            poly = polys[name]
            for c in range(keys.ck_s1.d_c + 1):
                for s in range(plan.n_slots):
                    witness[coeff_label(name, c, s)] = poly.coeff(c, s) % P
            witness[rand_label(name)] = rands[name]

        def at_k(name: str) -> ScalarMatrix:
            return ScalarMatrix([ev[name][r * L:(r + 1) * L] for r in range(L)])

        logger.info(f"proving {CONV}: L={L}")
        conv_wt = QmpWitness(at_k("W"), at_k("X"), at_k("Y1"))
        try:
            conv_proof, v = qmp_prove(keys.qmp[CONV], conv_wt, rng)
        except ProverError as e:
            raise ProverError(CONV, str(e)) from e
        witness.update(binding_witness(conv_wt, v, slot_labeller(CONV), v_label(CONV)))

        square_args = {f"x[{i}]": ev["Y1"][s] for i, s in enumerate(plan.conv_slots)}
        pool_args = {}
        for i, (ins, out) in enumerate(plan.pool_windows):
            for t, s in enumerate(ins):
                pool_args[f"x[{i}][{t}]"] = ev["Y2"][s]
            pool_args[f"y[{i}]"] = ev["Y3"][out]
            pool_args[f"rem[{i}]"] = ev["R"][out]
        # decrypted remainders R(2), range-checked against the window area
        decrypted = polys["R"].eval_x(2)
        rem_args = {f"rem[{i}]": decrypted[out] for i, (_, out) in enumerate(plan.pool_windows)}
        cap = {
            SQUARE: self._prove_gadget(SQUARE, square_args, witness),
            POOL: self._prove_gadget(POOL, pool_args, witness),
            REMAINDER: self._prove_gadget(REMAINDER, rem_args, witness),
        }
        return PriorResult(opening=opening, qmp=conv_proof, cap=cap, witness=witness)

    def _prove_gadget(self, rel: str, args: Mapping[str, int], witness: Witness) -> CapProof:
        logger.info(f"proving {rel}")
        circuit = self.plan.circuit(rel)
        try:
            assignment = circuit.solve(args)
            proof, v = cap_prove(self.keys.cap[rel], self.plan.qap(rel), assignment, self.rng, relation=rel)
        except ProverError as e:
            raise ProverError(rel, str(e)) from e
        witness[v_label(rel)] = v
        return proof

    def _check_output(self, Y3: RingMatrix, expected) -> None:
        if expected is None:
            return
        plan, L = self.plan, self.plan.L
        expected = np.asarray(expected, dtype=object)
        o3 = plan.pooled_dim
        for k in range(plan.layout.shape.M):
            for b in range(plan.layout.shape.B):
                for cell in range(o3 * o3):
                    r, c = _cell(L, plan.pooled_slot(k, b, cell))
                    if stub_decrypt_value(Y3[r][c]) != int(expected[b, k, cell // o3, cell % o3]):
                        raise ProverError(POOL, "pooled ring output disagrees with plaintext inference")


# ---------------------------------------------------------------------------
# LaterNet
# ---------------------------------------------------------------------------

@dataclass
class LaterResult:
    qmp: Dict[str, QmpProof]
    cap: Dict[str, CapProof]
    predictions: List[int]


class LaterProver:
    """Proves LaterNet layer by layer from the recorded plaintext trace."""

    def __init__(self, keys: PipelineKeys, model: SplitModel, openings: Mapping[str, Scalar], rng: Rng):
        self.keys = keys
        self.model = model
        self.plan = keys.plan
        self.openings = openings
        self.rng = rng

    def prove(self, trace: InferenceTrace, witness: Witness) -> LaterResult:
        """
        Args:
            trace: Plaintext inference trace of the same batch
            witness: Link witness, extended in place with every LaterNet value

        Raises:
            ProverError: Naming the relation that failed
        """
        qmp: Dict[str, QmpProof] = {}
        cap: Dict[str, CapProof] = {}
        predictions: List[int] = []
        split = self.model.split_index
        for st in self.plan.stages:
            record = trace.record(split + st.index)
            items = [[int(v) for v in np.asarray(x, dtype=object).reshape(-1)] for x in record.inputs]
            logger.info(f"proving {st.rel}")
            if st.is_matmul:
                qmp[st.rel] = self._prove_matmul(st, items, witness)
            else:
                cap[st.rel], public = self._prove_gadget(st, items, witness)
                if st.kind == "argmax":
                    predictions = [int(p) for p in public]
        return LaterResult(qmp=qmp, cap=cap, predictions=predictions)

    def _prove_matmul(self, st: Stage, items: List[List[int]], witness: Witness) -> QmpProof:
        L = st.dim
        W = padded_weights(self.model.later[st.index], st)
        xs = np.zeros((L, L), dtype=object)
        for b, item in enumerate(items):
            xs[: len(item), b] = item
        X = ScalarMatrix(xs)
        wt = QmpWitness(W, X, W @ X)
        try:
            proof, v = qmp_prove(self.keys.qmp[st.rel], wt, self.rng)
        except ProverError as e:
            raise ProverError(st.rel, str(e)) from e
        # weights, inputs and outputs all under the relation's own labels
        witness.update(binding_witness(wt, v, slot_labeller(st.rel), v_label(st.rel)))
        witness[model_rand_label(st.rel)] = self.openings[st.rel]
        return proof

    def _prove_gadget(self, st: Stage, items: List[List[int]], witness: Witness) -> Tuple[CapProof, List[int]]:
        args: Dict[str, int] = {}
        if st.kind == "relu":
            F = st.shape.in_features
            for b, item in enumerate(items):
                for f, value in enumerate(item):
                    args[f"x[{b * F + f}]"] = value
        elif st.kind == "avgpool":
            for b, fout, f_ins in self.plan.later_pool_windows(st):
                i = b * st.shape.out_features + fout
                for t, f in enumerate(f_ins):
                    args[f"x[{i}][{t}]"] = items[b][f]
        else:
            for b, item in enumerate(items):
                for f, value in enumerate(item):
                    args[f"x[{b}][{f}]"] = value

        circuit = self.plan.circuit(st.rel)
        try:
            assignment = circuit.solve(args)
            proof, v = cap_prove(self.keys.cap[st.rel], self.plan.qap(st.rel), assignment, self.rng, relation=st.rel)
        except ProverError as e:
            raise ProverError(st.rel, str(e)) from e
        witness[v_label(st.rel)] = v
        named = circuit.named(assignment)
        if st.kind in ("relu", "avgpool"):
            for b in range(len(items)):
                for f in range(st.shape.out_features):
                    witness[st.output_label(b, f)] = named[f"y[{b * st.shape.out_features + f}]"]
        return proof, public_values(circuit.r1cs, assignment)


# ---------------------------------------------------------------------------
# Bundle prover
# ---------------------------------------------------------------------------

def prove_bundle(
    keys: PipelineKeys,
    model: SplitModel,
    commitments: ModelCommitmentsFile,
    openings: ModelOpeningsFile,
    data: DataFile,
    rng: Rng,
) -> ProofBundle:
    """
    Prove one tester's batch end to end.

    Args:
        keys: Pipeline keys
        model: Split model with both parts' weights
        commitments: Published model commitments
        openings: Their private randomness
        data: Tester batch and true labels
        rng: Randomness source

    Returns:
        The bundle; its statement carries predictions and the correct count

    Raises:
        ArtifactError: If model, keys and commitments do not belong together
        ShapeError: If the batch does not fit the architecture
        ProverError: Naming the first relation or link that could not be proven
    """
    arch, plan = keys.arch, keys.plan
    check_model(keys, model)
    published = decode_commitments(keys, commitments)
    if openings.architecture_hash != arch.hash_hex():
        raise ArtifactError("model openings belong to a different architecture")
    rands = openings.scalars()
    if data.batch_size != arch.batch_size:
        raise ShapeError(f"batch has {data.batch_size} inputs, keys were made for {arch.batch_size}")

    batch = data.batch()
    trace, correct = run_split(model, batch, data.labels)
    digest = bundle_digest(arch, data.tester, data.labels)
    logger.info(f"proving bundle for tester {data.tester}: {data.batch_size} inputs")

    prior = PriorProver(keys, model, rng).prove(
        batch, digest, rands[PRIOR_WEIGHTS], expected_output=trace.record(model.split_index - 1).outputs
    )
    if not geq(prior.opening.statement.commitments["W"].c1, published[PRIOR_WEIGHTS].c1):
        raise ArtifactError("published PriorNet weight commitment does not open to this model")
    for rel in plan.model_relations:
        st = plan.stage(rel)
        mine = _commit_weights(keys, padded_weights(model.later[st.index], st), rands[rel])
        if not geq(mine.c1, published[rel].c1):
            raise ArtifactError(f"published commitment of {rel} does not open to this model")

    later = LaterProver(keys, model, rands, rng).prove(trace, prior.witness)
    if later.predictions != trace.labels:
        raise ProverError(plan.stages[-1].rel, "proven predictions disagree with plaintext inference")

    qmp = {CONV: prior.qmp, **later.qmp}
    cap = {**prior.cap, **later.cap}
    parts = PublicParts(prior.opening.statement, qmp, cap, published)
    rows = LinkRows(plan, keys.ck_s1, keys.ck_model, keys.qmp, keys.cap, parts)
    links: Dict[str, LinkProof] = {}
    for left, right in plan.edges:
        name = edge_name(left, right)
        try:
            inst = link_build_instance(rows.edge(left, right))
            links[name] = link_prove(inst, prior.witness, rng, context=rows.context(left, right))
        except ProverError as e:
            raise ProverError(name, str(e)) from e
    logger.info(f"bundle for {data.tester}: {len(qmp)} QMP, {len(cap)} CaP, {len(links)} links, {correct} correct")

    statement = BundleStatement(
        version=SCHEMA_VERSION,
        tester=data.tester,
        architecture_hash=arch.hash_hex(),
        batch_size=data.batch_size,
        labels=list(data.labels),
        predictions=later.predictions,
        correct_count=correct,
        accuracy=correct / data.batch_size,
        step1=step1_to_file(prior.opening.statement),
    )
    return ProofBundle(statement, prior.opening.proof, qmp, cap, links)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    """Per-check verdicts, in the order they were checked."""

    verdicts: Dict[str, bool] = field(default_factory=dict)
    reasons: Dict[str, str] = field(default_factory=dict)

    def record(self, name: str, ok: bool, reason: str = "") -> bool:
        self.verdicts[name] = ok
        if not ok:
            self.reasons[name] = reason or "rejected"
        return ok

    @property
    def accepted(self) -> bool:
        return bool(self.verdicts) and all(self.verdicts.values())

    @property
    def failures(self) -> List[str]:
        return [name for name, ok in self.verdicts.items() if not ok]

    def merge(self, prefix: str, other: "VerificationReport") -> None:
        for name, ok in other.verdicts.items():
            self.record(f"{prefix}/{name}", ok, other.reasons.get(name, ""))

    def lines(self) -> List[str]:
        out = []
        for name, ok in self.verdicts.items():
            out.append(f"{'ACCEPT' if ok else 'REJECT'}  {name}" + ("" if ok else f"  ({self.reasons[name]})"))
        return out


class _Stop(Exception):
    pass


class BundleVerifier:
    """Checks bundles against public keys and model commitments only."""

    def __init__(self, keys: PipelineKeys, commitments: ModelCommitmentsFile):
        self.keys = keys
        self.plan = keys.plan
        self.commitments = commitments

    def verify(self, bundle: ProofBundle, fail_fast: bool = False, check_cap: bool = True) -> VerificationReport:
        """
        Verify every proof and every link of a bundle.

        Args:
            bundle: The bundle
            fail_fast: Stop at the first rejected check
            check_cap: Verify gadget proofs one by one (off when an
                aggregated proof covers them)

        Returns:
            Report with one verdict per check; missing proofs and links are
            rejected under their own name
        """
        report = VerificationReport()

        def check(name: str, ok: bool, reason: str = "") -> bool:
            report.record(name, ok, reason)
            if not ok:
                logger.info(f"{bundle.tester}: {name} rejected ({reason or 'proof check'})")
                if fail_fast:
                    raise _Stop()
            return ok

        try:
            self._verify(bundle, check, check_cap)
        except _Stop:
            pass
        return report

    def _verify(self, bundle: ProofBundle, check, check_cap: bool) -> None:
        keys, plan = self.keys, self.plan
        st = bundle.statement

        try:
            published = decode_commitments(keys, self.commitments)
        except ArtifactError as e:
            check("commitments", False, str(e))
            return
        try:
            step1 = step1_from_file(st.step1)
        except ArtifactError as e:
            check("statement", False, str(e))
            return
        check("statement", *self._check_statement(st, step1))
        check("model.prior", "W" in step1.commitments and geq(step1.commitments["W"].c1, published[PRIOR_WEIGHTS].c1),
              "Step-1 weight commitment differs from the published one")
        check(STEP1, set(step1.commitments) == set(STEP1_COMPONENTS) and verify_eval(keys.ck_s1, step1, bundle.eval_proof),
              "evaluation proof")

        for rel in plan.qmp_dims:
            if rel not in bundle.qmp:
                check(rel, False, "missing proof")
            else:
                check(rel, qmp_verify(keys.qmp[rel], bundle.qmp[rel]))
        if check_cap:
            for rel in plan.cap_relations:
                if rel not in bundle.cap:
                    check(rel, False, "missing proof")
                else:
                    public = plan.public_inputs(rel, st.predictions)
                    try:
                        ok = cap_verify(keys.cap[rel].vk, public, bundle.cap[rel])
                    except ShapeError as e:
                        check(rel, False, str(e))
                        continue
                    check(rel, ok)

        parts = PublicParts(step1, bundle.qmp, bundle.cap, published)
        rows = LinkRows(plan, keys.ck_s1, keys.ck_model, keys.qmp, keys.cap, parts)
        for left, right in plan.edges:
            name = edge_name(left, right)
            missing = find_missing(plan, parts, left, right)
            if name not in bundle.links:
                check(name, False, "missing link")
                continue
            if missing:
                check(name, False, f"missing {missing}")
                continue
            try:
                inst = link_build_instance(rows.edge(left, right))
                context = rows.context(left, right)
            except (KeyError, ShapeError, ValueError) as e:
                check(name, False, f"malformed rows: {e}")
                continue
            check(name, link_verify(inst, bundle.links[name], context))

    def _check_statement(self, st: BundleStatement, step1: EvalStatement) -> Tuple[bool, str]:
        arch = self.keys.arch
        if st.architecture_hash != arch.hash_hex():
            return False, "architecture hash differs from the keys"
        if st.batch_size != arch.batch_size:
            return False, f"batch size {st.batch_size} differs from {arch.batch_size}"
        if any(not 0 <= p < arch.num_classes for p in st.predictions):
            return False, "prediction outside the class range"
        correct = sum(int(p == t) for p, t in zip(st.predictions, st.labels))
        if correct != st.correct_count:
            return False, f"correct_count {st.correct_count} but labels give {correct}"
        if abs(st.accuracy - correct / st.batch_size) > 1e-9:
            return False, "accuracy does not match correct_count"
        if step1.digest != bundle_digest(arch, st.tester, st.labels):
            return False, "Step-1 digest does not bind this tester and labels"
        return True, ""


def verify_bundle(
    keys: PipelineKeys,
    commitments: ModelCommitmentsFile,
    bundle: ProofBundle,
    fail_fast: bool = False,
) -> VerificationReport:
    """Verify one bundle; never raises on a bad proof."""
    report = BundleVerifier(keys, commitments).verify(bundle, fail_fast=fail_fast)
    logger.info(f"bundle {bundle.tester}: {'accepted' if report.accepted else 'rejected'}")
    return report


# ---------------------------------------------------------------------------
# Several testers
# ---------------------------------------------------------------------------

def _agg_inputs(plan: RelationPlan, rel: str, bundles: Sequence[ProofBundle]):
    statements = [
        AggStatement(tuple(plan.public_inputs(rel, b.statement.predictions)), b.cap[rel].D) for b in bundles
    ]
    return statements, [b.cap[rel] for b in bundles]


def aggregate_bundles(keys: PipelineKeys, bundles: Sequence[ProofBundle]) -> Dict[str, AggProof]:
    """
    One aggregated proof per gadget relation over all testers' bundles.

    Raises:
        ShapeError: If the tester count does not fit the aggregation key
        ProverError: If a bundle proof does not verify
    """
    if not bundles:
        raise ShapeError("nothing to aggregate")
    out = {}
    for rel in keys.plan.cap_relations:
        missing = [b.tester for b in bundles if rel not in b.cap]
        if missing:
            raise ProverError("aggregate", f"{rel} proof missing from {', '.join(missing)}")
        statements, proofs = _agg_inputs(keys.plan, rel, bundles)
        out[rel] = agg_prove(keys.agg, keys.cap[rel].vk, statements, proofs)
        logger.info(f"aggregated {rel} over {len(bundles)} testers")
    return out


def verify_testers(
    keys: PipelineKeys,
    commitments: ModelCommitmentsFile,
    bundles: Sequence[ProofBundle],
    aggregate: Optional[Mapping[str, AggProof]] = None,
    fail_fast: bool = False,
) -> VerificationReport:
    """
    Verify several testers' bundles.

    With `aggregate`, gadget proofs are checked through one aggregated
    verification per relation instead of one pairing check per proof.
    """
    report = VerificationReport()
    verifier = BundleVerifier(keys, commitments)
    for bundle in bundles:
        sub = verifier.verify(bundle, fail_fast=fail_fast, check_cap=aggregate is None)
        report.merge(bundle.tester, sub)
        if fail_fast and not sub.accepted:
            return report
    if aggregate is not None:
        for rel in keys.plan.cap_relations:
            name = f"aggregate/{rel}"
            if rel not in aggregate:
                report.record(name, False, "missing aggregated proof")
                continue
            if any(rel not in b.cap for b in bundles):
                report.record(name, False, "a bundle misses the proof")
                continue
            statements, _ = _agg_inputs(keys.plan, rel, bundles)
            try:
                ok = agg_verify(keys.cap[rel].vk, keys.agg, statements, aggregate[rel])
            except (ShapeError, ValueError) as e:
                ok = False
                logger.info(f"{name} rejected: {e}")
            report.record(name, ok, "aggregated proof")
            if fail_fast and not ok:
                return report
    logger.info(f"{len(bundles)} testers: {'accepted' if report.accepted else 'rejected'}")
    return report
