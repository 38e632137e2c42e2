"""
Relation plan of a split model and the commitment rows of every link edge.

Every scalar flowing between two proofs has one label, chosen by the proof
that produces it: Step-1 evaluations are `Y1@k[s]`, QMP outputs
`later.0.fc.Y[o][b]`, gadget outputs `later.1.relu.y[i]`. A link edge stacks
the rows of both neighbours; rows sharing a label are thereby tied
together. Each QMP relation also has an edge to `slots` that ties its D
matrix to its own d1/d2/d3. Prover and verifier build the same rows from
public material only.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple

from snark.algebra import G1Point, GroupMatrix, gmul
from snark.cap import CapCrs, CapProof
from snark.cp_link import LinkedCommitment
from snark.gadgets import gadget_argmax, gadget_avgpool, gadget_relu, gadget_remainder, gadget_square_act
from snark.mpoly_commit import CommitKeyS1, DualCommitment, EvalStatement
from snark.qmp import QmpCrs, QmpProof, binding_rows
from snark.r1cs import Circuit, QapInstance, compile_r1cs
from models.schemas import Architecture, LayerShape
from utils.errors import ShapeError

STEP1 = "prior.step1"
CONV = "prior.conv"
SQUARE = "prior.square"
POOL = "prior.pool"
REMAINDER = "prior.rem"
MODEL = "model"
SLOTS = "slots"
STEP1_COMPONENTS = ("W", "X", "Y1", "Y2", "Y3", "R")
PRIOR_WEIGHTS = "prior.W"

Terms = List[Tuple[G1Point, str]]


def eval_label(comp: str, slot: int) -> str:
    return f"{comp}@k[{slot}]"


def eval_rand_label(comp: str) -> str:
    return f"{comp}@k.r"


def coeff_label(comp: str, c: int, slot: int) -> str:
    return f"{comp}[{c}][{slot}]"


def rand_label(comp: str) -> str:
    return f"{comp}.r"


def v_label(rel: str) -> str:
    return f"{rel}.v"


def qmp_label(rel: str, name: str, i: int, j: int) -> str:
    """Entry (i, j) of matrix W, X or Y of a QMP relation."""
    return f"{rel}.{name}[{i}][{j}]"


def weight_label(rel: str, i: int, j: int) -> str:
    return qmp_label(rel, "W", i, j)


def slot_labeller(rel: str) -> Callable[[str, int, int], str]:
    return lambda name, i, j: qmp_label(rel, name, i, j)


def model_rand_label(rel: str) -> str:
    return f"{rel}.model.r"


def edge_name(left: str, right: str) -> str:
    return f"{left}--{right}"


@dataclass(frozen=True)
class Stage:
    """One LaterNet layer as a relation."""

    index: int
    shape: LayerShape
    batch: int

    @property
    def kind(self) -> str:
        return self.shape.kind

    @property
    def rel(self) -> str:
        return f"later.{self.index}.{self.kind}"

    @property
    def is_matmul(self) -> bool:
        return self.kind in ("conv", "fc")

    @property
    def dim(self) -> int:
        """Matrix dimension of a matmul stage: max(out, in, B)."""
        return max(self.shape.out_features, self.shape.in_features, self.batch)

    def output_label(self, b: int, f: int) -> str:
        if self.is_matmul:
            return qmp_label(self.rel, "Y", f, b)
        return f"{self.rel}.y[{b * self.shape.out_features + f}]"


@dataclass
class RelationPlan:
    """
    Relations, circuits and edges derived deterministically from an
    architecture; keys, prover and verifier all rebuild it.
    """

    arch: Architecture
    _circuits: Dict[str, Circuit] = field(default_factory=dict, repr=False)
    _qaps: Dict[str, QapInstance] = field(default_factory=dict, repr=False)

    @cached_property
    def layout(self):
        return self.arch.layout

    @property
    def L(self) -> int:
        return self.layout.L

    @property
    def n_slots(self) -> int:
        return self.L * self.L

    @cached_property
    def stages(self) -> List[Stage]:
        return [Stage(j, shape, self.arch.batch_size) for j, shape in enumerate(self.arch.later_layers)]

    def stage(self, rel: str) -> Stage:
        for st in self.stages:
            if st.rel == rel:
                return st
        raise KeyError(rel)

    @property
    def qmp_dims(self) -> Dict[str, int]:
        dims = {CONV: self.L}
        dims.update({st.rel: st.dim for st in self.stages if st.is_matmul})
        return dims

    @property
    def cap_relations(self) -> List[str]:
        return [SQUARE, POOL, REMAINDER] + [st.rel for st in self.stages if not st.is_matmul]

    @property
    def model_relations(self) -> List[str]:
        return [st.rel for st in self.stages if st.is_matmul]

    @property
    def model_slots(self) -> int:
        return max(st.dim ** 2 for st in self.stages if st.is_matmul)

    # -- prior layout -----------------------------------------------------

    @cached_property
    def conv_slots(self) -> List[int]:
        """Slot of every conv output in (k, b, i, j) order."""
        return [row * self.L + col for _, (row, col) in self.layout.output_cells()]

    @property
    def pooled_dim(self) -> int:
        return self.layout.shape.o // self.arch.pool_window

    @cached_property
    def pool_windows(self) -> List[Tuple[List[int], int]]:
        """(input slots, output slot) of every prior pooling window in (k, b, i', j') order."""
        s, w, o3 = self.layout.shape, self.arch.pool_window, self.pooled_dim
        out = []
        for k in range(s.M):
            for b in range(s.B):
                for i in range(o3):
                    for j in range(o3):
                        ins = []
                        for di in range(w):
                            for dj in range(w):
                                row, col = self.layout.idx_y(k, b, i * w + di, j * w + dj)
                                ins.append(row * self.L + col)
                        out.append((ins, self.pooled_slot(k, b, i * o3 + j)))
        return out

    @cached_property
    def remainder_slots(self) -> Dict[str, int]:
        """Committed remainder of the range relation -> pooled output slot."""
        return {f"rem[{i}]": slot for i, (_, slot) in enumerate(self.pool_windows)}

    def pooled_slot(self, k: int, b: int, cell: int) -> int:
        """Slot of pooled output `cell` (i'·o3 + j') of filter k and input b."""
        return k * self.L + b * self.pooled_dim ** 2 + cell

    def seam_slot(self, b: int, f: int) -> int:
        """Slot holding LaterNet input feature f of item b."""
        per_filter = self.pooled_dim ** 2
        return self.pooled_slot(f // per_filter, b, f % per_filter)

    # -- circuits ---------------------------------------------------------

    def circuit(self, rel: str) -> Circuit:
        if rel not in self._circuits:
            self._circuits[rel] = self._build_circuit(rel)
        return self._circuits[rel]

    def qap(self, rel: str) -> QapInstance:
        if rel not in self._qaps:
            self._qaps[rel] = compile_r1cs(self.circuit(rel).r1cs)
        return self._qaps[rel]

    def _build_circuit(self, rel: str) -> Circuit:
        if rel == SQUARE:
            return gadget_square_act(len(self.conv_slots))
        if rel == POOL:
            return gadget_avgpool(len(self.pool_windows), self.arch.pool_window, range_check=False)
        if rel == REMAINDER:
            return gadget_remainder(len(self.pool_windows), self.arch.pool_window)
        st = self.stage(rel)
        B, shape = self.arch.batch_size, st.shape
        if st.kind == "relu":
            return gadget_relu(B * shape.in_features, shape.bits)
        if st.kind == "avgpool":
            return gadget_avgpool(B * shape.out_features, shape.window, shape.bits)
        if st.kind == "argmax":
            return gadget_argmax(shape.in_features, shape.bits, items=B)
        raise ShapeError(f"{rel} is not a gadget relation")

    def cap_labels(self, rel: str) -> Dict[str, str]:
        """
        Gadget variable name -> link label for every committed variable.

        Raises:
            ShapeError: For the remainder relation, whose values are weighted
                sums of R coefficients (see remainder_slots)
        """
        if rel == REMAINDER:
            raise ShapeError(f"{rel} commits sums of coefficients, not labelled values")
        if rel == SQUARE:
            out = {}
            for i, slot in enumerate(self.conv_slots):
                out[f"x[{i}]"] = eval_label("Y1", slot)
                out[f"y[{i}]"] = eval_label("Y2", slot)
            return out
        if rel == POOL:
            out = {}
            for i, (ins, slot) in enumerate(self.pool_windows):
                for t, s in enumerate(ins):
                    out[f"x[{i}][{t}]"] = eval_label("Y2", s)
                out[f"y[{i}]"] = eval_label("Y3", slot)
                out[f"rem[{i}]"] = eval_label("R", slot)
            return out
        st = self.stage(rel)
        prev = self.stages[st.index - 1]
        B, shape = self.arch.batch_size, st.shape
        out = {}
        if st.kind == "relu":
            F = shape.in_features
            for b in range(B):
                for f in range(F):
                    out[f"x[{b * F + f}]"] = prev.output_label(b, f)
                    out[f"y[{b * F + f}]"] = st.output_label(b, f)
        elif st.kind == "avgpool":
            for b, fout, f_ins in self.later_pool_windows(st):
                i = b * shape.out_features + fout
                for t, f in enumerate(f_ins):
                    out[f"x[{i}][{t}]"] = prev.output_label(b, f)
                out[f"y[{i}]"] = st.output_label(b, fout)
        elif st.kind == "argmax":
            for b in range(B):
                for f in range(shape.in_features):
                    out[f"x[{b}][{f}]"] = prev.output_label(b, f)
        return out

    def later_pool_windows(self, st: Stage) -> Iterable[Tuple[int, int, List[int]]]:
        """(b, output feature, input features) of every LaterNet pooling window."""
        C, H, W = st.shape.in_shape
        w = st.shape.window
        oh, ow = H // w, W // w
        for b in range(self.arch.batch_size):
            for c in range(C):
                for i in range(oh):
                    for j in range(ow):
                        f_ins = [c * H * W + (i * w + di) * W + (j * w + dj) for di in range(w) for dj in range(w)]
                        yield b, (c * oh + i) * ow + j, f_ins

    def public_inputs(self, rel: str, predictions: List[int]) -> List[int]:
        if rel in (SQUARE, POOL, REMAINDER) or self.stage(rel).kind != "argmax":
            return []
        return list(predictions)

    # -- edges ------------------------------------------------------------

    @cached_property
    def edges(self) -> List[Tuple[str, str]]:
        out = [(STEP1, CONV), (CONV, SQUARE), (SQUARE, POOL), (STEP1, REMAINDER)]
        out += [(MODEL, rel) for rel in self.model_relations]
        out.append((STEP1, self.stages[0].rel))
        out += [(a.rel, b.rel) for a, b in zip(self.stages, self.stages[1:])]
        out += [(rel, SLOTS) for rel in self.qmp_dims]
        return out

    @property
    def edge_names(self) -> List[str]:
        return [edge_name(a, b) for a, b in self.edges]


@dataclass
class PublicParts:
    """Public material of one bundle that link rows are read from."""

    step1: EvalStatement
    qmp: Mapping[str, QmpProof]
    cap: Mapping[str, CapProof]
    model: Mapping[str, DualCommitment]


class LinkRows:
    """Builds the rows of every edge from keys and public bundle parts."""

    def __init__(
        self,
        plan: RelationPlan,
        ck_s1: CommitKeyS1,
        ck_model: CommitKeyS1,
        qmp_crs: Mapping[str, QmpCrs],
        cap_crs: Mapping[str, CapCrs],
        parts: PublicParts,
    ):
        self.plan = plan
        self.ck_s1 = ck_s1
        self.ck_model = ck_model
        self.qmp_crs = qmp_crs
        self.cap_crs = cap_crs
        self.parts = parts

    # -- single rows ------------------------------------------------------

    def eval_row(self, comp: str) -> LinkedCommitment:
        """Commitment to L(k, y) of a Step-1 component."""
        ck = self.ck_s1
        terms = [(ck.h, eval_rand_label(comp))]
        terms += [(ck.bases[0][s], eval_label(comp, s)) for s in range(self.plan.n_slots)]
        return LinkedCommitment(self.parts.step1.eval_commitments[comp].c1, tuple(terms))

    def poly_row(self, comp: str) -> LinkedCommitment:
        """Commitment to the full L(x, y) of a Step-1 component."""
        ck = self.ck_s1
        terms = [(ck.h, rand_label(comp))]
        terms += [
            (ck.bases[c][s], coeff_label(comp, c, s))
            for c in range(ck.d_c + 1)
            for s in range(self.plan.n_slots)
        ]
        return LinkedCommitment(self.parts.step1.commitments[comp].c1, tuple(terms))

    def model_row(self, rel: str) -> LinkedCommitment:
        ck, L = self.ck_model, self.plan.stage(rel).dim
        terms = [(ck.h, model_rand_label(rel))]
        terms += [(ck.bases[0][i * L + j], weight_label(rel, i, j)) for i in range(L) for j in range(L)]
        return LinkedCommitment(self.parts.model[rel].c1, tuple(terms))

    def cap_row(self, rel: str) -> LinkedCommitment:
        """D of a gadget proof over its committed block."""
        crs = self.cap_crs[rel]
        if rel == REMAINDER:
            return self._remainder_row()
        r1cs = self.plan.circuit(rel).r1cs
        names = self.plan.cap_labels(rel)
        terms = []
        for key, idx in zip(crs.com_keys, r1cs.committed_indices):
            name = r1cs.names.get(idx)
            if name not in names:
                raise ShapeError(f"{rel}: committed variable {name!r} has no link label")
            terms.append((key, names[name]))
        terms.append((crs.g_eta_gamma, v_label(rel)))
        return LinkedCommitment(self.parts.cap[rel].D, tuple(terms))

    def _remainder_row(self) -> LinkedCommitment:
        """
        D of the remainder range proof; rem[i] is the decrypted remainder
        R(2) of window i, a weighted sum of the committed coefficients of R.
        """
        crs = self.cap_crs[REMAINDER]
        r1cs = self.plan.circuit(REMAINDER).r1cs
        slots = self.plan.remainder_slots
        terms = []
        for key, idx in zip(crs.com_keys, r1cs.committed_indices):
            name = r1cs.names.get(idx)
            if name not in slots:
                raise ShapeError(f"{REMAINDER}: committed variable {name!r} has no window")
            terms += [(gmul(key, 1 << c), coeff_label("R", c, slots[name])) for c in range(self.ck_s1.d_c + 1)]
        terms.append((crs.g_eta_gamma, v_label(REMAINDER)))
        return LinkedCommitment(self.parts.cap[REMAINDER].D, tuple(terms))

    def qmp_rows(
        self,
        rel: str,
        slot: str,
        term_fn: Callable[[int, int], Terms],
        only_mapped: bool = False,
    ) -> List[LinkedCommitment]:
        """
        Rows for the d1/d2/d3 cells of a QMP proof; every cell carries the
        shared randomizer v on g^{η/γ}.
        """
        crs = self.qmp_crs[rel]
        matrix: GroupMatrix = getattr(self.parts.qmp[rel], slot)
        if matrix.dim != crs.L:
            raise ShapeError(f"{rel}.{slot} has dim {matrix.dim}, CRS has {crs.L}")
        rows = []
        for i in range(crs.L):
            for j in range(crs.L):
                terms = term_fn(i, j)
                if only_mapped and not terms:
                    continue
                rows.append(LinkedCommitment(matrix[i, j], tuple(terms) + ((crs.g_eta_gamma, v_label(rel)),)))
        return rows

    # -- ports of LaterNet stages -----------------------------------------

    def _input_terms(self, st: Stage) -> Callable[[int, int], Terms]:
        """d2 cell (f, b) of a matmul stage over the previous stage's outputs."""
        base = self.qmp_crs[st.rel].g_alpha_gamma
        prev = self.plan.stages[st.index - 1]

        def terms(f: int, b: int) -> Terms:
            if f < st.shape.in_features and b < self.plan.arch.batch_size:
                return [(base, prev.output_label(b, f))]
            return []

        return terms

    def _output_terms(self, st: Stage) -> Callable[[int, int], Terms]:
        base = self.qmp_crs[st.rel].g_one_gamma

        def terms(o: int, b: int) -> Terms:
            if o < st.shape.out_features and b < self.plan.arch.batch_size:
                return [(base, st.output_label(b, o))]
            return []

        return terms

    def _seam_terms(self, st: Stage) -> Callable[[int, int], Terms]:
        """d2 cell (f, b) of the first matmul over the ring coefficients of Y3."""
        bases = [gmul(self.qmp_crs[st.rel].g_alpha_gamma, 1 << c) for c in range(self.ck_s1.d_c + 1)]

        def terms(f: int, b: int) -> Terms:
            if f < st.shape.in_features and b < self.plan.arch.batch_size:
                slot = self.plan.seam_slot(b, f)
                return [(base, coeff_label("Y3", c, slot)) for c, base in enumerate(bases)]
            return []

        return terms

    def _output_port(self, st: Stage) -> List[LinkedCommitment]:
        if st.is_matmul:
            return self.qmp_rows(st.rel, "d3", self._output_terms(st), only_mapped=True)
        return [self.cap_row(st.rel)]

    def _input_port(self, st: Stage) -> List[LinkedCommitment]:
        if st.is_matmul:
            return self.qmp_rows(st.rel, "d2", self._input_terms(st))
        return [self.cap_row(st.rel)]

    # -- edges ------------------------------------------------------------

    def context(self, left: str, right: str) -> bytes:
        """Bytes bound into the challenge of an edge: the whole QMP proof of a slots edge."""
        if right == SLOTS:
            return self.parts.qmp[left].to_bytes()
        return b""

    def edge(self, left: str, right: str) -> List[LinkedCommitment]:
        """
        Rows of one edge.

        `(rel, SLOTS)` ties the D matrix of a QMP proof to its own d1/d2/d3.

        Raises:
            KeyError: If a proof or commitment the edge needs is missing
        """
        if right == SLOTS:
            return binding_rows(self.qmp_crs[left], self.parts.qmp[left], slot_labeller(left), v_label(left))
        L = self.plan.L
        if (left, right) == (STEP1, CONV):
            crs = self.qmp_crs[CONV]
            rows = [self.eval_row(c) for c in ("W", "X", "Y1")]
            for slot, comp, base in (("d1", "W", crs.g_beta_gamma), ("d2", "X", crs.g_alpha_gamma),
                                     ("d3", "Y1", crs.g_one_gamma)):
                rows += self.qmp_rows(CONV, slot, lambda i, j, comp=comp, base=base: [(base, eval_label(comp, i * L + j))])
            return rows
        if (left, right) == (CONV, SQUARE):
            return [self.eval_row("Y1"), self.eval_row("Y2"), self.cap_row(SQUARE)]
        if (left, right) == (SQUARE, POOL):
            return [self.eval_row(c) for c in ("Y2", "Y3", "R")] + [self.cap_row(POOL)]
        if (left, right) == (STEP1, REMAINDER):
            return [self.poly_row("R"), self.cap_row(REMAINDER)]
        if left == MODEL:
            base = self.qmp_crs[right].g_beta_gamma
            cells = self.qmp_rows(right, "d1", lambda i, j: [(base, weight_label(right, i, j))])
            return [self.model_row(right)] + cells
        if left == STEP1:
            st = self.plan.stage(right)
            return [self.poly_row("Y3")] + self.qmp_rows(right, "d2", self._seam_terms(st))
        prev, cur = self.plan.stage(left), self.plan.stage(right)
        return self._output_port(prev) + self._input_port(cur)


def required_proofs(plan: RelationPlan, left: str, right: str) -> List[str]:
    """Relations whose proofs an edge reads (for naming what is missing)."""
    return [r for r in (left, right) if r not in (STEP1, MODEL, SLOTS)]


def find_missing(plan: RelationPlan, parts: PublicParts, left: str, right: str) -> Optional[str]:
    for rel in required_proofs(plan, left, right):
        if rel in plan.qmp_dims and rel not in parts.qmp:
            return rel
        if rel in plan.cap_relations and rel not in parts.cap:
            return rel
    if left == MODEL and right not in parts.model:
        return f"model commitment {right}"
    return None
