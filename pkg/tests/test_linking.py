"""
Relation plan of the micro model.

Covers:
  - relation names, QMP dimensions and model slots
  - prior slot layout (conv outputs, pooling windows, seam)
  - gadget circuits and their link labels
  - edge list
"""

import pytest

from models.ringpoly import RingParams
from models.schemas import Architecture
from services.linking import (
    CONV,
    MODEL,
    POOL,
    REMAINDER,
    SQUARE,
    SLOTS,
    STEP1,
    RelationPlan,
    edge_name,
    eval_label,
    qmp_label,
    required_proofs,
    slot_labeller,
)
from snark.r1cs import COMMITTED
from utils.errors import ProverError, ShapeError


@pytest.fixture(scope="module")
def plan(micro):
    arch = Architecture.from_model(micro, 2, RingParams.from_bits(64, 60), 16)
    return RelationPlan(arch)


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------

class TestRelations:
    """Which proof covers which layer."""

    def test_dimensions(self, plan):
        assert plan.L == 8
        assert plan.n_slots == 64
        assert plan.qmp_dims == {CONV: 8, "later.0.fc": 4, "later.3.fc": 2}

    def test_cap_relations(self, plan):
        assert plan.cap_relations == [SQUARE, POOL, REMAINDER, "later.1.relu", "later.2.avgpool", "later.4.argmax"]

    def test_model_relations(self, plan):
        assert plan.model_relations == ["later.0.fc", "later.3.fc"]
        assert plan.model_slots == 16

    def test_stage_lookup(self, plan):
        assert plan.stage("later.1.relu").kind == "relu"
        with pytest.raises(KeyError):
            plan.stage("later.9.relu")

    def test_output_labels(self, plan):
        assert plan.stage("later.0.fc").output_label(1, 3) == "later.0.fc.Y[3][1]"
        assert plan.stage("later.1.relu").output_label(1, 3) == "later.1.relu.y[7]"


# ---------------------------------------------------------------------------
# Prior layout
# ---------------------------------------------------------------------------

class TestPriorLayout:
    def test_conv_slots(self, plan):
        slots = plan.conv_slots
        assert len(slots) == 16
        assert len(set(slots)) == 16
        assert all(0 <= s < plan.n_slots for s in slots)

    def test_pool_windows(self, plan):
        windows = plan.pool_windows
        assert len(windows) == 4
        assert all(len(ins) == 4 for ins, _ in windows)
        inputs = sorted(s for ins, _ in windows for s in ins)
        assert inputs == sorted(plan.conv_slots)

    def test_pooled_and_seam_slots(self, plan):
        assert plan.pooled_dim == 1
        assert [slot for _, slot in plan.pool_windows] == [0, 1, 8, 9]
        assert plan.seam_slot(1, 0) == 1
        assert plan.seam_slot(0, 1) == 8


# ---------------------------------------------------------------------------
# Circuits and labels
# ---------------------------------------------------------------------------

class TestCircuits:
    """Gadget circuits and their committed-variable labels."""

    def test_relu_size(self, plan):
        # 2 items x 4 features, 24-bit window
        assert plan.circuit("later.1.relu").r1cs.num_constraints == 8 * 26

    def test_prior_pool_is_unchecked(self, plan):
        circuit = plan.circuit(POOL)
        assert circuit.r1cs.num_constraints == 4
        assert circuit.r1cs.kinds[circuit.index_of("rem[0]")] == COMMITTED

    def test_remainders_are_range_checked(self, plan):
        circuit = plan.circuit(REMAINDER)
        # 2x2 windows: one 2-bit decomposition per remainder
        assert circuit.r1cs.num_constraints == 4 * 3
        assert sorted(circuit.r1cs.names[i] for i in circuit.r1cs.committed_indices) == sorted(plan.remainder_slots)
        assert circuit.r1cs.is_satisfied(circuit.solve({f"rem[{i}]": 3 for i in range(4)}))

    def test_remainder_at_window_area_is_unprovable(self, plan):
        # an output one too small leaves a remainder of w²
        with pytest.raises(ProverError):
            plan.circuit(REMAINDER).solve({"rem[0]": 4, "rem[1]": 0, "rem[2]": 0, "rem[3]": 0})

    def test_remainder_slots(self, plan):
        assert plan.remainder_slots == {"rem[0]": 0, "rem[1]": 1, "rem[2]": 8, "rem[3]": 9}
        with pytest.raises(ShapeError):
            plan.cap_labels(REMAINDER)

    def test_circuits_are_cached(self, plan):
        assert plan.circuit(SQUARE) is plan.circuit(SQUARE)
        assert plan.qap(SQUARE) is plan.qap(SQUARE)

    def test_matmul_is_not_a_gadget(self, plan):
        with pytest.raises(ShapeError):
            plan.circuit("later.0.fc")

    def test_every_committed_variable_is_labelled(self, plan):
        for rel in plan.cap_relations:
            r1cs = plan.circuit(rel).r1cs
            labels = plan.remainder_slots if rel == REMAINDER else plan.cap_labels(rel)
            committed = {r1cs.names[i] for i in r1cs.committed_indices}
            assert committed <= set(labels), rel

    def test_square_labels(self, plan):
        labels = plan.cap_labels(SQUARE)
        slot = plan.conv_slots[0]
        assert labels["x[0]"] == eval_label("Y1", slot)
        assert labels["y[0]"] == eval_label("Y2", slot)

    def test_later_labels_chain(self, plan):
        relu = plan.cap_labels("later.1.relu")
        pool = plan.cap_labels("later.2.avgpool")
        argmax = plan.cap_labels("later.4.argmax")
        assert relu["x[0]"] == "later.0.fc.Y[0][0]"
        assert pool["x[1][3]"] == relu["y[7]"]
        assert argmax["x[1][1]"] == "later.3.fc.Y[1][1]"

    def test_public_inputs(self, plan):
        assert plan.public_inputs("later.4.argmax", [1, 0]) == [1, 0]
        assert plan.public_inputs("later.1.relu", [1, 0]) == []
        assert plan.public_inputs(SQUARE, [1, 0]) == []
        assert plan.public_inputs(REMAINDER, [1, 0]) == []


class TestEdges:
    def test_edge_list(self, plan):
        names = plan.edge_names
        assert len(names) == 14
        assert names[:4] == [
            edge_name(STEP1, CONV),
            edge_name(CONV, SQUARE),
            edge_name(SQUARE, POOL),
            edge_name(STEP1, REMAINDER),
        ]
        assert edge_name(MODEL, "later.0.fc") in names
        assert edge_name(STEP1, "later.0.fc") in names
        assert names[10] == "later.3.fc--later.4.argmax"
        assert names[-3:] == [edge_name(rel, SLOTS) for rel in (CONV, "later.0.fc", "later.3.fc")]

    def test_edge_name(self):
        assert edge_name("a", "b") == "a--b"

    def test_remainder_edge_reads_one_proof(self, plan):
        assert required_proofs(plan, STEP1, REMAINDER) == [REMAINDER]

    def test_slot_edges_read_one_proof(self, plan):
        assert required_proofs(plan, "later.0.fc", SLOTS) == ["later.0.fc"]

    def test_slot_labels(self, plan):
        label = slot_labeller("later.0.fc")
        assert label("W", 1, 2) == qmp_label("later.0.fc", "W", 1, 2) == "later.0.fc.W[1][2]"
        assert label("Y", 3, 1) == plan.stage("later.0.fc").output_label(1, 3)
