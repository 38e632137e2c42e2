"""
Non-linear layer gadgets and the matmul baseline.

Covers:
  - constraint counts (relu, avgpool, matmul baseline)
  - witness values for square_act, relu, avgpool, argmax
  - the remainder range gadget
  - variable kinds (what is committed, public or private)
  - out-of-window inputs are refused
  - agreement with the plaintext layers
"""

import itertools
import random

import pytest

from models.cnn import argmax_label
from snark.algebra import P
from snark.gadgets import (
    gadget_argmax,
    gadget_avgpool,
    gadget_matmul_baseline,
    gadget_relu,
    gadget_remainder,
    gadget_square_act,
    pool_remainder_bits,
)
from snark.r1cs import COMMITTED, PRIVATE, PUBLIC
from utils.errors import ProverError, ShapeError


def kind_of(circuit, name):
    return circuit.r1cs.kinds[circuit.index_of(name)]


# ---------------------------------------------------------------------------
# square_act / relu
# ---------------------------------------------------------------------------

class TestSquareAct:
    def test_values(self):
        circuit = gadget_square_act(2)
        named = circuit.named(circuit.solve({"x[0]": 3, "x[1]": -2}))
        assert named["y[0]"] == 12
        assert named["y[1]"] == 2
        assert circuit.r1cs.num_constraints == 2


class TestRelu:
    """max(x, 0) in a two's-complement window."""

    def test_constraint_count(self):
        assert gadget_relu(1, 16).r1cs.num_constraints == 18
        assert gadget_relu(3, 8).r1cs.num_constraints == 30

    def test_values(self):
        circuit = gadget_relu(3, 16)
        named = circuit.named(circuit.solve({"x[0]": -5, "x[1]": 0, "x[2]": 7}))
        assert [named[f"y[{i}]"] for i in range(3)] == [0, 0, 7]

    def test_window_edges(self):
        circuit = gadget_relu(2, 8)
        named = circuit.named(circuit.solve({"x[0]": -128, "x[1]": 127}))
        assert named["y[0]"] == 0
        assert named["y[1]"] == 127

    def test_out_of_window(self):
        with pytest.raises(ProverError):
            gadget_relu(1, 8).solve({"x[0]": 128})

    def test_inputs_and_outputs_committed(self):
        circuit = gadget_relu(1, 8)
        assert kind_of(circuit, "x[0]") == COMMITTED
        assert kind_of(circuit, "y[0]") == COMMITTED

    def test_needs_two_bits(self):
        with pytest.raises(ShapeError):
            gadget_relu(1, 1)


# ---------------------------------------------------------------------------
# avgpool
# ---------------------------------------------------------------------------

class TestAvgPool:
    """Quotient and remainder of window sums."""

    def test_constraint_count(self):
        # 1 pool relation, 3 for the 2-bit remainder, 17 for the 16-bit y window
        assert gadget_avgpool(1, 2, 16).r1cs.num_constraints == 21

    def test_values(self):
        circuit = gadget_avgpool(1, 2, 16)
        args = {f"x[0][{t}]": v for t, v in enumerate([1, 2, 3, 5])}
        named = circuit.named(circuit.solve(args))
        assert named["y[0]"] == 2
        assert named["rem[0]"] == 3

    def test_negative_sum_floors(self):
        circuit = gadget_avgpool(1, 2, 16)
        args = {f"x[0][{t}]": v for t, v in enumerate([-1, 0, 0, 0])}
        named = circuit.named(circuit.solve(args))
        assert named["y[0]"] == P - 1
        assert named["rem[0]"] == 3

    def test_remainder_range_is_enforced(self):
        circuit = gadget_avgpool(1, 2, 16)
        args = {f"x[0][{t}]": v for t, v in enumerate([1, 2, 3, 5])}
        with pytest.raises(ProverError):
            circuit.solve({**args, "y[0]": 1, "rem[0]": 7})

    def test_non_power_of_two_area(self):
        circuit = gadget_avgpool(1, 3, 16)
        assert pool_remainder_bits(3) == 4
        args = {f"x[0][{t}]": 1 for t in range(9)}
        named = circuit.named(circuit.solve(args))
        assert (named["y[0]"], named["rem[0]"]) == (1, 0)
        with pytest.raises(ProverError):
            circuit.solve({**args, "y[0]": 0, "rem[0]": 9})

    def test_kinds(self):
        checked = gadget_avgpool(1, 2, 16)
        assert kind_of(checked, "x[0][3]") == COMMITTED
        assert kind_of(checked, "y[0]") == COMMITTED
        assert kind_of(checked, "rem[0]") == PRIVATE
        unchecked = gadget_avgpool(2, 2, range_check=False)
        assert kind_of(unchecked, "rem[1]") == COMMITTED
        assert unchecked.r1cs.num_constraints == 2

    def test_unchecked_accepts_field_values(self):
        circuit = gadget_avgpool(1, 2, range_check=False)
        args = {f"x[0][{t}]": 10 ** 30 for t in range(4)}
        args.update({"y[0]": 10 ** 30, "rem[0]": 0})
        circuit.solve(args)

    def test_invalid_sizes(self):
        with pytest.raises(ShapeError):
            gadget_avgpool(0, 2)
        with pytest.raises(ShapeError):
            gadget_avgpool(1, 0)


class TestRemainder:
    """Committed remainders bounded by the window area."""

    @pytest.mark.parametrize("window", [1, 2, 3])
    def test_every_value_in_range(self, window):
        circuit = gadget_remainder(1, window)
        for rem in range(window * window):
            circuit.solve({"rem[0]": rem})
        for rem in (window * window, -1, P - 1):
            with pytest.raises(ProverError):
                circuit.solve({"rem[0]": rem})

    def test_kinds(self):
        circuit = gadget_remainder(2, 2)
        assert kind_of(circuit, "rem[1]") == COMMITTED
        assert circuit.r1cs.num_constraints == 2 * (pool_remainder_bits(2) + 1)

    def test_invalid_sizes(self):
        with pytest.raises(ShapeError):
            gadget_remainder(0, 2)
        with pytest.raises(ShapeError):
            gadget_remainder(1, 0)


# ---------------------------------------------------------------------------
# argmax / matmul baseline
# ---------------------------------------------------------------------------

class TestArgmax:
    """Public label from committed scores."""

    def test_lowest_index_wins_ties(self):
        circuit = gadget_argmax(3, 8)
        named = circuit.named(circuit.solve({"x[0][0]": 3, "x[0][1]": 7, "x[0][2]": 7}))
        assert named["idx[0]"] == 1

    def test_negative_scores(self):
        circuit = gadget_argmax(3, 8)
        named = circuit.named(circuit.solve({"x[0][0]": -4, "x[0][1]": -2, "x[0][2]": -9}))
        assert named["idx[0]"] == 1

    def test_several_items(self):
        circuit = gadget_argmax(2, 8, items=2)
        args = {"x[0][0]": 1, "x[0][1]": 0, "x[1][0]": -3, "x[1][1]": 5}
        named = circuit.named(circuit.solve(args))
        assert (named["idx[0]"], named["idx[1]"]) == (0, 1)

    def test_kinds(self):
        circuit = gadget_argmax(2, 8)
        assert kind_of(circuit, "idx[0]") == PUBLIC
        assert kind_of(circuit, "x[0][1]") == COMMITTED

    def test_out_of_window(self):
        with pytest.raises(ProverError):
            gadget_argmax(2, 8).solve({"x[0][0]": 200, "x[0][1]": 0})


class TestMatmulBaseline:
    def test_cubic_constraint_count(self):
        assert gadget_matmul_baseline(2).r1cs.num_constraints == 8
        assert gadget_matmul_baseline(3).r1cs.num_constraints == 27

    def test_values(self):
        circuit = gadget_matmul_baseline(2)
        args = {}
        for i, row in enumerate([[1, 2], [3, 4]]):
            for j, v in enumerate(row):
                args[f"W[{i}][{j}]"] = v
        for i, row in enumerate([[5, 6], [7, 8]]):
            for j, v in enumerate(row):
                args[f"X[{i}][{j}]"] = v
        named = circuit.named(circuit.solve(args))
        assert [[named[f"Y[{i}][{j}]"] for j in range(2)] for i in range(2)] == [[19, 22], [43, 50]]


# ---------------------------------------------------------------------------
# Agreement with the plaintext layers
# ---------------------------------------------------------------------------

class TestOracleAgreement:
    """Exhaustive over small windows, randomized for square_act."""

    def test_relu_exhaustive(self):
        circuit = gadget_relu(1, 6)
        for x in range(-32, 32):
            named = circuit.named(circuit.solve({"x[0]": x}))
            assert named["y[0]"] == max(x, 0)

    def test_avgpool_exhaustive(self):
        circuit = gadget_avgpool(1, 2, 8)
        for values in itertools.product(range(-2, 3), repeat=4):
            named = circuit.named(circuit.solve({f"x[0][{t}]": v for t, v in enumerate(values)}))
            q, r = divmod(sum(values), 4)
            assert (named["y[0]"], named["rem[0]"]) == (q % P, r)

    def test_argmax_exhaustive(self):
        circuit = gadget_argmax(3, 6)
        for values in itertools.product(range(-3, 4), repeat=3):
            named = circuit.named(circuit.solve({f"x[0][{i}]": v for i, v in enumerate(values)}))
            assert named["idx[0]"] == argmax_label(list(values))

    def test_square_act_randomized(self, trials):
        circuit = gadget_square_act(1)
        rng = random.Random(8)
        for _ in range(trials(200)):
            x = rng.randrange(-10 ** 6, 10 ** 6)
            named = circuit.named(circuit.solve({"x[0]": x}))
            assert named["y[0]"] == (x * x + x) % P
