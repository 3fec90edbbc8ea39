"""Age recursions, metric sums, and the vectorized network state."""

import numpy as np
import pytest

from tdfsa.core import (
    FrameDecision,
    MetricsAccumulator,
    Network,
    NodeState,
    accumulate_slot_metrics,
    advance_ap_age,
    advance_node_age,
    initial_ap_ages,
)


def make_node(x, y):
    return NodeState(node_id=0, x=x, y=y, has_update=y > x)


class TestNodeAge:
    def test_no_generation_adds_frame_length(self):
        frame = FrameDecision(threshold=1, frame_len=3, frame_start=100)
        out = advance_node_age(make_node(5, 20), set(), frame)
        assert out.x == 8

    def test_generation_in_last_slot_gives_age_one(self):
        frame = FrameDecision(threshold=1, frame_len=3, frame_start=100)
        out = advance_node_age(make_node(5, 20), {102}, frame)
        assert out.x == 1
        assert out.has_update

    def test_latest_generation_wins(self):
        frame = FrameDecision(threshold=1, frame_len=3, frame_start=100)
        out = advance_node_age(make_node(5, 20), {100, 101}, frame)
        assert out.x == 2

    def test_generation_outside_frame_rejected(self):
        frame = FrameDecision(threshold=1, frame_len=3, frame_start=100)
        with pytest.raises(ValueError):
            advance_node_age(make_node(5, 20), {103}, frame)
        with pytest.raises(ValueError):
            advance_node_age(make_node(5, 20), {99}, frame)


class TestApAge:
    def test_success_restarts_from_node_age(self):
        frame = FrameDecision(threshold=1, frame_len=3, frame_start=0)
        assert advance_ap_age(make_node(2, 9), True, frame).y == 5

    def test_failure_just_ages(self):
        frame = FrameDecision(threshold=1, frame_len=3, frame_start=0)
        assert advance_ap_age(make_node(2, 9), False, frame).y == 12

    def test_fresh_node_delivery_clears_gain(self):
        frame = FrameDecision(threshold=1, frame_len=1, frame_start=0)
        mid = advance_ap_age(make_node(1, 1), True, frame)
        assert mid.y == 2
        out = advance_node_age(mid, set(), frame)
        assert out.gain == 0
        assert not out.has_update


class TestMetrics:
    def test_single_slot_sums(self):
        acc = MetricsAccumulator()
        accumulate_slot_metrics(acc, [(4, 1)])
        assert acc.sum_gain == 3
        assert acc.sum_ap_age == 4

    def test_two_node_slot(self):
        acc = MetricsAccumulator()
        accumulate_slot_metrics(acc, [(4, 1), (7, 7)])
        assert acc.sum_gain == 3
        assert acc.sum_ap_age == 11

    def test_average_age_gain(self):
        acc = MetricsAccumulator()
        acc.slot_count = 10
        acc.sum_gain = 300
        assert acc.average_age_gain(10) == 3.0

    def test_order_independent_within_slot(self):
        rng = np.random.default_rng(5)
        pairs = [(int(y), int(x)) for x, y in zip(rng.integers(1, 50, 20), rng.integers(50, 99, 20))]
        a, b = MetricsAccumulator(), MetricsAccumulator()
        accumulate_slot_metrics(a, pairs)
        accumulate_slot_metrics(b, list(reversed(pairs)))
        assert (a.sum_gain, a.sum_ap_age) == (b.sum_gain, b.sum_ap_age)

    def test_counters_reject_negative(self):
        with pytest.raises(ValueError):
            MetricsAccumulator().add_frame(1, -1, 0, 0)


class TestNetworkVsScalarOps:
    """The vectorized frame advance must match the per-node recursions."""

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_frame_advance_matches_scalar_path(self, seed):
        rng = np.random.default_rng(seed)
        n, lam = 12, 0.35
        net = Network(n, initial_ap_ages(n, "ramp"))
        shadow = [NodeState.fresh(i, int(net.y[i])) for i in range(n)]
        mirror = np.random.default_rng(seed)

        for _ in range(40):
            w = int(rng.integers(1, 6))
            _ = mirror.integers(1, 6)
            frame = FrameDecision(threshold=1, frame_len=w, frame_start=net.slot)
            backlogged = net.backlogged_ids()
            slots = rng.integers(0, w, size=len(backlogged))
            _ = mirror.integers(0, w, size=len(backlogged))
            occupancy = np.bincount(slots, minlength=w)
            success = backlogged[occupancy[slots] == 1]

            ages = net.advance_frame(w, success, rng, lam)
            gen = mirror.random((n, w)) < lam

            expect_x_sum = 0
            expect_y_sum = 0
            success_set = set(int(i) for i in success)
            for i in range(n):
                node = shadow[i]
                gen_slots = {frame.frame_start + s for s in range(w) if gen[i, s]}
                # brute-force per-slot ages within the frame
                for s in range(w):
                    gens_before = [k for k in gen_slots if k < frame.frame_start + s]
                    if gens_before:
                        expect_x_sum += frame.frame_start + s - max(gens_before)
                    else:
                        expect_x_sum += node.x + s
                    expect_y_sum += node.y + s
                node = advance_ap_age(node, i in success_set, frame)
                node = advance_node_age(node, gen_slots, frame)
                shadow[i] = node

            assert ages.sum_x_slots == expect_x_sum
            assert ages.sum_y_slots == expect_y_sum
            assert np.array_equal(net.x, [s.x for s in shadow])
            assert np.array_equal(net.y, [s.y for s in shadow])
            assert (net.gains() >= 0).all()

    def test_ap_age_step_is_frame_len_or_reset(self):
        rng = np.random.default_rng(9)
        net = Network(8, initial_ap_ages(8, "ramp"))
        for _ in range(30):
            w = int(rng.integers(1, 5))
            y_before = net.y.copy()
            x_before = net.x.copy()
            backlogged = net.backlogged_ids()
            slots = rng.integers(0, w, size=len(backlogged))
            occupancy = np.bincount(slots, minlength=w)
            success = backlogged[occupancy[slots] == 1]
            net.advance_frame(w, success, rng, 0.4)
            step = net.y - y_before
            reset = x_before + w - y_before
            assert ((step == w) | (step == reset)).all()


class TestInitialAges:
    def test_ramp(self):
        assert initial_ap_ages(4, "ramp").tolist() == [1, 2, 3, 4]

    def test_uniform_default(self):
        assert initial_ap_ages(4, "uniform").tolist() == [4, 4, 4, 4]

    def test_explicit_list(self):
        assert initial_ap_ages(3, [5, 1, 2]).tolist() == [5, 1, 2]

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            initial_ap_ages(3, [0, 1, 2])
        with pytest.raises(ValueError):
            initial_ap_ages(3, "diagonal")


class TestValidation:
    def test_node_state_invariants(self):
        with pytest.raises(ValueError):
            NodeState(node_id=0, x=0, y=1, has_update=False)
        with pytest.raises(ValueError):
            NodeState(node_id=0, x=3, y=2, has_update=False)
        with pytest.raises(ValueError):
            NodeState(node_id=0, x=1, y=5, has_update=False)

    def test_frame_decision_invariants(self):
        with pytest.raises(ValueError):
            FrameDecision(threshold=0, frame_len=1)
        with pytest.raises(ValueError):
            FrameDecision(threshold=1, frame_len=0)
