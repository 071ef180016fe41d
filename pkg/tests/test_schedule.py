import random

import pytest

from remat.lattice import all_lower_sets
from remat.schedule import (
    BackwardCompute,
    ForwardCompute,
    Free,
    ScheduleError,
    SimulationError,
    ValueRef,
    build_schedule,
    liveness_pass,
    schedule_from_text,
    schedule_to_text,
    simulate,
    vanilla_schedule,
)
from remat.strategy import make_sequence, overhead, peak_memory

from conftest import chain_graph, mask_for, random_graph
from test_strategy import random_sequence


def test_single_segment_schedule_shape(chain3):
    seq = make_sequence(chain3, [chain3.full_mask])
    sched = build_schedule(chain3, seq)
    # forward all three, drop them all, recompute all, backprop in reverse
    kinds = [type(i).__name__ for i in sched]
    assert kinds[:3] == ["ForwardCompute"] * 3
    assert kinds[3:6] == ["Free"] * 3
    assert kinds[6:9] == ["ForwardCompute"] * 3
    assert [i.node for i in sched[9:12]] == [2, 1, 0]
    report = simulate(chain3, sched)
    assert report.peak_live_memory == 2 * chain3.total_memory
    assert report.recompute_cost == 3


def test_checkpointed_chain_recomputes_only_the_sink(chain3):
    a = mask_for(chain3, ["n0"])
    ab = mask_for(chain3, ["n0", "n1"])
    seq = make_sequence(chain3, [a, ab, chain3.full_mask])
    report = simulate(chain3, build_schedule(chain3, seq))
    assert report.recompute_cost == overhead(chain3, seq) == 1
    assert report.peak_live_memory == peak_memory(chain3, seq).peak_memory


def test_diamond_schedule_matches_analytic(diamond):
    a = mask_for(diamond, ["a"])
    seq = make_sequence(diamond, [a, diamond.full_mask])
    report = simulate(diamond, build_schedule(diamond, seq))
    assert report.recompute_cost == 3
    assert report.peak_live_memory == 7
    assert report.backward_count == 4


def test_schedule_ends_empty(diamond):
    seq = make_sequence(diamond, [mask_for(diamond, ["a"]), diamond.full_mask])
    report = simulate(diamond, build_schedule(diamond, seq))
    assert report.trace[-1] == 0


def test_vanilla_chain_peak(chain3):
    report = simulate(chain3, vanilla_schedule(chain3))
    assert report.peak_live_memory == 5
    assert report.recompute_cost == 0
    assert report.backward_count == 3


def test_vanilla_single_node():
    g = chain_graph(1)
    report = simulate(g, vanilla_schedule(g))
    assert report.peak_live_memory == 2
    assert report.trace[-1] == 0


def test_read_after_free_is_an_error(chain3):
    sched = [
        ForwardCompute(0),
        Free(ValueRef("fwd", 0)),
        ForwardCompute(1),
    ]
    with pytest.raises(SimulationError, match="reads non-live value fwd:n0"):
        simulate(chain3, sched)


def test_double_free_is_an_error(chain3):
    sched = [ForwardCompute(0), Free(ValueRef("fwd", 0)), Free(ValueRef("fwd", 0))]
    with pytest.raises(SimulationError, match="double free"):
        simulate(chain3, sched)


def test_backward_needs_consumer_gradients(chain3):
    sched = [ForwardCompute(0), ForwardCompute(1), ForwardCompute(2), BackwardCompute(1)]
    with pytest.raises(SimulationError, match="before gradient grad:n2"):
        simulate(chain3, sched)


def test_duplicate_backward_is_an_error():
    g = chain_graph(1)
    sched = [ForwardCompute(0), BackwardCompute(0), BackwardCompute(0)]
    with pytest.raises(SimulationError, match="duplicate backward"):
        simulate(g, sched)


def test_forward_more_than_twice_is_an_error():
    g = chain_graph(1)
    sched = [
        ForwardCompute(0),
        Free(ValueRef("fwd", 0)),
        ForwardCompute(0),
        Free(ValueRef("fwd", 0)),
        ForwardCompute(0),
    ]
    with pytest.raises(SimulationError, match="computed more than twice"):
        simulate(g, sched)


def test_liveness_moves_late_free_earlier():
    g = chain_graph(2)
    sched = [
        ForwardCompute(0),
        ForwardCompute(1),
        BackwardCompute(1),
        BackwardCompute(0),
        Free(ValueRef("fwd", 0)),
        Free(ValueRef("fwd", 1)),
        Free(ValueRef("grad", 0)),
        Free(ValueRef("grad", 1)),
    ]
    passed = liveness_pass(g, sched)
    # fwd:n1's last reader is B(n1); its free moves before B(n0)
    pos_b0 = passed.index(BackwardCompute(0))
    pos_free_f1 = passed.index(Free(ValueRef("fwd", 1)))
    assert pos_free_f1 < pos_b0
    assert simulate(g, passed).peak_live_memory <= simulate(g, sched).peak_live_memory


def test_liveness_pass_is_idempotent(diamond):
    seq = make_sequence(diamond, [mask_for(diamond, ["a"]), diamond.full_mask])
    once = liveness_pass(diamond, build_schedule(diamond, seq))
    assert liveness_pass(diamond, once) == once


def test_liveness_dominance_and_order_preservation():
    rng = random.Random(41)
    for _ in range(40):
        g = random_graph(rng, rng.randint(1, 8), rng.random())
        seq = random_sequence(rng, g, all_lower_sets(g))
        sched = build_schedule(g, seq)
        passed = liveness_pass(g, sched)
        before = simulate(g, sched)
        after = simulate(g, passed)
        assert after.peak_live_memory <= before.peak_live_memory
        assert after.recompute_cost == before.recompute_cost
        assert [i for i in passed if isinstance(i, BackwardCompute)] == [
            i for i in sched if isinstance(i, BackwardCompute)
        ]


def test_simulated_peak_equals_analytic_on_random_sequences():
    rng = random.Random(42)
    for _ in range(60):
        g = random_graph(rng, rng.randint(1, 8), rng.random())
        seq = random_sequence(rng, g, all_lower_sets(g))
        report = simulate(g, build_schedule(g, seq))
        ev = peak_memory(g, seq)
        assert report.peak_live_memory == ev.peak_memory
        assert report.recompute_cost == ev.overhead
        # a node's forward and gradient coexist during its backward
        assert report.peak_live_memory >= 2 * max(g.memory_costs)
        assert report.recompute_cost <= g.total_time


def test_schedule_text_round_trip(chain3):
    seq = make_sequence(chain3, [mask_for(chain3, ["n0"]), chain3.full_mask])
    sched = build_schedule(chain3, seq)
    text = schedule_to_text(chain3, sched)
    assert text.splitlines()[0] == "F n0"
    assert schedule_from_text(chain3, text) == sched


def test_schedule_text_rejects_unknown_id(chain3):
    with pytest.raises(ScheduleError, match="unknown node id"):
        schedule_from_text(chain3, "F zzz\n")
    with pytest.raises(ScheduleError, match="cannot parse"):
        schedule_from_text(chain3, "COMPUTE n0\n")
