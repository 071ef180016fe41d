import json

import pytest

from remat.benchmarks import (
    TopologySpec,
    articulation_points,
    chen_baseline_plan,
    generate,
    generate_document,
)
from remat.graph import bits
from remat.planner import PlanRequest, dp_plan, min_feasible_budget

from conftest import chain_graph

ARCHETYPES = (
    TopologySpec("chain", 9),
    TopologySpec("skip-chain", 8),
    TopologySpec("resnet-like", 3, cost_model="conv-weighted"),
    TopologySpec("densenet-like", 5, cost_model="conv-weighted"),
    TopologySpec("unet-like", 3, cost_model="conv-weighted"),
    TopologySpec("random-dag", 8, seed=7, edge_prob=0.4),
)


def test_chain_generation():
    g = generate(TopologySpec("chain", 4))
    assert g.n == 4
    assert [n.compute_cost for n in g.nodes] == [1, 1, 1, 1]
    assert [n.memory_cost for n in g.nodes] == [1, 1, 1, 1]
    assert [(u, v) for u in range(4) for v in bits(g.succs[u])] == [(0, 1), (1, 2), (2, 3)]


def test_skip_chain_generation():
    g = generate(TopologySpec("skip-chain", 4, skip=2))
    edges = {(g.id_of(u), g.id_of(v)) for u in range(g.n) for v in bits(g.succs[u])}
    assert edges == {("v0", "v1"), ("v1", "v2"), ("v2", "v3"), ("v0", "v2"), ("v1", "v3")}


def test_densenet_block_is_complete():
    g = generate(TopologySpec("densenet-like", 4))
    assert g.n == 4
    assert sum(g.preds[v].bit_count() for v in range(4)) == 6


def test_unet_has_mirror_skips():
    g = generate(TopologySpec("unet-like", 2, cost_model="conv-weighted"))
    assert g.n == 5
    edges = {(g.id_of(u), g.id_of(v)) for u in range(g.n) for v in bits(g.succs[u])}
    assert ("e0", "u0") in edges and ("e1", "u1") in edges
    # widths double toward the top of the U
    assert g.nodes[g.index_of["e0"]].memory_cost == 4
    assert g.nodes[g.index_of["e2"]].memory_cost == 1


def test_conv_weighted_costs():
    g = generate(TopologySpec("resnet-like", 2, cost_model="conv-weighted"))
    kinds = {n.id: n for n in g.nodes}
    assert kinds["b0c1"].compute_cost == 10
    assert kinds["b0add"].compute_cost == 1


def test_generation_is_deterministic():
    spec = TopologySpec("random-dag", 10, seed=3, edge_prob=0.5)
    a = json.dumps(generate_document(spec), indent=2)
    b = json.dumps(generate_document(spec), indent=2)
    assert a == b
    c = json.dumps(generate_document(TopologySpec("random-dag", 10, seed=4, edge_prob=0.5)))
    assert c != json.dumps(generate_document(spec))


def test_degenerate_specs_rejected():
    with pytest.raises(ValueError, match="depth"):
        TopologySpec("chain", 0)
    with pytest.raises(ValueError, match="unknown family"):
        TopologySpec("mobius", 3)
    with pytest.raises(ValueError, match="cost model"):
        TopologySpec("chain", 3, cost_model="fancy")


def test_articulation_points_of_a_path():
    g = chain_graph(4)
    assert articulation_points(g) == [1, 2]  # interior nodes only


def test_articulation_points_dense_block_empty():
    g = generate(TopologySpec("densenet-like", 4))
    assert articulation_points(g) == []


def test_chen_chain9_three_segments():
    g = generate(TopologySpec("chain", 9))
    plan = chen_baseline_plan(g)
    assert plan.feasible
    assert [m.bit_count() for m in plan.sequence.chain] == [3, 6, 9]


def test_chen_dense_block_falls_back_to_single_segment():
    g = generate(TopologySpec("densenet-like", 4))
    plan = chen_baseline_plan(g)
    assert plan.sequence.chain == (g.full_mask,)
    assert plan.evaluation.peak_memory == 2 * g.total_memory


def test_chen_respects_budget():
    g = generate(TopologySpec("chain", 9))
    free = chen_baseline_plan(g)
    tight = chen_baseline_plan(g, budget=free.evaluation.peak_memory - 1)
    assert not tight.feasible
    ok = chen_baseline_plan(g, budget=free.evaluation.peak_memory)
    assert ok.feasible


@pytest.mark.parametrize("spec", ARCHETYPES, ids=lambda s: s.family)
def test_planners_never_lose_to_chen(spec):
    g = generate(spec)
    chen = chen_baseline_plan(g)
    budget = chen.evaluation.peak_memory
    for family in ("full", "pruned"):
        plan = dp_plan(PlanRequest(g, budget, family=family))
        assert plan.feasible
        assert plan.objective_value <= chen.evaluation.overhead


def test_chain_budget_grows_sublinearly():
    b16, _ = min_feasible_budget(chain_graph(16), "pruned")
    b64, _ = min_feasible_budget(chain_graph(64), "pruned")
    assert b64 <= 2.5 * b16
