"""Benchmark topology generators and the segment-splitting baseline.

The generators produce structural archetypes of common network families
(plain chains, chains with skips, residual blocks, dense blocks, U-shaped
encoder/decoders, seeded random DAGs), not faithful layer-by-layer
reproductions.  The baseline planner splits the graph at articulation
points into roughly sqrt(n)-sized segments, which is the classic
segment-recomputation recipe; graphs without articulation points fall back
to a single segment.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import isqrt

from .graph import ComputationGraph, NodeSet, ancestors_closure, bits, graph_from_document
from .planner import PlanResult, SearchStats
from .strategy import make_sequence, peak_memory

FAMILIES = ("chain", "skip-chain", "resnet-like", "densenet-like", "unet-like", "random-dag")
COST_MODELS = ("uniform", "conv-weighted")


@dataclass(frozen=True)
class TopologySpec:
    family: str
    depth: int
    skip: int = 2
    seed: int = 0
    edge_prob: float = 0.5
    cost_model: str = "uniform"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.cost_model not in COST_MODELS:
            raise ValueError(f"unknown cost model {self.cost_model!r}")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.family == "skip-chain" and self.skip < 2:
            raise ValueError("skip distance must be at least 2")


def _chain(depth: int):
    nodes = [(f"v{i}", "conv" if i % 2 == 0 else "other", 1) for i in range(depth)]
    edges = [(f"v{i}", f"v{i + 1}") for i in range(depth - 1)]
    return nodes, edges


def _skip_chain(depth: int, skip: int):
    nodes, edges = _chain(depth)
    edges += [(f"v{i}", f"v{i + skip}") for i in range(depth - skip)]
    return nodes, edges


def _resnet_like(blocks: int):
    # stem followed by residual blocks: two convs plus an additive skip node
    nodes = [("stem", "conv", 2)]
    edges = []
    prev = "stem"
    for b in range(blocks):
        c1, c2, add = f"b{b}c1", f"b{b}c2", f"b{b}add"
        nodes += [(c1, "conv", 2), (c2, "conv", 2), (add, "other", 2)]
        edges += [(prev, c1), (c1, c2), (c2, add), (prev, add)]
        prev = add
    return nodes, edges


def _densenet_like(depth: int):
    # one dense block: every layer feeds every later layer
    nodes = [(f"d{i}", "conv", 1) for i in range(depth)]
    edges = [(f"d{j}", f"d{i}") for i in range(depth) for j in range(i)]
    return nodes, edges


def _unet_like(depth: int):
    # encoder chain down, decoder chain up, long skips between mirror levels;
    # widths double toward the top of the U
    nodes = [(f"e{l}", "conv", 2 ** (depth - l)) for l in range(depth + 1)]
    nodes += [(f"u{l}", "conv", 2 ** (depth - l)) for l in reversed(range(depth))]
    edges = [(f"e{l}", f"e{l + 1}") for l in range(depth)]
    edges.append((f"e{depth}", f"u{depth - 1}"))
    edges += [(f"u{l + 1}", f"u{l}") for l in range(depth - 1)]
    edges += [(f"e{l}", f"u{l}") for l in range(depth)]
    return nodes, edges


def _random_dag(depth: int, seed: int, edge_prob: float):
    rng = random.Random(seed)
    edges = [
        (f"r{i}", f"r{j}")
        for i in range(depth)
        for j in range(i + 1, depth)
        if rng.random() < edge_prob
    ]
    nodes = [(f"r{i}", "conv" if rng.random() < 0.3 else "other", 1) for i in range(depth)]
    return nodes, edges


def generate_document(spec: TopologySpec) -> dict:
    """Graph document for a topology spec; deterministic for a fixed seed."""
    if spec.family == "chain":
        nodes, edges = _chain(spec.depth)
    elif spec.family == "skip-chain":
        nodes, edges = _skip_chain(spec.depth, spec.skip)
    elif spec.family == "resnet-like":
        nodes, edges = _resnet_like(spec.depth)
    elif spec.family == "densenet-like":
        nodes, edges = _densenet_like(spec.depth)
    elif spec.family == "unet-like":
        nodes, edges = _unet_like(spec.depth)
    else:
        nodes, edges = _random_dag(spec.depth, spec.seed, spec.edge_prob)

    doc_nodes = []
    for nid, kind, width in nodes:
        entry: dict = {"id": nid, "kind": kind}
        if spec.cost_model == "uniform":
            entry["compute_cost"] = 1
            entry["memory_cost"] = 1
        else:
            # compute cost left implicit: the loader charges 10 per conv
            # node and 1 otherwise; memory follows the layer width
            entry["memory_cost"] = width
        doc_nodes.append(entry)
    return {"nodes": doc_nodes, "edges": [list(e) for e in edges]}


def generate(spec: TopologySpec) -> ComputationGraph:
    """Generate and validate a benchmark graph."""
    return graph_from_document(generate_document(spec))


def articulation_points(g: ComputationGraph) -> list[int]:
    """Nodes whose removal disconnects the underlying undirected graph."""
    n = g.n
    adj = [sorted(bits(g.preds[v] | g.succs[v])) for v in range(n)]
    visited = [False] * n
    disc = [0] * n
    low = [0] * n
    result: set[int] = set()
    timer = 0
    for root in range(n):
        if visited[root]:
            continue
        visited[root] = True
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        stack: list[tuple[int, int, int]] = [(root, -1, 0)]
        while stack:
            v, parent, child_pos = stack[-1]
            advanced = False
            while child_pos < len(adj[v]):
                w = adj[v][child_pos]
                child_pos += 1
                if w == parent:
                    continue
                if visited[w]:
                    low[v] = min(low[v], disc[w])
                else:
                    visited[w] = True
                    disc[w] = low[w] = timer
                    timer += 1
                    stack[-1] = (v, parent, child_pos)
                    stack.append((w, v, 0))
                    advanced = True
                    break
            if advanced:
                continue
            stack.pop()
            if stack:
                pv = stack[-1][0]
                low[pv] = min(low[pv], low[v])
                if pv == root:
                    root_children += 1
                elif low[v] >= disc[pv]:
                    result.add(pv)
        if root_children > 1:
            result.add(root)
    return sorted(result)


def chen_baseline_plan(g: ComputationGraph, budget: int | None = None) -> PlanResult:
    """Segment-splitting baseline evaluated with the same plan machinery.

    Split candidates are the articulation points in topological order,
    filtered to those whose ancestor closures form a strictly increasing
    chain.  Cuts are placed greedily at the first candidate that lets the
    running segment reach sqrt(n) nodes, aiming at sqrt(n) segments of
    length sqrt(n).  With no candidates the plan degenerates to the single
    segment [V].  With a budget, the plan is infeasible if its peak exceeds
    it.
    """
    points = articulation_points(g)
    kept: list[NodeSet] = []
    current = 0
    for v in points:
        closure = ancestors_closure(g, v)
        if closure != g.full_mask and closure != current and current & ~closure == 0:
            kept.append(closure)
            current = closure
    target = max(1, isqrt(g.n))
    chain: list[NodeSet] = []
    cut_size = 0
    for closure in kept:
        if closure.bit_count() - cut_size >= target:
            chain.append(closure)
            cut_size = closure.bit_count()
    chain.append(g.full_mask)

    stats = SearchStats(states_visited=len(points))
    seq = make_sequence(g, chain)
    evaluation = peak_memory(g, seq)
    if budget is not None and evaluation.peak_memory > budget:
        return PlanResult(False, None, None, None, budget, "chen", "baseline", stats)
    effective_budget = budget if budget is not None else evaluation.peak_memory
    return PlanResult(
        True, seq, evaluation, evaluation.overhead, effective_budget, "chen", "baseline", stats
    )
