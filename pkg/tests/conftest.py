import random

import pytest

from remat.graph import ComputationGraph, bits, graph_from_document


def build_graph(nodes, edges):
    """Graph from [(id, kind, T, M), ...] plus [(src, dst), ...]."""
    doc = {
        "nodes": [
            {"id": nid, "kind": kind, "compute_cost": t, "memory_cost": m}
            for nid, kind, t, m in nodes
        ],
        "edges": [list(e) for e in edges],
    }
    return graph_from_document(doc)


def chain_graph(n, t=1, m=1):
    ids = [f"n{i}" for i in range(n)]
    return build_graph(
        [(nid, "other", t, m) for nid in ids],
        [(ids[i], ids[i + 1]) for i in range(n - 1)],
    )


def diamond_graph(t=1, m=1, kinds=("other", "other", "other", "other")):
    # a -> b, a -> c, b -> d, c -> d
    return build_graph(
        [("a", kinds[0], t, m), ("b", kinds[1], t, m), ("c", kinds[2], t, m), ("d", kinds[3], t, m)],
        [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
    )


def random_graph(rng: random.Random, n: int, p: float, cost_lo=1, cost_hi=5):
    nodes = [
        (f"r{i}", "other", rng.randint(cost_lo, cost_hi), rng.randint(cost_lo, cost_hi))
        for i in range(n)
    ]
    edges = [
        (f"r{i}", f"r{j}")
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return build_graph(nodes, edges)


def edge_pairs(g: ComputationGraph):
    return [(u, v) for u in range(g.n) for v in bits(g.succs[u])]


def brute_force_lower_sets(g: ComputationGraph):
    """All lower sets straight from the definition: no edge from outside in."""
    edges = edge_pairs(g)
    found = set()
    for mask in range(1 << g.n):
        if all(not (mask >> v & 1) or (mask >> u & 1) for u, v in edges):
            found.add(mask)
    return found


def mask_for(g: ComputationGraph, ids):
    out = 0
    for nid in ids:
        out |= 1 << g.index_of[nid]
    return out


@pytest.fixture
def chain3():
    return chain_graph(3)


@pytest.fixture
def diamond():
    return diamond_graph()
