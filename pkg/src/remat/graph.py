"""Computation graphs for recomputation planning.

Nodes are the intermediate values of a network's forward pass; each carries
an integer compute cost and an integer memory cost in abstract units.  Node
sets are plain ints used as bitmasks over the dense node indices, which
keeps the set algebra (union, difference, predecessor checks) cheap even
for graphs with a few hundred nodes.

A graph is immutable after construction and safe to share across concurrent
planning jobs; every function in this module is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

NodeSet = int

# Aggregate costs beyond this bound are rejected at load time so that all
# downstream arithmetic stays within a machine-word-safe range.
MAX_TOTAL_COST = 2**63 - 1

DEFAULT_LATTICE_CAP = 2_000_000


class GraphError(ValueError):
    """Malformed graph document or invalid graph structure."""


def bits(mask: NodeSet) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(indices: Iterable[int]) -> NodeSet:
    """Build a node set from an iterable of node indices."""
    m = 0
    for i in indices:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class NodeInfo:
    """A single intermediate value: its costs plus bookkeeping tags."""

    id: str
    kind: str
    compute_cost: int
    memory_cost: int
    label: str = ""


@dataclass(frozen=True)
class ComputationGraph:
    """Immutable DAG of intermediate values, indexed in topological order.

    ``preds[v]`` / ``succs[v]`` are bitmasks of the direct predecessors and
    successors of node ``v``.  Indices are assigned from a deterministic
    reverse DFS post-order over the source document, so predecessors always
    have smaller indices than their successors.
    """

    nodes: tuple[NodeInfo, ...]
    preds: tuple[NodeSet, ...]
    succs: tuple[NodeSet, ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def full_mask(self) -> NodeSet:
        return (1 << self.n) - 1

    @cached_property
    def compute_costs(self) -> tuple[int, ...]:
        return tuple(node.compute_cost for node in self.nodes)

    @cached_property
    def memory_costs(self) -> tuple[int, ...]:
        return tuple(node.memory_cost for node in self.nodes)

    @cached_property
    def total_time(self) -> int:
        return sum(self.compute_costs)

    @cached_property
    def total_memory(self) -> int:
        return sum(self.memory_costs)

    @cached_property
    def closures(self) -> tuple[NodeSet, ...]:
        """Smallest lower set containing each node (node plus all ancestors)."""
        out: list[NodeSet] = []
        for v in range(self.n):
            c = 1 << v
            for w in bits(self.preds[v]):
                c |= out[w]  # preds have smaller indices
            out.append(c)
        return tuple(out)

    @cached_property
    def index_of(self) -> dict[str, int]:
        return {node.id: v for v, node in enumerate(self.nodes)}

    def id_of(self, v: int) -> str:
        return self.nodes[v].id


def time_of(g: ComputationGraph, s: NodeSet) -> int:
    costs = g.compute_costs
    return sum(costs[v] for v in bits(s))


def memory_of(g: ComputationGraph, s: NodeSet) -> int:
    costs = g.memory_costs
    return sum(costs[v] for v in bits(s))


def aggregate_costs(g: ComputationGraph, s: NodeSet) -> tuple[int, int]:
    """Total (compute, memory) cost of a node set; (0, 0) for the empty set."""
    return time_of(g, s), memory_of(g, s)


def delta_plus(g: ComputationGraph, s: NodeSet) -> NodeSet:
    """Nodes receiving an edge from ``s``.  Not necessarily disjoint from ``s``."""
    out = 0
    for v in bits(s):
        out |= g.succs[v]
    return out


def delta_minus(g: ComputationGraph, s: NodeSet) -> NodeSet:
    """Nodes sending an edge into ``s``.  Not necessarily disjoint from ``s``."""
    out = 0
    for v in bits(s):
        out |= g.preds[v]
    return out


def neighborhoods(g: ComputationGraph, s: NodeSet) -> tuple[NodeSet, NodeSet]:
    return delta_plus(g, s), delta_minus(g, s)


def is_lower_set(g: ComputationGraph, s: NodeSet) -> bool:
    """True iff no edge enters ``s`` from outside, i.e. preds(s) ⊆ s."""
    return delta_minus(g, s) & ~s == 0


def boundary(g: ComputationGraph, lower: NodeSet) -> NodeSet:
    """Nodes of a lower set that feed at least one node outside it."""
    outside = g.full_mask & ~lower
    out = 0
    for v in bits(lower):
        if g.succs[v] & outside:
            out |= 1 << v
    return out


def ancestors_closure(g: ComputationGraph, v: int) -> NodeSet:
    """The unique smallest lower set containing node ``v``."""
    return g.closures[v]


def _default_compute_cost(kind: str) -> int:
    # convolution-style nodes are an order of magnitude heavier than the rest
    return 10 if kind == "conv" else 1


def _as_cost(value: object, what: str, node_id: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise GraphError(f"node {node_id!r}: {what} must be an integer, got {value!r}")
    if value < minimum:
        raise GraphError(f"node {node_id!r}: {what} must be >= {minimum}, got {value}")
    return value


def graph_from_document(doc: object) -> ComputationGraph:
    """Build a validated graph from a parsed graph document.

    Input nodes are stripped together with their incident edges; the
    remaining intermediate nodes are re-indexed by a deterministic
    topological order (reverse DFS post-order, ties broken by document
    order).
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise GraphError("document must be an object with a 'nodes' list")

    raw_nodes = doc["nodes"]
    raw_edges = doc.get("edges", [])
    if not isinstance(raw_edges, list):
        raise GraphError("'edges' must be a list of [src, dst] pairs")

    position: dict[str, int] = {}
    for entry in raw_nodes:
        if not isinstance(entry, dict) or "id" not in entry:
            raise GraphError("every node must be an object with an 'id'")
        nid = entry["id"]
        if not isinstance(nid, str) or not nid:
            raise GraphError(f"node id must be a non-empty string, got {nid!r}")
        if nid in position:
            raise GraphError(f"duplicate node id: {nid!r}")
        position[nid] = len(position)

    edges: set[tuple[str, str]] = set()
    for pair in raw_edges:
        if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
            raise GraphError(f"edge must be a [src, dst] pair, got {pair!r}")
        src, dst = pair
        for endpoint in (src, dst):
            if endpoint not in position:
                raise GraphError(f"dangling edge endpoint: {endpoint!r}")
        edges.add((src, dst))

    kept = [e for e in raw_nodes if not e.get("is_input", False)]
    if not kept:
        raise GraphError("graph has no intermediate nodes after input stripping")
    kept_ids = {e["id"] for e in kept}

    infos: dict[str, NodeInfo] = {}
    for entry in kept:
        nid = entry["id"]
        kind = entry.get("kind", "other")
        if not isinstance(kind, str):
            raise GraphError(f"node {nid!r}: kind must be a string")
        cc = entry.get("compute_cost")
        cc = _default_compute_cost(kind) if cc is None else _as_cost(cc, "compute cost", nid, 0)
        mc = entry.get("memory_cost")
        if mc is None:
            raise GraphError(f"node {nid!r}: memory cost is required")
        mc = _as_cost(mc, "memory cost", nid, 1)
        infos[nid] = NodeInfo(nid, kind, cc, mc, str(entry.get("label", "")))

    order = sorted(kept_ids, key=position.__getitem__)
    succ_ids: dict[str, list[str]] = {nid: [] for nid in order}
    pred_ids: dict[str, list[str]] = {nid: [] for nid in order}
    for src, dst in sorted(edges, key=lambda e: (position[e[0]], position[e[1]])):
        if src in kept_ids and dst in kept_ids:
            succ_ids[src].append(dst)
            pred_ids[dst].append(src)

    topo = _topological_order(order, pred_ids)
    index = {nid: i for i, nid in enumerate(topo)}

    nodes = tuple(infos[nid] for nid in topo)
    preds = tuple(mask_of(index[p] for p in pred_ids[nid]) for nid in topo)
    succs = tuple(mask_of(index[s] for s in succ_ids[nid]) for nid in topo)

    total_time = sum(n.compute_cost for n in nodes)
    total_memory = sum(n.memory_cost for n in nodes)
    if total_time > MAX_TOTAL_COST or total_memory > MAX_TOTAL_COST:
        raise GraphError("aggregate node costs exceed the supported integer range")

    return ComputationGraph(nodes, preds, succs)


def _topological_order(order: list[str], pred_ids: dict[str, list[str]]) -> list[str]:
    """DFS post-order over the predecessor relation; raises on cycles.

    Deterministic: roots and predecessor lists are walked in document order.
    Emitting each node after its predecessors yields a topological order
    directly, and a document already in topological order loads back in the
    same order (serialization round-trips byte for byte).
    """
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {nid: WHITE for nid in order}
    postorder: list[str] = []
    for root in order:
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, Iterator[str]]] = [(root, iter(pred_ids[root]))]
        color[root] = GRAY
        while stack:
            nid, it = stack[-1]
            for nxt in it:
                if color[nxt] == GRAY:
                    raise GraphError("cycle detected")
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, iter(pred_ids[nxt])))
                    break
            else:
                color[nid] = BLACK
                postorder.append(nid)
                stack.pop()
    return postorder


def load_graph(text: str) -> ComputationGraph:
    """Parse a graph document (JSON text) into a validated graph."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"invalid JSON: {exc}") from exc
    return graph_from_document(doc)


def graph_to_document(g: ComputationGraph) -> dict:
    """Serialize a graph back to the document form (nodes in index order)."""
    nodes = [
        {
            "id": node.id,
            "label": node.label,
            "kind": node.kind,
            "compute_cost": node.compute_cost,
            "memory_cost": node.memory_cost,
        }
        for node in g.nodes
    ]
    edges = [
        [g.id_of(u), g.id_of(v)]
        for u in range(g.n)
        for v in bits(g.succs[u])
    ]
    return {"nodes": nodes, "edges": edges}


def dump_graph(g: ComputationGraph) -> str:
    return json.dumps(graph_to_document(g), indent=2) + "\n"
