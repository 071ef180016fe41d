"""Enumeration of the lower-set families the planners search over.

The full family holds every predecessor-closed node set of the graph and can
be exponentially large, so enumeration is capped.  The pruned family holds
only ancestor closures (at most one per node, plus the empty and full sets)
and is what the fast approximate planner uses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import (
    DEFAULT_LATTICE_CAP,
    ComputationGraph,
    NodeSet,
    ancestors_closure,
)


class LatticeTooLargeError(RuntimeError):
    """The graph has more lower sets than the configured cap."""

    def __init__(self, cap: int):
        super().__init__(
            f"lattice too large: more than {cap} lower sets; "
            "raise the cap or use the pruned family"
        )
        self.cap = cap


@dataclass(frozen=True)
class LowerSetFamily:
    """An ordered, deduplicated collection of lower sets.

    Members are sorted by cardinality, then by bit pattern, so every strict
    subset precedes its supersets; the planners rely on that order.  The
    empty set and the full node set are always present.
    """

    masks: tuple[NodeSet, ...]
    index: dict[NodeSet, int]

    @classmethod
    def from_masks(cls, masks) -> "LowerSetFamily":
        ordered = tuple(sorted(set(masks), key=lambda m: (m.bit_count(), m)))
        return cls(ordered, {m: i for i, m in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self):
        return iter(self.masks)

    def __contains__(self, mask: NodeSet) -> bool:
        return mask in self.index


def all_lower_sets(g: ComputationGraph, cap: int = DEFAULT_LATTICE_CAP) -> LowerSetFamily:
    """Every lower set of ``g``, including the empty and full sets.

    Walks the lattice by single-node extension: from a lower set L, each
    node outside L whose predecessors all lie in L yields a new lower set.
    Raises LatticeTooLargeError once more than ``cap`` sets are found.
    """
    if cap < g.n + 1:
        raise ValueError(f"cap must be at least n+1 = {g.n + 1}, got {cap}")
    preds = g.preds
    n = g.n
    seen: set[NodeSet] = {0}
    stack: list[NodeSet] = [0]
    while stack:
        lower = stack.pop()
        for v in range(n):
            bit = 1 << v
            if lower & bit or preds[v] & ~lower:
                continue
            ext = lower | bit
            if ext not in seen:
                seen.add(ext)
                if len(seen) > cap:
                    raise LatticeTooLargeError(cap)
                stack.append(ext)
    return LowerSetFamily.from_masks(seen)


def pruned_lower_sets(g: ComputationGraph) -> LowerSetFamily:
    """The ancestor-closure family: {closure(v) | v in V} plus the empty set,
    with the full set appended for multi-sink graphs."""
    masks = {0, g.full_mask}
    for v in range(g.n):
        masks.add(ancestors_closure(g, v))
    return LowerSetFamily.from_masks(masks)
