"""Lower-set sequences and the two functionals that score them.

A plan is an increasing chain of lower sets L_1 ⊊ ... ⊊ L_k = V.  It induces
segments V_i = L_i \\ L_{i-1} and a growing cache U_i = ∪_{j<=i} ∂(L_j) of
boundary values.  Two quantities decide a plan's worth:

* overhead — total compute cost of the values that are re-derived during the
  backward sweep: T(V \\ U_k), equivalently the stage-wise sum of
  T(V_i \\ ∂(L_i));
* peak memory — the maximum over backward stages of

      M(U_{i-1}) + 2·M(V_i) + M(δ+(L_i) \\ L_i) + M(δ−(δ+(L_i)) \\ L_i)

  i.e. earlier caches, the segment's values and gradients, gradients still
  pending outside the stage, and retained forward values feeding them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .graph import (
    ComputationGraph,
    NodeSet,
    bits,
    boundary,
    delta_minus,
    delta_plus,
    is_lower_set,
    memory_of,
    time_of,
)


class SequenceError(ValueError):
    """A chain of node sets does not form a valid plan."""


@dataclass(frozen=True)
class LowerSetSequence:
    """A validated plan: the chain plus its derived segments and caches."""

    chain: tuple[NodeSet, ...]
    segments: tuple[NodeSet, ...]
    cached: tuple[NodeSet, ...]  # U_i after each stage

    @property
    def k(self) -> int:
        return len(self.chain)


@dataclass(frozen=True)
class StrategyEvaluation:
    overhead: int
    per_stage_memory: tuple[int, ...]
    peak_memory: int
    cached_total: int


def make_sequence(g: ComputationGraph, chain: Iterable[NodeSet]) -> LowerSetSequence:
    """Validate a chain of node sets and derive segments and caches.

    Rejects members that are not lower sets, chains that are not strictly
    increasing, and chains that do not end at the full node set.
    """
    masks = tuple(chain)
    if not masks:
        raise SequenceError("sequence must contain at least one lower set")
    prev = 0
    segments: list[NodeSet] = []
    cached: list[NodeSet] = []
    acc = 0
    for mask in masks:
        if not is_lower_set(g, mask):
            names = ", ".join(g.id_of(v) for v in bits(mask))
            raise SequenceError(f"not a lower set: {{{names}}}")
        if prev | mask != mask or prev == mask:
            raise SequenceError("chain is not strictly increasing")
        segments.append(mask & ~prev)
        acc |= boundary(g, mask)
        cached.append(acc)
        prev = mask
    if masks[-1] != g.full_mask:
        raise SequenceError("sequence must end at the full node set")
    return LowerSetSequence(masks, tuple(segments), tuple(cached))


def overhead(g: ComputationGraph, seq: LowerSetSequence) -> int:
    """Total recompute cost of the plan.

    Computed both as T(V \\ U_k) and as the stage-wise sum; the two must
    agree for every valid sequence.
    """
    total = time_of(g, g.full_mask & ~seq.cached[-1])
    stagewise = sum(
        time_of(g, seg & ~boundary(g, lower))
        for lower, seg in zip(seq.chain, seq.segments)
    )
    assert total == stagewise, "stage-wise overhead disagrees with cache complement"
    return total


def stage_memories(g: ComputationGraph, seq: LowerSetSequence) -> tuple[int, ...]:
    """Per-stage backward memory demand (see the module docstring formula)."""
    out: list[int] = []
    prev_cached: NodeSet = 0
    for lower, seg, cached in zip(seq.chain, seq.segments, seq.cached):
        succ = delta_plus(g, lower)
        out.append(
            memory_of(g, prev_cached)
            + 2 * memory_of(g, seg)
            + memory_of(g, succ & ~lower)
            + memory_of(g, delta_minus(g, succ) & ~lower)
        )
        prev_cached = cached
    return tuple(out)


def peak_memory(g: ComputationGraph, seq: LowerSetSequence) -> StrategyEvaluation:
    """Evaluate a plan: overhead, per-stage memory, peak, and final cache size."""
    stages = stage_memories(g, seq)
    return StrategyEvaluation(
        overhead=overhead(g, seq),
        per_stage_memory=stages,
        peak_memory=max(stages),
        cached_total=memory_of(g, seq.cached[-1]),
    )
