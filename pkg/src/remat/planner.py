"""Planners for the budget-constrained recomputation problem.

The core solver is a dynamic program over a family of lower sets.  States
are (lower set, overhead-so-far) cells holding the least cached memory that
reaches them; transitions extend a chain by one lower set, charging the
stage's memory against the budget.  Running it over the full lattice gives
the exact optimum; over the ancestor-closure family it gives the fast
near-optimal plan.  A depth-first exhaustive search provides an independent
optimality oracle for small graphs, and a binary search finds the smallest
budget for which any plan exists.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .graph import (
    DEFAULT_LATTICE_CAP,
    ComputationGraph,
    boundary,
    delta_minus,
    delta_plus,
    memory_of,
    time_of,
)
from .lattice import LowerSetFamily, all_lower_sets, pruned_lower_sets
from .strategy import LowerSetSequence, StrategyEvaluation, make_sequence, peak_memory

FAMILIES = ("full", "pruned")
OBJECTIVES = ("minimize", "maximize")

DEFAULT_DFS_STATE_CAP = 10_000_000


class PlannerError(RuntimeError):
    """Planner invariant violation or unusable configuration."""


class SearchCapExceeded(PlannerError):
    """The exhaustive search visited more states than allowed."""


@dataclass(frozen=True)
class PlanRequest:
    graph: ComputationGraph
    budget: int
    family: str = "full"
    objective: str = "minimize"
    lattice_cap: int = DEFAULT_LATTICE_CAP

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")


@dataclass
class SearchStats:
    states_visited: int = 0
    table_entries: int = 0
    transitions: int = 0
    dominated_skipped: int = 0
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class PlanResult:
    feasible: bool
    sequence: LowerSetSequence | None
    evaluation: StrategyEvaluation | None
    objective_value: int | None
    budget: int | None
    family: str
    objective: str
    stats: SearchStats


@dataclass
class DpTable:
    """Sparse (lower set, overhead) -> least cached memory, with back-pointers.

    ``opt[i]`` maps overhead t to the smallest cached-memory total of any
    budget-respecting chain prefix ending at family member i; ``parent``
    records the predecessor cell used to reach each entry.
    """

    opt: list[dict[int, int] | None]
    parent: dict[tuple[int, int], tuple[int, int] | None] = field(default_factory=dict)


class TransitionIndex:
    """Precomputed transition constants for one (graph, family) pair.

    For each ordered pair L ⊊ L' of family members the stage's fixed memory
    demand, overhead increment, and cache increment depend only on the pair,
    so they are computed once and shared by every planner run (including all
    probes of a budget search).
    """

    def __init__(self, g: ComputationGraph, family: LowerSetFamily, family_name: str):
        self.graph = g
        self.family = family
        self.family_name = family_name
        masks = family.masks
        bound = [boundary(g, m) for m in masks]
        stage_base = []
        for m in masks:
            succ = delta_plus(g, m)
            stage_base.append(
                memory_of(g, succ & ~m) + memory_of(g, delta_minus(g, succ) & ~m)
            )
        # family order is (size, pattern), so supersets always come later
        succs: list[list[tuple[int, int, int, int]]] = [[] for _ in masks]
        for i, lo in enumerate(masks):
            row = succs[i]
            for j in range(i + 1, len(masks)):
                hi = masks[j]
                if lo & ~hi:
                    continue
                seg = hi & ~lo
                row.append(
                    (
                        j,
                        2 * memory_of(g, seg) + stage_base[j],
                        time_of(g, seg & ~bound[j]),
                        memory_of(g, bound[j] & ~lo),
                    )
                )
        self.masks = masks
        self.succs = succs
        self.empty_index = family.index[0]
        self.full_index = family.index[g.full_mask]


def _family_for(g: ComputationGraph, name: str, cap: int) -> LowerSetFamily:
    if name == "pruned":
        return pruned_lower_sets(g)
    return all_lower_sets(g, cap)


def _dp_run(index: TransitionIndex, budget: int, objective: str, stats: SearchStats) -> DpTable:
    table = DpTable(opt=[None] * len(index.masks))
    table.opt[index.empty_index] = {0: 0}
    table.parent[(index.empty_index, 0)] = None
    minimize = objective == "minimize"
    for i, cell in enumerate(table.opt):
        if not cell:
            continue
        items = sorted(cell.items(), reverse=not minimize)
        best_m: int | None = None
        for t, m in items:
            # dominated entry: an already-seen better-or-equal overhead
            # reached this lower set with no more cached memory
            if best_m is not None and m >= best_m:
                stats.dominated_skipped += 1
                continue
            best_m = m
            stats.states_visited += 1
            for j, stage_fixed, dt, dm in index.succs[i]:
                stats.transitions += 1
                if m + stage_fixed > budget:
                    continue
                t2 = t + dt
                m2 = m + dm
                target = table.opt[j]
                if target is None:
                    target = table.opt[j] = {}
                old = target.get(t2)
                if old is None or m2 < old:
                    target[t2] = m2
                    table.parent[(j, t2)] = (i, t)
    stats.table_entries = sum(len(c) for c in table.opt if c)
    return table


def _reconstruct(index: TransitionIndex, table: DpTable, t_star: int) -> list[int]:
    chain: list[int] = []
    cell: tuple[int, int] | None = (index.full_index, t_star)
    while cell is not None:
        i, t = cell
        chain.append(index.masks[i])
        cell = table.parent[(i, t)]
    chain.reverse()
    assert chain[0] == 0, "reconstruction must start at the empty set"
    return chain[1:]


def _plan_with_index(index: TransitionIndex, budget: int, objective: str) -> PlanResult:
    g = index.graph
    stats = SearchStats()
    started = time.perf_counter()
    table = _dp_run(index, budget, objective, stats)
    final = table.opt[index.full_index]
    if not final:
        stats.wall_time_s = time.perf_counter() - started
        return PlanResult(False, None, None, None, budget, index.family_name, objective, stats)
    t_star = min(final) if objective == "minimize" else max(final)
    seq = make_sequence(g, _reconstruct(index, table, t_star))
    evaluation = peak_memory(g, seq)
    stats.wall_time_s = time.perf_counter() - started
    # the plan must reproduce its own table entry when re-evaluated from scratch
    assert evaluation.overhead == t_star
    assert evaluation.peak_memory <= budget
    assert evaluation.cached_total == final[t_star], (
        "cache totals accumulated by the DP must equal the boundary-union memory"
    )
    return PlanResult(True, seq, evaluation, t_star, budget, index.family_name, objective, stats)


def dp_plan(req: PlanRequest) -> PlanResult:
    """Best plan within the requested family and budget.

    For ``minimize`` this is the least-overhead feasible plan; ``maximize``
    flips the objective (the overhead-maximizing plan used by the
    memory-centric strategy).  Infeasible budgets give feasible=False.
    """
    family = _family_for(req.graph, req.family, req.lattice_cap)
    index = TransitionIndex(req.graph, family, req.family)
    return _plan_with_index(index, req.budget, req.objective)


def dfs_exhaustive_plan(req: PlanRequest, state_cap: int = DEFAULT_DFS_STATE_CAP) -> PlanResult:
    """Exhaustive depth-first search over all chains in the family.

    Keeps only the running (lower set, overhead, cached memory) triplet per
    prefix.  Exponential in general; intended as the optimality oracle for
    small graphs.  Raises SearchCapExceeded past ``state_cap`` states.
    """
    g = req.graph
    family = _family_for(g, req.family, req.lattice_cap)
    index = TransitionIndex(g, family, req.family)
    stats = SearchStats()
    started = time.perf_counter()
    minimize = req.objective == "minimize"
    budget = req.budget
    best: tuple[int, list[int]] | None = None

    def visit(i: int, t: int, m: int, trail: list[int]) -> None:
        nonlocal best
        stats.states_visited += 1
        if stats.states_visited > state_cap:
            raise SearchCapExceeded(f"exhaustive search exceeded {state_cap} states")
        if i == index.full_index:
            if best is None or (t < best[0] if minimize else t > best[0]):
                best = (t, trail.copy())
            return
        for j, stage_fixed, dt, dm in index.succs[i]:
            stats.transitions += 1
            if m + stage_fixed > budget:
                continue
            trail.append(j)
            visit(j, t + dt, m + dm, trail)
            trail.pop()

    visit(index.empty_index, 0, 0, [])
    stats.wall_time_s = time.perf_counter() - started
    if best is None:
        return PlanResult(False, None, None, None, budget, req.family, req.objective, stats)
    t_star, trail = best
    seq = make_sequence(g, [index.masks[j] for j in trail])
    evaluation = peak_memory(g, seq)
    assert evaluation.overhead == t_star
    assert evaluation.peak_memory <= budget
    return PlanResult(True, seq, evaluation, t_star, budget, req.family, req.objective, stats)


def min_feasible_budget(
    g: ComputationGraph,
    family: str = "full",
    objective: str = "minimize",
    lattice_cap: int = DEFAULT_LATTICE_CAP,
) -> tuple[int, PlanResult]:
    """Smallest integer budget with any feasible plan, found by binary search.

    Feasibility is monotone in the budget (a larger budget only loosens the
    per-stage constraint), and twice the total memory always admits the
    single-segment plan, so the search brackets are [0, 2·M(V)].
    """
    fam = _family_for(g, family, lattice_cap)
    index = TransitionIndex(g, fam, family)
    hi = 2 * g.total_memory
    hi_plan = _plan_with_index(index, hi, objective)
    if not hi_plan.feasible:
        raise PlannerError("internal error: single-segment plan must fit 2*M(V)")
    lo = 0  # no stage fits in a zero budget: every stage needs 2*M(segment) >= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        plan = _plan_with_index(index, mid, objective)
        if plan.feasible:
            hi, hi_plan = mid, plan
        else:
            lo = mid
    return hi, hi_plan


def memory_centric_plan(
    g: ComputationGraph,
    family: str = "full",
    lattice_cap: int = DEFAULT_LATTICE_CAP,
) -> PlanResult:
    """Overhead-maximizing plan at the minimal feasible budget.

    Coarse partitions leave the most room for the liveness post-pass, so
    deliberately maximizing overhead at the tightest budget tends to give
    the lowest simulated peak; the overhead still never exceeds one full
    forward sweep.
    """
    _, plan = min_feasible_budget(g, family, "maximize", lattice_cap)
    return plan
