"""Instruction schedules and the abstract-memory simulator.

A schedule is a flat list of instructions over value references (the forward
value or the gradient of a node).  ``build_schedule`` materializes a plan
into the canonical discipline: forward over the segments keeping only
boundary values, then backward segment by segment, recomputing each
segment's discarded values from the previous boundary cache before its
gradients are produced, and dropping values only at stage ends.

``simulate`` executes a schedule against the dependency rules and tracks
live memory exactly, which is how the analytic formulas in
:mod:`remat.strategy` are verified.  ``liveness_pass`` is the post-pass that
frees every value right after its last reader.

Backward dependency rule used throughout: the gradient of ``v`` reads the
forward values of ``v`` and its predecessors, and the gradients of its
successors.  Gradients take the same abstract space as forward values;
parameter gradients are streamed out and occupy nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import ComputationGraph, NodeSet, bits, boundary, delta_minus, delta_plus
from .strategy import LowerSetSequence


@dataclass(frozen=True)
class ValueRef:
    kind: str  # "fwd" | "grad"
    node: int


@dataclass(frozen=True)
class ForwardCompute:
    node: int


@dataclass(frozen=True)
class BackwardCompute:
    node: int


@dataclass(frozen=True)
class Free:
    ref: ValueRef


Instruction = ForwardCompute | BackwardCompute | Free
Schedule = list[Instruction]


class ScheduleError(ValueError):
    """Unparseable schedule text or unknown node id."""


class SimulationError(RuntimeError):
    """A schedule violated the dependency or liveness rules."""


@dataclass(frozen=True)
class SimulationReport:
    peak_live_memory: int
    trace: tuple[int, ...]  # live memory after each instruction
    total_forward_cost: int
    recompute_cost: int  # compute cost of second forward occurrences
    backward_count: int


def _stage_entry_sets(g: ComputationGraph, seq: LowerSetSequence):
    """Live (forward, gradient) masks right before each backward stage.

    Entering stage i the canonical discipline holds on to: the cached
    boundaries U_i, forward values outside L_i that feed pending gradients
    (δ−(δ+(L_i)) \\ L_i), and the gradients still awaited outside L_i
    (δ+(L_i) \\ L_i).
    """
    entry_fwd: list[NodeSet] = []
    entry_grad: list[NodeSet] = []
    for lower, cached in zip(seq.chain, seq.cached):
        succ = delta_plus(g, lower)
        entry_fwd.append(cached | (delta_minus(g, succ) & ~lower))
        entry_grad.append(succ & ~lower)
    return entry_fwd, entry_grad


def build_schedule(g: ComputationGraph, seq: LowerSetSequence) -> Schedule:
    """Materialize a plan into the canonical instruction schedule."""
    k = seq.k
    bounds = [boundary(g, lower) for lower in seq.chain]
    entry_fwd, entry_grad = _stage_entry_sets(g, seq)

    out: Schedule = []

    # forward sweep: evaluate each segment, keep only its boundary values
    for seg, bound in zip(seq.segments, bounds):
        out.extend(ForwardCompute(v) for v in bits(seg))
        out.extend(Free(ValueRef("fwd", v)) for v in bits(seg & ~bound))

    # backward sweep: recompute each segment from the boundary cache, produce
    # its gradients, then drop whatever the remaining stages cannot read
    fwd_live = seq.cached[-1]
    grad_live = 0
    for i in reversed(range(k)):
        seg = seq.segments[i]
        out.extend(ForwardCompute(v) for v in bits(seg & ~fwd_live))
        fwd_live |= seg
        out.extend(BackwardCompute(v) for v in reversed(list(bits(seg))))
        grad_live |= seg
        fwd_target = entry_fwd[i - 1] if i > 0 else 0
        grad_target = entry_grad[i - 1] if i > 0 else 0
        assert fwd_target & ~fwd_live == 0 and grad_target & ~grad_live == 0
        out.extend(Free(ValueRef("fwd", v)) for v in bits(fwd_live & ~fwd_target))
        out.extend(Free(ValueRef("grad", v)) for v in bits(grad_live & ~grad_target))
        fwd_live, grad_live = fwd_target, grad_target
    return out


def vanilla_schedule(g: ComputationGraph) -> Schedule:
    """The no-recomputation schedule: every forward value is retained through
    the whole backward sweep; gradients are freed after their last consumer."""
    out: Schedule = [ForwardCompute(v) for v in range(g.n)]
    free_after: dict[int, list[int]] = {}
    for v in range(g.n):
        preds = list(bits(g.preds[v]))
        # the backward sweep runs in descending index order, so the gradient
        # of v is last read by the smallest-index predecessor
        last_reader = min(preds) if preds else v
        free_after.setdefault(last_reader, []).append(v)
    for v in reversed(range(g.n)):
        out.append(BackwardCompute(v))
        out.extend(Free(ValueRef("grad", u)) for u in sorted(free_after.get(v, ())))
    out.extend(Free(ValueRef("fwd", v)) for v in range(g.n))
    return out


def _reads_writes(g: ComputationGraph, ins: Instruction):
    if isinstance(ins, ForwardCompute):
        reads = [ValueRef("fwd", w) for w in bits(g.preds[ins.node])]
        return reads, ValueRef("fwd", ins.node)
    v = ins.node
    reads = [ValueRef("fwd", w) for w in bits(g.preds[v])]
    reads.append(ValueRef("fwd", v))
    reads.extend(ValueRef("grad", u) for u in bits(g.succs[v]))
    return reads, ValueRef("grad", v)


def liveness_pass(g: ComputationGraph, schedule: Schedule) -> Schedule:
    """Free every value immediately after its last reader.

    Compute instructions and their order are untouched; all original frees
    are replaced.  A value written and never read again is freed right after
    its writer.  Rewritten values (recomputations) split into separate live
    ranges at each write.
    """
    computes = [ins for ins in schedule if not isinstance(ins, Free)]
    last_use: dict[ValueRef, int] = {}
    open_refs: set[ValueRef] = set()
    frees_at: dict[int, list[ValueRef]] = {}

    def close(ref: ValueRef) -> None:
        frees_at.setdefault(last_use[ref], []).append(ref)

    for pos, ins in enumerate(computes):
        reads, write = _reads_writes(g, ins)
        for ref in reads:
            last_use[ref] = pos
        if write in open_refs:
            close(write)  # previous live range of this value ends here
        open_refs.add(write)
        last_use[write] = pos
    for ref in open_refs:
        close(ref)

    out: Schedule = []
    for pos, ins in enumerate(computes):
        out.append(ins)
        for ref in sorted(frees_at.get(pos, ()), key=lambda r: (r.kind, r.node)):
            out.append(Free(ref))
    return out


def simulate(g: ComputationGraph, schedule: Schedule) -> SimulationReport:
    """Execute a schedule, tracking live memory exactly.

    Raises SimulationError on reads of non-live values, frees of non-live
    values, gradients produced before all consumer gradients exist, repeated
    backward computes, and forwards run more than twice.
    """
    mem_costs = g.memory_costs
    time_costs = g.compute_costs
    fwd_live = 0
    grad_live = 0
    fwd_runs = [0] * g.n
    mem = 0
    peak = 0
    trace: list[int] = []
    total_forward = 0
    recompute = 0
    backwards = 0

    def fail(idx: int, msg: str) -> None:
        raise SimulationError(f"instruction {idx}: {msg}")

    for idx, ins in enumerate(schedule):
        if isinstance(ins, ForwardCompute):
            v = ins.node
            missing = g.preds[v] & ~fwd_live
            if missing:
                w = next(bits(missing))
                fail(idx, f"forward of {g.id_of(v)} reads non-live value fwd:{g.id_of(w)}")
            if fwd_live >> v & 1:
                fail(idx, f"forward of {g.id_of(v)} while its value is still live")
            fwd_runs[v] += 1
            if fwd_runs[v] > 2:
                fail(idx, f"{g.id_of(v)} computed more than twice")
            if fwd_runs[v] == 2:
                recompute += time_costs[v]
            total_forward += time_costs[v]
            fwd_live |= 1 << v
            mem += mem_costs[v]
        elif isinstance(ins, BackwardCompute):
            v = ins.node
            missing = (g.preds[v] | (1 << v)) & ~fwd_live
            if missing:
                w = next(bits(missing))
                fail(idx, f"backward of {g.id_of(v)} reads non-live value fwd:{g.id_of(w)}")
            missing = g.succs[v] & ~grad_live
            if missing:
                w = next(bits(missing))
                fail(idx, f"backward of {g.id_of(v)} before gradient grad:{g.id_of(w)} exists")
            if grad_live >> v & 1:
                fail(idx, f"duplicate backward of {g.id_of(v)}")
            grad_live |= 1 << v
            mem += mem_costs[v]
            backwards += 1
        else:
            ref = ins.ref
            bit = 1 << ref.node
            if ref.kind == "fwd":
                if not fwd_live & bit:
                    fail(idx, f"double free of fwd:{g.id_of(ref.node)}")
                fwd_live ^= bit
            else:
                if not grad_live & bit:
                    fail(idx, f"double free of grad:{g.id_of(ref.node)}")
                grad_live ^= bit
            mem -= mem_costs[ref.node]
        if mem > peak:
            peak = mem
        trace.append(mem)

    return SimulationReport(peak, tuple(trace), total_forward, recompute, backwards)


def schedule_to_text(g: ComputationGraph, schedule: Schedule) -> str:
    """One instruction per line: ``F v``, ``B v``, ``FREE fwd:v``, ``FREE grad:v``."""
    lines = []
    for ins in schedule:
        if isinstance(ins, ForwardCompute):
            lines.append(f"F {g.id_of(ins.node)}")
        elif isinstance(ins, BackwardCompute):
            lines.append(f"B {g.id_of(ins.node)}")
        else:
            lines.append(f"FREE {ins.ref.kind}:{g.id_of(ins.ref.node)}")
    return "\n".join(lines) + "\n"


def schedule_from_text(g: ComputationGraph, text: str) -> Schedule:
    out: Schedule = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "F" and len(parts) == 2:
                out.append(ForwardCompute(g.index_of[parts[1]]))
            elif parts[0] == "B" and len(parts) == 2:
                out.append(BackwardCompute(g.index_of[parts[1]]))
            elif parts[0] == "FREE" and len(parts) == 2 and ":" in parts[1]:
                kind, _, name = parts[1].partition(":")
                if kind not in ("fwd", "grad"):
                    raise ScheduleError(f"line {lineno}: unknown value kind {kind!r}")
                out.append(Free(ValueRef(kind, g.index_of[name])))
            else:
                raise ScheduleError(f"line {lineno}: cannot parse {line!r}")
        except KeyError as exc:
            raise ScheduleError(f"line {lineno}: unknown node id {exc.args[0]!r}") from exc
    return out
