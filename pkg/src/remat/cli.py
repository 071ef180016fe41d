"""Command-line interface.

Subcommands: ``gen`` emits benchmark graph files, ``plan`` solves the
budgeted recomputation problem, ``simulate`` replays a plan through the
memory simulator, ``report`` compares all strategies on one graph.

Exit codes are stable: 0 success/feasible, 1 input error, 2 infeasible
budget, 3 simulation or plan/graph mismatch fault.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .benchmarks import COST_MODELS, FAMILIES, TopologySpec, chen_baseline_plan, generate_document
from .graph import (
    DEFAULT_LATTICE_CAP,
    ComputationGraph,
    GraphError,
    bits,
    load_graph,
)
from .lattice import LatticeTooLargeError
from .planner import (
    PlanRequest,
    PlanResult,
    PlannerError,
    dfs_exhaustive_plan,
    dp_plan,
    min_feasible_budget,
)
from .report import ALL_STRATEGIES, build_report
from .schedule import (
    ScheduleError,
    SimulationError,
    build_schedule,
    liveness_pass,
    schedule_to_text,
    simulate,
)
from .strategy import SequenceError, make_sequence, peak_memory

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_SIMFAULT = 3

LATTICE_CAP_ENV = "REMAT_LATTICE_CAP"


def _default_cap() -> int:
    raw = os.environ.get(LATTICE_CAP_ENV)
    return int(raw) if raw else DEFAULT_LATTICE_CAP


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _plan_to_json(g: ComputationGraph, plan: PlanResult) -> dict:
    out: dict = {
        "feasible": plan.feasible,
        "family": plan.family,
        "objective": plan.objective,
        "budget": plan.budget,
        # wall time is intentionally omitted: plan files are byte-stable
        "search_stats": {
            "states_visited": plan.stats.states_visited,
            "table_entries": plan.stats.table_entries,
            "transitions": plan.stats.transitions,
            "dominated_skipped": plan.stats.dominated_skipped,
        },
    }
    if plan.feasible:
        assert plan.sequence is not None and plan.evaluation is not None
        out["objective_value"] = plan.objective_value
        out["overhead"] = plan.evaluation.overhead
        out["peak_memory"] = plan.evaluation.peak_memory
        out["per_stage_memory"] = list(plan.evaluation.per_stage_memory)
        out["cached_memory"] = plan.evaluation.cached_total
        out["segments"] = [
            [g.id_of(v) for v in bits(seg)] for seg in plan.sequence.segments
        ]
    return out


def cmd_gen(args: argparse.Namespace) -> int:
    spec = TopologySpec(
        family=args.family,
        depth=args.depth,
        skip=args.skip,
        seed=args.seed,
        edge_prob=args.edge_prob,
        cost_model=args.cost_model,
    )
    _write(args.out, json.dumps(generate_document(spec), indent=2) + "\n")
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    g = load_graph(_read(args.graph))
    cap = args.lattice_cap
    objective = "minimize" if args.objective == "time" else "maximize"

    if args.algo == "chen":
        budget = None if args.budget == "min" else _parse_budget(args.budget)
        plan = chen_baseline_plan(g, budget)
    elif args.budget == "min":
        if args.algo == "dfs":
            plan = _dfs_min_budget(g, objective, cap)
        else:
            family = "full" if args.algo == "exact" else "pruned"
            _, plan = min_feasible_budget(g, family, objective, cap)
    else:
        budget = _parse_budget(args.budget)
        if args.algo == "dfs":
            plan = dfs_exhaustive_plan(PlanRequest(g, budget, "full", objective, cap))
        else:
            family = "full" if args.algo == "exact" else "pruned"
            plan = dp_plan(PlanRequest(g, budget, family, objective, cap))

    _write(args.out, json.dumps(_plan_to_json(g, plan), indent=2) + "\n")
    if not plan.feasible:
        print(f"infeasible: no plan fits budget {plan.budget}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _parse_budget(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"budget must be an integer or 'min', got {raw!r}") from None
    if value < 0:
        raise ValueError("budget must be non-negative")
    return value


def _dfs_min_budget(g: ComputationGraph, objective: str, cap: int) -> PlanResult:
    lo, hi = 0, 2 * g.total_memory
    best = dfs_exhaustive_plan(PlanRequest(g, hi, "full", objective, cap))
    while hi - lo > 1:
        mid = (lo + hi) // 2
        plan = dfs_exhaustive_plan(PlanRequest(g, mid, "full", objective, cap))
        if plan.feasible:
            hi, best = mid, plan
        else:
            lo = mid
    return best


def cmd_simulate(args: argparse.Namespace) -> int:
    g = load_graph(_read(args.graph))
    plan_doc = json.loads(_read(args.plan))
    try:
        seq = _sequence_from_plan(g, plan_doc)
        sched = build_schedule(g, seq)
        if args.liveness == "on":
            sched = liveness_pass(g, sched)
        report = simulate(g, sched)
    except (SequenceError, SimulationError, ScheduleError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIMFAULT

    if args.liveness == "off":
        analytic = peak_memory(g, seq)
        if report.peak_live_memory != analytic.peak_memory:
            print(
                f"error: simulated peak {report.peak_live_memory} does not match "
                f"analytic peak {analytic.peak_memory}",
                file=sys.stderr,
            )
            return EXIT_SIMFAULT

    if args.schedule:
        _write(args.schedule, schedule_to_text(g, sched))
    if args.trace:
        curve = [
            {"index": i, "live_memory": live}
            for i, live in enumerate(report.trace)
        ]
        _write(args.trace, json.dumps({"trace": curve}, indent=2) + "\n")
    _write(
        None,
        json.dumps(
            {
                "peak_live_memory": report.peak_live_memory,
                "total_forward_cost": report.total_forward_cost,
                "recompute_cost": report.recompute_cost,
                "backward_count": report.backward_count,
                "instructions": len(sched),
                "liveness": args.liveness,
            },
            indent=2,
        )
        + "\n",
    )
    return EXIT_OK


def _sequence_from_plan(g: ComputationGraph, plan_doc: object):
    if not isinstance(plan_doc, dict) or not isinstance(plan_doc.get("segments"), list):
        raise SequenceError("plan document must contain a 'segments' list")
    index = g.index_of
    chain = []
    acc = 0
    for segment in plan_doc["segments"]:
        for nid in segment:
            if nid not in index:
                raise SequenceError(f"plan references unknown node id {nid!r}")
            acc |= 1 << index[nid]
        chain.append(acc)
    return make_sequence(g, chain)


def cmd_report(args: argparse.Namespace) -> int:
    g = load_graph(_read(args.graph))
    strategies = tuple(args.strategies.split(",")) if args.strategies else None
    report = build_report(g, strategies, args.lattice_cap)
    sys.stdout.write(report.render_table())
    if args.csv:
        _write(args.csv, report.to_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="remat",
        description="Plan, simulate, and compare recomputation strategies for computation graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    cap_kwargs = dict(type=int, default=_default_cap(), help="lower-set enumeration cap")

    p = sub.add_parser("gen", help="generate a benchmark graph file")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--depth", required=True, type=int)
    p.add_argument("--skip", type=int, default=2, help="skip distance for skip-chain")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edge-prob", type=float, default=0.5, help="edge probability for random-dag")
    p.add_argument("--cost-model", choices=COST_MODELS, default="uniform")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("plan", help="solve the budgeted recomputation problem")
    p.add_argument("--graph", required=True)
    p.add_argument("--budget", required=True, help="integer memory budget, or 'min' for binary search")
    p.add_argument("--algo", choices=("exact", "approx", "dfs", "chen"), default="exact")
    p.add_argument("--objective", choices=("time", "memory"), default="time")
    p.add_argument("--lattice-cap", **cap_kwargs)
    p.add_argument("--out", default=None, help="plan JSON output file (default: stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="replay a plan through the memory simulator")
    p.add_argument("--graph", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--liveness", choices=("on", "off"), default="on")
    p.add_argument("--trace", default=None, help="write the live-memory curve as JSON")
    p.add_argument("--schedule", default=None, help="write the instruction schedule as text")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="compare strategies on one graph")
    p.add_argument("--graph", required=True)
    p.add_argument(
        "--strategies",
        default=None,
        help=f"comma-separated subset of: {','.join(ALL_STRATEGIES)}",
    )
    p.add_argument("--csv", default=None, help="also write the rows as CSV")
    p.add_argument("--lattice-cap", **cap_kwargs)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; remap
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (GraphError, LatticeTooLargeError, PlannerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
