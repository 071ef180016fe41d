"""Strategy comparison reports: one row per planner, reductions vs vanilla.

Each strategy's plan is materialized into a schedule and simulated twice,
with and without the liveness post-pass.  Reduction percentages compare the
liveness-mode simulated peak against the vanilla row's, printed in the
``-NN%`` convention (a worse-than-vanilla strategy shows ``+NN%``).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from .benchmarks import chen_baseline_plan
from .graph import DEFAULT_LATTICE_CAP, ComputationGraph
from .lattice import LatticeTooLargeError
from .planner import PlanRequest, dp_plan, min_feasible_budget
from .schedule import build_schedule, liveness_pass, simulate, vanilla_schedule

ALL_STRATEGIES = ("vanilla", "exact-dp+tc", "exact-dp+mc", "approx-dp+tc", "approx-dp+mc", "chen")

CSV_COLUMNS = (
    "strategy",
    "analytic_peak",
    "sim_peak_liveness",
    "sim_peak_no_liveness",
    "overhead",
    "reduction_pct",
)


@dataclass(frozen=True)
class StrategyRow:
    strategy: str
    analytic_peak: int
    sim_peak_liveness: int
    sim_peak_no_liveness: int
    overhead: int
    reduction_pct: str


@dataclass(frozen=True)
class RunReport:
    rows: tuple[StrategyRow, ...]

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(
                f"{row.strategy},{row.analytic_peak},{row.sim_peak_liveness},"
                f"{row.sim_peak_no_liveness},{row.overhead},{row.reduction_pct}"
            )
        return "\n".join(lines) + "\n"

    def render_table(self) -> str:
        headers = CSV_COLUMNS
        cells = [headers] + [
            (
                row.strategy,
                str(row.analytic_peak),
                str(row.sim_peak_liveness),
                str(row.sim_peak_no_liveness),
                str(row.overhead),
                row.reduction_pct,
            )
            for row in self.rows
        ]
        widths = [max(len(r[c]) for r in cells) for c in range(len(headers))]
        lines = []
        for i, r in enumerate(cells):
            lines.append("  ".join(val.ljust(w) for val, w in zip(r, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _reduction(baseline: int, peak: int) -> str:
    pct = round(100 * (baseline - peak) / baseline)
    return f"-{pct}%" if pct >= 0 else f"+{-pct}%"


def build_report(
    g: ComputationGraph,
    strategies: tuple[str, ...] | None = None,
    lattice_cap: int = DEFAULT_LATTICE_CAP,
) -> RunReport:
    """Run the selected strategies on one graph and tabulate the outcome.

    DP strategies are solved at their family's minimal feasible budget
    (time-centric minimizes overhead there, memory-centric maximizes it);
    the baseline runs unconstrained.  Exact rows are skipped with a warning
    when the lower-set lattice exceeds the cap.
    """
    selected = strategies or ALL_STRATEGIES
    unknown = set(selected) - set(ALL_STRATEGIES)
    if unknown:
        raise ValueError(f"unknown strategies: {sorted(unknown)}")

    van_sched = vanilla_schedule(g)
    van_plain = simulate(g, van_sched)
    van_live = simulate(g, liveness_pass(g, van_sched))
    baseline = van_live.peak_live_memory

    rows: list[StrategyRow] = []
    if "vanilla" in selected:
        rows.append(
            StrategyRow(
                "vanilla",
                van_plain.peak_live_memory,
                van_live.peak_live_memory,
                van_plain.peak_live_memory,
                0,
                _reduction(baseline, baseline),
            )
        )

    plans: list[tuple[str, object]] = []
    for family, label in (("full", "exact-dp"), ("pruned", "approx-dp")):
        tc_name, mc_name = f"{label}+tc", f"{label}+mc"
        if tc_name not in selected and mc_name not in selected:
            continue
        try:
            b_min, tc_plan = min_feasible_budget(g, family, "minimize", lattice_cap)
        except LatticeTooLargeError as exc:
            print(f"warning: skipping {label} rows: {exc}", file=sys.stderr)
            continue
        if tc_name in selected:
            plans.append((tc_name, tc_plan))
        if mc_name in selected:
            plans.append((mc_name, dp_plan(PlanRequest(g, b_min, family, "maximize", lattice_cap))))
    if "chen" in selected:
        plans.append(("chen", chen_baseline_plan(g)))

    for name, plan in plans:
        sched = build_schedule(g, plan.sequence)
        plain = simulate(g, sched)
        live = simulate(g, liveness_pass(g, sched))
        assert plain.peak_live_memory == plan.evaluation.peak_memory
        rows.append(
            StrategyRow(
                name,
                plan.evaluation.peak_memory,
                live.peak_live_memory,
                plain.peak_live_memory,
                plan.evaluation.overhead,
                _reduction(baseline, live.peak_live_memory),
            )
        )
    return RunReport(tuple(rows))
