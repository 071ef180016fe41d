"""Recomputation planning for computation graphs.

Given a DAG of intermediate values with per-node compute and memory costs,
find a segmentation of the forward pass that trades recompute time for peak
memory under a budget, and verify the plan by exact schedule simulation.
"""

from .benchmarks import TopologySpec, articulation_points, chen_baseline_plan, generate
from .graph import (
    ComputationGraph,
    GraphError,
    NodeInfo,
    NodeSet,
    aggregate_costs,
    ancestors_closure,
    boundary,
    delta_minus,
    delta_plus,
    dump_graph,
    graph_from_document,
    graph_to_document,
    is_lower_set,
    load_graph,
    neighborhoods,
)
from .lattice import LatticeTooLargeError, LowerSetFamily, all_lower_sets, pruned_lower_sets
from .planner import (
    PlanRequest,
    PlanResult,
    PlannerError,
    SearchCapExceeded,
    dfs_exhaustive_plan,
    dp_plan,
    memory_centric_plan,
    min_feasible_budget,
)
from .report import RunReport, StrategyRow, build_report
from .schedule import (
    BackwardCompute,
    ForwardCompute,
    Free,
    SimulationError,
    SimulationReport,
    ValueRef,
    build_schedule,
    liveness_pass,
    simulate,
    vanilla_schedule,
)
from .strategy import (
    LowerSetSequence,
    SequenceError,
    StrategyEvaluation,
    make_sequence,
    overhead,
    peak_memory,
    stage_memories,
)

__version__ = "0.1.0"
