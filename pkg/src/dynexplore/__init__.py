"""Deterministic simulator and verification suite for mobile-agent
exploration on dynamic graphs with per-round port relabelling."""

from .graphs import (
    ComponentDecomposition,
    HoleFreeDecomposition,
    OccupiedSubgraph,
    Schedule,
    ScheduleError,
    Snapshot,
    SnapshotViolation,
    bfs_distances,
    cc_without_holes,
    check_connectivity_time,
    check_interval_connectivity,
    connected_components,
    validate_snapshot,
)
from .runtime import (
    Algorithm,
    CommSpec,
    Configuration,
    FULL,
    GLOBAL,
    Move,
    MoveDecision,
    RoundResult,
    STAY,
    SimulationError,
    SpecError,
    VisibilityRegion,
    deliver_messages,
    move_via,
    step_round,
    visibility_region,
)
from .exploration import (
    ExpAlgo,
    HOLE,
    ReconstructedMap,
    ReconstructionError,
    ViewRecord,
    lex_shortest_path,
    map_phase1,
    map_phase2,
    plan_moves,
    views_from_region,
)
from .policies import (
    FullVisibilityGreedy,
    Greedy0Hop,
    Restless0Hop,
    ScriptAlgorithm,
    StayAlgorithm,
)
from .adversaries import (
    AdversaryError,
    CTImpossibilityAdversary,
    CTPortFlipAdversary,
    IntervalFlipAdversary,
    RandomCTAdversary,
    build_G1,
    build_G2,
    order_nodes_by_occupancy,
    what_if,
)
from .verification import (
    CoverageTracker,
    SSetPartition,
    check_agent_bound,
    check_gap_condition,
    check_movement_inequality,
    max_agents,
    monitor_coverage,
    monitor_hole_dynamics,
)
from .harness import (
    ALGORITHMS,
    MonitorSuite,
    RunResult,
    default_monitors,
    replay_trace,
    run_simulation,
)

__version__ = "0.1.0"
