"""Information-theoretic multi-agent target search on occupancy grids."""

from infosearch.belief import (
    DegeneratePosteriorError,
    MotionModel,
    Observation,
    SensorModel,
    TargetBelief,
    correct,
    correct_all,
    predict,
    reset_uniform_unknown,
)
from infosearch.gridworld import (
    FovFootprint,
    GridDims,
    OccupancyGrid,
    Pose,
    cell_entropy,
    decay_to_unknown,
    fov_cells,
    observe,
    total_entropy,
)
from infosearch.planner import NoPathError, Path, ReparamPath, astar, reparameterize
from infosearch.selection import (
    AgentSpec,
    Candidate,
    ClaimedCells,
    PlannerParams,
    PlanRound,
    information_gain,
    path_cost,
    plan_round,
    select_path,
)
from infosearch.waypoints import Waypoint, get_frontiers, sample_waypoints_vcd

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "Candidate",
    "ClaimedCells",
    "DegeneratePosteriorError",
    "FovFootprint",
    "GridDims",
    "MotionModel",
    "NoPathError",
    "Observation",
    "OccupancyGrid",
    "Path",
    "PlanRound",
    "PlannerParams",
    "Pose",
    "ReparamPath",
    "SensorModel",
    "TargetBelief",
    "Waypoint",
    "astar",
    "cell_entropy",
    "correct",
    "correct_all",
    "decay_to_unknown",
    "fov_cells",
    "get_frontiers",
    "information_gain",
    "observe",
    "path_cost",
    "plan_round",
    "predict",
    "reparameterize",
    "reset_uniform_unknown",
    "sample_waypoints_vcd",
    "select_path",
    "total_entropy",
]
