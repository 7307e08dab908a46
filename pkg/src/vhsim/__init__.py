"""Conflict-avoidance behavior planning and crowd simulation for a virtual
human sharing a public space with pedestrians who cannot see it."""

from .geometry import Environment, Pose, Segment, Vec2, narrow_passage, open_square
from .prediction import AvoidanceParams, PedestrianState, Phase, PredictedTrajectory
from .proxemics import ArrangementType, ProxemicsParams, SpatialContext
from .comfort import ComfortCoefficients
from .planner import CandidatePlan, ConflictAvoidancePlanner, PlannerCoefficients, PlannerParams, PlanPhase
from .simulation import (
    ConflictEvent,
    ConflictKind,
    ScenarioConfig,
    TrialMetrics,
    reduction_ratio,
    run_trial,
    spawn_flow,
)
from .cli import ExperimentSpec, ResultRow, parse_scenario, run_ablation, run_matrix

__version__ = "0.1.0"
