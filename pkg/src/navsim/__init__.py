"""navsim: a deterministic 2D robot-navigation simulator with procedural
worlds, simulated LiDAR/odometry, a language-plan execution loop, a JSON
pub/sub bridge, and a trajectory-fidelity harness."""

from .kinematics import (
    OscillatorParams, Pose, SimClock, Twist, integrate_step, normalize_angle,
    oscillatory_omega,
)
from .lang import (
    Plan, PlanError, PrimitiveCall, parse_plan, render_area_description,
    render_plan, render_world_description, validate_plan,
)
from .procgen import (
    AreaSpec, EnvironmentSpec, GridLayout, InfeasiblePlacement, InvalidSpec,
    check_connectivity, generate_environment, partition_grid,
)
from .sensors import LidarConfig, OdometrySample, ScanFrame, lidar_scan, sample_odometry
from .world import (
    Agent, Area, Ball, CircleObstacle, Event, RectObstacle, WorldParams,
    WorldState, Zone, drop_ball, pick_up_ball, step_world,
)

__version__ = "0.1.0"

__all__ = [
    "Agent", "Area", "AreaSpec", "Ball", "CircleObstacle", "EnvironmentSpec",
    "Event", "GridLayout", "InfeasiblePlacement", "InvalidSpec", "LidarConfig",
    "OdometrySample", "OscillatorParams", "Plan", "PlanError", "Pose",
    "PrimitiveCall", "RectObstacle", "ScanFrame", "SimClock", "Twist",
    "WorldParams", "WorldState", "Zone", "check_connectivity", "drop_ball",
    "generate_environment", "integrate_step", "lidar_scan", "normalize_angle",
    "oscillatory_omega", "parse_plan", "partition_grid", "pick_up_ball",
    "render_area_description", "render_plan", "render_world_description",
    "sample_odometry", "step_world", "validate_plan",
]
