from .metrics import PathErrorMetrics, compute_path_error, write_metrics
from .scenario import (
    EXIT_CONFIG, EXIT_GENERATION, EXIT_OK, EXIT_PLAN, EXIT_TIMEOUT,
    ConfigError, ExitReport, ScenarioConfig, build_world, load_scenario,
    run_scenario, scenario_from_dict,
)
from .trajectory import (
    TrajectoryLog, generate_pentagon_reference, refined_endpoint_error,
    run_oscillator_trajectory,
)

__all__ = [
    "EXIT_CONFIG", "EXIT_GENERATION", "EXIT_OK", "EXIT_PLAN", "EXIT_TIMEOUT",
    "ConfigError", "ExitReport", "PathErrorMetrics", "ScenarioConfig",
    "TrajectoryLog", "build_world", "compute_path_error",
    "generate_pentagon_reference", "load_scenario", "refined_endpoint_error",
    "run_oscillator_trajectory", "run_scenario", "scenario_from_dict",
    "write_metrics",
]
