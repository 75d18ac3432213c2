"""Whole-body dynamic control for floating-base robots."""

from ._wbdc import (
    Error,
    Infeasible,
    QpError,
    QpResult,
    RobotModel,
    Scenario,
    SimulationAborted,
    bench_scenario,
    load_model,
    load_model_file,
    load_scenario,
    run_scenario,
    solve_qp,
)

__all__ = [
    "Error",
    "Infeasible",
    "QpError",
    "QpResult",
    "RobotModel",
    "Scenario",
    "SimulationAborted",
    "bench_scenario",
    "load_model",
    "load_model_file",
    "load_scenario",
    "run_scenario",
    "solve_qp",
]
