"""Offline trajectory design: block coordinate descent over user scheduling
and the horizontal/vertical flight path, maximizing a statistical
energy-efficiency objective under sampled wind."""
from .scenario import (
    Scenario,
    Trajectory,
    Schedule,
    SlackState,
    OfflinePlan,
    TraceRow,
    init_plan,
    round_schedule,
    check_feasible,
    CAP_MARGIN,
)
from .exact import (
    slot_wind_vectors,
    tight_slacks,
    p_ub,
    rate_floor_matrix,
    user_rate_sums,
    exact_objective,
    plan_energy,
)
from .surrogate import (
    build_slack_constraints,
    build_rate_block,
    HorizontalStep,
    VerticalStep,
    schedule_program,
)
from .descent import (
    optimize_schedule,
    optimize_horizontal,
    optimize_vertical,
    plan_offline,
    PlannerError,
)

__all__ = [
    "Scenario", "Trajectory", "Schedule", "SlackState", "OfflinePlan",
    "TraceRow", "init_plan", "round_schedule", "check_feasible", "CAP_MARGIN",
    "slot_wind_vectors", "tight_slacks", "p_ub", "rate_floor_matrix",
    "user_rate_sums", "exact_objective", "plan_energy",
    "build_slack_constraints", "build_rate_block", "HorizontalStep",
    "VerticalStep", "schedule_program",
    "optimize_schedule", "optimize_horizontal", "optimize_vertical",
    "plan_offline", "PlannerError",
]
