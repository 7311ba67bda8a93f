from .core import (
    ALGORITHMS,
    NO_BUDGET,
    EngineConfig,
    EngineError,
    GossipState,
    StepReport,
    Trace,
    greedy_select,
    init_state,
    run_state,
    run_trial,
    step,
    step_geographic,
    step_gge,
    step_rg,
)

__all__ = [
    "ALGORITHMS", "NO_BUDGET", "EngineConfig", "EngineError", "GossipState", "StepReport",
    "Trace", "greedy_select", "init_state", "run_state", "run_trial", "step",
    "step_geographic", "step_gge", "step_rg",
]
