"""ε-greedy candidate exploration with seeded, random, and GP-BO suggestion."""
from .bandit import (
    EPSILON_GREEDY,
    EXPLORATION,
    QUARANTINE_AFTER,
    PipelineState,
    Trial,
    TunerConfig,
    TunerState,
    next_action,
    report_result,
    suggest_random,
)
from .bo import GaussianProcess, expected_improvement, suggest_bo
from .engine import (
    Leaderboard,
    LeaderboardEntry,
    TunerArm,
    build_leaderboard,
    run,
    trial_seed,
)

__all__ = [
    "EPSILON_GREEDY",
    "EXPLORATION",
    "GaussianProcess",
    "Leaderboard",
    "LeaderboardEntry",
    "PipelineState",
    "QUARANTINE_AFTER",
    "Trial",
    "TunerArm",
    "TunerConfig",
    "TunerState",
    "build_leaderboard",
    "expected_improvement",
    "next_action",
    "report_result",
    "run",
    "suggest_bo",
    "suggest_random",
    "trial_seed",
]
