"""Job orchestration: directory layout, workflows, CLI, benchmark harness."""
from .job import JobConfig, JobReport, run_analyze, run_fit, run_generate, run_rerun

__all__ = [
    "JobConfig",
    "JobReport",
    "run_analyze",
    "run_fit",
    "run_generate",
    "run_rerun",
]
