"""Trial execution loop: issue, run, report, rank.

Arms carry a runner callable so the same engine drives real training jobs
and simulated losses. With parallelism=1 the loop is strictly sequential
and bit-reproducible; otherwise a thread pool keeps up to `parallelism`
trials in flight and results are reported in completion order.
"""
from __future__ import annotations

import time
import traceback
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import AllTrialsFailed, Exhausted
from ..learners import HpSpace, Loss
from .bandit import (
    PipelineState,
    Trial,
    TunerConfig,
    TunerState,
    next_action,
    report_result,
)

# runner(trial, seed) -> (Loss, payload dict merged into the leaderboard row)
Runner = Callable[[Trial, int], tuple[Loss, dict]]


@dataclass
class TunerArm:
    pipeline_id: str
    space: HpSpace
    seeds: list[dict]
    runner: Runner


@dataclass
class LeaderboardEntry:
    rank: int
    trial_id: int
    pipeline_id: str
    hp: dict
    loss: float
    loss_kind: str
    logloss: Optional[float]
    extra: dict = field(default_factory=dict)


@dataclass
class Leaderboard:
    entries: list[LeaderboardEntry]

    @property
    def best(self) -> LeaderboardEntry:
        return self.entries[0]


def trial_seed(base_seed: int, trial_id: int) -> int:
    """Stable per-trial training seed, independent of scheduling order."""
    return int(
        np.random.SeedSequence(entropy=base_seed, spawn_key=(9000 + trial_id,)).generate_state(1)[0]
    )


def build_leaderboard(state: TunerState) -> Leaderboard:
    finished = [t for t in state.trials.values() if t.state == "finished"]
    finished.sort(
        key=lambda t: (
            t.loss.value,
            t.loss.logloss if t.loss.logloss is not None else float("inf"),
            t.trial_id,
        )
    )
    entries = [
        LeaderboardEntry(
            rank=i + 1,
            trial_id=t.trial_id,
            pipeline_id=t.pipeline_id,
            hp=dict(t.hp),
            loss=t.loss.value,
            loss_kind=t.loss.kind,
            logloss=t.loss.logloss,
            extra=dict(t.payload),
        )
        for i, t in enumerate(finished)
    ]
    return Leaderboard(entries=entries)


def _execute(trial: Trial, arm: TunerArm, cfg: TunerConfig):
    started = time.monotonic()
    try:
        loss, payload = arm.runner(trial, trial_seed(cfg.seed, trial.trial_id))
        return trial, loss, payload, None, time.monotonic() - started
    except Exception:
        return trial, None, None, traceback.format_exc(limit=3), time.monotonic() - started


def _log(sink, record: dict):
    if sink is not None:
        sink(record)


def _report(state: TunerState, outcome, sink) -> None:
    trial, loss, payload, error, duration = outcome
    trial.duration = duration
    if error is None:
        trial.payload = payload
        report_result(state, trial.trial_id, loss=loss)
        _log(
            sink,
            {
                "event": "finished",
                "trial": trial.trial_id,
                "loss": loss.value,
                "loss_kind": loss.kind,
                "logloss": loss.logloss,
            },
        )
    else:
        report_result(state, trial.trial_id, error=error)
        _log(sink, {"event": "failed", "trial": trial.trial_id, "error": error.splitlines()[-1]})


def run(
    arms: list[TunerArm],
    cfg: TunerConfig,
    log_sink: Optional[Callable[[dict], None]] = None,
) -> tuple[Leaderboard, TunerState]:
    """Explore the arms under budget/epsilon/parallelism; rank finished trials."""
    if not arms:
        raise ValueError("need at least one pipeline")
    if cfg.total_budget < len(arms):
        raise ValueError(
            f"budget {cfg.total_budget} is below the pipeline count {len(arms)}"
        )
    by_id = {a.pipeline_id: a for a in arms}
    state = TunerState(
        [
            PipelineState(pipeline_id=a.pipeline_id, space=a.space, seeds=list(a.seeds))
            for a in arms
        ],
        seed=cfg.seed,
    )
    deadline = time.monotonic() + cfg.max_runtime if cfg.max_runtime else None

    def issue() -> Optional[Trial]:
        if deadline is not None and time.monotonic() >= deadline:
            return None
        try:
            trial = next_action(state, cfg)
        except Exhausted:
            return None
        _log(
            log_sink,
            {
                "event": "suggested",
                "trial": trial.trial_id,
                "pipeline": trial.pipeline_id,
                "hp": trial.hp,
                "phase": state.phase,
            },
        )
        trial.state = "running"
        _log(log_sink, {"event": "running", "trial": trial.trial_id})
        return trial

    if cfg.parallelism == 1:
        while True:
            trial = issue()
            if trial is None:
                break
            _report(state, _execute(trial, by_id[trial.pipeline_id], cfg), log_sink)
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            pending = set()
            stop = False
            while True:
                while not stop and len(pending) < cfg.parallelism:
                    trial = issue()
                    if trial is None:
                        stop = True
                        break
                    pending.add(pool.submit(_execute, trial, by_id[trial.pipeline_id], cfg))
                if not pending:
                    break
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for future in done:
                    _report(state, future.result(), log_sink)

    leaderboard = build_leaderboard(state)
    if not leaderboard.entries:
        if state.issued > 0:
            raise AllTrialsFailed("every trial failed; nothing to rank")
        raise AllTrialsFailed("wall-clock limit expired before any trial ran")
    return leaderboard, state
