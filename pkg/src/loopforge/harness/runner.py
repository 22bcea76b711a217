"""End-to-end scenario runs that leave artifacts on disk."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .io import write_episodes, write_response, write_summary
from .scenario import RunResult, Scenario, load_scenario, run_experiment

log = logging.getLogger(__name__)


def summarize(result: RunResult) -> dict:
    sc = result.scenario
    recs = result.records
    t = sc.tuner
    summary = {
        "scenario": sc.name,
        "plant_num": list(sc.plant.num),
        "plant_den": list(sc.plant.den),
        "plant_delay": sc.plant.delay,
        "controller_order": sc.controller_order,
        "sample_dt": sc.grid.sample_dt,
        "n": sc.grid.n,
        "horizon": sc.grid.horizon,
        "dt_sim": sc.dt_sim,
        "alpha": t.alpha,
        "sigma": t.sigma,
        "N": t.N,
        "q": t.q,
        "episodes": t.episodes,
        "seed": t.seed,
        "sigma_r_floor": t.sigma_r_floor,
        "initial_gains": result.K0.tolist(),
        "final_gains": (recs[-1].updated_gains if recs else result.K0).tolist(),
        "initial_mae": recs[0].mae if recs else None,
        "final_mae": recs[-1].mae if recs else None,
        "diverged_episodes": sum(1 for r in recs if r.diverged[0]),
    }
    if sc.drift is not None:
        summary.update(
            drift_final_gain_scale=sc.drift.final_gain_scale,
            drift_end_episode=sc.drift.end_episode,
            drift_delay_noise_std=sc.drift.delay_noise_std,
        )
    return summary


def write_artifacts(result: RunResult, out_dir: Path) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    times = result.scenario.grid.times
    write_episodes(out_dir / "episodes.csv", result.records)
    if result.records:
        write_response(out_dir / "response_first.csv", times, result.records[0].response)
        write_response(out_dir / "response_last.csv", times, result.records[-1].response)
    write_response(out_dir / "target.csv", times, result.target)
    summary = summarize(result)
    write_summary(out_dir / "summary.json", summary)
    return summary


def run_scenario(
    path, out_dir, seed: int | None = None, episodes: int | None = None,
    scenario: Scenario | None = None,
) -> dict:
    """Load, train, and write ``episodes.csv``, response traces and ``summary.json``.

    Configuration problems raise :class:`~loopforge.errors.ConfigError` before
    anything is written.
    """
    if scenario is None:
        scenario = load_scenario(path, seed=seed, episodes=episodes)
    log.info("running %s: %d episodes, seed %d", scenario.name, scenario.tuner.episodes, scenario.tuner.seed)
    result = run_experiment(scenario)
    return write_artifacts(result, out_dir)
