"""CSV and JSON artifacts written by ``loopforge run`` and ``loopforge simulate``."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

import numpy as np

from ..tuner import EpisodeRecord

EPISODE_COLUMNS = ("episode", "reward", "mae", "kp", "ki", "kd", "sigma_r", "diverged_count")


def _fmt(v: float) -> str:
    # repr round-trips floats exactly
    return repr(float(v))


def episode_row(rec: EpisodeRecord) -> list[str]:
    g = rec.gains
    kd = _fmt(g[2]) if g.size > 2 else ""
    return [
        str(rec.episode), _fmt(rec.reward), _fmt(rec.mae), _fmt(g[0]), _fmt(g[1]), kd,
        _fmt(rec.sigma_r), str(rec.diverged_count),
    ]


def write_episodes(path: Path, records: Iterable[EpisodeRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EPISODE_COLUMNS)
        for rec in records:
            w.writerow(episode_row(rec))


def read_episodes(path: Path) -> list[dict]:
    """Parse an episode log; ``kd`` is ``None`` for PI runs."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "episode": int(row["episode"]),
                "reward": float(row["reward"]),
                "mae": float(row["mae"]),
                "kp": float(row["kp"]),
                "ki": float(row["ki"]),
                "kd": float(row["kd"]) if row["kd"] else None,
                "sigma_r": float(row["sigma_r"]),
                "diverged_count": int(row["diverged_count"]),
            })
    return rows


def write_response(path: Path, times: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "y"))
        for t, v in zip(times, y):
            w.writerow((_fmt(t), _fmt(v)))


def read_response(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_summary(path: Path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")
