"""Tracking rewards and integral error measures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch


@dataclass(frozen=True)
class RewardConfig:
    q: int = 1

    def __post_init__(self):
        if self.q not in (1, 2):
            raise ValueError(f"q must be 1 or 2, got {self.q!r}")


def _samples(x) -> np.ndarray:
    return np.asarray(getattr(x, "samples", x), dtype=float)


def reward(x, target, cfg: RewardConfig | int = RewardConfig()) -> float:
    """Negative mean ``|x - target|**q``; zero only for an exact match."""
    q = cfg.q if isinstance(cfg, RewardConfig) else RewardConfig(cfg).q
    xs, ts = _samples(x), _samples(target)
    if xs.shape != ts.shape:
        raise LengthMismatch(f"response has {xs.size} samples, target has {ts.size}")
    dev = np.abs(xs - ts)
    return -float(np.mean(dev if q == 1 else dev * dev))


def batch_reward(responses: np.ndarray, target, q: int = 1) -> np.ndarray:
    """Row-wise :func:`reward` for a ``(b, n)`` array of responses."""
    ts = _samples(target)
    if responses.shape[-1] != ts.size:
        raise LengthMismatch(f"responses have {responses.shape[-1]} samples, target has {ts.size}")
    dev = np.abs(responses - ts)
    if q == 2:
        dev = dev * dev
    return -dev.mean(axis=-1)


def mae(x, target) -> float:
    return -reward(x, target, RewardConfig(1))


def iae(errors, sample_dt: float) -> float:
    """Left-endpoint rectangle rule for the integral of ``|e|``."""
    e = np.asarray(errors, dtype=float)
    return float(np.sum(np.abs(e)) * sample_dt)


def ise(errors, sample_dt: float) -> float:
    e = np.asarray(errors, dtype=float)
    return float(np.sum(e * e) * sample_dt)
