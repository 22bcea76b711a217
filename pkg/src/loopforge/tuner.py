"""Random-search tuning of a linear gain policy against a target step response.

The policy maps a sampled closed-loop response ``x`` (length n) to gains
``K = M x + K0``. Each episode rolls out the current gains, probes ``M`` along
N Gaussian directions in both signs, and moves ``M`` along the
reward-difference-weighted average direction. The step is divided by the
spread of the 2N probe rewards.

Gaussian directions come from numpy's ``Generator(PCG64)`` and its ziggurat
``standard_normal``; given the seed these are identical on every platform.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .closedloop import SamplingGrid, simulate_batch
from .errors import ShapeMismatch
from .lti import DiscretePlant
from .objective import batch_reward

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Policy:
    M: np.ndarray
    K0: np.ndarray

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        K0 = np.array(self.K0, dtype=float).ravel()
        if M.ndim != 2 or M.shape[0] != K0.size:
            raise ShapeMismatch(f"M{M.shape} incompatible with K0 of length {K0.size}")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(K0))):
            raise ValueError("policy entries must be finite")
        M.setflags(write=False)
        K0.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "K0", K0)

    @classmethod
    def zeros(cls, K0: Sequence[float], n: int) -> Policy:
        K0 = np.asarray(K0, dtype=float)
        return cls(np.zeros((K0.size, n)), K0)

    @property
    def k(self) -> int:
        return self.M.shape[0]

    @property
    def n(self) -> int:
        return self.M.shape[1]


@dataclass(frozen=True)
class TunerConfig:
    alpha: float = 0.005
    sigma: float = 0.005
    N: int = 10
    q: int = 1
    episodes: int = 3000
    seed: int = 0
    sigma_r_floor: float = 1e-12

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.q not in (1, 2):
            raise ValueError("q must be 1 or 2")


@dataclass(eq=False)
class EpisodeRecord:
    episode: int
    gains: np.ndarray
    reward: float
    mae: float
    rewards_plus: np.ndarray
    rewards_minus: np.ndarray
    sigma_r: float
    updated_gains: np.ndarray
    diverged: np.ndarray
    response: np.ndarray = field(repr=False)

    @property
    def diverged_count(self) -> int:
        return int(np.count_nonzero(self.diverged))


def policy_action(policy: Policy, x) -> np.ndarray:
    """Gains ``K0 + M x``."""
    x = np.asarray(getattr(x, "samples", x), dtype=float)
    if x.shape != (policy.n,):
        raise ShapeMismatch(f"response of shape {x.shape} does not match policy width {policy.n}")
    return policy.K0 + policy.M @ x


def sample_directions(rng: np.random.Generator, N: int, k: int, n: int) -> np.ndarray:
    """``(N, k, n)`` i.i.d. standard normals, direction-major."""
    return rng.standard_normal((N, k, n))


def perturbed_policies(M: np.ndarray, deltas: np.ndarray, sigma: float) -> np.ndarray:
    """Stack ``[M + sigma d_1, ..., M + sigma d_N, M - sigma d_1, ..., M - sigma d_N]``."""
    step = sigma * deltas
    return np.concatenate([M + step, M - step])


def update_step(
    M: np.ndarray,
    rewards_plus: np.ndarray,
    rewards_minus: np.ndarray,
    deltas: np.ndarray,
    alpha: float,
    sigma_r_floor: float = 1e-12,
) -> tuple[np.ndarray, float]:
    """Return ``(M_new, sigma_r)``.

    ``sigma_r`` is the population standard deviation of all 2N rewards. When
    it does not exceed ``sigma_r_floor`` the rewards carry no direction and
    ``M`` is returned unchanged.
    """
    rewards_plus = np.asarray(rewards_plus, dtype=float)
    rewards_minus = np.asarray(rewards_minus, dtype=float)
    pooled = np.sort(np.concatenate([rewards_plus, rewards_minus]))
    # sorted so the value does not depend on probe order; exact zero for ties
    sigma_r = 0.0 if pooled[0] == pooled[-1] else float(np.std(pooled))
    if not sigma_r > sigma_r_floor:
        return M, sigma_r
    diffs = rewards_plus - rewards_minus
    direction = np.tensordot(diffs, deltas, axes=1) / len(diffs)
    return M + (alpha / sigma_r) * direction, sigma_r


def episode(
    policy: Policy,
    gains: np.ndarray,
    plant: DiscretePlant,
    target,
    grid: SamplingGrid,
    cfg: TunerConfig,
    rng: np.random.Generator | None = None,
    index: int = 0,
    deltas: np.ndarray | None = None,
) -> tuple[Policy, np.ndarray, EpisodeRecord]:
    """One pass of the tuning loop; returns ``(policy, next_gains, record)``.

    ``deltas`` overrides the directions otherwise drawn from ``rng``.
    """
    target = np.asarray(getattr(target, "samples", target), dtype=float)
    if target.size != policy.n or grid.n != policy.n:
        raise ShapeMismatch(
            f"target ({target.size}), grid ({grid.n}) and policy ({policy.n}) widths differ"
        )
    gains = np.asarray(gains, dtype=float)
    ys, div0 = simulate_batch(plant, gains[None, :], grid)
    x = ys[0]
    r0 = float(batch_reward(ys, target, cfg.q)[0])
    mae = float(np.mean(np.abs(x - target)))

    if deltas is None:
        deltas = sample_directions(rng, cfg.N, policy.k, policy.n)
    probes = perturbed_policies(policy.M, deltas, cfg.sigma) @ x + policy.K0
    yp, divp = simulate_batch(plant, probes, grid)
    rp = batch_reward(yp, target, cfg.q)
    N = len(deltas)
    r_plus, r_minus = rp[:N], rp[N:]

    M, sigma_r = update_step(policy.M, r_plus, r_minus, deltas, cfg.alpha, cfg.sigma_r_floor)
    new_policy = policy if M is policy.M else Policy(M, policy.K0)
    # same x as the rollout above, not a fresh one
    next_gains = new_policy.M @ x + new_policy.K0
    record = EpisodeRecord(
        episode=index,
        gains=gains.copy(),
        reward=r0,
        mae=mae,
        rewards_plus=r_plus,
        rewards_minus=r_minus,
        sigma_r=sigma_r,
        updated_gains=next_gains,
        diverged=np.concatenate([div0, divp]),
        response=x,
    )
    return new_policy, next_gains, record


def train(
    plant: DiscretePlant | Callable[[int], DiscretePlant],
    target,
    K0: Sequence[float],
    grid: SamplingGrid,
    cfg: TunerConfig,
    rng: np.random.Generator | None = None,
    callbacks: Sequence[Callable[[EpisodeRecord], None]] = (),
) -> tuple[Policy, list[EpisodeRecord]]:
    """Run ``cfg.episodes`` episodes from ``M = 0`` and ``K = K0``.

    ``plant`` may be a callable ``episode_index -> DiscretePlant``; it is
    invoked at the start of each episode before the nominal rollout, which is
    where plant drift and delay noise are injected.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    policy = Policy.zeros(K0, grid.n)
    gains = policy.K0.copy()
    plant_at = plant if callable(plant) else (lambda _e: plant)
    records: list[EpisodeRecord] = []
    for e in range(cfg.episodes):
        policy, gains, rec = episode(
            policy, gains, plant_at(e), target, grid, cfg, rng=rng, index=e
        )
        records.append(rec)
        for cb in callbacks:
            cb(rec)
        if e % 500 == 0:
            log.debug("episode %d mae=%.3g gains=%s", e, rec.mae, rec.gains)
    return policy, records
