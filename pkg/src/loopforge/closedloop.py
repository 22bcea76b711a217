"""Discrete PID law and set-point step closed-loop rollouts.

The controller is the parallel form ``u = kp e + ki int(e) + kd de/dt`` acting
on the tracking error ``e = r - y`` (``r = 1`` unless given). The integral is
accumulated by backward Euler and the derivative is realized as
``kd s / (T_f s + 1)``, also by backward Euler, with ``T_f = 10 * dt`` unless
overridden.

Rollouts are run by a numba kernel over a batch of gain vectors so that the
2N perturbed loops of one tuning episode cost a single call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .errors import GridMismatch, ShapeMismatch
from .lti import DiscretePlant

Y_CAP = 10.0
DERIV_FILTER_STEPS = 10.0


@dataclass(frozen=True)
class GainVector:
    """PI (``kd is None``) or PID gains."""

    kp: float
    ki: float
    kd: float | None = None

    @property
    def k(self) -> int:
        return 2 if self.kd is None else 3

    def as_array(self) -> np.ndarray:
        vals = [self.kp, self.ki] if self.kd is None else [self.kp, self.ki, self.kd]
        return np.array(vals, dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> GainVector:
        vals = [float(v) for v in values]
        if len(vals) not in (2, 3):
            raise ShapeMismatch(f"expected 2 or 3 gains, got {len(vals)}")
        if not all(np.isfinite(vals)):
            raise ValueError(f"gains must be finite, got {vals}")
        return cls(*vals)


@dataclass(frozen=True)
class SamplingGrid:
    """Reporting times ``0, sample_dt, ..., (n-1) sample_dt``."""

    sample_dt: float
    n: int

    def __post_init__(self):
        if not self.sample_dt > 0:
            raise ValueError("sample_dt must be positive")
        if self.n < 2:
            raise ValueError("a sampling grid needs at least 2 samples")

    @classmethod
    def from_horizon(cls, sample_dt: float, horizon: float) -> SamplingGrid:
        return cls(sample_dt, int(round(horizon / sample_dt)) + 1)

    @property
    def horizon(self) -> float:
        return (self.n - 1) * self.sample_dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.sample_dt

    def stride(self, dt: float) -> int:
        """Number of simulation steps per reported sample."""
        ratio = self.sample_dt / dt
        steps = int(round(ratio))
        if steps < 1 or abs(ratio - steps) > 1e-9 * max(1.0, ratio):
            raise GridMismatch(
                f"sample_dt={self.sample_dt} is not an integer multiple of dt={dt}"
            )
        return steps


@dataclass(frozen=True, eq=False)
class ResponseVector:
    samples: np.ndarray
    diverged: bool = False

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    lowpass: float = 0.0


def pid_control_step(
    state: PidState, error: float, gains: GainVector | Sequence[float], dt: float,
    deriv_filter: float | None = None,
) -> tuple[float, PidState]:
    """Advance the controller by one sample and return ``(u, new_state)``.

    The derivative uses ``kd s/(T_f s+1) = (kd/T_f)(1 - 1/(T_f s+1))``; the
    low-pass part keeps the only derivative memory, so this equals the
    filtered backward difference of the error.
    """
    kp, ki, kd = _gain_triplet(gains)
    tf = DERIV_FILTER_STEPS * dt if deriv_filter is None else deriv_filter
    integral = state.integral + ki * dt * error
    d_term = kd * (error - state.lowpass) / (tf + dt)
    lowpass = (tf * state.lowpass + dt * error) / (tf + dt)
    u = kp * error + integral + d_term
    return u, PidState(integral, lowpass)


def _gain_triplet(gains) -> tuple[float, float, float]:
    if isinstance(gains, GainVector):
        return gains.kp, gains.ki, 0.0 if gains.kd is None else gains.kd
    g = [float(v) for v in gains]
    if len(g) == 2:
        return g[0], g[1], 0.0
    if len(g) == 3:
        return g[0], g[1], g[2]
    raise ShapeMismatch(f"expected 2 or 3 gains, got {len(g)}")


@numba.njit(cache=True)
def _rollout_kernel(A, B, C, D, delay, gains, dt, tf, stride, n, setpoint, y_cap, out, diverged):
    m = A.shape[0]
    steps = (n - 1) * stride
    x = np.zeros(m)
    xn = np.zeros(m)
    buf = np.zeros(max(delay, 1))
    for b in range(gains.shape[0]):
        kp = gains[b, 0]
        ki = gains[b, 1]
        kd = gains[b, 2]
        # u = a + slope * e, with a built from controller memory only
        slope = kp + ki * dt + kd / (tf + dt)
        for i in range(m):
            x[i] = 0.0
        for i in range(buf.size):
            buf[i] = 0.0
        integral = 0.0
        lowpass = 0.0
        diverged[b] = False
        for j in range(steps + 1):
            a = integral - kd * lowpass / (tf + dt)
            cx = 0.0
            for i in range(m):
                cx += C[i] * x[i]
            if delay == 0:
                # algebraic loop when D != 0
                y = (cx + D * (a + slope * setpoint)) / (1.0 + D * slope)
            else:
                y = cx + D * buf[j % delay]
            if not (abs(y) <= y_cap):
                diverged[b] = True
                hold = y_cap
                if y < 0.0:
                    hold = -y_cap
                for s in range((j + stride - 1) // stride, n):
                    out[b, s] = hold
                break
            if j % stride == 0:
                out[b, j // stride] = y
            e = setpoint - y
            u = a + slope * e
            integral += ki * dt * e
            lowpass = (tf * lowpass + dt * e) / (tf + dt)
            if delay == 0:
                uin = u
            else:
                uin = buf[j % delay]
                buf[j % delay] = u
            for i in range(m):
                acc = B[i] * uin
                for l in range(m):
                    acc += A[i, l] * x[l]
                xn[i] = acc
            for i in range(m):
                x[i] = xn[i]


def simulate_batch(
    plant: DiscretePlant,
    gains: np.ndarray,
    grid: SamplingGrid,
    y_cap: float = Y_CAP,
    deriv_filter: float | None = None,
    setpoint: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Roll out one closed loop per row of ``gains`` (shape ``(b, 2|3)``).

    Returns sampled outputs ``(b, n)`` and a ``(b,)`` boolean divergence mask.
    """
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    if gains.shape[1] == 2:
        gains = np.hstack([gains, np.zeros((gains.shape[0], 1))])
    elif gains.shape[1] != 3:
        raise ShapeMismatch(f"gain rows must have 2 or 3 entries, got {gains.shape[1]}")
    stride = grid.stride(plant.dt)
    tf = DERIV_FILTER_STEPS * plant.dt if deriv_filter is None else float(deriv_filter)
    out = np.empty((gains.shape[0], grid.n))
    diverged = np.zeros(gains.shape[0], dtype=np.bool_)
    _rollout_kernel(
        plant.A, plant.B, plant.C, float(plant.D), int(plant.delay_steps),
        np.ascontiguousarray(gains), float(plant.dt), tf, stride, grid.n,
        float(setpoint), float(y_cap), out, diverged,
    )
    return out, diverged


def simulate_closed_loop(
    plant: DiscretePlant,
    gains: GainVector | Sequence[float],
    grid: SamplingGrid,
    y_cap: float = Y_CAP,
    deriv_filter: float | None = None,
    setpoint: float = 1.0,
) -> ResponseVector:
    """Set-point step response (unit by default) of the PID loop around ``plant``, sampled on ``grid``.

    Plant state, integrator, derivative filter and delay buffer start at zero.
    If the output leaves ``[-y_cap, y_cap]`` (or turns non-finite) the rollout
    stops and the remaining samples hold at ``+-y_cap``.
    """
    g = np.array(_gain_triplet(gains))
    if not np.all(np.isfinite(g)):
        raise ValueError("gains must be finite")
    out, div = simulate_batch(plant, g[None, :], grid, y_cap, deriv_filter, setpoint)
    return ResponseVector(out[0], bool(div[0]))
