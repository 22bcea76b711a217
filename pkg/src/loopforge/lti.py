"""Continuous SISO transfer functions and their exact ZOH discretization.

Plants are stored as rational transfer functions with a pure dead time. For
simulation they are realized in controllable canonical form and sampled with
a zero-order hold; the dead time becomes an integer number of samples that
the closed-loop simulator handles with a delay buffer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ImproperSystem, InvalidCoefficients, NegativeDelay, NonFiniteResult

DEFAULT_DT_SIM = 0.01


@dataclass(frozen=True)
class TransferFunction:
    """``num(s) / den(s) * exp(-delay * s)`` with coefficients in descending powers.

    Build through :func:`make_tf`, which validates and normalizes so that
    ``den[0] == 1``.
    """

    num: tuple[float, ...]
    den: tuple[float, ...]
    delay: float = 0.0

    @property
    def order(self) -> int:
        return len(self.den) - 1

    @property
    def dc_gain(self) -> float:
        if self.den[-1] == 0.0:
            return float("inf")
        return self.num[-1] / self.den[-1]

    def scaled(self, factor: float) -> TransferFunction:
        """Same dynamics with the numerator multiplied by ``factor``."""
        return TransferFunction(tuple(c * factor for c in self.num), self.den, self.delay)

    def with_delay(self, delay: float) -> TransferFunction:
        return make_tf(self.num, self.den, delay)

    def to_dict(self) -> dict:
        return {"num": list(self.num), "den": list(self.den), "delay": self.delay}


@dataclass(frozen=True, eq=False)
class DiscretePlant:
    """ZOH-sampled state-space plant ``x+ = A x + B u[k-d]``, ``y = C x + D u[k-d]``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    dt: float
    delay_steps: int = 0

    def __post_init__(self):
        m = self.A.shape[0]
        if self.A.shape != (m, m) or self.B.shape != (m,) or self.C.shape != (m,):
            raise ValueError(
                f"inconsistent dimensions A{self.A.shape} B{self.B.shape} C{self.C.shape}"
            )
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.delay_steps < 0:
            raise NegativeDelay("delay_steps must be >= 0")
        for arr in (self.A, self.B, self.C):
            arr.setflags(write=False)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]


def _strip_leading_zeros(coeffs: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        return coeffs[-1:]
    return coeffs[nz[0]:]


def make_tf(num: Sequence[float], den: Sequence[float], delay: float = 0.0) -> TransferFunction:
    """Validate and normalize a transfer function (monic denominator)."""
    den_arr = np.asarray(den, dtype=float).ravel()
    num_arr = np.asarray(num, dtype=float).ravel()
    if den_arr.size == 0 or den_arr[0] == 0.0:
        raise InvalidCoefficients("denominator must be nonempty with a nonzero leading coefficient")
    if num_arr.size == 0:
        raise InvalidCoefficients("numerator must be nonempty")
    if not (np.all(np.isfinite(den_arr)) and np.all(np.isfinite(num_arr))):
        raise InvalidCoefficients("coefficients must be finite")
    delay = float(delay)
    if not np.isfinite(delay):
        raise InvalidCoefficients("delay must be finite")
    if delay < 0:
        raise NegativeDelay(f"delay must be >= 0, got {delay}")
    num_arr = _strip_leading_zeros(num_arr)
    if num_arr.size > den_arr.size:
        raise ImproperSystem(
            f"numerator degree {num_arr.size - 1} exceeds denominator degree {den_arr.size - 1}"
        )
    lead = den_arr[0]
    return TransferFunction(
        tuple(float(c) for c in num_arr / lead),
        tuple(float(c) for c in den_arr / lead),
        delay,
    )


def tf_to_ss(tf: TransferFunction) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Controllable canonical realization ``(A, B, C, D)``.

    ``B`` and ``C`` are returned as 1-D arrays (SISO). The dead time is not
    part of the realization.
    """
    den = np.asarray(tf.den)
    m = den.size - 1
    num = np.zeros(m + 1)
    num[m + 1 - len(tf.num):] = tf.num
    D = float(num[0])
    A = np.zeros((m, m))
    if m:
        A[0, :] = -den[1:]
        A[1:, :-1] = np.eye(m - 1)
    B = np.zeros(m)
    if m:
        B[0] = 1.0
    C = num[1:] - den[1:] * D
    return A, B, C, D


def zoh_discretize(
    ss: tuple[np.ndarray, np.ndarray, np.ndarray, float],
    dt: float,
    delay: float = 0.0,
) -> DiscretePlant:
    """Exact zero-order-hold sampling via one augmented matrix exponential.

    ``expm([[A, B], [0, 0]] * dt)`` holds ``exp(A dt)`` in its upper-left
    block and ``int_0^dt exp(A t) dt B`` in the upper-right column.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    A, B, C, D = ss
    m = A.shape[0]
    aug = np.zeros((m + 1, m + 1))
    aug[:m, :m] = A
    aug[:m, m] = B
    with np.errstate(over="ignore", invalid="ignore"):
        phi = expm(aug * dt)
    if not np.all(np.isfinite(phi)):
        raise NonFiniteResult("matrix exponential overflowed; reduce dt")
    return DiscretePlant(
        A=phi[:m, :m].copy(),
        B=phi[:m, m].copy(),
        C=np.array(C, dtype=float),
        D=float(D),
        dt=float(dt),
        delay_steps=int(round(delay / dt)),
    )


def discretize(tf: TransferFunction, dt: float = DEFAULT_DT_SIM) -> DiscretePlant:
    """Realize and sample ``tf``; dead time rounds to the nearest multiple of ``dt``."""
    return zoh_discretize(tf_to_ss(tf), dt, tf.delay)


def open_loop_step(plant: DiscretePlant, steps: int) -> np.ndarray:
    """Plant output at samples ``0..steps-1`` for a unit step input applied at t=0."""
    x = np.zeros(plant.n_states)
    y = np.empty(steps)
    d = plant.delay_steps
    for j in range(steps):
        u = 1.0 if j >= d else 0.0
        y[j] = plant.C @ x + plant.D * u
        x = plant.A @ x + plant.B * u
    return y
