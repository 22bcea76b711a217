"""Skogestad SIMC PI tuning for first-order-plus-dead-time models."""
from __future__ import annotations

from dataclasses import dataclass

from .closedloop import GainVector
from .errors import NonPositiveTauC, ZeroGain


@dataclass(frozen=True)
class FopdtModel:
    """``gain * exp(-theta s) / (tau1 s + 1)``."""

    gain: float
    tau1: float
    theta: float = 0.0

    def __post_init__(self):
        if self.gain == 0:
            raise ZeroGain("process gain must be nonzero")
        if not self.tau1 > 0:
            raise ValueError("tau1 must be positive")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")


def default_tau_c(model: FopdtModel) -> float:
    """Tight tuning ``tau_c = theta``; falls back to ``0.1 * tau1`` for zero dead time."""
    return model.theta if model.theta > 0 else 0.1 * model.tau1


def simc_pi(model: FopdtModel, tau_c: float | None = None) -> GainVector:
    """PI gains in parallel form.

    kp = tau1 / (K (tau_c + theta)),  T_I = min(tau1, 4 (tau_c + theta)),
    ki = kp / T_I.
    """
    if model.gain == 0:
        raise ZeroGain("process gain must be nonzero")
    if tau_c is None:
        tau_c = default_tau_c(model)
    if not tau_c > 0:
        raise NonPositiveTauC(f"tau_c must be positive, got {tau_c}")
    kp = model.tau1 / (model.gain * (tau_c + model.theta))
    t_i = min(model.tau1, 4.0 * (tau_c + model.theta))
    return GainVector(kp, kp / t_i)
