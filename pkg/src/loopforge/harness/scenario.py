"""Scenario files, target generation and per-episode plant drift."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from ..closedloop import GainVector, ResponseVector, SamplingGrid, simulate_closed_loop
from ..errors import ConfigError, InvalidTarget, LoopforgeError
from ..lti import DEFAULT_DT_SIM, DiscretePlant, TransferFunction, discretize, make_tf
from ..simc import FopdtModel, simc_pi
from ..tuner import EpisodeRecord, Policy, TunerConfig, train

SEED_ENV = "LOOPFORGE_SEED"
BUNDLED = ("ex1.json", "ex2.json")


@dataclass(frozen=True)
class DriftSpec:
    final_gain_scale: float = 1.0
    end_episode: int = 0
    delay_noise_std: float = 0.0

    def __post_init__(self):
        if self.end_episode < 0:
            raise ConfigError("drift end_episode must be >= 0")
        if self.delay_noise_std < 0:
            raise ConfigError("drift delay_noise_std must be >= 0")

    def gain_scale(self, episode: int) -> float:
        """Linear ramp from 1 at episode 0 to ``final_gain_scale`` at ``end_episode``."""
        if episode >= self.end_episode:
            return self.final_gain_scale
        return 1.0 + (self.final_gain_scale - 1.0) * episode / self.end_episode


@dataclass(frozen=True)
class DriftState:
    episode: int
    gain: float
    delay: float


def drifted_plant(
    nominal: TransferFunction, spec: DriftSpec, episode: int, rng: np.random.Generator | None
) -> TransferFunction:
    """The plant seen at the start of ``episode``: scaled numerator, jittered delay."""
    delay = nominal.delay
    if spec.delay_noise_std > 0:
        delay = max(0.0, nominal.delay + rng.normal(0.0, spec.delay_noise_std))
    return TransferFunction(nominal.scaled(spec.gain_scale(episode)).num, nominal.den, delay)


def drift_state(plant: TransferFunction, episode: int) -> DriftState:
    return DriftState(episode, plant.dc_gain, plant.delay)


def make_target(
    plant: TransferFunction | DiscretePlant,
    gains: GainVector | np.ndarray,
    grid: SamplingGrid,
    dt_sim: float = DEFAULT_DT_SIM,
) -> ResponseVector:
    """Sampled closed-loop step response under ``gains``; must be a usable reference."""
    if isinstance(plant, TransferFunction):
        plant = discretize(plant, dt_sim)
    target = simulate_closed_loop(plant, gains, grid)
    if target.diverged:
        raise InvalidTarget("target gains give a diverging closed loop")
    if np.max(np.abs(target.samples)) < 1e-9:
        raise InvalidTarget("target response is identically zero")
    return target


def seed_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for direction sampling, initial gains and drift noise."""
    children = np.random.SeedSequence(seed).spawn(3)
    return {
        name: np.random.Generator(np.random.PCG64(ss))
        for name, ss in zip(("directions", "init", "drift"), children)
    }


@dataclass
class Scenario:
    name: str
    plant: TransferFunction
    controller_order: int
    grid: SamplingGrid
    target: dict[str, Any]
    init: dict[str, Any]
    tuner: TunerConfig
    drift: DriftSpec | None = None
    dt_sim: float = DEFAULT_DT_SIM
    raw: dict[str, Any] = field(default_factory=dict, repr=False)

    def initial_gains(self, rng: np.random.Generator) -> np.ndarray:
        kind = self.init["kind"]
        k = self.controller_order
        if kind == "given":
            K0 = np.asarray(self.init["gains"], dtype=float)
        elif kind == "random":
            hw = float(self.init.get("half_width", 0.1))
            if self.init.get("seed") is not None:
                rng = np.random.default_rng(int(self.init["seed"]))
            K0 = rng.uniform(-hw, hw, k)
        elif kind == "simc":
            m = self.init["model"]
            model = FopdtModel(float(m["gain"]), float(m["tau1"]), float(m.get("theta", 0.0)))
            tau_c = self.init.get("tau_c")
            K0 = simc_pi(model, None if tau_c is None else float(tau_c)).as_array()
        else:
            raise ConfigError(f"unknown init kind {kind!r}")
        if K0.size == 2 and k == 3:
            K0 = np.append(K0, 0.0)
        if K0.size != k:
            raise ConfigError(f"initial gains have length {K0.size}, controller_order is {k}")
        return K0

    def target_response(self, K0: np.ndarray) -> np.ndarray:
        kind = self.target["kind"]
        if kind == "samples":
            x = np.asarray(self.target["samples"], dtype=float)
            if x.size != self.grid.n:
                raise ConfigError(f"target has {x.size} samples, grid has {self.grid.n}")
            return x
        if kind == "gains":
            gains = np.asarray(self.target["gains"], dtype=float)
        elif kind == "init":
            gains = K0
        else:
            raise ConfigError(f"unknown target kind {kind!r}")
        return make_target(self.plant, gains, self.grid, self.dt_sim).samples


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing key {key!r} in {where}")
    return d[key]


def resolve_path(path: str | os.PathLike) -> Path:
    """Existing file path, or one of the bundled scenarios by file name."""
    p = Path(path)
    if p.is_file():
        return p
    if p.name in BUNDLED and not p.parent.parts:
        return Path(str(resources.files("loopforge.harness") / "scenarios" / p.name))
    raise ConfigError(f"scenario file not found: {path}")


def parse_scenario(data: dict[str, Any], seed: int | None = None, episodes: int | None = None) -> Scenario:
    """Build a :class:`Scenario` from parsed JSON. Overrides beat file values."""
    try:
        pl = _require(data, "plant", "scenario")
        plant = make_tf(_require(pl, "num", "plant"), _require(pl, "den", "plant"), pl.get("delay", 0.0))
        k = int(data.get("controller_order", 3))
        if k not in (2, 3):
            raise ConfigError("controller_order must be 2 or 3")
        g = data.get("grid", {})
        sample_dt = float(g.get("sample_dt", 0.3))
        dt_sim = float(g.get("dt_sim", DEFAULT_DT_SIM))
        if "n" in g:
            grid = SamplingGrid(sample_dt, int(g["n"]))
        else:
            grid = SamplingGrid.from_horizon(sample_dt, float(g.get("horizon", 30.0)))
        grid.stride(dt_sim)

        t = dict(data.get("tuner", {}))
        if episodes is not None:
            t["episodes"] = episodes
        if seed is not None:
            t["seed"] = seed
        elif t.get("seed") is None:
            t["seed"] = int(os.environ.get(SEED_ENV, 0))
        fields_ = {f for f in TunerConfig.__dataclass_fields__}
        unknown = set(t) - fields_
        if unknown:
            raise ConfigError(f"unknown tuner keys: {sorted(unknown)}")
        tuner = TunerConfig(**t)

        drift = None
        if data.get("drift"):
            drift = DriftSpec(**data["drift"])
            if drift.end_episode > tuner.episodes:
                raise ConfigError(
                    f"drift end_episode {drift.end_episode} exceeds episodes {tuner.episodes}"
                )
        target = dict(_require(data, "target", "scenario"))
        init = dict(_require(data, "init", "scenario"))
        for spec, where in ((target, "target"), (init, "init")):
            _require(spec, "kind", where)
    except ConfigError:
        raise
    except (LoopforgeError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return Scenario(
        name=str(data.get("name", "scenario")),
        plant=plant,
        controller_order=k,
        grid=grid,
        target=target,
        init=init,
        tuner=tuner,
        drift=drift,
        dt_sim=dt_sim,
        raw=data,
    )


def load_scenario(path, seed: int | None = None, episodes: int | None = None) -> Scenario:
    p = resolve_path(path)
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    return parse_scenario(data, seed=seed, episodes=episodes)


@dataclass
class RunResult:
    scenario: Scenario
    K0: np.ndarray
    target: np.ndarray
    policy: Policy
    records: list[EpisodeRecord]


def prepare(scenario: Scenario) -> tuple[np.ndarray, np.ndarray, dict[str, np.random.Generator]]:
    """Initial gains, target data and RNG streams; raises ConfigError on bad inputs."""
    streams = seed_streams(scenario.tuner.seed)
    try:
        K0 = scenario.initial_gains(streams["init"])
        target = scenario.target_response(K0)
    except ConfigError:
        raise
    except (LoopforgeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if target.size != scenario.grid.n:
        raise ConfigError(f"target length {target.size} != grid size {scenario.grid.n}")
    return K0, target, streams


def run_experiment(scenario: Scenario, callbacks=()) -> RunResult:
    K0, target, streams = prepare(scenario)
    if scenario.drift is None:
        plant = discretize(scenario.plant, scenario.dt_sim)
    else:
        drift, nominal, rng = scenario.drift, scenario.plant, streams["drift"]

        def plant(e: int) -> DiscretePlant:
            return discretize(drifted_plant(nominal, drift, e, rng), scenario.dt_sim)

    policy, records = train(
        plant, target, K0, scenario.grid, scenario.tuner,
        rng=streams["directions"], callbacks=callbacks,
    )
    return RunResult(scenario, K0, target, policy, records)


def with_tuner(scenario: Scenario, **changes) -> Scenario:
    """Copy of ``scenario`` with tuner fields replaced."""
    return replace(scenario, tuner=replace(scenario.tuner, **changes))
