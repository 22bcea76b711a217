"""Command line entry point: ``loopforge {run,simulate,simc}``.

Exit status is 0 on success, 2 for configuration errors and 1 for failures
during a run.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..closedloop import GainVector, SamplingGrid, simulate_closed_loop
from ..errors import ConfigError, LoopforgeError
from ..lti import DEFAULT_DT_SIM, discretize, make_tf
from ..simc import FopdtModel, default_tau_c, simc_pi
from .io import write_response
from .runner import run_scenario

log = logging.getLogger("loopforge")


def _parse_gains(text: str) -> GainVector:
    try:
        return GainVector.from_array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad --gains {text!r}: {exc}") from exc


def cmd_run(args) -> int:
    summary = run_scenario(args.scenario, args.out_dir, seed=args.seed, episodes=args.episodes)
    print(json.dumps({k: summary[k] for k in ("final_gains", "initial_mae", "final_mae")}))
    return 0


def cmd_simulate(args) -> int:
    try:
        spec = json.loads(Path(args.plant).read_text())
        tf = make_tf(spec["num"], spec["den"], spec.get("delay", 0.0))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot load plant {args.plant}: {exc}") from exc
    gains = _parse_gains(args.gains)
    grid = SamplingGrid.from_horizon(args.sample_dt, args.horizon)
    resp = simulate_closed_loop(discretize(tf, args.dt_sim), gains, grid)
    if resp.diverged:
        log.warning("closed loop diverged; samples held at the output cap")
    write_response(Path(args.out), grid.times, resp.samples)
    return 0


def cmd_simc(args) -> int:
    model = FopdtModel(args.gain, args.tau, args.theta)
    tau_c = default_tau_c(model) if args.tau_c is None else args.tau_c
    g = simc_pi(model, tau_c)
    print(json.dumps({"kp": g.kp, "ki": g.ki, "kd": 0.0, "tau_c": tau_c}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loopforge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="tune a controller for a scenario file")
    p.add_argument("--scenario", required=True, help="scenario JSON (or bundled ex1.json / ex2.json)")
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="closed-loop step response to CSV")
    p.add_argument("--plant", required=True, help='JSON file with "num", "den", "delay"')
    p.add_argument("--gains", required=True, help="kp,ki[,kd]")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--sample-dt", type=float, default=0.3)
    p.add_argument("--dt-sim", type=float, default=DEFAULT_DT_SIM)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("simc", help="SIMC PI gains for a FOPDT model")
    p.add_argument("--gain", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--tau-c", type=float)
    p.set_defaults(func=cmd_simc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except LoopforgeError as exc:
        if args.command == "run" and not isinstance(exc, ConfigError):
            log.error("run failed: %s", exc)
            return 1
        log.error("configuration error: %s", exc)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.error("run failed: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
