import json

import numpy as np
import pytest

from loopforge.closedloop import SamplingGrid
from loopforge.errors import ConfigError, InvalidTarget
from loopforge.harness import (
    EPISODE_COLUMNS,
    DriftSpec,
    drift_state,
    drifted_plant,
    load_scenario,
    make_target,
    parse_scenario,
    read_episodes,
    read_response,
    run_experiment,
    run_scenario,
    seed_streams,
)
from loopforge.harness.cli import main
from loopforge.harness.io import write_episodes
from loopforge.lti import make_tf

NOMINAL = make_tf([-0.02], [1, 1], 1.0)
EX2_DRIFT = DriftSpec(final_gain_scale=1.3, end_episode=400, delay_noise_std=0.05)
TRIPLE = make_tf([1], [1, 3, 3, 1])


def small_scenario(**tuner):
    base = {
        "name": "small",
        "plant": {"num": [1], "den": [1, 3, 3, 1]},
        "grid": {"sample_dt": 0.3, "horizon": 30},
        "target": {"kind": "gains", "gains": [2.5, 1.5, 1.0]},
        "init": {"kind": "given", "gains": [0.5, 0.3, 0.1]},
        "tuner": {"episodes": 60, "seed": 3, **tuner},
    }
    return base


class TestDrift:
    def gain(self, e, rng=None):
        return drifted_plant(NOMINAL, EX2_DRIFT, e, rng or np.random.default_rng(0)).num[0]

    def test_nominal_at_start(self):
        assert self.gain(0) == pytest.approx(-0.02, abs=1e-15)

    def test_final_numerator(self):
        assert self.gain(400) == pytest.approx(-0.026, abs=1e-15)
        assert self.gain(400) == -0.02 * 1.3

    def test_midpoint(self):
        assert self.gain(200) == pytest.approx(-0.023, abs=1e-15)

    def test_constant_after_end(self):
        assert self.gain(450) == self.gain(400) == self.gain(10_000)

    def test_linear_ramp(self):
        g = np.array([self.gain(e) for e in range(401)])
        np.testing.assert_allclose(np.diff(g, 2), 0.0, atol=1e-15)

    def test_delay_noise_clamped_at_zero(self):
        rng = np.random.default_rng(0)
        spec = DriftSpec(1.0, 0, delay_noise_std=5.0)
        delays = [drifted_plant(NOMINAL, spec, e, rng).delay for e in range(200)]
        assert min(delays) == 0.0
        assert max(delays) > 1.0

    def test_delay_noise_statistics(self):
        rng = np.random.default_rng(1)
        delays = np.array([drifted_plant(NOMINAL, EX2_DRIFT, e, rng).delay for e in range(4000)])
        assert delays.mean() == pytest.approx(1.0, abs=0.005)
        assert delays.std() == pytest.approx(0.05, abs=0.005)

    def test_no_noise_keeps_delay(self):
        spec = DriftSpec(1.3, 400, 0.0)
        assert drifted_plant(NOMINAL, spec, 5, None).delay == 1.0

    def test_state(self):
        st = drift_state(drifted_plant(NOMINAL, DriftSpec(1.3, 400), 400, None), 400)
        assert st.gain == pytest.approx(-0.026, abs=1e-15)
        assert st.delay == 1.0


class TestTarget:
    grid = SamplingGrid.from_horizon(0.3, 30)

    def test_example1_target(self):
        t = make_target(TRIPLE, (2.5, 1.5, 1.0), self.grid)
        assert t.samples[-1] == pytest.approx(1.0, abs=0.01)

    def test_zero_gains_rejected(self):
        with pytest.raises(InvalidTarget):
            make_target(TRIPLE, (0, 0, 0), self.grid)

    def test_unstable_gains_rejected(self):
        with pytest.raises(InvalidTarget):
            make_target(TRIPLE, (20, 0, 0), self.grid)

    def test_deterministic(self):
        a = make_target(TRIPLE, (2.5, 1.5, 1.0), self.grid).samples
        b = make_target(TRIPLE, (2.5, 1.5, 1.0), self.grid).samples
        assert a.tobytes() == b.tobytes()


class TestScenario:
    def test_bundled_ex1(self):
        sc = load_scenario("ex1.json")
        assert sc.grid.n == 101 and sc.grid.sample_dt == 0.3
        assert (sc.tuner.alpha, sc.tuner.sigma, sc.tuner.N, sc.tuner.episodes) == (0.005, 0.005, 10, 3000)
        assert sc.drift is None

    def test_bundled_ex2(self):
        sc = load_scenario("ex2.json")
        assert sc.grid.n == 71
        assert (sc.tuner.alpha, sc.tuner.sigma, sc.tuner.N, sc.tuner.episodes) == (0.01, 0.05, 1, 500)
        assert sc.drift == EX2_DRIFT
        assert sc.controller_order == 2
        np.testing.assert_allclose(sc.initial_gains(np.random.default_rng(0)), [-25.0, -25.0])

    def test_random_init_range(self):
        sc = load_scenario("ex1.json")
        K0 = sc.initial_gains(seed_streams(4)["init"])
        assert K0.shape == (3,) and np.all(np.abs(K0) <= 0.1)

    def test_seed_priority(self, monkeypatch):
        monkeypatch.setenv("LOOPFORGE_SEED", "17")
        assert load_scenario("ex1.json").tuner.seed == 17
        assert load_scenario("ex1.json", seed=3).tuner.seed == 3
        assert parse_scenario(small_scenario()).tuner.seed == 3
        monkeypatch.delenv("LOOPFORGE_SEED")
        assert load_scenario("ex1.json").tuner.seed == 0

    def test_episode_override(self):
        assert load_scenario("ex1.json", episodes=12).tuner.episodes == 12

    def test_drift_must_end_within_run(self):
        with pytest.raises(ConfigError):
            load_scenario("ex2.json", episodes=100)

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: d.pop("plant"),
            lambda d: d["plant"].update(num=[1, 1, 1, 1, 1]),
            lambda d: d["tuner"].update(alpha=-1),
            lambda d: d["tuner"].update(bogus=1),
            lambda d: d.update(controller_order=4),
            lambda d: d["grid"].update(sample_dt=0.305),
            lambda d: d["target"].pop("kind"),
        ],
    )
    def test_invalid(self, mutate):
        data = small_scenario()
        mutate(data)
        with pytest.raises(ConfigError):
            parse_scenario(data)

    def test_explicit_target_samples(self):
        data = small_scenario(episodes=3)
        data["target"] = {"kind": "samples", "samples": [1.0] * 101}
        res = run_experiment(parse_scenario(data))
        np.testing.assert_array_equal(res.target, 1.0)

    def test_target_length_checked(self):
        data = small_scenario()
        data["target"] = {"kind": "samples", "samples": [1.0] * 50}
        with pytest.raises(ConfigError):
            run_experiment(parse_scenario(data))

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_scenario("/nonexistent/scenario.json")


class TestArtifacts:
    def test_csv_round_trip(self, tmp_path):
        res = run_experiment(parse_scenario(small_scenario(episodes=25)))
        write_episodes(tmp_path / "e.csv", res.records)
        rows = read_episodes(tmp_path / "e.csv")
        assert len(rows) == 25
        for row, rec in zip(rows, res.records):
            assert row["episode"] == rec.episode
            assert row["reward"] == rec.reward
            assert row["mae"] == rec.mae
            assert [row["kp"], row["ki"], row["kd"]] == rec.gains.tolist()
            assert row["sigma_r"] == rec.sigma_r
            assert row["diverged_count"] == rec.diverged_count

    def test_run_scenario_outputs(self, tmp_path):
        data = small_scenario(episodes=200)
        path = tmp_path / "s.json"
        path.write_text(json.dumps(data))
        summary = run_scenario(path, tmp_path / "out")
        out = tmp_path / "out"
        for name in ("episodes.csv", "response_first.csv", "response_last.csv", "summary.json"):
            assert (out / name).is_file()
        assert (out / "episodes.csv").read_text().splitlines()[0] == ",".join(EPISODE_COLUMNS)
        t, y = read_response(out / "response_last.csv")
        assert t.size == y.size == 101
        assert (out / "response_first.csv").read_text().startswith("t,y\n")
        on_disk = json.loads((out / "summary.json").read_text())
        assert on_disk == json.loads(json.dumps(summary))
        assert on_disk["final_mae"] < on_disk["initial_mae"]
        assert len(on_disk["final_gains"]) == 3
        assert on_disk["seed"] == 3 and on_disk["alpha"] == 0.005

    def test_ex2_trajectory_columns(self, tmp_path):
        run_scenario("ex2.json", tmp_path)
        rows = read_episodes(tmp_path / "episodes.csv")
        assert len(rows) == 500
        assert all(np.isfinite(r["kp"]) and np.isfinite(r["ki"]) and r["kd"] is None for r in rows)
        assert rows[0]["kp"] == pytest.approx(-25.0)


class TestCli:
    def test_missing_scenario(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--scenario", str(tmp_path / "nope.json"), "--out-dir", str(out)]) == 2
        assert not out.exists()

    def test_malformed_scenario(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", "--scenario", str(bad), "--out-dir", str(tmp_path / "o")]) == 2
        assert not (tmp_path / "o").exists()

    def test_run(self, tmp_path, capsys):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(small_scenario()))
        out = tmp_path / "o"
        assert main(["run", "--scenario", str(path), "--episodes", "5", "--seed", "2", "--out-dir", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["episodes"] == 5 and summary["seed"] == 2
        assert "final_gains" in json.loads(capsys.readouterr().out)

    def test_simulate(self, tmp_path):
        plant = tmp_path / "p.json"
        plant.write_text(json.dumps({"num": [1], "den": [1, 1], "delay": 0}))
        out = tmp_path / "r.csv"
        rc = main(["simulate", "--plant", str(plant), "--gains", "1,0", "--horizon", "10",
                   "--sample-dt", "0.3", "--out", str(out)])
        assert rc == 0
        assert out.read_text().startswith("t,y\n")
        t, y = read_response(out)
        np.testing.assert_allclose(y, 0.5 * (1 - np.exp(-2 * t)), atol=5e-3)

    def test_simulate_bad_gains(self, tmp_path):
        plant = tmp_path / "p.json"
        plant.write_text(json.dumps({"num": [1], "den": [1, 1]}))
        rc = main(["simulate", "--plant", str(plant), "--gains", "1", "--horizon", "3",
                   "--out", str(tmp_path / "r.csv")])
        assert rc == 2

    def test_simc(self, capsys):
        assert main(["simc", "--gain", "-0.02", "--tau", "1", "--theta", "1"]) == 0
        g = json.loads(capsys.readouterr().out)
        assert g["kp"] == pytest.approx(-25.0) and g["ki"] == pytest.approx(-25.0) and g["kd"] == 0.0

    def test_simc_invalid(self):
        assert main(["simc", "--gain", "0", "--tau", "1", "--theta", "1"]) == 2

    def test_usage_error(self):
        assert main(["run"]) == 2
