import json
import math

import numpy as np
import pytest

from beatgait.errors import CommandRangeError, InputError
from beatgait.harness import (
    ESTIMATOR_MODES,
    FREQ_TRACK_COMMANDS,
    MODES,
    REWARD_VARIANTS,
    RunLog,
    ScenarioConfig,
    SimState,
    run_estimator_curriculum,
    run_frequency_tracking,
    run_rhythm_sync,
    scheduler_tick,
)


class TestScenarioConfig:
    def test_mode_defaults(self):
        ft = ScenarioConfig(mode="freq_track").resolve()
        assert ft.duration == 5.0 and ft.rate_plant_hz == 500
        assert ft.f_cmd == 2.0
        rs = ScenarioConfig(mode="rhythm_sync").resolve()
        assert rs.duration == 30.0 and rs.rate_plant_hz == 100
        assert rs.synth_bpm == 120.0 and rs.f_cmd is None
        cu = ScenarioConfig(mode="estimator_curriculum").resolve()
        assert cu.duration == 5.0 and cu.rate_plant_hz == 500

    def test_explicit_values_survive_resolve(self):
        cfg = ScenarioConfig(mode="freq_track", duration=2.0, f_cmd=3.5,
                             rate_plant_hz=200).resolve()
        assert cfg.duration == 2.0 and cfg.f_cmd == 3.5
        assert cfg.rate_plant_hz == 200

    def test_audio_path_suppresses_synth_default(self):
        cfg = ScenarioConfig(mode="rhythm_sync", audio_path="x.wav").resolve()
        assert cfg.synth_bpm is None

    def test_shared_defaults(self):
        cfg = ScenarioConfig(mode="rhythm_sync")
        assert cfg.v_cmd == 0.8 and cfg.seed == 0
        assert cfg.rate_oscillator_hz == 1000 and cfg.rate_modulator_hz == 20
        assert cfg.warmup_s == 5.0 and cfg.target_leg == 1
        assert cfg.gain_k == 2.0 and cfg.error_mode == "footfall"
        assert cfg.feedforward is False and cfg.estimator_mode == "learned"

    def test_variant_tuples(self):
        assert MODES == ("freq_track", "rhythm_sync", "estimator_curriculum")
        assert REWARD_VARIANTS == ("rhythm", "r1", "r2")
        assert ESTIMATOR_MODES == ("learned", "fallback")
        assert FREQ_TRACK_COMMANDS == (1.5, 2.0, 2.5, 3.0, 3.5, 4.0)

    @pytest.mark.parametrize("kwargs", [
        {"mode": "dance"},
        {"mode": "freq_track", "reward": "r9"},
        {"mode": "freq_track", "seed": -1},
        {"mode": "freq_track", "seed": 1.5},
        {"mode": "freq_track", "duration": 0.0},
        {"mode": "freq_track", "warmup_s": -1.0},
        {"mode": "freq_track", "target_leg": 0},
        {"mode": "freq_track", "perturb_rad": -0.1},
        {"mode": "freq_track", "iterations": 0},
        {"mode": "freq_track", "estimator_mode": "psychic"},
    ])
    def test_field_validation(self, kwargs):
        with pytest.raises(InputError):
            ScenarioConfig(**kwargs)

    def test_rate_ladder_must_divide(self):
        with pytest.raises(InputError):
            ScenarioConfig(mode="freq_track", rate_plant_hz=300).resolve()
        with pytest.raises(InputError):
            ScenarioConfig(mode="freq_track", rate_plant_hz=100,
                           rate_modulator_hz=30).resolve()
        with pytest.raises(InputError):
            ScenarioConfig(mode="freq_track", rate_plant_hz=0).resolve()

    def test_round_trip(self):
        cfg = ScenarioConfig(mode="rhythm_sync", synth_bpm=96.0, seed=7,
                             gain_k=3.0, feedforward=True)
        again = ScenarioConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(InputError, match="unknown config keys"):
            ScenarioConfig.from_dict({"mode": "freq_track", "speed": 3})

    def test_missing_mode_rejected(self):
        with pytest.raises(InputError, match="mode"):
            ScenarioConfig.from_dict({"f_cmd": 2.0})

    def test_non_object_rejected(self):
        with pytest.raises(InputError):
            ScenarioConfig.from_dict([1, 2, 3])

    def test_from_json(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"mode": "freq_track", "f_cmd": 2.5}))
        cfg = ScenarioConfig.from_json(p)
        assert cfg.f_cmd == 2.5

    def test_from_json_invalid(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(InputError, match="not valid JSON"):
            ScenarioConfig.from_json(p)


class TestRunLog:
    def test_stream_shape_validation(self):
        log = RunLog({"seed": 0})
        with pytest.raises(InputError):
            log.add_stream("osc", ["t", "x"], np.zeros((5, 3)))
        with pytest.raises(InputError):
            log.add_stream("osc", ["t", "x"], np.zeros(5))

    def test_timestamps_must_increase(self):
        log = RunLog({})
        data = np.array([[0.0, 1.0], [0.0, 2.0]])
        with pytest.raises(InputError, match="increase strictly"):
            log.add_stream("osc", ["t", "x"], data)

    def test_write_names_and_header(self, tmp_path):
        log = RunLog({"seed": 3, "mode": "freq_track"})
        log.add_stream("osc", ["t", "x"], np.array([[0.0, 1.0], [0.1, 2.0]]))
        log.add_stream("mod", ["t", "y"], np.array([[0.0, 5.0]]))
        paths = {p.name for p in log.write(tmp_path)}
        assert paths == {"runlog.csv", "runlog.mod.csv"}
        lines = (tmp_path / "runlog.csv").read_text().splitlines()
        assert lines[0] == "# mode=freq_track seed=3"
        assert lines[1] == "t,x"
        assert len(lines) == 4

    def test_write_round_trips_floats(self, tmp_path):
        # %.17g preserves doubles exactly through the text format
        vals = np.array([[0.1, 1.0 / 3.0], [0.2, math.pi]])
        log = RunLog({})
        log.add_stream("plant", ["t", "v"], vals)
        log.write(tmp_path)
        back = np.loadtxt(tmp_path / "runlog.plant.csv", delimiter=",", skiprows=2)
        assert np.array_equal(back, vals)


def _idle_state(plant_fn=None, mod_fn=None):
    return SimState(phases=np.array([0.1, 0.2, 0.3, 0.4]),
                    om=np.full(4, 2.0), sg=np.zeros(4), xi=np.zeros(4),
                    dt=1e-3, plant_every=10, mod_every=50,
                    plant_fn=plant_fn, mod_fn=mod_fn)


class TestScheduler:
    def test_update_counts(self):
        state = _idle_state()
        for _ in range(1000):
            scheduler_tick(state)
        assert state.n_plant_updates == 100
        assert state.n_mod_updates == 20
        assert state.tick == 1000
        assert state.t == pytest.approx(1.0)

    def test_zero_order_hold(self):
        held = []

        def plant_fn(state):
            return np.full(4, state.tick / 1000.0)

        state = _idle_state(plant_fn=plant_fn)
        for _ in range(25):
            scheduler_tick(state)
            held.append(state.g_held[0])
        # value set at tick 0 persists through tick 9, refresh at tick 10
        assert held[:10] == [0.0] * 10
        assert held[10:20] == [0.010] * 10
        assert held[20:25] == [0.020] * 5

    def test_modulator_sees_fresh_plant_value(self):
        seen = []

        def plant_fn(state):
            return np.full(4, 0.42)

        def mod_fn(state):
            seen.append(state.g_held[0])
            return None

        state = _idle_state(plant_fn=plant_fn, mod_fn=mod_fn)
        scheduler_tick(state)
        assert seen == [0.42]

    def test_none_command_keeps_frequency(self):
        state = _idle_state(mod_fn=lambda s: None)
        om_before = state.om.copy()
        for _ in range(100):
            scheduler_tick(state)
        assert np.array_equal(state.om, om_before)

    def test_command_replaces_frequency(self):
        state = _idle_state(mod_fn=lambda s: 3.5)
        scheduler_tick(state)
        assert np.all(state.om == 3.5)

    def test_phases_advance_by_held_rate(self):
        state = _idle_state()
        p0 = state.phases.copy()
        scheduler_tick(state)
        assert state.phases == pytest.approx(p0 + 2.0 * 1e-3)


class TestFrequencyTracking:
    def test_report_and_artifacts(self, tmp_path):
        cfg = ScenarioConfig(mode="freq_track", f_cmd=2.0, duration=5.0,
                             outdir=str(tmp_path / "run"))
        runlog, metrics, report = run_frequency_tracking(cfg)
        assert report["mode"] == "freq_track" and report["f_cmd_hz"] == 2.0
        assert set(report["per_leg"]) == {"RF", "LF", "RH", "LH"}
        for stats in report["per_leg"].values():
            assert stats["mean_abs_dev_hz"] < 0.05
            assert stats["variance_hz2"] < 0.01
        assert metrics.freq_dev_mean == report["per_leg"]["RF"]["mean_abs_dev_hz"]

        outdir = tmp_path / "run"
        for name in ("report.json", "config.echo.json", "runlog.csv",
                     "runlog.plant.csv"):
            assert (outdir / name).exists()
        echo = json.loads((outdir / "config.echo.json").read_text())
        assert echo["f_cmd"] == 2.0 and echo["rate_plant_hz"] == 500
        loaded = json.loads((outdir / "report.json").read_text())
        assert loaded["per_leg"] == report["per_leg"]

    def test_stream_shapes(self):
        cfg = ScenarioConfig(mode="freq_track", f_cmd=3.0, duration=2.0)
        runlog, _, _ = run_frequency_tracking(cfg)
        cols, osc = runlog.streams["osc"]
        assert cols[0] == "t" and osc.shape == (2000, 6)
        _, plant = runlog.streams["plant"]
        assert plant.shape == (1000, 9)

    def test_out_of_band_command(self):
        cfg = ScenarioConfig(mode="freq_track", f_cmd=0.5, duration=1.0)
        with pytest.raises(CommandRangeError):
            run_frequency_tracking(cfg)

    def test_no_outdir_writes_nothing(self, tmp_path):
        cfg = ScenarioConfig(mode="freq_track", f_cmd=2.0, duration=2.0)
        run_frequency_tracking(cfg)
        assert list(tmp_path.iterdir()) == []


@pytest.fixture(scope="module")
def short_run():
    cfg = ScenarioConfig(mode="rhythm_sync", synth_bpm=120.0, duration=12.0)
    return run_rhythm_sync(cfg)


class TestRhythmSync:
    def test_streams_present(self, short_run):
        runlog, _, _ = short_run
        assert set(runlog.streams) == {"osc", "plant", "mod", "music", "rewards"}
        cols, mod = runlog.streams["mod"]
        assert cols == ["t", "omega_m", "delta_omega", "omega_tilde", "phase_error"]
        assert mod.shape == (12 * 20, 5)

    def test_report_keys(self, short_run):
        _, metrics, report = short_run
        assert report["source"] == "synth:120.0bpm"
        assert abs(report["tempo_bpm_estimate"] - 120.0) < 1.0
        assert report["f_gait_hz"] == pytest.approx(report["tempo_bpm_estimate"] / 60.0)
        assert set(report["reward_means_post_warmup"]) == {"rhythm", "r1", "r2", "phase"}
        assert metrics.delta_t_max is not None and metrics.omega_std is not None

    def test_alignment_quality(self, short_run):
        _, metrics, _ = short_run
        # 120 BPM clicks: locked footfalls stay well under the period
        assert metrics.delta_t_max < 0.1
        assert metrics.omega_std < 0.5

    def test_rewards_bounded(self, short_run):
        runlog, _, _ = short_run
        _, rows = runlog.streams["rewards"]
        assert np.all(rows[:, 1] >= 0) and np.all(rows[:, 1] <= 1)  # rhythm
        assert np.all(np.isin(rows[:, 3], (-1.0, 1.0)))  # r2


class TestCurriculum:
    def test_too_few_iterations(self):
        cfg = ScenarioConfig(mode="estimator_curriculum", iterations=5,
                             duration=1.0)
        with pytest.raises(InputError, match="at least 10"):
            run_estimator_curriculum(cfg)

    def test_fallback_run(self, tmp_path):
        cfg = ScenarioConfig(mode="estimator_curriculum",
                             estimator_mode="fallback", duration=3.0,
                             outdir=str(tmp_path))
        runlog, report = run_estimator_curriculum(cfg)
        assert report["finite"] is True
        assert report["rf_stats"]["contacts"] > 0
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "runlog.plant.csv").exists()

    def test_learned_short(self):
        cfg = ScenarioConfig(mode="estimator_curriculum", duration=2.0,
                             iterations=10)
        runlog, report = run_estimator_curriculum(cfg)
        assert report["rho_first"] == 0.0 and report["rho_last"] == 1.0
        assert len(report["mse_curve"]) == 11
        assert report["final_mse"] <= 1e-8
        assert set(report["eval"]) == {"1.5", "2.0", "2.5", "3.0", "3.5", "4.0"}
        _, mse = runlog.streams["mse"]
        assert mse.shape == (11, 3)
        json.dumps(report)  # everything must stay JSON-clean
