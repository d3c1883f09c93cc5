"""Scenario runner and multi-rate scheduler.

Wires the oscillator bank, the surrogate stance plant, the music
pipeline, the load estimator, and the frequency modulator into the
three experiment families:

* freq_track: oscillator + plant at a fixed intrinsic frequency,
  modulator disabled; scores per-leg stepping-frequency deviation.
* rhythm_sync: the full hierarchical loop on a click track or audio
  file; scores beat alignment, command spread, and the reward traces.
* estimator_curriculum: episodic training that blends plant loads with
  estimator predictions by rho = iteration/N, refitting each episode,
  then proves the rho = 1 loop still tracks frequency commands.

The scheduler runs the oscillator at 1 kHz and updates the plant and
modulator at integer subdivisions (100 Hz and 20 Hz by default) with
zero-order holds between updates. The frequency-tracking scenario
defaults to a 500 Hz plant so a 5 s run spans 2500 plant samples;
at 100 Hz the 10 ms contact quantization alone can push the measured
stepping frequency past the 0.05 Hz acceptance bound at some commands.

Offline runs are deterministic: all randomness flows from one seeded
generator recorded in the run log header, and a fixed config plus seed
reproduces every artifact byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import estimator as est
from .errors import CurriculumError, InputError
from .metrics import SyncReport, beat_alignment, frequency_deviation, frequency_variance, \
    relative_phase_differences
from .modulator import ModulatorConfig, modulate, reward_phase, reward_r1, reward_r2, \
    reward_rhythm
from .music import analyze_clip, fold_tempo, interpolate_phase, load_wav, synth_click_track
from .oscillator import LEG_ORDER, TWO_PI, make_bank, normalize_grf, param_arrays, \
    select_params, step_phases, wrap_phase
from .plant import GrfTimeline, PlantConfig, contact_onsets, grf_from_phases, \
    kinematic_beats, stance_weight, stepping_frequency

MODES = ("freq_track", "rhythm_sync", "estimator_curriculum")

REWARD_VARIANTS = ("rhythm", "r1", "r2")

ESTIMATOR_MODES = ("learned", "fallback")

#: Nominal command sweep of the frequency-tracking experiment, Hz.
FREQ_TRACK_COMMANDS = (1.5, 2.0, 2.5, 3.0, 3.5, 4.0)

#: Acceptance bounds every frequency-tracking run is graded against.
FREQ_DEV_MEAN_BOUND_HZ = 0.05
FREQ_DEV_VAR_BOUND_HZ2 = 0.01

_MODE_DEFAULTS = {
    # duration_s, plant rate; oscillator and modulator rates are shared
    "freq_track": (5.0, 500),
    "rhythm_sync": (30.0, 100),
    "estimator_curriculum": (5.0, 500),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment description; JSON round-trippable.

    None means "resolve the per-mode default": duration and the plant
    rate differ across modes (see _MODE_DEFAULTS), f_cmd defaults to
    2.0 Hz where used, and a rhythm_sync run with neither audio_path
    nor synth_bpm synthesizes 120 BPM clicks.

    error_mode/feedforward/gain_k select the modulator variant for
    rhythm_sync; perturb_rad draws a uniform initial-phase kick from
    the run's seeded generator; iterations and estimator_mode shape
    the curriculum.
    """

    mode: str
    v_cmd: float = 0.8
    f_cmd: float | None = None
    audio_path: str | None = None
    synth_bpm: float | None = None
    duration: float | None = None
    reward: str = "rhythm"
    seed: int = 0
    rate_oscillator_hz: int = 1000
    rate_plant_hz: int | None = None
    rate_modulator_hz: int = 20
    outdir: str | None = None
    warmup_s: float = 5.0
    target_leg: int = 1
    gain_k: float = 2.0
    error_mode: str = "footfall"
    feedforward: bool = False
    delta_max: float | None = None
    perturb_rad: float = 0.0
    iterations: int = 10
    estimator_mode: str = "learned"

    def __post_init__(self):
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.reward not in REWARD_VARIANTS:
            raise InputError(f"reward must be one of {REWARD_VARIANTS}, got {self.reward!r}")
        if self.estimator_mode not in ESTIMATOR_MODES:
            raise InputError(
                f"estimator_mode must be one of {ESTIMATOR_MODES}, got {self.estimator_mode!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise InputError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.duration is not None and not (self.duration > 0):
            raise InputError(f"duration must be positive, got {self.duration!r}")
        if not (self.warmup_s >= 0):
            raise InputError(f"warmup_s must be non-negative, got {self.warmup_s!r}")
        if self.target_leg not in (1, 2, 3, 4):
            raise InputError(f"target_leg must be 1..4, got {self.target_leg!r}")
        if not (self.perturb_rad >= 0):
            raise InputError(f"perturb_rad must be non-negative, got {self.perturb_rad!r}")
        if self.iterations < 1:
            raise InputError(f"iterations must be positive, got {self.iterations!r}")

    def resolve(self) -> "ScenarioConfig":
        """Fill mode defaults and validate the rate ladder."""
        duration_default, plant_default = _MODE_DEFAULTS[self.mode]
        out = replace(
            self,
            duration=self.duration if self.duration is not None else duration_default,
            rate_plant_hz=self.rate_plant_hz if self.rate_plant_hz is not None else plant_default,
            f_cmd=self.f_cmd if self.f_cmd is not None or self.mode == "rhythm_sync" else 2.0,
            synth_bpm=(self.synth_bpm if self.synth_bpm is not None or
                       self.audio_path is not None or self.mode != "rhythm_sync" else 120.0),
        )
        osc_hz, plant_hz, mod_hz = (out.rate_oscillator_hz, out.rate_plant_hz,
                                    out.rate_modulator_hz)
        for name, r in (("oscillator", osc_hz), ("plant", plant_hz), ("modulator", mod_hz)):
            if not (isinstance(r, int) and r > 0):
                raise InputError(f"rate_{name}_hz must be a positive integer, got {r!r}")
        # rate ladder must divide evenly so zero-order holds line up
        if osc_hz % plant_hz != 0 or plant_hz % mod_hz != 0:
            raise InputError(
                f"rates must divide evenly: oscillator {osc_hz} / plant {plant_hz} "
                f"/ modulator {mod_hz}")
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise InputError(f"config must be a JSON object, got {type(data).__name__}")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        if "mode" not in data:
            raise InputError("config must set 'mode'")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


class RunLog:
    """Per-stream records at their native rates plus a header.

    Streams are (column names, float array) pairs whose first column is
    a strictly increasing timestamp. The "osc" stream lands in
    runlog.csv, every other stream in runlog.<name>.csv.
    """

    def __init__(self, header: dict):
        self.header = dict(header)
        self.streams: dict[str, tuple[list[str], np.ndarray]] = {}

    def add_stream(self, name: str, columns, data) -> None:
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(columns):
            raise InputError(
                f"stream {name!r} needs shape (n, {len(columns)}), got {arr.shape}")
        if arr.shape[0] > 1 and not np.all(np.diff(arr[:, 0]) > 0):
            raise InputError(f"stream {name!r} timestamps must increase strictly")
        self.streams[name] = (list(columns), arr)

    def write(self, outdir) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        head = " ".join(f"{k}={self.header[k]}" for k in sorted(self.header))
        written = []
        for name, (columns, arr) in self.streams.items():
            path = outdir / ("runlog.csv" if name == "osc" else f"runlog.{name}.csv")
            with open(path, "w") as fh:
                fh.write(f"# {head}\n")
                fh.write(",".join(columns) + "\n")
                np.savetxt(fh, arr, fmt="%.17g", delimiter=",")
            written.append(path)
        return written


@dataclass
class SimState:
    """Mutable multi-rate loop state advanced by scheduler_tick.

    plant_fn(state) returns the next held normalized loads; mod_fn(state)
    returns the next intrinsic frequency (or None to keep it). Both may
    log through closed-over buffers. Holds stay untouched between their
    update ticks.
    """

    phases: np.ndarray
    om: np.ndarray
    sg: np.ndarray
    xi: np.ndarray
    dt: float
    plant_every: int
    mod_every: int
    plant_fn: object = None
    mod_fn: object = None
    tick: int = 0
    g_held: np.ndarray = field(default_factory=lambda: np.zeros(4))
    n_plant_updates: int = 0
    n_mod_updates: int = 0

    @property
    def t(self) -> float:
        return self.tick * self.dt


def scheduler_tick(state: SimState) -> SimState:
    """Advance one oscillator step; update plant/modulator on their ticks.

    Update order within a tick: plant first, then modulator (which may
    read the fresh loads), then one Euler step of all four phases using
    the held values.
    """
    if state.tick % state.plant_every == 0:
        if state.plant_fn is not None:
            state.g_held = np.asarray(state.plant_fn(state), dtype=float)
        state.n_plant_updates += 1
    if state.tick % state.mod_every == 0:
        if state.mod_fn is not None:
            omega = state.mod_fn(state)
            if omega is not None:
                state.om[:] = omega
        state.n_mod_updates += 1
    state.phases = step_phases(state.phases, state.g_held, state.dt,
                               state.om, state.sg, state.xi)
    state.tick += 1
    return state


def _initial_state(cfg: ScenarioConfig, f_gait: float, plant_cfg: PlantConfig,
                   rng: np.random.Generator):
    """Moving-gait bank at the stationary-to-moving transition.

    All four legs carry equal weight while standing, so the low-load
    tie breaks to the left-diagonal pair per the parameter schedule.
    Optional uniform phase perturbation is the only consumer of the
    run's random generator.
    """
    standing = np.full(4, plant_cfg.mass * plant_cfg.g / 4.0)
    params = select_params(cfg.v_cmd, f_gait, standing)
    bank = make_bank(params)
    phases = bank.phases.copy()
    if cfg.perturb_rad > 0:
        phases = wrap_phase(phases + rng.uniform(-cfg.perturb_rad, cfg.perturb_rad, 4))
    om, sg, xi = param_arrays(params)
    return phases, om, sg, xi


def _timeline(t, forces, plant_cfg: PlantConfig) -> GrfTimeline:
    forces = np.asarray(forces, dtype=float)
    return GrfTimeline(t=np.asarray(t, dtype=float), forces=forces,
                       normalized=np.minimum(forces / (plant_cfg.mass * plant_cfg.g), 1.0))


def _leg_stats(timeline: GrfTimeline, leg: int, f_cmd: float) -> dict:
    onsets = contact_onsets(timeline, leg)
    freqs, _, _ = stepping_frequency(onsets)
    mean_dev, var = frequency_deviation(freqs, f_cmd)
    return {"mean_abs_dev_hz": float(mean_dev), "variance_hz2": float(var),
            "cycles": int(freqs.size), "contacts": int(onsets.size)}


def run_frequency_tracking(config: ScenarioConfig):
    """Fixed-frequency closed loop; modulator disabled.

    Returns (RunLog, SyncReport, report dict) and writes artifacts when
    the config names an output directory. The command is validated by
    the parameter schedule, so an out-of-band f_cmd raises the same
    command-range error the oscillator would.
    """
    cfg = config.resolve()
    plant_cfg = PlantConfig(rate_hz=float(cfg.rate_plant_hz))
    rng = np.random.default_rng(cfg.seed)
    f_cmd = float(cfg.f_cmd)
    phases, om, sg, xi = _initial_state(cfg, f_cmd, plant_cfg, rng)

    n_ticks = int(round(cfg.duration * cfg.rate_oscillator_hz))
    plant_every = cfg.rate_oscillator_hz // cfg.rate_plant_hz
    n_plant = n_ticks // plant_every
    dt = 1.0 / cfg.rate_oscillator_hz

    osc_rows = np.empty((n_ticks, 6))
    plant_rows = np.empty((n_plant, 9))
    row = {"i": 0}

    def plant_fn(state: SimState):
        forces = grf_from_phases(state.phases, plant_cfg)
        g = normalize_grf(forces, plant_cfg.mass, plant_cfg.g)
        i = row["i"]
        plant_rows[i, 0] = state.t
        plant_rows[i, 1:5] = forces
        plant_rows[i, 5:9] = g
        row["i"] = i + 1
        return g

    state = SimState(phases=phases, om=om, sg=sg, xi=xi, dt=dt,
                     plant_every=plant_every, mod_every=cfg.rate_oscillator_hz //
                     cfg.rate_modulator_hz, plant_fn=plant_fn)
    for k in range(n_ticks):
        osc_rows[k, 0] = state.t
        osc_rows[k, 1:5] = state.phases
        osc_rows[k, 5] = state.om[0]
        scheduler_tick(state)

    timeline = _timeline(plant_rows[:, 0], plant_rows[:, 1:5], plant_cfg)
    per_leg = {LEG_ORDER[leg]: _leg_stats(timeline, leg, f_cmd) for leg in range(4)}
    rf = per_leg[LEG_ORDER[0]]
    report_metrics = SyncReport(
        freq_dev_mean=rf["mean_abs_dev_hz"], freq_dev_var=rf["variance_hz2"],
        rpd_matrix=relative_phase_differences(state.phases).tolist())

    header = {"mode": cfg.mode, "seed": cfg.seed, "f_cmd": f_cmd,
              "rate_oscillator_hz": cfg.rate_oscillator_hz,
              "rate_plant_hz": cfg.rate_plant_hz}
    runlog = RunLog(header)
    runlog.add_stream("osc", ["t", "phi_rf", "phi_lf", "phi_rh", "phi_lh", "omega_tilde"],
                      osc_rows)
    runlog.add_stream("plant", ["t", "n_rf", "n_lf", "n_rh", "n_lh",
                                "g_rf", "g_lf", "g_rh", "g_lh"], plant_rows)
    report = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "f_cmd_hz": f_cmd,
        "v_cmd": cfg.v_cmd,
        "rates_hz": {"oscillator": cfg.rate_oscillator_hz, "plant": cfg.rate_plant_hz,
                     "modulator": cfg.rate_modulator_hz},
        "metrics": report_metrics.to_dict(),
        "per_leg": per_leg,
    }
    _write_artifacts(cfg, runlog, report)
    return runlog, report_metrics, report


def _resolve_clip(cfg: ScenarioConfig):
    """Audio for a rhythm_sync run: a file if named, else synth clicks.

    Synthetic tracks run 2 s past the simulation so the beat grid
    always extends beyond the last kinematic footfall.
    """
    if cfg.audio_path is not None:
        return load_wav(cfg.audio_path)
    return synth_click_track(float(cfg.synth_bpm), cfg.duration + 2.0)


def run_rhythm_sync(config: ScenarioConfig):
    """Full hierarchical loop: music analysis drives the modulator.

    Offline pipeline: analyze the whole clip once, derive the gait
    frequency by octave folding, then run the multi-rate loop with the
    configured modulator variant. Scores beat alignment (interior
    footfalls vs the beat grid after warm-up), the 20 Hz command
    spread, and all four reward traces regardless of which variant the
    config emphasizes.
    """
    cfg = config.resolve()
    plant_cfg = PlantConfig(rate_hz=float(cfg.rate_plant_hz))
    rng = np.random.default_rng(cfg.seed)

    clip = _resolve_clip(cfg)
    analysis = analyze_clip(clip)
    f_gait = fold_tempo(analysis.tempo_bpm)
    omega_m = TWO_PI * f_gait
    phases, om, sg, xi = _initial_state(cfg, f_gait, plant_cfg, rng)

    mod_cfg = ModulatorConfig(gain_k=cfg.gain_k, delta_max=cfg.delta_max,
                              target_leg=cfg.target_leg, rate_hz=float(cfg.rate_modulator_hz),
                              error_mode=cfg.error_mode, feedforward=cfg.feedforward)
    leg = cfg.target_leg - 1
    pair_leg = 1 if leg in (0, 3) else 0  # one leg of the opposite diagonal

    n_ticks = int(round(cfg.duration * cfg.rate_oscillator_hz))
    plant_every = cfg.rate_oscillator_hz // cfg.rate_plant_hz
    mod_every = cfg.rate_oscillator_hz // cfg.rate_modulator_hz
    n_plant = n_ticks // plant_every
    n_mod = n_ticks // mod_every
    dt = 1.0 / cfg.rate_oscillator_hz

    t_mod = np.arange(n_mod) / cfg.rate_modulator_hz
    theta_mod = interpolate_phase(analysis.grid, t_mod)
    beats = analysis.grid.beat_times
    tick_s = 1.0 / cfg.rate_modulator_hz
    music_beat_in_tick = (np.searchsorted(beats, t_mod, side="right")
                          - np.searchsorted(beats, t_mod - tick_s, side="right")) > 0

    osc_rows = np.empty((n_ticks, 6))
    plant_rows = np.empty((n_plant, 9))
    mod_rows = np.empty((n_mod, 5))
    reward_rows = np.empty((n_mod, 5))
    counters = {"plant": 0, "mod": 0}
    last_onset = {"t": None, "prev": 0.0}

    def plant_fn(state: SimState):
        forces = grf_from_phases(state.phases, plant_cfg)
        g = normalize_grf(forces, plant_cfg.mass, plant_cfg.g)
        i = counters["plant"]
        plant_rows[i, 0] = state.t
        plant_rows[i, 1:5] = forces
        plant_rows[i, 5:9] = g
        counters["plant"] = i + 1
        if forces[leg] > 0.0 and last_onset["prev"] == 0.0 and i > 0:
            last_onset["t"] = state.t
        last_onset["prev"] = forces[leg]
        return g

    def mod_fn(state: SimState):
        i = counters["mod"]
        t = state.t
        theta = theta_mod[i]
        phi = float(state.phases[leg])
        cmd = modulate((math.cos(phi), math.sin(phi)),
                       (math.cos(theta), math.sin(theta)),
                       omega_m, mod_cfg, t=t,
                       pair_obs=(math.cos(float(state.phases[pair_leg])),
                                 math.sin(float(state.phases[pair_leg]))))
        mod_rows[i] = (t, omega_m, cmd.delta_omega, cmd.omega_tilde, cmd.phase_error)
        kin_in_tick = (last_onset["t"] is not None
                       and t - tick_s < last_onset["t"] <= t)
        b_t = float(analysis.smoothed[min(int(round(t * analysis.envelope.frame_rate)),
                                          analysis.smoothed.size - 1)])
        reward_rows[i] = (
            t,
            reward_rhythm((math.cos(phi), math.sin(phi)),
                          (math.cos(theta), math.sin(theta)), mod_cfg.sigma_r),
            reward_r1(b_t, phi),
            reward_r2(bool(music_beat_in_tick[i]), kin_in_tick),
            reward_phase(state.g_held, state.phases),
        )
        counters["mod"] = i + 1
        return cmd.omega_tilde

    state = SimState(phases=phases, om=om, sg=sg, xi=xi, dt=dt,
                     plant_every=plant_every, mod_every=mod_every,
                     plant_fn=plant_fn, mod_fn=mod_fn)
    for k in range(n_ticks):
        osc_rows[k, 0] = state.t
        osc_rows[k, 1:5] = state.phases
        osc_rows[k, 5] = state.om[0]
        scheduler_tick(state)

    timeline = _timeline(plant_rows[:, 0], plant_rows[:, 1:5], plant_cfg)
    kin = kinematic_beats(timeline, leg, interior_only=True)
    deltas, delta_max = beat_alignment(kin, beats, warmup_s=cfg.warmup_s)
    post = mod_rows[:, 0] >= cfg.warmup_s
    omega_std = frequency_variance(mod_rows[post, 3])
    reward_means = {
        name: float(reward_rows[post, 1 + j].mean())
        for j, name in enumerate(("rhythm", "r1", "r2", "phase"))
    }

    report_metrics = SyncReport(
        delta_t_series=[float(d) for d in deltas],
        delta_t_max=float(delta_max),
        omega_std=float(omega_std),
        rpd_matrix=relative_phase_differences(state.phases).tolist())

    n_frames = int(round(cfg.duration * analysis.envelope.frame_rate))
    t_frames = np.arange(n_frames) / analysis.envelope.frame_rate
    music_rows = np.column_stack([
        t_frames,
        analysis.envelope.values[:n_frames],
        analysis.smoothed[:n_frames],
        interpolate_phase(analysis.grid, t_frames),
        np.full(n_frames, analysis.grid.tempo_bpm),
    ])

    header = {"mode": cfg.mode, "seed": cfg.seed,
              "tempo_bpm": round(analysis.grid.tempo_bpm, 6),
              "f_gait_hz": round(f_gait, 6),
              "rate_oscillator_hz": cfg.rate_oscillator_hz,
              "rate_plant_hz": cfg.rate_plant_hz,
              "rate_modulator_hz": cfg.rate_modulator_hz}
    runlog = RunLog(header)
    runlog.add_stream("osc", ["t", "phi_rf", "phi_lf", "phi_rh", "phi_lh", "omega_tilde"],
                      osc_rows)
    runlog.add_stream("plant", ["t", "n_rf", "n_lf", "n_rh", "n_lh",
                                "g_rf", "g_lf", "g_rh", "g_lh"], plant_rows)
    runlog.add_stream("mod", ["t", "omega_m", "delta_omega", "omega_tilde", "phase_error"],
                      mod_rows)
    runlog.add_stream("music", ["t", "envelope", "beat_curve", "theta", "tempo_bpm"],
                      music_rows)
    runlog.add_stream("rewards", ["t", "rhythm", "r1", "r2", "phase"], reward_rows)

    report = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "source": cfg.audio_path if cfg.audio_path else f"synth:{cfg.synth_bpm}bpm",
        "tempo_bpm_estimate": float(analysis.grid.tempo_bpm),
        "tempo_confidence": float(analysis.confidence),
        "f_gait_hz": float(f_gait),
        "omega_m": float(omega_m),
        "modulator": {"gain_k": cfg.gain_k, "error_mode": cfg.error_mode,
                      "feedforward": cfg.feedforward, "target_leg": cfg.target_leg},
        "warmup_s": cfg.warmup_s,
        "reward_variant": cfg.reward,
        "reward_means_post_warmup": reward_means,
        "metrics": report_metrics.to_dict(),
    }
    _write_artifacts(cfg, runlog, report)
    return runlog, report_metrics, report


def _estimator_episode(cfg: ScenarioConfig, plant_cfg: PlantConfig, f_cmd: float,
                       rho_state, model, collect_inputs, collect_loads,
                       g_constant: float | None = None):
    """One closed-loop episode; returns (final phases, timeline).

    The oscillator consumes the curriculum blend of simulated and
    predicted loads (or a constant in fallback mode); the plant keeps
    producing ground-truth loads for collection and scoring.
    """
    rng = np.random.default_rng(cfg.seed)
    phases, om, sg, xi = _initial_state(cfg, f_cmd, plant_cfg, rng)
    n_ticks = int(round(cfg.duration * cfg.rate_oscillator_hz))
    plant_every = cfg.rate_oscillator_hz // cfg.rate_plant_hz
    n_plant = n_ticks // plant_every
    rows_t = np.empty(n_plant)
    rows_f = np.empty((n_plant, 4))
    counters = {"plant": 0}

    def plant_fn(state: SimState):
        forces = grf_from_phases(state.phases, plant_cfg)
        g_sim = normalize_grf(forces, plant_cfg.mass, plant_cfg.g)
        i = counters["plant"]
        rows_t[i] = state.t
        rows_f[i] = forces
        counters["plant"] = i + 1
        if g_constant is not None:
            return np.full(4, g_constant)
        # proxy for joint information: each leg's share of the summed
        # stance weight, the quantity the plant's load law is exactly
        # linear in (the raw sine weight is not, once double-support
        # windows appear around stance handoffs)
        w = stance_weight(state.phases, plant_cfg.weight_exponent)
        total = w.sum()
        shares = w / total if total > 1e-6 else np.zeros(4)
        obs = est.EstimatorInput(
            contact_indicators=(state.phases >= math.pi).astype(float),
            stance_weights=shares)
        if collect_inputs is not None:
            collect_inputs.append(obs)
            collect_loads.append(g_sim)
        g_pred = g_sim if model is None else est.predict(obs, model)
        return est.mix(g_sim, g_pred, rho_state)

    state = SimState(phases=phases, om=om, sg=sg, xi=xi,
                     dt=1.0 / cfg.rate_oscillator_hz, plant_every=plant_every,
                     mod_every=cfg.rate_oscillator_hz // cfg.rate_modulator_hz,
                     plant_fn=plant_fn)
    for _ in range(n_ticks):
        scheduler_tick(state)
    return state.phases, _timeline(rows_t, rows_f, plant_cfg)


def run_estimator_curriculum(config: ScenarioConfig):
    """Episodic curriculum, or the constant-fallback endurance run.

    Learned mode: episodes i = 0..N run at rho = i/N, each refitting on
    all data collected so far; the final model must then carry the
    rho = 1 loop through the full frequency-command sweep inside the
    tracking bounds. Any non-finite phase or a failed sweep raises a
    curriculum error naming the offending episode or command.
    """
    cfg = config.resolve()
    plant_cfg = PlantConfig(rate_hz=float(cfg.rate_plant_hz))
    f_cmd = float(cfg.f_cmd)

    header = {"mode": cfg.mode, "seed": cfg.seed, "estimator_mode": cfg.estimator_mode,
              "iterations": cfg.iterations, "f_cmd": f_cmd}
    runlog = RunLog(header)

    if cfg.estimator_mode == "fallback":
        phases, timeline = _estimator_episode(
            cfg, plant_cfg, f_cmd, rho_state=None, model=None,
            collect_inputs=None, collect_loads=None, g_constant=est.FALLBACK_G)
        if not np.all(np.isfinite(phases)):
            raise CurriculumError("fallback run diverged: non-finite phase")
        stats = _leg_stats(timeline, 0, f_cmd)
        report = {
            "mode": cfg.mode, "seed": cfg.seed, "estimator_mode": cfg.estimator_mode,
            "duration_s": cfg.duration, "finite": True,
            "rf_stats": stats,
        }
        runlog.add_stream("plant", ["t", "n_rf", "n_lf", "n_rh", "n_lh"],
                          np.column_stack([timeline.t, timeline.forces]))
        _write_artifacts(cfg, runlog, report)
        return runlog, report

    n = cfg.iterations
    if n < 10:
        raise InputError(f"curriculum needs at least 10 iterations, got {n}")
    inputs: list = []
    loads: list = []
    model = None
    mse_rows = []
    for i in range(n + 1):
        rho_state = est.CurriculumState.at(i, n)
        phases, _ = _estimator_episode(cfg, plant_cfg, f_cmd, rho_state, model,
                                       inputs, loads)
        if not np.all(np.isfinite(phases)):
            raise CurriculumError(f"closed loop diverged at iteration {i} (rho={rho_state.rho})")
        model = est.fit(inputs, np.asarray(loads))
        mse_rows.append((float(i), rho_state.rho, model.mse))

    eval_stats = {}
    for f in FREQ_TRACK_COMMANDS:
        rho_one = est.CurriculumState.at(n, n)
        _, timeline = _estimator_episode(cfg, plant_cfg, f, rho_one, model, None, None)
        stats = _leg_stats(timeline, 0, f)
        eval_stats[f"{f:.1f}"] = stats
        if (stats["mean_abs_dev_hz"] >= FREQ_DEV_MEAN_BOUND_HZ
                or stats["variance_hz2"] >= FREQ_DEV_VAR_BOUND_HZ2):
            raise CurriculumError(
                f"rho=1 loop failed frequency tracking at f_cmd={f}: {stats}")

    runlog.add_stream("mse", ["iteration", "rho", "mse"], np.asarray(mse_rows))
    report = {
        "mode": cfg.mode, "seed": cfg.seed, "estimator_mode": cfg.estimator_mode,
        "iterations": n, "episode_duration_s": cfg.duration, "f_cmd_hz": f_cmd,
        "rho_first": float(mse_rows[0][1]), "rho_last": float(mse_rows[-1][1]),
        "mse_curve": [float(r[2]) for r in mse_rows],
        "final_mse": float(model.mse),
        "rank_deficient": bool(model.rank_deficient),
        "coeffs": [float(c) for c in model.coeffs],
        "eval": eval_stats,
    }
    _write_artifacts(cfg, runlog, report)
    return runlog, report


def _write_artifacts(cfg: ScenarioConfig, runlog: RunLog, report: dict) -> None:
    """Emit report.json, config.echo.json, and the stream CSVs."""
    if cfg.outdir is None:
        return
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    (outdir / "config.echo.json").write_text(
        json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n")
    runlog.write(outdir)
