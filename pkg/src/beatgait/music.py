"""Audio to beat-phase pipeline.

Turns a mono clip into the 100 Hz feature stream the gait controller
consumes: a spectral-flux onset envelope, a tempo estimate, a beat grid,
a smoothed beat curve B(t), and a music phase theta that advances by
2*pi per beat interval and equals 3*pi/2 exactly at every beat time.
Beats anchor at 3*pi/2 because that is the phase at which a stance
force peaks, so "step on the beat" becomes plain phase equality.

Offline use: load or synthesize a clip, call analyze_clip, then sample
theta/B at control-loop times. Streaming use: StreamingTracker keeps a
sliding window, a median-filtered tempo, and answers phase queries by
extrapolating from the latest beat so pipeline latency does not bias
the phase.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from .errors import FormatError, InputError, InsufficientDataError, NoTempoError, TempoRangeError
from .oscillator import FOOTFALL_PHASE, FREQ_BAND_HZ, TWO_PI, wrap_phase

SUPPORTED_RATES = (16000, 22050, 44100, 48000)

#: Feature stream rate in Hz shared by envelope, B(t), and theta logs.
FRAME_RATE_HZ = 100.0

#: Spectral-flux analysis window and hop in samples (50% overlap).
ANALYSIS_WINDOW = 1024
ANALYSIS_HOP = 512

TEMPO_RANGE_BPM = (60.0, 200.0)

#: Beat smoothing kernel: Gaussian, sigma 3 frames, truncated support 15.
KERNEL_SIGMA = 3.0
KERNEL_HALF = 7

DEFAULT_CLICK_S = 0.010
DEFAULT_SYNTH_RATE = 22050

#: An autocorrelation peak at a shorter lag wins over the global max
#: when it reaches this fraction of it (tempo octave disambiguation).
SUBHARMONIC_GATE = 0.5


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM audio with a capture timestamp."""

    samples: np.ndarray
    sample_rate: int
    t0: float = 0.0

    def __post_init__(self):
        if int(self.sample_rate) not in SUPPORTED_RATES:
            raise FormatError(
                f"sample rate {self.sample_rate} not in {SUPPORTED_RATES}"
            )
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise FormatError(f"expected mono samples, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InputError("samples must be finite")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def load_wav(path) -> AudioClip:
    """Read a WAV file (PCM16/24/32, float32/64, mono or downmixed stereo)."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise FormatError(f"unreadable WAV file {path}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot open WAV file {path}: {exc}") from exc
    x = np.asarray(data)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.dtype.kind == "i":
        x = x.astype(float) / float(np.iinfo(data.dtype).max)
    elif x.dtype.kind == "u":
        info = np.iinfo(data.dtype)
        half = (info.max + 1) / 2.0
        x = (x.astype(float) - half) / half
    else:
        x = x.astype(float)
    return AudioClip(samples=x, sample_rate=int(rate))


def save_wav(path, clip: AudioClip) -> None:
    """Write a clip as 16-bit PCM."""
    pcm = np.clip(clip.samples, -1.0, 1.0)
    wavfile.write(path, clip.sample_rate, (pcm * 32767.0).astype(np.int16))


def synth_click_track(
    bpm: float,
    duration_s: float,
    sample_rate: int = DEFAULT_SYNTH_RATE,
    click_s: float = DEFAULT_CLICK_S,
    amplitude: float = 1.0,
) -> AudioClip:
    """Rectangular clicks of click_s seconds at every beat of a constant tempo.

    The first click starts at t=0; clicks repeat every 60/bpm seconds for
    the whole duration.
    """
    if not (bpm > 0 and math.isfinite(bpm)):
        raise InputError(f"bpm must be positive, got {bpm!r}")
    if duration_s <= 0:
        raise InputError(f"duration must be positive, got {duration_s!r}")
    n = int(round(duration_s * sample_rate))
    x = np.zeros(n)
    period = 60.0 / bpm
    click_n = max(1, int(round(click_s * sample_rate)))
    k = 0
    while True:
        start = int(round(k * period * sample_rate))
        if start >= n:
            break
        x[start : min(start + click_n, n)] = amplitude
        k += 1
    return AudioClip(samples=x, sample_rate=sample_rate)


@dataclass(frozen=True)
class OnsetEnvelope:
    """Non-negative music intensity per frame at FRAME_RATE_HZ."""

    values: np.ndarray
    frame_rate: float = FRAME_RATE_HZ
    t0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InputError("envelope values must be finite and non-negative")
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.values.size) / self.frame_rate

    @property
    def duration(self) -> float:
        return (self.values.size - 1) / self.frame_rate if self.values.size else 0.0


def onset_envelope(clip: AudioClip) -> OnsetEnvelope:
    """Half-wave-rectified spectral flux, resampled to 100 Hz.

    Frames are centered (the signal is left-padded by half a window), so
    a click's flux peak lands on the frame nearest the click itself
    rather than half a window late.
    """
    x = clip.samples
    if x.size == 0:
        raise InputError("empty clip")
    pad = ANALYSIS_WINDOW // 2
    x = np.concatenate([np.zeros(pad), x, np.zeros(ANALYSIS_WINDOW)])
    n_frames = 1 + (x.size - ANALYSIS_WINDOW) // ANALYSIS_HOP
    window = np.hanning(ANALYSIS_WINDOW + 1)[:-1]
    idx = np.arange(ANALYSIS_WINDOW)[None, :] + ANALYSIS_HOP * np.arange(n_frames)[:, None]
    mags = np.abs(np.fft.rfft(x[idx] * window, axis=1))
    prev = np.vstack([np.zeros(mags.shape[1]), mags[:-1]])
    flux = np.maximum(mags - prev, 0.0).sum(axis=1)
    native_t = np.arange(n_frames) * (ANALYSIS_HOP / clip.sample_rate)
    out_n = int(math.floor(native_t[-1] * FRAME_RATE_HZ)) + 1
    out_t = np.arange(out_n) / FRAME_RATE_HZ
    values = np.interp(out_t, native_t, flux)
    return OnsetEnvelope(values=values, frame_rate=FRAME_RATE_HZ, t0=clip.t0)


@dataclass(frozen=True)
class BeatGrid:
    """Beat timestamps plus the tempo they imply."""

    beat_times: np.ndarray
    tempo_bpm: float
    confidence: float = 1.0

    def __post_init__(self):
        bt = np.asarray(self.beat_times, dtype=float)
        if bt.ndim != 1 or bt.size == 0 or not np.all(np.isfinite(bt)):
            raise InputError("beat_times must be a non-empty finite 1-D array")
        if bt.size >= 2:
            iv = np.diff(bt)
            period = 60.0 / self.tempo_bpm
            if np.any(iv <= 0):
                raise InputError("beat_times must be strictly increasing")
            if np.any(np.abs(iv - period) > 0.2 * period):
                raise InputError("beat intervals deviate more than 20% from tempo")
        object.__setattr__(self, "beat_times", bt)

    @property
    def omega_m(self) -> float:
        """Music angular frequency in rad/s."""
        return TWO_PI * self.tempo_bpm / 60.0


def _autocorr_norm(x: np.ndarray) -> np.ndarray:
    """Autocorrelation divided by overlap length, so periodic peaks tie."""
    n = x.size
    r = np.correlate(x, x, mode="full")[n - 1 :]
    return r / (n - np.arange(n))


def estimate_tempo(env: OnsetEnvelope, window_s: float | None = 5.0) -> tuple[float, float]:
    """Tempo in BPM from envelope autocorrelation, with a confidence score.

    Searches lags for 60-200 BPM over the trailing window_s seconds of
    the envelope (the whole envelope when window_s is None), picks the
    shortest lag among near-maximal peaks so subharmonics do not halve
    the tempo, and parabolic-interpolates the peak to sub-frame
    resolution. Raises NoTempoError on a flat envelope and
    InsufficientDataError when the window spans fewer than four beats
    at the estimated tempo.
    """
    v = env.values
    if window_s is not None:
        v = v[-int(round(window_s * env.frame_rate)) :]
    if v.size < 2 or np.ptp(v) < 1e-12:
        raise NoTempoError("envelope is flat; no periodicity to estimate")
    x = v - v.mean()
    lag_min = int(round(env.frame_rate * 60.0 / TEMPO_RANGE_BPM[1]))
    lag_max = int(round(env.frame_rate * 60.0 / TEMPO_RANGE_BPM[0]))
    if v.size <= lag_min + 1:
        raise InsufficientDataError("envelope shorter than the minimum tempo lag")
    r = _autocorr_norm(x)
    hi = min(lag_max, r.size - 2)
    lags = np.arange(lag_min, hi + 1)
    seg = r[lag_min : hi + 1]
    if seg.size == 0 or seg.max() <= 0:
        raise NoTempoError("no positive autocorrelation peak in tempo range")
    # local maxima only; endpoints allowed so 60/200 BPM stay reachable
    is_peak = np.ones(seg.size, dtype=bool)
    is_peak[1:] &= seg[1:] >= seg[:-1]
    is_peak[:-1] &= seg[:-1] >= seg[1:]
    # shortest near-maximal lag beats the subharmonic multiples; the
    # threshold must survive the 100 Hz resampling, which makes
    # alternate onset peaks differ in shape and can pull the
    # fundamental's correlation down to ~0.75 of a same-parity multiple
    peaks = lags[is_peak & (seg >= SUBHARMONIC_GATE * seg.max())]
    best = int(peaks.min())
    y1, y2, y3 = r[best - 1], r[best], r[best + 1]
    denom = y1 - 2.0 * y2 + y3
    shift = 0.0 if denom == 0 else float(np.clip(0.5 * (y1 - y3) / denom, -0.5, 0.5))
    lag = best + shift
    bpm = 60.0 * env.frame_rate / lag
    if v.size / env.frame_rate < 4.0 * 60.0 / bpm:
        raise InsufficientDataError(
            f"window {v.size / env.frame_rate:.2f}s spans fewer than 4 beats at {bpm:.1f} BPM"
        )
    confidence = float(seg.max() / (r[0] + 1e-12))
    return float(bpm), confidence


def detect_beats(env: OnsetEnvelope, tempo_bpm: float) -> BeatGrid:
    """Place a beat grid of the given tempo on the envelope.

    A comb of period 60/tempo is scored at every integer frame offset;
    each comb tooth of the winning offset then snaps to the local
    envelope maximum (with parabolic sub-frame refinement), and a least
    squares line through the snapped times yields the emitted grid, so
    one missing click still gets its beat from the fit.
    """
    if not (tempo_bpm > 0 and math.isfinite(tempo_bpm)):
        raise InputError(f"tempo must be positive, got {tempo_bpm!r}")
    v = env.values
    period = env.frame_rate * 60.0 / tempo_bpm
    n = v.size
    if n < 2 * period:
        raise InsufficientDataError("envelope shorter than two beat periods")
    n_teeth = int(n // period)
    offsets = np.arange(int(math.ceil(period)))
    best_off, best_score = 0, -1.0
    for o in offsets:
        idx = np.round(o + period * np.arange(n_teeth)).astype(int)
        idx = idx[idx < n]
        score = float(v[idx].sum())
        if score > best_score:
            best_off, best_score = o, score
    def snap_pass(anchor: float, per: float, follow: bool):
        w = max(2, int(round(0.2 * per)))
        ks, frames, snapped = [], [], []
        # the offset scan treats offsets ~0 and ~per as distinct combs,
        # so the winner may sit one period in; walk back over teeth whose
        # snap window still reaches the envelope so the grid covers the
        # window start
        k = 0
        while anchor + (k - 1) * per >= -w:
            k -= 1
        pos = anchor + k * per
        while True:
            center = int(round(pos))
            if center >= n:
                break
            lo, hi = max(0, center - w), min(n, center + w + 1)
            seg = v[lo:hi]
            hit = bool(seg.size) and seg.max() > 0
            if hit:
                p = lo + int(np.argmax(seg))
                frame = float(p)
                if 0 < p < n - 1:
                    y1, y2, y3 = v[p - 1], v[p], v[p + 1]
                    denom = y1 - 2.0 * y2 + y3
                    if denom != 0:
                        frame += float(np.clip(0.5 * (y1 - y3) / denom, -0.5, 0.5))
            elif 0 <= center:
                frame = pos  # in-window dropout: keep the comb position
            else:
                k += 1  # walked-back tooth with no envelope support
                pos = anchor + k * per
                continue
            ks.append(k)
            frames.append(frame)
            snapped.append(hit)
            k += 1
            # following the last landing point keeps the scan centered on
            # the clicks even when per is off; accumulated comb drift
            # otherwise outruns the snap window on long envelopes
            pos = (frame + per) if follow else (anchor + k * per)
        return (np.asarray(ks, dtype=float), np.asarray(frames),
                np.asarray(snapped, dtype=bool))

    # the raw tempo can be off enough (the 100 Hz resampling biases the
    # short-lag autocorrelation peak by up to ~1%) that a rigid comb
    # drifts past the snap window over a long envelope; the first pass
    # therefore tracks tooth to tooth, the refit recovers the period
    # from the teeth with real envelope support, and one more rigid pass
    # against the fitted line settles the grid
    anchor = float(best_off)
    ks, frames, snapped = snap_pass(anchor, period, follow=True)
    for _ in range(3):
        if ks.size < 2:
            break
        sel = snapped if snapped.sum() >= 2 else np.ones(ks.size, dtype=bool)
        per_fit, anchor_fit = np.polyfit(ks[sel], frames[sel], 1)
        converged = (abs(per_fit - period) < 1e-9 * period
                     and abs(anchor_fit - anchor) < 1e-6)
        anchor, period = float(anchor_fit), float(per_fit)
        if converged:
            break
        ks, frames, snapped = snap_pass(anchor, period, follow=False)
    if ks.size >= 2:
        frames = anchor + period * ks
        tempo_bpm = 60.0 * env.frame_rate / period
    times = env.t0 + frames / env.frame_rate
    conf = float(v[np.clip(((times - env.t0) * env.frame_rate).round().astype(int), 0, n - 1)].mean()
                 / (v.mean() + 1e-12))
    return BeatGrid(beat_times=times, tempo_bpm=float(tempo_bpm), confidence=conf)


def smooth_beats(grid: BeatGrid, frame_rate: float, n_frames: int, t0: float = 0.0) -> np.ndarray:
    """Smoothed beat curve B(t): unit impulses at beat frames, Gaussian blurred.

    Kernel sigma is 3 frames with truncated support of 15 frames, and the
    kernel peak is 1 so B equals 1.0 exactly at beat frames.
    """
    b = np.zeros(max(0, n_frames))
    if b.size == 0:
        return b
    frames = np.round((grid.beat_times - t0) * frame_rate).astype(int)
    frames = frames[(frames >= 0) & (frames < n_frames)]
    b[frames] = 1.0
    k = np.arange(-KERNEL_HALF, KERNEL_HALF + 1)
    kernel = np.exp(-(k.astype(float) ** 2) / (2.0 * KERNEL_SIGMA**2))
    return np.convolve(b, kernel, mode="same")


def interpolate_phase(grid: BeatGrid, t):
    """Music phase theta at time(s) t: 3*pi/2 at each beat, +2*pi per interval.

    Within an interval the advance is linear in local time, so theta at a
    beat time is the anchor constant itself, exact to the bit. Times
    before the first beat extrapolate backward from the first interval;
    times after the last extrapolate forward from the last.
    """
    bt = grid.beat_times
    t_arr = np.asarray(t, dtype=float)
    if bt.size == 1:
        frac = (t_arr - bt[0]) * grid.tempo_bpm / 60.0
    else:
        k = np.clip(np.searchsorted(bt, t_arr, side="right") - 1, 0, bt.size - 2)
        frac = k + (t_arr - bt[k]) / (bt[k + 1] - bt[k])
    theta = wrap_phase(FOOTFALL_PHASE + TWO_PI * np.mod(frac, 1.0))
    return theta if t_arr.ndim else float(theta)


class TempoQueue:
    """Rolling store of the last five raw tempo estimates."""

    CAPACITY = 5

    def __init__(self):
        self.estimates = deque(maxlen=self.CAPACITY)


def smooth_tempo(queue: TempoQueue, new_estimate: float) -> float:
    """Push a raw estimate and return the median of the queue.

    During warm-up the median runs over however many estimates exist, so
    the very first estimate passes through unchanged.
    """
    queue.estimates.append(float(new_estimate))
    return float(np.median(list(queue.estimates)))


def phase_at(grid: BeatGrid, tempo_bpm: float, now: float) -> tuple[float, bool]:
    """Extrapolated theta at wall-clock `now`, plus a staleness flag.

    Anchors at the latest beat not after `now` (or the first beat) and
    advances at the current tempo, so latency between audio capture and
    the query shifts nothing. The flag turns True when the newest beat
    is over four periods old.
    """
    bt = grid.beat_times
    period = 60.0 / tempo_bpm
    i = np.searchsorted(bt, now, side="right") - 1
    anchor = bt[max(i, 0)]
    theta = wrap_phase(FOOTFALL_PHASE + TWO_PI * (now - anchor) / period)
    stale = (now - bt[-1]) > 4.0 * period
    return float(theta), bool(stale)


def fold_tempo(bpm: float) -> float:
    """Fold a tempo into the trackable gait band by octave jumps.

    bpm/60 Hz is doubled while at or below 1.0 Hz and halved while above
    4.0 Hz; the result lands in (1.0, 4.0].
    """
    if not (bpm > 0 and math.isfinite(bpm)):
        raise TempoRangeError(f"tempo {bpm!r} BPM cannot be folded")
    f = bpm / 60.0
    while f <= FREQ_BAND_HZ[0]:
        f *= 2.0
    while f > FREQ_BAND_HZ[1]:
        f *= 0.5
    if not (FREQ_BAND_HZ[0] < f <= FREQ_BAND_HZ[1]):
        raise TempoRangeError(f"tempo {bpm} BPM folds to {f} Hz, outside the band")
    return f


@dataclass(frozen=True)
class MusicFrame:
    """One 100 Hz feature frame consumed by the control loop."""

    t: float
    envelope: float
    smoothed_beat: float
    theta: float
    theta_obs: tuple[float, float]
    omega_m: float


@dataclass(frozen=True)
class MusicAnalysis:
    """Offline analysis product: envelope, tempo, grid, and B(t) series."""

    envelope: OnsetEnvelope
    tempo_bpm: float
    confidence: float
    grid: BeatGrid
    smoothed: np.ndarray

    def frame_at(self, t: float) -> MusicFrame:
        i = int(np.clip(round((t - self.envelope.t0) * self.envelope.frame_rate),
                        0, self.envelope.values.size - 1))
        theta = interpolate_phase(self.grid, t)
        return MusicFrame(
            t=t,
            envelope=float(self.envelope.values[i]),
            smoothed_beat=float(self.smoothed[i]),
            theta=theta,
            theta_obs=(math.cos(theta), math.sin(theta)),
            omega_m=self.grid.omega_m,
        )


def analyze_clip(clip: AudioClip, window_s: float | None = None) -> MusicAnalysis:
    """Full offline pipeline: envelope, tempo, beat grid, smoothed beats."""
    env = onset_envelope(clip)
    tempo, conf = estimate_tempo(env, window_s=window_s)
    grid = detect_beats(env, tempo)
    smoothed = smooth_beats(grid, env.frame_rate, env.values.size, t0=env.t0)
    return MusicAnalysis(envelope=env, tempo_bpm=grid.tempo_bpm, confidence=conf,
                         grid=grid, smoothed=smoothed)


class StreamingTracker:
    """Sliding-window tracker for timestamped audio chunks.

    Keeps the trailing window_s seconds of samples, re-analyzes every
    hop_s seconds, median-filters raw tempo estimates through a
    TempoQueue, and serves phase queries by extrapolation from the
    newest beat. Feed and query from the consumer thread; producers
    should hand chunks over via their own queue.
    """

    def __init__(self, sample_rate: int, window_s: float = 5.0, hop_s: float = 0.5):
        if int(sample_rate) not in SUPPORTED_RATES:
            raise FormatError(f"sample rate {sample_rate} not in {SUPPORTED_RATES}")
        self.sample_rate = int(sample_rate)
        self.window_s = float(window_s)
        self.hop_s = float(hop_s)
        self._buf = np.zeros(0)
        self._buf_end_t = 0.0
        self._since_analysis = 0.0
        self.tempo_queue = TempoQueue()
        self.tempo_bpm: float | None = None
        self.grid: BeatGrid | None = None

    def feed(self, samples, t_end: float) -> None:
        """Append a chunk whose last sample was captured at t_end seconds."""
        x = np.asarray(samples, dtype=float)
        self._buf = np.concatenate([self._buf, x])
        keep = int(self.window_s * self.sample_rate)
        if self._buf.size > keep:
            self._buf = self._buf[-keep:]
        self._since_analysis += x.size / self.sample_rate
        self._buf_end_t = float(t_end)
        if self._since_analysis >= self.hop_s:
            self._since_analysis = 0.0
            self._reanalyze()

    def _reanalyze(self) -> None:
        t0 = self._buf_end_t - self._buf.size / self.sample_rate
        clip = AudioClip(samples=self._buf, sample_rate=self.sample_rate, t0=t0)
        try:
            env = onset_envelope(clip)
            raw, _ = estimate_tempo(env, window_s=None)
        except (NoTempoError, InsufficientDataError):
            return
        self.tempo_bpm = smooth_tempo(self.tempo_queue, raw)
        self.grid = detect_beats(env, self.tempo_bpm)

    def theta(self, now: float) -> tuple[float, bool]:
        """Extrapolated music phase at `now`; raises until a grid exists."""
        if self.grid is None or self.tempo_bpm is None:
            raise InsufficientDataError("no beat grid tracked yet")
        return phase_at(self.grid, self.tempo_bpm, now)
