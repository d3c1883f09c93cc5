import math

import numpy as np
import pytest

from beatgait.errors import (
    FormatError,
    InputError,
    InsufficientDataError,
    NoTempoError,
    TempoRangeError,
)
from beatgait.music import (
    AudioClip,
    BeatGrid,
    OnsetEnvelope,
    StreamingTracker,
    TempoQueue,
    analyze_clip,
    detect_beats,
    estimate_tempo,
    fold_tempo,
    interpolate_phase,
    load_wav,
    onset_envelope,
    phase_at,
    save_wav,
    smooth_beats,
    smooth_tempo,
    synth_click_track,
)
from beatgait.oscillator import FOOTFALL_PHASE, TWO_PI


class TestSynthAndIo:
    def test_click_positions(self):
        clip = synth_click_track(120.0, 2.0, sample_rate=16000)
        assert clip.sample_rate == 16000
        assert clip.samples.size == 32000
        assert clip.samples[0] == 1.0
        period_n = int(round(0.5 * 16000))
        assert clip.samples[period_n] == 1.0
        # silence between the clicks
        assert clip.samples[period_n - 100] == 0.0

    def test_synth_validation(self):
        with pytest.raises(InputError):
            synth_click_track(0.0, 2.0)
        with pytest.raises(InputError):
            synth_click_track(120.0, -1.0)

    def test_wav_round_trip(self, tmp_path):
        clip = synth_click_track(100.0, 1.0)
        path = tmp_path / "c.wav"
        save_wav(path, clip)
        back = load_wav(path)
        assert back.sample_rate == clip.sample_rate
        assert back.samples.shape == clip.samples.shape
        # 16-bit quantization bound
        assert np.max(np.abs(back.samples - clip.samples)) < 2e-4

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_wav(tmp_path / "nope.wav")

    def test_load_garbage_file(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"not a wav at all")
        with pytest.raises(FormatError):
            load_wav(path)


class TestEnvelope:
    def test_peaks_near_clicks(self):
        clip = synth_click_track(120.0, 5.0)
        env = onset_envelope(clip)
        assert env.frame_rate == 100.0
        # every click should produce a local flux peak within one frame
        for k in range(1, 9):
            t_click = k * 0.5
            i = int(round(t_click * env.frame_rate))
            window = env.values[i - 3:i + 4]
            assert window.max() > 0
            assert abs(int(np.argmax(window)) - 3) <= 1

    def test_empty_clip_rejected(self):
        with pytest.raises(InputError):
            onset_envelope(AudioClip(samples=np.zeros(0), sample_rate=22050))

    def test_envelope_nonnegative(self):
        env = onset_envelope(synth_click_track(90.0, 3.0))
        assert np.all(env.values >= 0)


class TestTempo:
    def test_click_tempo(self):
        env = onset_envelope(synth_click_track(120.0, 10.0))
        bpm, conf = estimate_tempo(env, window_s=None)
        assert abs(bpm - 120.0) <= 1.0
        assert 0 < conf

    def test_flat_envelope(self):
        env = OnsetEnvelope(values=np.full(1000, 3.0))
        with pytest.raises(NoTempoError):
            estimate_tempo(env)

    def test_silence(self):
        env = onset_envelope(AudioClip(samples=np.zeros(22050), sample_rate=22050))
        with pytest.raises(NoTempoError):
            estimate_tempo(env, window_s=None)

    def test_short_window(self):
        env = onset_envelope(synth_click_track(60.0, 2.5))
        with pytest.raises(InsufficientDataError):
            estimate_tempo(env, window_s=None)

    def test_subharmonic_rejection(self):
        # the shortest near-maximal lag wins, so 80 BPM is not read as 40
        env = onset_envelope(synth_click_track(80.0, 10.0))
        bpm, _ = estimate_tempo(env, window_s=None)
        assert abs(bpm - 80.0) <= 1.0


class TestBeatGrid:
    def test_detected_beats_near_truth(self):
        clip = synth_click_track(100.0, 10.0)
        env = onset_envelope(clip)
        bpm, _ = estimate_tempo(env, window_s=None)
        grid = detect_beats(env, bpm)
        assert abs(grid.tempo_bpm - 100.0) <= 1.0
        truth = np.arange(0, 10.0, 0.6)
        for b in grid.beat_times:
            assert np.min(np.abs(truth - b)) <= 0.010

    def test_grid_uniform(self):
        env = onset_envelope(synth_click_track(140.0, 10.0))
        grid = detect_beats(env, 140.0)
        iv = np.diff(grid.beat_times)
        assert np.std(iv) < 1e-9  # refit line is exactly uniform

    def test_grid_validation(self):
        with pytest.raises(InputError):
            BeatGrid(beat_times=np.zeros(0), tempo_bpm=120.0)
        with pytest.raises(InputError):
            BeatGrid(beat_times=np.array([0.0, 0.1, 0.1]), tempo_bpm=120.0)

    def test_detect_requires_two_periods(self):
        env = onset_envelope(synth_click_track(60.0, 1.2))
        with pytest.raises(InsufficientDataError):
            detect_beats(env, 60.0)


class TestPhaseInterpolation:
    def grid(self):
        return BeatGrid(beat_times=np.array([1.0, 1.5, 2.0, 2.5]), tempo_bpm=120.0)

    def test_anchor_exact(self):
        g = self.grid()
        for b in g.beat_times:
            assert interpolate_phase(g, b) == FOOTFALL_PHASE

    def test_quarter_and_midpoint(self):
        g = self.grid()
        assert interpolate_phase(g, 1.125) == pytest.approx(0.0, abs=1e-12)
        assert interpolate_phase(g, 1.25) == pytest.approx(0.5 * math.pi)

    def test_extrapolation(self):
        g = self.grid()
        # before the first beat: linear in the first interval
        assert interpolate_phase(g, 0.75) == pytest.approx(0.5 * math.pi)
        # after the last: linear in the last interval
        assert interpolate_phase(g, 2.75) == pytest.approx(0.5 * math.pi)

    def test_vectorized(self):
        g = self.grid()
        out = interpolate_phase(g, np.array([1.0, 1.25, 1.5]))
        assert out.shape == (3,)
        assert out[0] == FOOTFALL_PHASE

    def test_single_beat_grid(self):
        g = BeatGrid(beat_times=np.array([2.0]), tempo_bpm=120.0)
        assert interpolate_phase(g, 2.0) == FOOTFALL_PHASE
        assert interpolate_phase(g, 2.25) == pytest.approx(0.5 * math.pi)


class TestSmoothedBeats:
    def test_unit_peak_at_beat_frames(self):
        g = BeatGrid(beat_times=np.array([0.5, 1.0, 1.5]), tempo_bpm=120.0)
        b = smooth_beats(g, 100.0, 200)
        for t in g.beat_times:
            assert b[int(round(t * 100))] == pytest.approx(1.0)
        assert np.all(b >= 0)

    def test_gaussian_falloff(self):
        g = BeatGrid(beat_times=np.array([1.0]), tempo_bpm=60.0)
        b = smooth_beats(g, 100.0, 300)
        assert b[103] == pytest.approx(math.exp(-9 / 18))
        assert b[100 + 8] == 0.0  # outside the truncated kernel


class TestTempoSmoothing:
    def test_median_rejects_octave_glitch(self):
        q = TempoQueue()
        out = [smooth_tempo(q, v) for v in (120, 120, 240, 120, 120)]
        assert out[-1] == 120.0
        assert out[2] == 120.0  # median of [120, 120, 240]

    def test_first_estimate_passthrough(self):
        assert smooth_tempo(TempoQueue(), 118.0) == 118.0

    def test_capacity_five(self):
        q = TempoQueue()
        for v in (100, 100, 100, 100, 100, 200, 200, 200):
            out = smooth_tempo(q, v)
        assert out == 200.0  # the old 100s have scrolled out


class TestPhaseAt:
    def test_on_beat(self):
        g = BeatGrid(beat_times=np.array([1.0, 1.5]), tempo_bpm=120.0)
        theta, stale = phase_at(g, 120.0, 1.5)
        assert theta == FOOTFALL_PHASE
        assert not stale

    def test_extrapolates_from_latest(self):
        g = BeatGrid(beat_times=np.array([1.0, 1.5]), tempo_bpm=120.0)
        theta, stale = phase_at(g, 120.0, 1.75)
        assert theta == pytest.approx(0.5 * math.pi)
        assert not stale

    def test_stale_after_four_periods(self):
        g = BeatGrid(beat_times=np.array([1.0, 1.5]), tempo_bpm=120.0)
        _, stale = phase_at(g, 120.0, 4.0)
        assert stale


class TestFolding:
    def test_in_band_unchanged(self):
        assert fold_tempo(89.6) == pytest.approx(89.6 / 60.0)
        assert fold_tempo(120.0) == pytest.approx(2.0)

    def test_fold_down(self):
        # 220 BPM = 3.667 Hz is already inside (1, 4]: no halving
        assert fold_tempo(220.0) == pytest.approx(220.0 / 60.0)
        assert fold_tempo(480.0) == pytest.approx(4.0)
        assert fold_tempo(500.0) == pytest.approx(500.0 / 60.0 / 4.0)

    def test_fold_up(self):
        assert fold_tempo(30.0) == pytest.approx(2.0)
        # exactly 1.0 Hz is outside the open lower bound: doubled
        assert fold_tempo(60.0) == pytest.approx(2.0)

    def test_band_edges(self):
        assert fold_tempo(240.0) == pytest.approx(4.0)

    def test_invalid(self):
        with pytest.raises(TempoRangeError):
            fold_tempo(0.0)
        with pytest.raises(TempoRangeError):
            fold_tempo(-120.0)
        with pytest.raises(TempoRangeError):
            fold_tempo(float("inf"))


class TestAnalyzeClip:
    def test_end_to_end(self):
        analysis = analyze_clip(synth_click_track(132.0, 10.0))
        assert abs(analysis.grid.tempo_bpm - 132.0) <= 1.0
        assert analysis.smoothed.size == analysis.envelope.values.size
        frame = analysis.frame_at(analysis.grid.beat_times[3])
        assert frame.theta == FOOTFALL_PHASE
        assert frame.omega_m == pytest.approx(TWO_PI * analysis.grid.tempo_bpm / 60.0)
        c, s = frame.theta_obs
        assert c * c + s * s == pytest.approx(1.0)


class TestStreamingTracker:
    def test_bad_rate(self):
        with pytest.raises(FormatError):
            StreamingTracker(sample_rate=12345)

    def test_tracks_click_stream(self):
        rate = 22050
        clip = synth_click_track(120.0, 12.0, sample_rate=rate)
        tracker = StreamingTracker(sample_rate=rate, window_s=5.0, hop_s=0.5)
        with pytest.raises(InsufficientDataError):
            tracker.theta(0.0)
        chunk = int(0.25 * rate)
        for i in range(0, clip.samples.size, chunk):
            seg = clip.samples[i:i + chunk]
            t_end = (i + seg.size) / rate
            tracker.feed(seg, t_end)
        assert tracker.tempo_bpm is not None
        assert abs(tracker.tempo_bpm - 120.0) <= 2.0
        theta, stale = tracker.theta(12.0)
        assert not stale
        # 12.0 s is a true click instant: phase should sit near the anchor
        assert abs(math.remainder(theta - FOOTFALL_PHASE, TWO_PI)) < 0.35
