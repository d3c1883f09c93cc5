"""Surrogate stance plant: phases in, ground reaction forces out.

Stands in for robot dynamics when scoring the oscillator bank on a desk.
Each leg converts its phase to a stance weight (zero through swing, a
half-sine through stance peaking at 3*pi/2), and body weight is shared
across legs in proportion to those weights, so the total vertical force
is exactly mass*g whenever at least one leg is grounded and zero during
flight. Also hosts the event extractors that turn force timelines into
contact onsets, per-cycle force peaks (kinematic beats), and stepping
frequency statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InsufficientDataError
from .oscillator import TWO_PI

#: Total stance weight below which the plant reports flight.
FLIGHT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class PlantConfig:
    """Plant constants.

    mass: body mass in kg
    g: gravitational acceleration, m/s^2
    weight_exponent: stance weight is sin(phi - pi) ** weight_exponent
    force_scale: scales total supported load (1.0 conserves body weight)
    rate_hz: force sampling rate
    """

    mass: float = 12.0
    g: float = 9.81
    weight_exponent: float = 1.0
    force_scale: float = 1.0
    rate_hz: float = 100.0

    def __post_init__(self):
        if not (self.mass > 0 and self.g > 0):
            raise InputError("mass and g must be positive")
        if not (self.weight_exponent > 0 and self.force_scale > 0):
            raise InputError("weight_exponent and force_scale must be positive")
        if self.rate_hz <= 0:
            raise InputError("rate_hz must be positive")


@dataclass(frozen=True)
class GrfSample:
    """Forces for all four legs at one instant."""

    t: float
    forces: np.ndarray      # newtons, shape (4,)
    normalized: np.ndarray  # dimensionless, shape (4,)


@dataclass(frozen=True)
class GrfTimeline:
    """Uniformly sampled force history.

    t: shape (n,), strictly increasing, uniform spacing
    forces: shape (n, 4)
    normalized: shape (n, 4)
    """

    t: np.ndarray
    forces: np.ndarray
    normalized: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        f = np.asarray(self.forces, dtype=float)
        g = np.asarray(self.normalized, dtype=float)
        if t.ndim != 1 or f.shape != (t.size, 4) or g.shape != (t.size, 4):
            raise InputError("timeline arrays must be (n,), (n,4), (n,4)")
        if t.size >= 2:
            dt = np.diff(t)
            if np.any(dt <= 0):
                raise InputError("timestamps must be strictly increasing")
            if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
                raise InputError("timestamps must be uniformly spaced")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "forces", f)
        object.__setattr__(self, "normalized", g)

    def __len__(self):
        return self.t.size

    def sample(self, i: int) -> GrfSample:
        return GrfSample(t=float(self.t[i]), forces=self.forces[i], normalized=self.normalized[i])


def stance_weight(phi, exponent: float = 1.0):
    """Stance weight w(phi): 0 over [0, pi), sin(phi - pi)**exponent over [pi, 2*pi).

    Peaks at 1 when phi = 3*pi/2, the footfall phase. Accepts scalars or
    arrays; phases are wrapped first.
    """
    p = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    w = np.where(p >= math.pi, np.sin(p - math.pi), 0.0)
    if exponent != 1.0:
        w = w ** exponent
    return w if w.ndim else float(w)


def grf_from_phases(phases, config: PlantConfig):
    """Share supported body weight across grounded legs.

    N_i = force_scale * mass * g * w_i / sum(w) when any leg is grounded,
    all zeros during flight (sum(w) below FLIGHT_THRESHOLD).
    """
    w = np.asarray(stance_weight(phases, config.weight_exponent), dtype=float)
    if w.shape != (4,):
        raise InputError(f"expected 4 phases, got shape {w.shape}")
    total = w.sum()
    if total <= FLIGHT_THRESHOLD:
        return np.zeros(4)
    # share ratio first: equal weights then divide to exactly 1/n, which
    # keeps the mid-stance force plateau bit-uniform for beat extraction
    return (config.force_scale * config.mass * config.g) * (w / total)


def contact_onsets(timeline: GrfTimeline, leg: int) -> np.ndarray:
    """Timestamps where a leg's force switches from zero to positive.

    A sample counts as an onset when it is positive and the previous
    sample is zero; the first sample never counts (no predecessor).
    """
    f = timeline.forces[:, leg]
    rising = (f[1:] > 0.0) & (f[:-1] == 0.0)
    return timeline.t[1:][rising]


def _stance_runs(force: np.ndarray):
    """Index ranges [start, stop) of contiguous positive-force samples."""
    grounded = force > 0.0
    padded = np.concatenate([[False], grounded, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(int)))
    return list(zip(edges[0::2], edges[1::2]))


def kinematic_beats(timeline: GrfTimeline, leg: int, interior_only: bool = False) -> np.ndarray:
    """One timestamp per stance period, at that period's force maximum.

    When the maximum is a plateau, the midpoint sample of the maximal run
    is used (floor division, so a two-sample plateau resolves to the
    earlier sample). Mid-plateau keeps the event at the stance center,
    where the peak of the underlying stance weight sits.

    interior_only drops stance runs touching either end of the timeline,
    whose peaks are artifacts of truncation rather than gait events.
    """
    f = timeline.forces[:, leg]
    beats = []
    for start, stop in _stance_runs(f):
        if interior_only and (start == 0 or stop == f.size):
            continue
        seg = f[start:stop]
        peak = seg.max()
        at_peak = np.flatnonzero(seg == peak)
        run = at_peak[0]
        # longest contiguous run at the peak value, earliest if several
        best_len = 0
        i = 0
        while i < at_peak.size:
            j = i
            while j + 1 < at_peak.size and at_peak[j + 1] == at_peak[j] + 1:
                j += 1
            if j - i + 1 > best_len:
                best_len = j - i + 1
                run = at_peak[i] + (at_peak[j] - at_peak[i]) // 2
            i = j + 1
        beats.append(timeline.t[start + run])
    return np.asarray(beats, dtype=float)


def stepping_frequency(onsets) -> tuple[np.ndarray, float, float]:
    """Per-interval stepping frequencies with mean and population variance.

    Needs at least three onsets (two intervals); otherwise raises
    InsufficientDataError. Each frequency is 1 / (t_{k+1} - t_k).
    """
    t = np.asarray(onsets, dtype=float)
    if t.size < 3:
        raise InsufficientDataError(
            f"need at least 3 contact onsets, got {t.size}"
        )
    intervals = np.diff(t)
    if np.any(intervals <= 0):
        raise InputError("onsets must be strictly increasing")
    freqs = 1.0 / intervals
    return freqs, float(freqs.mean()), float(freqs.var())
