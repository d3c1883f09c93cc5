"""Evaluation metrics for gait-to-music synchronization runs.

Quantities scored: signed time offsets between kinematic beats and
music beats (and their worst case), the standard deviation of the
commanded intrinsic frequency (how much the modulator intervened),
stepping-frequency deviation statistics, and the matrix of wrapped
relative phase differences between the four oscillators. A SyncReport
bundles whichever of these a scenario produced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InsufficientDataError
from .oscillator import wrap_signed

#: Seconds discarded from the start of a run before scoring alignment.
DEFAULT_WARMUP_S = 5.0


def beat_alignment(kin_beats, music_beats, warmup_s: float = DEFAULT_WARMUP_S):
    """Signed offset of each kinematic beat to its nearest music beat.

    Both series drop events before warmup_s first. Offsets are
    kinematic minus music, so a positive value means the step came
    late. A kinematic beat exactly halfway between two music beats
    pairs with the later one, keeping the tie on the negative (early)
    side. Returns (delta_t series, max absolute offset).
    """
    kin = np.asarray(kin_beats, dtype=float)
    mus = np.asarray(music_beats, dtype=float)
    kin = kin[kin >= warmup_s]
    mus = mus[mus >= warmup_s]
    if kin.size == 0 or mus.size == 0:
        raise InsufficientDataError("no beats left after discarding warm-up")
    right = np.searchsorted(mus, kin)
    deltas = np.empty_like(kin)
    for i, (k, r) in enumerate(zip(kin, right)):
        lo = mus[r - 1] if r > 0 else None
        hi = mus[r] if r < mus.size else None
        if lo is None:
            deltas[i] = k - hi
        elif hi is None:
            deltas[i] = k - lo
        else:
            # tie -> later beat, giving the negative offset
            deltas[i] = (k - lo) if (k - lo) < (hi - k) else (k - hi)
    return deltas, float(np.abs(deltas).max())


def frequency_variance(omega_series) -> float:
    """Population standard deviation of a frequency command log."""
    w = np.asarray(omega_series, dtype=float)
    if w.size < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise InputError("omega series must be finite")
    return float(w.std())


def frequency_deviation(freqs, f_cmd: float) -> tuple[float, float]:
    """Mean absolute deviation from the command, and population variance.

    freqs is the per-interval stepping frequency series (1/interval).
    """
    f = np.asarray(freqs, dtype=float)
    if f.size == 0:
        raise InsufficientDataError("empty frequency series")
    return float(np.abs(f - f_cmd).mean()), float(f.var())


def relative_phase_differences(phases) -> np.ndarray:
    """Matrix of wrapped differences: entry (i, k) = wrap(phi_i - phi_k).

    Wrapping is to (-pi, pi], so the matrix is antisymmetric except
    that pi is its own negative on the ring.
    """
    p = np.asarray(phases, dtype=float)
    if p.shape != (4,):
        raise InputError(f"expected 4 phases, got shape {p.shape}")
    return wrap_signed(p[:, None] - p[None, :])


@dataclass
class SyncReport:
    """Scored quantities of one scenario run; unused fields stay None."""

    delta_t_series: list = field(default_factory=list)
    delta_t_max: float | None = None
    omega_std: float | None = None
    freq_dev_mean: float | None = None
    freq_dev_var: float | None = None
    rpd_matrix: list | None = None

    def to_dict(self) -> dict:
        return {
            "delta_t_series": [float(d) for d in self.delta_t_series],
            "delta_t_max": None if self.delta_t_max is None else float(self.delta_t_max),
            "omega_std": None if self.omega_std is None else float(self.omega_std),
            "freq_dev_mean": None if self.freq_dev_mean is None else float(self.freq_dev_mean),
            "freq_dev_var": None if self.freq_dev_var is None else float(self.freq_dev_var),
            "rpd_matrix": self.rpd_matrix,
        }
