"""Exception hierarchy shared across the package.

Each error class maps to one failure family so the CLI can translate
them into stable exit codes (config errors: 2, insufficient data: 3,
curriculum failures: 4).
"""


class BeatGaitError(Exception):
    """Base class for all package errors."""


class InputError(BeatGaitError):
    """Rejected input: non-finite, negative, or malformed values."""


class CommandRangeError(BeatGaitError):
    """Commanded gait frequency outside the trackable band."""


class IntegrationDivergedError(BeatGaitError):
    """Oscillator state became non-finite during integration."""


class NotFittedError(BeatGaitError):
    """Prediction requested from an estimator that was never fitted."""


class InsufficientDataError(BeatGaitError):
    """Too few samples or events to compute the requested statistic."""


class NoTempoError(BeatGaitError):
    """Onset envelope carries no periodicity to estimate a tempo from."""


class FormatError(BeatGaitError):
    """Unsupported audio container, encoding, or sample rate."""


class TempoRangeError(BeatGaitError):
    """Tempo cannot be octave-folded into the trackable gait band."""


class CurriculumError(BeatGaitError):
    """A curriculum episode diverged or the final evaluation failed."""
