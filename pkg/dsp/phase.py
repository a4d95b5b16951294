"""Phase wrapping and phase differentials."""

import enum
import math

import numpy as np

from dsp.types import Domain, Spectrogram
from errors import InvalidInput

TWO_PI = 2.0 * math.pi


class Axis(enum.Enum):
    FREQUENCY = 'frequency'
    TIME = 'time'


def round_half_away(x):
    """round() with ties going away from zero (numpy rounds them to even)."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def wrap_residual(x):
    """x - 2*pi*round(x / 2*pi), in [-pi, pi]."""
    x = np.asarray(x, dtype=np.float64)
    return x - TWO_PI * round_half_away(x / TWO_PI)


def anti_wrap(x):
    """Principal absolute value of a phase difference, in [0, pi].

    Accepts a scalar or an array; scalars come back as float."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInput('anti_wrap needs finite input')
    result = np.minimum(np.abs(wrap_residual(arr)), math.pi)
    return float(result) if result.ndim == 0 else result


def forward_difference(data: np.ndarray, axis: int) -> np.ndarray:
    """Forward difference along `axis`, keeping the shape by repeating the
    last difference at the trailing edge."""
    data = np.asarray(data, dtype=np.float64)
    if data.shape[axis] < 2:
        raise InvalidInput(f'need at least 2 entries along axis {axis}, got {data.shape[axis]}')
    diff = np.diff(data, axis=axis)
    last = np.take(diff, [-1], axis=axis)
    return np.concatenate([diff, last], axis=axis)


def phase_differential(P: Spectrogram, axis: Axis) -> np.ndarray:
    """Group-delay style (frequency) or instantaneous-frequency style (time)
    differences of a frames x bins phase matrix, same shape as the input."""
    P.expect(Domain.PHASE)
    if axis == Axis.TIME and P.frames < 2:
        raise InvalidInput('a time differential needs at least two frames')
    return forward_difference(P.data, axis=-1 if axis == Axis.FREQUENCY else -2)
