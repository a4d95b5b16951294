"""F0 extraction by normalized cross-correlation, and pitch error metrics."""

from dataclasses import dataclass
import logging
import math
import typing

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from dsp.config import SpectralConfig
from dsp.stft import frame_count
from errors import InvalidInput, ShapeError

log = logging.getLogger(__name__)

F0_MIN_HZ = 50.0
F0_MAX_HZ = 600.0
WINDOW_S = 0.04
CLARITY_THRESHOLD = 0.3
# Candidate peaks within this fraction of the best one compete; the
# shortest lag wins, which avoids picking a multiple of the period.
PEAK_TOLERANCE = 0.9
# Frames quieter than this RMS are unvoiced.
SILENCE_RMS = 1e-3


@dataclass
class PitchTrack:
    """Per-frame F0 in Hz (0 where unvoiced), frames centred every frame_shift samples."""
    f0_hz: np.ndarray
    voiced: np.ndarray
    frame_shift: int
    sample_rate_hz: int

    @property
    def frames(self) -> int:
        return self.f0_hz.shape[0]


def _best_lag(nccf: np.ndarray, first_lag: int) -> typing.Tuple[float, float]:
    """(interpolated lag, clarity) of the chosen peak, or (0, 0).

    nccf[i] is the correlation at lag first_lag + i; the end entries only
    serve as neighbours."""
    inner = nccf[1:-1]
    peaks = np.flatnonzero((inner > nccf[:-2]) & (inner >= nccf[2:])) + 1
    if peaks.size == 0:
        return 0.0, 0.0
    best = np.max(nccf[peaks])
    if best <= 0:
        return 0.0, 0.0
    i = int(peaks[np.argmax(nccf[peaks] >= PEAK_TOLERANCE * best)])
    (a, b, c) = nccf[i - 1:i + 2]
    curvature = a - 2 * b + c
    offset = 0.5 * (a - c) / curvature if curvature < 0 else 0.0
    return first_lag + i + offset, float(b)


def extract_f0(wave: np.ndarray, cfg: SpectralConfig,
               f0_min_hz: float = F0_MIN_HZ, f0_max_hz: float = F0_MAX_HZ) -> PitchTrack:
    """One F0 estimate per analysis frame of `cfg`."""
    wave = np.asarray(wave, dtype=np.float64)
    sr = cfg.sample_rate_hz
    window = int(round(WINDOW_S * sr))
    if wave.ndim != 1 or wave.shape[0] < window:
        raise InvalidInput(f'pitch extraction needs at least {window} samples, got shape {wave.shape}')
    min_lag = max(2, int(math.floor(sr / f0_max_hz)))
    max_lag = int(math.ceil(sr / f0_min_hz))
    # One extra lag each side so that every candidate has two neighbours.
    first_lag = min_lag - 1
    last_lag = max_lag + 1

    n_frames = frame_count(wave.shape[0], cfg)
    half = window // 2
    padded = np.pad(wave, (half, half + last_lag + window))
    f0 = np.zeros(n_frames)
    voiced = np.zeros(n_frames, dtype=bool)
    for f in range(n_frames):
        start = f * cfg.frame_shift
        segment = padded[start:start + window + last_lag]
        x = segment[:window]
        energy = float(np.dot(x, x))
        if math.sqrt(energy / window) < SILENCE_RMS:
            continue
        shifted = sliding_window_view(segment, window)[first_lag:last_lag + 1]
        shifted_energy = np.einsum('lw,lw->l', shifted, shifted)
        denominator = np.sqrt(energy * shifted_energy)
        nccf = np.divide(shifted @ x, denominator, out=np.zeros(shifted.shape[0]), where=denominator > 0)
        (lag, clarity) = _best_lag(nccf, first_lag)
        if clarity <= CLARITY_THRESHOLD or lag <= 0:
            continue
        hz = sr / lag
        if f0_min_hz <= hz <= f0_max_hz:
            f0[f] = hz
            voiced[f] = True
    log.debug('%d of %d frames voiced', int(voiced.sum()), n_frames)
    return PitchTrack(f0_hz=f0, voiced=voiced, frame_shift=cfg.frame_shift, sample_rate_hz=sr)


def f0_metrics(ref: PitchTrack, syn: PitchTrack) -> typing.Tuple[float, float]:
    """(F0 RMSE in cents over frames voiced in both, V/UV error in percent).

    Cents are 1200 log2(syn / ref). The RMSE is nan when no frame is voiced
    in both tracks."""
    if ref.frames != syn.frames:
        raise ShapeError(f'pitch tracks have {ref.frames} and {syn.frames} frames')
    if ref.frames == 0:
        raise InvalidInput('pitch tracks are empty')
    both = ref.voiced & syn.voiced
    if np.any(both):
        cents = 1200.0 * np.log2(syn.f0_hz[both] / ref.f0_hz[both])
        rmse = float(np.sqrt(np.mean(cents ** 2)))
    else:
        rmse = float('nan')
    vuv = 100.0 * float(np.mean(ref.voiced != syn.voiced))
    return rmse, vuv
