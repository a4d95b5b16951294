"""Mel filterbank, its pseudo-inverse and the amplitude prior."""

from dataclasses import dataclass
import functools

import numpy as np

from dsp.config import SpectralConfig
from dsp.stft import analyze
from dsp.types import Domain, Spectrogram
from errors import ConfigError, ShapeError

# Singular values below PINV_RCOND * largest are treated as zero.
PINV_RCOND = 1e-8


def hz_to_mel(hz):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilter:
    """`forward` maps n_freq amplitude bins to mel bins (N x K);
    `pseudo_inverse` maps back (K x N)."""
    forward: np.ndarray
    pseudo_inverse: np.ndarray

    @property
    def mel_bins(self) -> int:
        return self.forward.shape[1]


def pseudo_inverse(matrix: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose inverse by SVD, truncating singular values below
    rcond * sigma_max."""
    return np.linalg.pinv(np.asarray(matrix, dtype=np.float64), rcond=rcond)


@functools.lru_cache(maxsize=4)
def mel_filterbank(cfg: SpectralConfig) -> MelFilter:
    """Triangular unit-peak filters evenly spaced on the mel scale from
    0 Hz to Nyquist."""
    if cfg.mel_bins < 2:
        raise ConfigError(f'mel_bins must be at least 2, got {cfg.mel_bins}')
    if cfg.mel_bins > cfg.n_freq:
        raise ConfigError(f'mel_bins {cfg.mel_bins} exceeds n_freq {cfg.n_freq}')
    cfg.validate()
    nyquist = cfg.sample_rate_hz / 2.0
    bin_hz = np.linspace(0.0, nyquist, cfg.n_freq)
    edges_hz = mel_to_hz(np.linspace(0.0, hz_to_mel(nyquist), cfg.mel_bins + 2))

    lower = edges_hz[:-2]
    centre = edges_hz[1:-1]
    upper = edges_hz[2:]
    rising = (bin_hz[:, None] - lower) / (centre - lower)
    falling = (upper - bin_hz[:, None]) / (upper - centre)
    forward = np.maximum(0.0, np.minimum(rising, falling))

    empty = np.flatnonzero(forward.max(axis=0) <= 0)
    if empty.size:
        raise ConfigError(f'mel filters {empty.tolist()} cover no frequency bin; '
                          f'reduce mel_bins or increase fft_size')
    inverse = pseudo_inverse(forward)
    forward.setflags(write=False)
    inverse.setflags(write=False)
    return MelFilter(forward=forward, pseudo_inverse=inverse)


def project_mel(amplitude: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    """amplitude[..., F, N] through the filterbank, floored at amp_floor."""
    return np.maximum(amplitude @ mel_filterbank(cfg).forward, cfg.amp_floor)


def mel_spectrogram(wave: np.ndarray, cfg: SpectralConfig) -> Spectrogram:
    wave = np.asarray(wave, dtype=np.float64)
    if wave.ndim != 1:
        raise ShapeError(f'expected a 1-D signal, got shape {wave.shape}')
    return Spectrogram(project_mel(np.abs(analyze(wave, cfg)), cfg), Domain.MEL, cfg)


def amplitude_prior(X: Spectrogram, filt: MelFilter, eps: float) -> Spectrogram:
    """Pseudo-amplitude spectrogram max(|X M+|, eps)."""
    X.expect(Domain.MEL)
    if X.bins != filt.mel_bins:
        raise ShapeError(f'mel spectrogram has {X.bins} bins, filterbank expects {filt.mel_bins}')
    return Spectrogram(prior_from_mel(X.data, filt, eps), Domain.AMPLITUDE, X.config)


def prior_from_mel(mel: np.ndarray, filt: MelFilter, eps: float) -> np.ndarray:
    """Array form of amplitude_prior for mel[..., F, K]."""
    prior = np.abs(np.asarray(mel, dtype=np.float64) @ filt.pseudo_inverse)
    # np.maximum propagates NaN, so malformed rows are floored explicitly.
    return np.maximum(np.where(np.isnan(prior), eps, prior), eps)
