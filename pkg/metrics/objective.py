"""Waveform and cepstral distances."""

import logging
import math
import typing

import numpy as np
import scipy.fft

from dsp.config import SpectralConfig
from dsp.mel import mel_spectrogram
from errors import InvalidInput, ShapeError

log = logging.getLogger(__name__)

SNR_CAP_DB = 100.0
CEPSTRAL_ORDER = 13
# dB scale of the Euclidean cepstral distance.
MCD_SCALE = 10.0 * math.sqrt(2.0) / math.log(10.0)


def align(ref: np.ndarray, syn: np.ndarray, cfg: SpectralConfig) -> typing.Tuple[np.ndarray, np.ndarray, bool]:
    """Trim two signals to a common length. They may differ by at most one
    frame shift; the returned flag says whether trimming happened."""
    ref = np.asarray(ref, dtype=np.float64)
    syn = np.asarray(syn, dtype=np.float64)
    if ref.ndim != 1 or syn.ndim != 1:
        raise ShapeError(f'expected 1-D signals, got {ref.shape} and {syn.shape}')
    if ref.shape[0] == syn.shape[0]:
        return ref, syn, False
    difference = abs(ref.shape[0] - syn.shape[0])
    if difference > cfg.frame_shift:
        raise ShapeError(f'signal lengths {ref.shape[0]} and {syn.shape[0]} differ by more than one frame')
    log.warning('trimming signals of %d and %d samples to the shorter', ref.shape[0], syn.shape[0])
    n = min(ref.shape[0], syn.shape[0])
    return ref[:n], syn[:n], True


def _check_energy(ref: np.ndarray):
    if not np.any(ref):
        raise InvalidInput('reference signal has zero energy')


def snr(ref: np.ndarray, syn: np.ndarray, cfg: SpectralConfig) -> float:
    """10 log10(|ref|^2 / |ref - syn|^2) in dB, at most SNR_CAP_DB.
    Not symmetric: the reference sets the signal power."""
    (ref, syn, _) = align(ref, syn, cfg)
    _check_energy(ref)
    signal = float(np.sum(ref * ref))
    noise = float(np.sum((ref - syn) ** 2))
    if noise == 0.0:
        return SNR_CAP_DB
    return min(SNR_CAP_DB, 10.0 * math.log10(signal / noise))


def mel_cepstra(wave: np.ndarray, cfg: SpectralConfig, order: int = CEPSTRAL_ORDER) -> np.ndarray:
    """Coefficients 1..order of the DCT-II of each frame's log mel spectrum."""
    log_mel = np.log(mel_spectrogram(wave, cfg).data)
    return scipy.fft.dct(log_mel, type=2, norm='ortho', axis=-1)[:, 1:order + 1]


def mcd_from_cepstra(c_ref: np.ndarray, c_syn: np.ndarray) -> float:
    if c_ref.shape != c_syn.shape:
        raise ShapeError(f'cepstra {c_ref.shape} and {c_syn.shape} differ')
    distances = np.sqrt(np.sum((c_ref - c_syn) ** 2, axis=-1))
    return float(MCD_SCALE * np.mean(distances))


def mcd(ref: np.ndarray, syn: np.ndarray, cfg: SpectralConfig) -> float:
    """Mel-cepstral distortion in dB, averaged over frames."""
    (ref, syn, _) = align(ref, syn, cfg)
    _check_energy(ref)
    return mcd_from_cepstra(mel_cepstra(ref, cfg), mel_cepstra(syn, cfg))
