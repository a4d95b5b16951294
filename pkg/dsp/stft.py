"""Short-time Fourier analysis and overlap-add synthesis.

Frames are `frame_len` samples of the (optionally reflect-padded) signal,
weighted by a periodic Hann window and zero-padded to `fft_size` for the
transform. Synthesis applies the window again and divides by the summed
squared window, which inverts analysis wherever that sum is non-zero.
"""

import functools
import typing

import numpy as np
import scipy.fft
import scipy.signal
from numpy.lib.stride_tricks import sliding_window_view

from dsp.config import SpectralConfig
from dsp.types import Domain, Spectrogram
from errors import ConfigError, InvalidInput, ShapeError


@functools.lru_cache(maxsize=8)
def hann_window(cfg: SpectralConfig) -> np.ndarray:
    window = scipy.signal.get_window('hann', cfg.frame_len, fftbins=True)
    window.setflags(write=False)
    return window


def frame_count(length: int, cfg: SpectralConfig, center: bool = True) -> int:
    """Number of frames `analyze` produces for a signal of `length` samples."""
    padded = length + 2 * cfg.pad if center else length
    if padded < cfg.frame_len:
        raise InvalidInput(f'{length} samples is too short for a {cfg.frame_len}-sample frame')
    return (padded - cfg.frame_len) // cfg.frame_shift + 1


@functools.lru_cache(maxsize=32)
def window_envelope(frames: int, cfg: SpectralConfig) -> np.ndarray:
    """Overlap-added squared window for `frames` frames, un-trimmed."""
    window = hann_window(cfg)
    env = overlap_add(np.broadcast_to(window * window, (frames, cfg.frame_len)), cfg)
    env.setflags(write=False)
    return env


def overlap_add(frames: np.ndarray, cfg: SpectralConfig) -> np.ndarray:
    """Sum frames[..., F, frame_len] into a signal of (F-1)*shift + frame_len samples."""
    n_frames = frames.shape[-2]
    length = (n_frames - 1) * cfg.frame_shift + cfg.frame_len
    out = np.zeros(frames.shape[:-2] + (length,), dtype=frames.dtype)
    for f in range(n_frames):
        start = f * cfg.frame_shift
        out[..., start:start + cfg.frame_len] += frames[..., f, :]
    return out


def frame_signal(wave: np.ndarray, cfg: SpectralConfig, center: bool = True) -> np.ndarray:
    """Split wave[..., L] into frames[..., F, frame_len]."""
    wave = np.asarray(wave, dtype=np.float64)
    if wave.shape[-1] == 0:
        raise InvalidInput('cannot analyse an empty signal')
    if center:
        widths = [(0, 0)] * (wave.ndim - 1) + [(cfg.pad, cfg.pad)]
        wave = np.pad(wave, widths, mode='reflect')
    if wave.shape[-1] < cfg.frame_len:
        raise InvalidInput(f'{wave.shape[-1]} samples is too short for a {cfg.frame_len}-sample frame')
    return sliding_window_view(wave, cfg.frame_len, axis=-1)[..., ::cfg.frame_shift, :]


def analyze(wave: np.ndarray, cfg: SpectralConfig, center: bool = True) -> np.ndarray:
    """Complex spectrum[..., F, n_freq] of wave[..., L]."""
    cfg.validate()
    frames = frame_signal(wave, cfg, center) * hann_window(cfg)
    return scipy.fft.rfft(frames, n=cfg.fft_size, axis=-1)


def synthesize(spec: np.ndarray, cfg: SpectralConfig, center: bool = True) -> np.ndarray:
    """Real signal from spectrum[..., F, n_freq].

    With `center` the result is trimmed to F * frame_shift samples starting
    at the first unpadded sample; otherwise the whole overlap-add span is
    returned, with zeros where no window covers a sample."""
    cfg.validate()
    if spec.shape[-1] != cfg.n_freq:
        raise ShapeError(f'spectrum has {spec.shape[-1]} bins, expected {cfg.n_freq}')
    n_frames = spec.shape[-2]
    frames = scipy.fft.irfft(spec, n=cfg.fft_size, axis=-1)[..., :cfg.frame_len] * hann_window(cfg)
    signal = overlap_add(frames, cfg)
    env = window_envelope(n_frames, cfg)
    if center:
        start, stop = cfg.pad, cfg.pad + n_frames * cfg.frame_shift
        if stop > env.shape[-1] or np.any(env[start:stop] == 0):
            raise ConfigError(f'window sum vanishes inside the signal for frame_len {cfg.frame_len}, '
                              f'frame_shift {cfg.frame_shift}')
        return signal[..., start:stop] / env[start:stop]
    return np.divide(signal, env, out=np.zeros_like(signal), where=env > 0)


def principal_angle(spec: np.ndarray) -> np.ndarray:
    """Argument of `spec` in (-pi, pi], 0 for empty bins."""
    phase = np.where(spec == 0, 0.0, np.angle(spec))
    return np.where(phase <= -np.pi, phase + 2 * np.pi, phase)


def stft(wave: np.ndarray, cfg: SpectralConfig) -> typing.Tuple[Spectrogram, Spectrogram]:
    """Amplitude and phase spectrograms of a mono signal."""
    wave = np.asarray(wave, dtype=np.float64)
    if wave.ndim != 1 or wave.size == 0:
        raise InvalidInput(f'expected a non-empty 1-D signal, got shape {wave.shape}')
    spec = analyze(wave, cfg)
    return (Spectrogram(np.abs(spec), Domain.AMPLITUDE, cfg),
            Spectrogram(principal_angle(spec), Domain.PHASE, cfg))


def istft(amplitude: Spectrogram, phase: Spectrogram, cfg: SpectralConfig) -> np.ndarray:
    """Signal of amplitude.frames * frame_shift samples from an amplitude/phase pair."""
    amplitude.expect(Domain.AMPLITUDE)
    phase.expect(Domain.PHASE)
    if amplitude.data.shape != phase.data.shape:
        raise ShapeError(f'amplitude {amplitude.data.shape} and phase {phase.data.shape} differ')
    return synthesize(amplitude.data * np.exp(1j * phase.data), cfg)
