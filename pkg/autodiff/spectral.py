"""Differentiable short-time Fourier analysis and synthesis.

Both directions are linear, so the backward passes are the exact adjoints
of the dsp.stft forward computations.
"""

import typing

import numpy as np
import scipy.fft

from autodiff.tensor import Function, Tensor
from dsp.config import SpectralConfig
from dsp.stft import analyze, frame_signal, hann_window, overlap_add, synthesize, window_envelope
from errors import InvalidInput, ShapeError


def _bin_multiplicity(cfg: SpectralConfig) -> np.ndarray:
    """How many times each one-sided bin appears in the full spectrum."""
    counts = np.full(cfg.n_freq, 2.0)
    counts[0] = 1.0
    if cfg.fft_size % 2 == 0:
        counts[-1] = 1.0
    return counts


def _reflect_pad_adjoint(grad: np.ndarray, pad: int, length: int) -> np.ndarray:
    out = grad[..., pad:pad + length].copy()
    out[..., 1:pad + 1] += grad[..., :pad][..., ::-1]
    out[..., length - 1 - pad:length - 1] += grad[..., pad + length:][..., ::-1]
    return out


class Stft(Function):
    """Real or imaginary part of analyze(wave)."""
    def forward(self, wave):
        self.cfg = self.options['cfg']
        self.center = self.options['center']
        self.length = wave.shape[-1]
        if self.center and self.length <= self.cfg.pad:
            raise InvalidInput(f'{self.length} samples is too short to reflect-pad by {self.cfg.pad}')
        spec = analyze(wave, self.cfg, self.center)
        return spec.real if self.options['part'] == 'real' else spec.imag

    def backward(self, grad):
        cfg = self.cfg
        spec_grad = grad if self.options['part'] == 'real' else 1j * grad
        frames = scipy.fft.irfft(spec_grad / _bin_multiplicity(cfg), n=cfg.fft_size, axis=-1)
        frames = cfg.fft_size * frames[..., :cfg.frame_len] * hann_window(cfg)
        spread = overlap_add(frames, cfg)
        padded_len = self.length + 2 * cfg.pad if self.center else self.length
        padded = np.zeros(spread.shape[:-1] + (padded_len,), dtype=np.float64)
        padded[..., :spread.shape[-1]] = spread
        if self.center:
            return (_reflect_pad_adjoint(padded, cfg.pad, self.length),)
        return (padded,)


class Istft(Function):
    """synthesize(real + i*imag)."""
    def forward(self, real, imag):
        if real.shape != imag.shape:
            raise ShapeError(f'real {real.shape} and imaginary {imag.shape} parts differ')
        self.cfg = self.options['cfg']
        self.center = self.options['center']
        self.n_frames = real.shape[-2]
        return synthesize(real + 1j * imag, self.cfg, self.center)

    def backward(self, grad):
        cfg = self.cfg
        env = window_envelope(self.n_frames, cfg)
        if self.center:
            full = np.zeros(grad.shape[:-1] + env.shape, dtype=np.float64)
            full[..., cfg.pad:cfg.pad + grad.shape[-1]] = grad
        else:
            full = grad
        full = np.divide(full, env, out=np.zeros_like(full), where=env > 0)
        frames = frame_signal(full, cfg, center=False) * hann_window(cfg)
        spec = scipy.fft.rfft(frames, n=cfg.fft_size, axis=-1) * (_bin_multiplicity(cfg) / cfg.fft_size)
        return spec.real, spec.imag


def stft(wave, cfg: SpectralConfig, center: bool = True) -> typing.Tuple[Tensor, Tensor]:
    """(real, imaginary) spectra[..., F, n_freq] of wave[..., L]."""
    return (Stft.apply(wave, cfg=cfg, center=center, part='real'),
            Stft.apply(wave, cfg=cfg, center=center, part='imag'))


def istft(real, imag, cfg: SpectralConfig, center: bool = True) -> Tensor:
    return Istft.apply(real, imag, cfg=cfg, center=center)
