"""Amplitude, reconstructed-spectrum and mel losses."""

import logging

import numpy as np

from autodiff import ops
from autodiff.spectral import istft, stft
from autodiff.tensor import Tensor, as_tensor
from dsp.config import SpectralConfig
from dsp.mel import mel_filterbank
from errors import ShapeError

log = logging.getLogger(__name__)


def _same_shape(a, b, what: str):
    if tuple(a.shape) != tuple(b.shape):
        raise ShapeError(f'{what}: {tuple(a.shape)} vs {tuple(b.shape)}')


def log_amplitude_target(amplitude: np.ndarray, floor: float) -> np.ndarray:
    return np.log(np.maximum(np.asarray(amplitude, dtype=np.float64), floor))


def amplitude_loss(log_amp_hat, log_amp) -> Tensor:
    """Mean squared error of log amplitudes."""
    log_amp_hat = as_tensor(log_amp_hat)
    _same_shape(log_amp_hat, log_amp, 'log amplitude')
    return ops.mean(ops.square(ops.sub(log_amp_hat, log_amp)))


def spectrum_parts(log_amp, phase):
    """Real and imaginary parts of exp(log_amp) * exp(i phase)."""
    amp = ops.exp(log_amp)
    return ops.mul(amp, ops.cos(phase)), ops.mul(amp, ops.sin(phase))


def consistency_loss(real, imag, cfg: SpectralConfig) -> Tensor:
    """Distance of a spectrum from the analysis of its own resynthesis."""
    wave = istft(real, imag, cfg, center=False)
    real2, imag2 = stft(wave, cfg, center=False)
    return ops.mean(ops.add(ops.square(ops.sub(real, real2)), ops.square(ops.sub(imag, imag2))))


def stft_loss(log_amp_hat, phase_hat, log_amp, phase, cfg: SpectralConfig,
              consistency: bool = True) -> Tensor:
    """Squared error between predicted and natural complex spectra in
    real/imaginary parts, plus the consistency of the predicted spectrum."""
    log_amp_hat = as_tensor(log_amp_hat)
    phase_hat = as_tensor(phase_hat)
    _same_shape(log_amp_hat, phase_hat, 'predicted amplitude and phase')
    _same_shape(log_amp_hat, log_amp, 'predicted and natural amplitude')
    _same_shape(log_amp, phase, 'natural amplitude and phase')
    real, imag = spectrum_parts(log_amp_hat, phase_hat)
    amp = np.exp(np.asarray(log_amp, dtype=np.float64))
    real_ref = amp * np.cos(phase)
    imag_ref = amp * np.sin(phase)
    loss = ops.mean(ops.add(ops.square(ops.sub(real, real_ref)), ops.square(ops.sub(imag, imag_ref))))
    if consistency:
        loss = ops.add(loss, consistency_loss(real, imag, cfg))
    return loss


def log_mel(wave, cfg: SpectralConfig) -> Tensor:
    """Differentiable log mel spectrogram of wave[..., L], floored at amp_floor."""
    real, imag = stft(wave, cfg)
    mel = ops.matmul(ops.hypot(real, imag), mel_filterbank(cfg).forward)
    return ops.log(ops.clamp_min(mel, cfg.amp_floor))


def mel_loss(wave_hat, mel, cfg: SpectralConfig) -> Tensor:
    """Mean absolute error between the log mel spectrogram of wave_hat and
    log(mel). Frame counts may differ by one; the shorter count is used."""
    mel = np.asarray(mel, dtype=np.float64)
    predicted = log_mel(wave_hat, cfg)
    frames, target_frames = predicted.shape[-2], mel.shape[-2]
    if abs(frames - target_frames) > 1:
        raise ShapeError(f'waveform gives {frames} frames, mel target has {target_frames}')
    used = min(frames, target_frames)
    if frames != used:
        predicted = predicted[..., :used, :]
    target = np.log(np.maximum(mel[..., :used, :], cfg.amp_floor))
    _same_shape(predicted, target, 'log mel')
    return ops.mean(ops.abs(ops.sub(predicted, target)))
