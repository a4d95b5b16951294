"""Amplitude and phase predictors and the waveform reconstruction head.

Tensors at this level are frame-major, batch x frames x bins; the stacks
transpose to batch x channels x frames internally.
"""

import logging
import typing

import numpy as np

from autodiff import ops
from autodiff.spectral import istft
from autodiff.tensor import Tensor, as_tensor, no_grad
from dsp.config import SpectralConfig
from dsp.mel import mel_filterbank, prior_from_mel
from dsp.types import Domain, Spectrogram
from errors import ShapeError
from model.blocks import block_forward, channel_norm
from model.params import ModelParams, PriorKind

log = logging.getLogger(__name__)

# Called with the (R, I) head outputs, returns replacements. Debug only.
HeadOverride = typing.Callable[[Tensor, Tensor], typing.Tuple[Tensor, Tensor]]


class Prediction(typing.NamedTuple):
    log_prior: Tensor
    log_amp: Tensor
    phase: Tensor
    real: Tensor
    imag: Tensor
    wave: Tensor


def _check_bins(x: Tensor, bins: int, what: str):
    if x.ndim != 3 or x.shape[-1] != bins:
        raise ShapeError(f'{what} must be batch x frames x {bins}, got {x.shape}')


def _project(x: Tensor, params: ModelParams, name: str, bias: bool = True) -> Tensor:
    return ops.conv1d(x, params[f'{name}.weight'], params[f'{name}.bias'] if bias else None)


def _stack(h: Tensor, params: ModelParams, stack: str, count: int) -> Tensor:
    h = channel_norm(h, params[f'{stack}.in_norm.scale'], params[f'{stack}.in_norm.shift'])
    for i in range(count):
        h = block_forward(h, params.block(stack, i), params.config.activation)
    return channel_norm(h, params[f'{stack}.out_norm.scale'], params[f'{stack}.out_norm.shift'])


def log_prior(mel, params: ModelParams) -> Tensor:
    """Log amplitude prior of mel[B, F, K].

    With the pseudo-inverse prior this is a constant; the learnable variant
    replaces the pseudo-inverse with a trained K x N matrix."""
    cfg = params.spectral
    mel = as_tensor(mel)
    _check_bins(mel, cfg.mel_bins, 'mel input')
    if params.config.prior == PriorKind.LEARNABLE_LINEAR:
        prior = ops.clamp_min(ops.abs(ops.matmul(mel, params['prior.weight'])), cfg.amp_floor)
        return ops.log(prior)
    return Tensor(np.log(prior_from_mel(mel.value, mel_filterbank(cfg), cfg.amp_floor)))


def _amplitude(log_prior: Tensor, params: ModelParams) -> Tensor:
    _check_bins(log_prior, params.spectral.n_freq, 'log prior')
    h = _project(ops.transpose(log_prior, (0, 2, 1)), params, 'amp.in')
    h = _stack(h, params, 'amp', params.config.amplitude_blocks)
    return ops.transpose(_project(h, params, 'amp.out'), (0, 2, 1))


def _phase(log_amp: Tensor, params: ModelParams, prior: typing.Optional[Tensor] = None,
           head_override: typing.Optional[HeadOverride] = None) -> typing.Tuple[Tensor, Tensor, Tensor]:
    _check_bins(log_amp, params.spectral.n_freq, 'log amplitude')
    h = _project(ops.transpose(log_amp, (0, 2, 1)), params, 'phase.in')
    if params.config.phase_sees_prior:
        if prior is None:
            raise ShapeError('phase stack is configured to see the prior but none was given')
        _check_bins(prior, params.spectral.n_freq, 'log prior')
        h = ops.add(h, _project(ops.transpose(prior, (0, 2, 1)), params, 'phase.prior_in', bias=False))
    h = _stack(h, params, 'phase', params.config.phase_blocks)
    real = _project(h, params, 'phase.real')
    imag = _project(h, params, 'phase.imag')
    if head_override is not None:
        real, imag = head_override(real, imag)
    return (ops.transpose(ops.atan2(imag, real), (0, 2, 1)),
            ops.transpose(real, (0, 2, 1)), ops.transpose(imag, (0, 2, 1)))


def _as_batch(spec: Spectrogram, domain: Domain) -> Tensor:
    return Tensor(spec.expect(domain).data[None])


def predict_amplitude(log_prior, params: ModelParams):
    """Log amplitude from a log amplitude prior.

    Accepts a batched tensor (B x F x N, differentiable) or a single
    log-amplitude Spectrogram, which gives a Spectrogram back."""
    if isinstance(log_prior, Spectrogram):
        with no_grad():
            out = _amplitude(_as_batch(log_prior, Domain.LOG_AMPLITUDE), params)
        return Spectrogram(out.value[0], Domain.LOG_AMPLITUDE, log_prior.config)
    return _amplitude(as_tensor(log_prior), params)


def predict_phase(log_amp, params: ModelParams, log_prior=None,
                  head_override: typing.Optional[HeadOverride] = None):
    """Phase in (-pi, pi] as the angle of the (R, I) head outputs."""
    if isinstance(log_amp, Spectrogram):
        prior = _as_batch(log_prior, Domain.LOG_AMPLITUDE) if log_prior is not None else None
        with no_grad():
            phase, _, _ = _phase(_as_batch(log_amp, Domain.LOG_AMPLITUDE), params, prior, head_override)
        return Spectrogram(phase.value[0], Domain.PHASE, log_amp.config)
    prior = as_tensor(log_prior) if log_prior is not None else None
    return _phase(as_tensor(log_amp), params, prior, head_override)[0]


def reconstruct(log_amp, phase, cfg: SpectralConfig) -> Tensor:
    """Waveform of exp(log_amp) * (cos phase + i sin phase), F * frame_shift samples."""
    amp = ops.exp(log_amp)
    return istft(ops.mul(amp, ops.cos(phase)), ops.mul(amp, ops.sin(phase)), cfg)


def forward(mel, params: ModelParams) -> Prediction:
    """The full serial pipeline on mel[B, F, K]."""
    prior = log_prior(mel, params)
    log_amp = _amplitude(prior, params)
    phase_input = ops.detach(log_amp) if params.config.detach_amplitude else log_amp
    phase, _, _ = _phase(phase_input, params, prior)
    amp = ops.exp(log_amp)
    real = ops.mul(amp, ops.cos(phase))
    imag = ops.mul(amp, ops.sin(phase))
    wave = istft(real, imag, params.spectral)
    return Prediction(prior, log_amp, phase, real, imag, wave)


class Vocoder:
    """Inference wrapper: mel spectrogram in, waveform out.

    Parameters are only read, so one instance can serve several threads."""
    def __init__(self, params: ModelParams):
        self.params = params
        self.spectral = params.spectral

    def synthesize(self, mel) -> np.ndarray:
        data = mel.expect(Domain.MEL).data if isinstance(mel, Spectrogram) else np.asarray(mel, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.spectral.mel_bins:
            raise ShapeError(f'mel input must be frames x {self.spectral.mel_bins}, got {data.shape}')
        with no_grad():
            result = forward(data[None], self.params)
        log.debug('synthesized %d frames', data.shape[0])
        return result.wave.value[0]
