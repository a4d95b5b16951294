"""Training losses and their weighted combination."""

from dataclasses import dataclass, field
import math
import typing

import numpy as np

from autodiff import ops
from autodiff.tensor import Tensor
from dsp.config import SpectralConfig
from errors import ConfigError, NumericalError
from objectives.phase import FwawWeights, PhaseLossKind, fwaw_phase_loss, fwaw_weights, phase_terms
from objectives.spectral import amplitude_loss, log_amplitude_target, mel_loss, stft_loss


@dataclass(frozen=True)
class LossWeights:
    amplitude: float = 0.45
    stft: float = 0.2
    mel: float = 0.45

    def validate(self) -> 'LossWeights':
        for name in ('amplitude', 'stft', 'mel'):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ConfigError(f'loss weight {name} must be finite and non-negative, got {value}')
        return self


@dataclass(frozen=True)
class LossConfig:
    weights: LossWeights = field(default_factory=LossWeights)
    rho: float = 2.5
    phase_loss: PhaseLossKind = PhaseLossKind.FWAW
    stft_consistency: bool = True

    def validate(self) -> 'LossConfig':
        self.weights.validate()
        if not self.rho > 0:
            raise ConfigError(f'loss rho must be positive, got {self.rho}')
        return self

    @property
    def effective_rho(self) -> float:
        return self.rho if self.phase_loss == PhaseLossKind.FWAW else 1.0


class LossParts(typing.NamedTuple):
    ip: float
    gd: float
    iaf: float
    amplitude: float
    stft: float
    mel: float


class LossReport(typing.NamedTuple):
    ip: float
    gd: float
    iaf: float
    amplitude: float
    stft: float
    mel: float
    total: float

    def row(self) -> typing.List[float]:
        """Values in loss-log column order."""
        return [self.ip, self.gd, self.iaf, self.amplitude, self.stft, self.mel, self.total]


class Targets(typing.NamedTuple):
    """Natural spectra a prediction is scored against, batch x frames x bins."""
    mel: np.ndarray
    log_amp: np.ndarray
    phase: np.ndarray


def _weighted_sum(parts, weights: LossWeights):
    return (parts.ip + parts.gd + parts.iaf + weights.amplitude * parts.amplitude
            + weights.stft * parts.stft + weights.mel * parts.mel)


def total_loss(parts: LossParts, weights: LossWeights) -> LossReport:
    values = [float(v) for v in parts]
    bad = [name for (name, v) in zip(LossParts._fields, values) if not math.isfinite(v)]
    if bad:
        raise NumericalError(f'non-finite loss term {", ".join(bad)}')
    parts = LossParts(*values)
    return LossReport(*values, total=float(_weighted_sum(parts, weights)))


def compute_losses(prediction, targets: Targets, loss_cfg: LossConfig,
                   spectral: SpectralConfig) -> typing.Tuple[Tensor, LossReport]:
    """Differentiable total loss of a model prediction and its report.

    `prediction` is a model Prediction (log_amp, phase, real, imag, wave)."""
    wt = fwaw_weights(spectral.n_freq, loss_cfg.effective_rho)
    ip, gd, iaf = phase_terms(prediction.phase, targets.phase, wt)
    amp = amplitude_loss(prediction.log_amp, targets.log_amp)
    spec = stft_loss(prediction.log_amp, prediction.phase, targets.log_amp, targets.phase,
                     spectral, consistency=loss_cfg.stft_consistency)
    mel = mel_loss(prediction.wave, targets.mel, spectral)
    parts = LossParts(ip, gd, iaf, amp, spec, mel)
    report = total_loss(LossParts(*(t.item() for t in parts)), loss_cfg.weights)
    weights = loss_cfg.weights
    total = ops.add(ops.add(ops.add(ip, gd), iaf),
                    ops.add(ops.add(ops.mul(amp, weights.amplitude), ops.mul(spec, weights.stft)),
                            ops.mul(mel, weights.mel)))
    return total, report
