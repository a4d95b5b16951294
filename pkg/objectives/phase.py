"""Frequency-weighted anti-wrapping phase losses."""

from dataclasses import dataclass
import enum
import typing

import numpy as np

from autodiff import ops
from autodiff.tensor import Tensor, as_tensor, no_grad
from dsp.phase import forward_difference
from dsp.types import Domain, Spectrogram
from errors import DomainError, InvalidInput, ShapeError


class PhaseLossKind(enum.Enum):
    FWAW = 'fwaw'
    # Every frequency bin weighted 1.
    UNWEIGHTED = 'unweighted'


@dataclass(frozen=True)
class FwawWeights:
    """Per-bin weights rising geometrically from 1 at DC to rho at Nyquist."""
    rho: float
    weights: np.ndarray

    @property
    def bins(self) -> int:
        return self.weights.shape[0]


def fwaw_weights(bins: int, rho: float) -> FwawWeights:
    if not rho > 0:
        raise DomainError(f'weight ratio must be positive, got {rho}')
    if bins < 2:
        raise InvalidInput(f'need at least 2 frequency bins, got {bins}')
    # rho ** (n / (N-1)) hits both endpoints exactly.
    weights = float(rho) ** (np.arange(bins) / (bins - 1))
    weights.setflags(write=False)
    return FwawWeights(rho=float(rho), weights=weights)


def _weighted_term(difference: Tensor, weights: np.ndarray) -> Tensor:
    return ops.mean(ops.mul(ops.anti_wrap(difference), weights))


def phase_terms(predicted, target: np.ndarray,
                wt: FwawWeights) -> typing.Tuple[Tensor, Tensor, Tensor]:
    """(instantaneous phase, group delay, instantaneous angular frequency)
    losses of predicted[..., F, N] against target, each averaged over all
    entries."""
    predicted = as_tensor(predicted)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ShapeError(f'predicted phase {predicted.shape} and target {target.shape} differ')
    if predicted.ndim < 2:
        raise ShapeError(f'phase must be at least frames x bins, got {predicted.shape}')
    if predicted.shape[-1] != wt.bins:
        raise ShapeError(f'{predicted.shape[-1]} bins but {wt.bins} weights')
    if predicted.shape[-2] < 2:
        raise InvalidInput('the instantaneous frequency term needs at least two frames')
    w = wt.weights
    ip = _weighted_term(ops.sub(predicted, target), w)
    gd = _weighted_term(ops.sub(ops.frame_diff(predicted, -1), forward_difference(target, -1)), w)
    iaf = _weighted_term(ops.sub(ops.frame_diff(predicted, -2), forward_difference(target, -2)), w)
    return ip, gd, iaf


def fwaw_phase_loss(predicted, target, wt: FwawWeights):
    """Phase loss triple. Spectrogram inputs give plain floats; tensors or
    arrays give differentiable tensors."""
    if isinstance(predicted, Spectrogram) or isinstance(target, Spectrogram):
        if not (isinstance(predicted, Spectrogram) and isinstance(target, Spectrogram)):
            raise ShapeError('both phase inputs must be spectrograms')
        predicted.expect(Domain.PHASE)
        target.expect(Domain.PHASE)
        with no_grad():
            terms = phase_terms(predicted.data, target.data, wt)
        return tuple(t.item() for t in terms)
    return phase_terms(predicted, target, wt)
