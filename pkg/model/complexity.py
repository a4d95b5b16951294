"""Parameter and operation counts."""

import math
import typing

from dsp.config import SpectralConfig
from model.params import ModelParams, PriorKind


def count_params(params: ModelParams) -> int:
    return sum(t.size for (_, t) in params.items())


def conv_flops(c_in: int, c_out: int, kernel: int, frames: int,
               depthwise: bool = False, per_mac: int = 2) -> int:
    """Operations of one 1-D convolution over `frames` steps."""
    macs = c_out * kernel * (1 if depthwise else c_in) * frames
    return per_mac * macs


def frames_for(duration_s: float, spectral: SpectralConfig) -> int:
    return math.ceil(duration_s * spectral.sample_rate_hz / spectral.frame_shift)


def layer_macs(params: ModelParams) -> typing.List[typing.Tuple[str, int]]:
    """Multiply-accumulates per frame of every weighted layer.

    Every 2-D weight is applied once per frame, whether it is a pointwise
    projection (out x in) or a depthwise kernel (channels x taps), so its
    element count is its per-frame cost. Norms, activations and biases
    are not counted."""
    layers = []
    spectral = params.spectral
    if params.config.prior == PriorKind.PSEUDO_INVERSE:
        layers.append(('prior.pinv', spectral.mel_bins * spectral.n_freq))
    for (name, t) in params.items():
        if name.endswith('.weight') and t.ndim == 2:
            layers.append((name[:-len('.weight')], t.size))
    return layers


def count_macs(params: ModelParams, duration_s: float) -> int:
    return sum(macs for (_, macs) in layer_macs(params)) * frames_for(duration_s, params.spectral)


def count_flops(params: ModelParams, duration_s: float, per_mac: int = 2) -> int:
    """Operations to generate `duration_s` seconds of audio, counting
    `per_mac` operations per multiply-accumulate."""
    return per_mac * count_macs(params, duration_s)
