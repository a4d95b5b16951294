"""Building blocks shared by the amplitude and phase stacks."""

import numpy as np

from autodiff import ops
from autodiff.tensor import Tensor, as_tensor
from errors import DomainError, ShapeError
from model.params import Activation, BlockParams

GRN_EPS = 1e-6


def snake(x, alpha) -> Tensor:
    """x + sin^2(alpha * x) / alpha, alpha broadcast along the last axis."""
    alpha = as_tensor(alpha)
    if np.any(alpha.value <= 0):
        raise DomainError('snake frequency must be positive')
    return ops.add(x, ops.div(ops.square(ops.sin(ops.mul(x, alpha))), alpha))


def grn(x, gamma, beta) -> Tensor:
    """Global response normalization of x[B, T, C].

    Each channel's L2 norm over time is divided by the mean over channels;
    the result rescales x, and with gamma = beta = 0 the layer is the identity."""
    x = as_tensor(x)
    if x.ndim != 3:
        raise ShapeError(f'grn expects a rank-3 input, got {x.shape}')
    energy = ops.norm(x, axis=1)
    relative = ops.div(energy, ops.add(ops.mean(energy, axis=-1, keepdims=True), GRN_EPS))
    return ops.add(ops.add(ops.mul(gamma, ops.mul(x, relative)), beta), x)


def activate(x, activation: Activation, log_alpha=None) -> Tensor:
    if activation == Activation.SNAKE:
        if log_alpha is None:
            raise ShapeError('snake activation needs a log_alpha parameter')
        return snake(x, ops.exp(log_alpha))
    if activation == Activation.GELU:
        return ops.gelu(x)
    return as_tensor(x)


def channel_norm(x, scale, shift) -> Tensor:
    """LayerNorm over the channel axis of x[B, C, T]."""
    return ops.transpose(ops.layer_norm(ops.transpose(x, (0, 2, 1)), scale, shift), (0, 2, 1))


def block_forward(x, p: BlockParams, activation: Activation) -> Tensor:
    """Residual block on x[B, C, T]: depthwise conv, LayerNorm, expansion,
    activation, GRN and projection back to C channels."""
    x = as_tensor(x)
    if x.ndim != 3 or x.shape[1] != p.dw_weight.shape[0]:
        raise ShapeError(f'block with {p.dw_weight.shape[0]} channels got input {x.shape}')
    y = ops.conv1d(x, p.dw_weight, p.dw_bias, mode='depthwise')
    y = ops.transpose(y, (0, 2, 1))
    y = ops.layer_norm(y, p.norm_scale, p.norm_shift)
    y = ops.add(ops.matmul(y, p.expand_weight), p.expand_bias)
    y = activate(y, activation, p.log_alpha)
    y = grn(y, p.grn_gamma, p.grn_beta)
    y = ops.add(ops.matmul(y, p.project_weight), p.project_bias)
    return ops.add(x, ops.transpose(y, (0, 2, 1)))
