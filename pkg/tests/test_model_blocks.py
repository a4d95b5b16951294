import math

import numpy as np
import pytest

from autodiff import Tensor, ops
from autodiff.gradcheck import gradcheck
from errors import DomainError, ShapeError
from model.blocks import activate, block_forward, channel_norm, grn, snake
from model.params import Activation, BlockParams


def zero_block(channels=3, hidden=6, kernel=3, activation=Activation.SNAKE):
    z = lambda *shape: Tensor(np.zeros(shape))
    return BlockParams(dw_weight=z(channels, kernel), dw_bias=z(channels),
                       norm_scale=Tensor(np.ones(channels)), norm_shift=z(channels),
                       expand_weight=z(channels, hidden), expand_bias=z(hidden),
                       grn_gamma=z(hidden), grn_beta=z(hidden),
                       project_weight=z(hidden, channels), project_bias=z(channels),
                       log_alpha=z(hidden) if activation == Activation.SNAKE else None)


@pytest.mark.parametrize('alpha', [0.5, 1.0, 3.0])
def test_snake_at_zero(alpha):
    assert snake(np.zeros(3), np.full(3, alpha)).value.tolist() == [0.0, 0.0, 0.0]


def test_snake_value():
    assert snake(np.array([math.pi / 2]), np.array([1.0])).item() == pytest.approx(math.pi / 2 + 1)


def test_snake_needs_positive_alpha():
    with pytest.raises(DomainError):
        snake(np.ones(2), np.array([1.0, 0.0]))


def test_snake_gradient(rng):
    x = rng.standard_normal((2, 3))
    alpha = rng.uniform(0.5, 2.0, 3)
    assert gradcheck(lambda a, b: ops.sum(snake(a, b)), x, alpha) < 1e-5


def test_grn_identity_at_zero_gain(rng):
    x = rng.standard_normal((2, 5, 4))
    out = grn(x, np.zeros(4), np.zeros(4)).value
    assert np.allclose(out, x)


def test_grn_single_channel(rng):
    x = rng.standard_normal((1, 6, 1))
    gamma, beta = np.array([0.7]), np.array([0.2])
    out = grn(x, gamma, beta).value
    assert np.allclose(out, 0.7 * x + 0.2 + x, atol=1e-6)


def test_grn_normalizes_by_mean_energy():
    x = np.zeros((1, 2, 2))
    x[0, :, 0] = [3.0, 4.0]  # energy 5
    x[0, :, 1] = [1.0, 0.0]  # energy 1
    out = grn(x, np.ones(2), np.zeros(2)).value
    relative = np.array([5.0, 1.0]) / (3.0 + 1e-6)
    assert np.allclose(out[0], x[0] * relative + x[0])


def test_grn_rank():
    with pytest.raises(ShapeError):
        grn(np.ones((3, 4)), np.zeros(4), np.zeros(4))


def test_grn_gradient(rng):
    x = rng.standard_normal((2, 4, 3))
    gamma, beta = rng.standard_normal(3), rng.standard_normal(3)
    R = rng.standard_normal((2, 4, 3))
    assert gradcheck(lambda a, g, b: ops.sum(ops.mul(grn(a, g, b), R)), x, gamma, beta) < 1e-5


def test_activations():
    x = np.array([-1.0, 0.0, 2.0])
    assert activate(x, Activation.IDENTITY).value.tolist() == x.tolist()
    assert activate(x, Activation.GELU).value[1] == 0.0
    with pytest.raises(ShapeError):
        activate(x, Activation.SNAKE)


def test_channel_norm_normalizes_channels(rng):
    x = rng.standard_normal((2, 6, 5)) * 3 + 1
    out = channel_norm(x, np.ones(6), np.zeros(6)).value
    assert np.allclose(out.mean(axis=1), 0, atol=1e-9)
    assert np.allclose(out.std(axis=1), 1, atol=1e-4)


@pytest.mark.parametrize('activation', list(Activation))
def test_zero_block_is_identity(activation, rng):
    x = rng.standard_normal((2, 3, 7))
    assert np.allclose(block_forward(x, zero_block(activation=activation), activation).value, x)


def test_block_keeps_shape_and_trains(rng):
    p = zero_block()
    for t in (p.dw_weight, p.expand_weight, p.project_weight, p.grn_gamma):
        t.value = rng.standard_normal(t.shape) * 0.3
        t.requires_grad = True
    x = rng.standard_normal((2, 3, 7))
    out = block_forward(x, p, Activation.SNAKE)
    assert out.shape == x.shape
    ops.sum(ops.square(out)).backward()
    assert all(np.any(t.gradient() != 0) for t in (p.dw_weight, p.expand_weight, p.project_weight))


def test_block_channel_mismatch():
    with pytest.raises(ShapeError):
        block_forward(np.ones((1, 4, 5)), zero_block(channels=3), Activation.GELU)
