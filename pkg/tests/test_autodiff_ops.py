import math

import numpy as np
import pytest

from autodiff import Tensor, no_grad, ops
from autodiff.gradcheck import gradcheck
from errors import DomainError, InvalidInput, ShapeError

TOLERANCE = 1e-5


def weighted(fn, shape, seed=0):
    """sum(fn(...) * R) for a fixed random R, so every output entry matters."""
    R = np.random.Generator(np.random.Philox(key=seed)).standard_normal(shape)
    return lambda *xs: ops.sum(ops.mul(fn(*xs), R))


def test_square_sum_gradient():
    x = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
    ops.sum(ops.square(x)).backward()
    assert x.grad.tolist() == [2.0, 4.0, 6.0]


def test_gradients_accumulate_over_shared_inputs():
    x = Tensor(np.array([2.0]), requires_grad=True)
    ops.sum(x * x + x).backward()
    assert x.grad.tolist() == [5.0]


def test_backward_needs_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(InvalidInput):
        (x * 2).backward()


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = ops.sum(x * 2)
    assert not y.requires_grad
    y.backward()
    assert x.grad is None


def test_broadcast_gradient_is_summed():
    x = Tensor(np.ones((3, 4)), requires_grad=True)
    b = Tensor(np.ones(4), requires_grad=True)
    ops.sum(x + b).backward()
    assert b.grad.tolist() == [3.0] * 4


@pytest.mark.parametrize('name, fn, shapes', [
    ('add', ops.add, [(3, 4), (4,)]),
    ('sub', ops.sub, [(3, 4), (3, 4)]),
    ('mul', ops.mul, [(3, 4), (3, 1)]),
    ('matmul', ops.matmul, [(2, 3, 4), (4, 5)]),
    ('sin', ops.sin, [(3, 4)]),
    ('cos', ops.cos, [(3, 4)]),
    ('exp', ops.exp, [(3, 4)]),
    ('gelu', ops.gelu, [(3, 4)]),
    ('transpose', lambda a: ops.transpose(a, (1, 0, 2)), [(2, 3, 4)]),
    ('reshape', lambda a: ops.reshape(a, (6, 2)), [(3, 4)]),
    ('index', lambda a: a[1:, ::2], [(3, 4)]),
    ('mean', lambda a: ops.mean(a, axis=1, keepdims=True), [(3, 4)]),
    ('sum', lambda a: ops.sum(a, axis=0), [(3, 4)]),
    ('frame_diff', lambda a: ops.frame_diff(a, axis=0), [(4, 3)]),
    ('layer_norm', ops.layer_norm, [(2, 3, 5), (5,), (5,)]),
])
def test_gradcheck_smooth_ops(name, fn, shapes):
    rng = np.random.Generator(np.random.Philox(key=len(name)))
    arrays = [rng.standard_normal(s) for s in shapes]
    out_shape = fn(*[Tensor(a) for a in arrays]).shape
    assert gradcheck(weighted(fn, out_shape), *arrays) < TOLERANCE


def test_gradcheck_positive_domain_ops(rng):
    x = rng.uniform(0.5, 2.0, (3, 4))
    y = rng.uniform(0.5, 2.0, (3, 4))
    assert gradcheck(weighted(ops.log, x.shape), x) < TOLERANCE
    assert gradcheck(weighted(ops.sqrt, x.shape), x) < TOLERANCE
    assert gradcheck(weighted(ops.div, x.shape), x, y) < TOLERANCE


def test_gradcheck_away_from_kinks(rng):
    x = rng.uniform(0.3, 2.5, (3, 4)) * rng.choice([-1.0, 1.0], (3, 4))
    assert gradcheck(weighted(ops.abs, x.shape), x) < TOLERANCE
    assert gradcheck(weighted(ops.anti_wrap, x.shape), x) < TOLERANCE
    assert gradcheck(weighted(lambda a: ops.clamp_min(a, 0.1), x.shape), x + 0.05 * np.sign(x)) < TOLERANCE
    far = x + 2 * math.pi * rng.integers(-3, 4, x.shape)
    assert gradcheck(weighted(ops.anti_wrap, x.shape), far) < TOLERANCE


def test_gradcheck_polar_ops(rng):
    a = rng.uniform(0.5, 1.5, (3, 4)) * rng.choice([-1.0, 1.0], (3, 4))
    b = rng.uniform(0.5, 1.5, (3, 4))
    assert gradcheck(weighted(ops.atan2, a.shape), b, a) < TOLERANCE
    assert gradcheck(weighted(ops.hypot, a.shape), a, b) < TOLERANCE
    assert gradcheck(weighted(lambda v: ops.norm(v, axis=1), (3, 1)), a) < TOLERANCE


@pytest.mark.parametrize('mode, weight_shape', [('depthwise', (3, 5)), ('pointwise', (4, 3))])
def test_gradcheck_conv1d(mode, weight_shape, rng):
    x = rng.standard_normal((2, 3, 6))
    w = rng.standard_normal(weight_shape)
    bias = rng.standard_normal(weight_shape[0])
    fn = lambda *t: ops.conv1d(*t, mode=mode)
    out_shape = fn(Tensor(x), Tensor(w), Tensor(bias)).shape
    assert gradcheck(weighted(fn, out_shape), x, w, bias) < TOLERANCE


def test_depthwise_conv_matches_numpy(rng):
    x = rng.standard_normal((1, 2, 8))
    w = rng.standard_normal((2, 3))
    out = ops.conv1d(x, w, mode='depthwise').value
    for c in range(2):
        expected = np.convolve(x[0, c], w[c, ::-1], mode='same')
        assert np.allclose(out[0, c], expected)


def test_atan2_range():
    y = Tensor(np.array([0.0, 1.0, -0.0, -1e-300]))
    x = Tensor(np.array([1.0, 0.0, -1.0, -1.0]))
    angles = ops.atan2(y, x).value
    assert angles[0] == 0.0
    assert angles[1] == pytest.approx(math.pi / 2)
    assert np.all(angles > -math.pi) and np.all(angles <= math.pi)


def test_shape_errors():
    with pytest.raises(ShapeError):
        ops.matmul(np.ones((2, 3)), np.ones((4, 2)))
    with pytest.raises(ShapeError):
        ops.add(np.ones((2, 3)), np.ones((4, 2)))
    with pytest.raises(ShapeError):
        ops.conv1d(np.ones((1, 3, 5)), np.ones((3, 4)), mode='depthwise')
    with pytest.raises(ShapeError):
        ops.layer_norm(np.ones((2, 5)), np.ones(4), np.zeros(4))


def test_domain_errors():
    with pytest.raises(DomainError):
        ops.log(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        ops.sqrt(np.array([-1.0]))
    with pytest.raises(DomainError):
        ops.clamp_min(np.ones(2), math.nan)


def test_detach_cuts_graph():
    x = Tensor(np.ones(2), requires_grad=True)
    y = ops.detach(x * 3)
    assert y.is_leaf and not y.requires_grad


def test_float32_forward_keeps_precision():
    x = Tensor(np.ones((2, 3), dtype=np.float32), requires_grad=True)
    w = Tensor(np.ones((3, 2), dtype=np.float32))
    y = ops.matmul(x, w)
    assert y.value.dtype == np.float32
    ops.sum(y).backward()
    assert x.grad.dtype == np.float64
