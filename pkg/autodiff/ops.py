"""Differentiable operators over dense real tensors.

Every operator is a Function subclass plus a lower-case wrapper; the
wrappers are what the rest of the code base calls. Forward values are
computed in the inputs' precision (float64 whenever any input is float64),
backward values always in float64.
"""

import math
import typing

import numpy as np
import scipy.special

from autodiff.tensor import Function, Tensor
from dsp.phase import forward_difference, wrap_residual
from errors import DomainError, ShapeError


def _f64(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


class Add(Function):
    def forward(self, a, b):
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    def forward(self, a, b):
        return a - b

    def backward(self, grad):
        return grad, -grad


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Div(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        b = _f64(self.b)
        return grad / b, -grad * self.a / (b * b)


class Square(Function):
    def forward(self, a):
        self.a = a
        return a * a

    def backward(self, grad):
        return (2.0 * grad * self.a,)


class Sqrt(Function):
    def forward(self, a):
        if np.any(a < 0):
            raise DomainError('sqrt of a negative value')
        self.out = np.sqrt(a)
        return self.out

    def backward(self, grad):
        out = _f64(self.out)
        return (np.divide(grad, 2.0 * out, out=np.zeros_like(grad), where=out > 0),)


class Exp(Function):
    def forward(self, a):
        self.out = np.exp(a)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    def forward(self, a):
        if np.any(a <= 0):
            raise DomainError('log of a non-positive value')
        self.a = a
        return np.log(a)

    def backward(self, grad):
        return (grad / _f64(self.a),)


class Sin(Function):
    def forward(self, a):
        self.a = a
        return np.sin(a)

    def backward(self, grad):
        return (grad * np.cos(_f64(self.a)),)


class Cos(Function):
    def forward(self, a):
        self.a = a
        return np.cos(a)

    def backward(self, grad):
        return (-grad * np.sin(_f64(self.a)),)


class Abs(Function):
    def forward(self, a):
        self.a = a
        return np.abs(a)

    def backward(self, grad):
        return (grad * np.sign(self.a),)


class ClampMin(Function):
    def forward(self, a):
        floor = self.options['floor']
        if not math.isfinite(floor):
            raise DomainError(f'clamp floor must be finite, got {floor}')
        self.mask = a > floor
        return np.maximum(a, floor)

    def backward(self, grad):
        return (grad * self.mask,)


class Sum(Function):
    def forward(self, a):
        self.shape = a.shape
        return np.sum(a, axis=self.options['axis'], keepdims=self.options['keepdims'])

    def backward(self, grad):
        axis = self.options['axis']
        if axis is not None and not self.options['keepdims']:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, self.shape),)


class Mean(Function):
    def forward(self, a):
        self.shape = a.shape
        axis = self.options['axis']
        self.count = a.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
        return np.mean(a, axis=axis, keepdims=self.options['keepdims'])

    def backward(self, grad):
        axis = self.options['axis']
        if axis is not None and not self.options['keepdims']:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad / self.count, self.shape),)


class Transpose(Function):
    def forward(self, a):
        self.axes = self.options['axes'] or tuple(reversed(range(a.ndim)))
        return np.transpose(a, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class Reshape(Function):
    def forward(self, a):
        self.shape = a.shape
        return np.reshape(a, self.options['shape'])

    def backward(self, grad):
        return (np.reshape(grad, self.shape),)


class Index(Function):
    def forward(self, a):
        self.shape = a.shape
        return a[self.options['index']]

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=np.float64)
        out[self.options['index']] += grad
        return (out,)


class MatMul(Function):
    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeError(f'matmul needs operands of rank >= 2, got {a.shape} and {b.shape}')
        if a.shape[-1] != b.shape[-2]:
            raise ShapeError(f'matmul inner dimensions differ: {a.shape} @ {b.shape}')
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        a, b = _f64(self.a), _f64(self.b)
        return grad @ np.swapaxes(b, -1, -2), np.swapaxes(a, -1, -2) @ grad


class Conv1d(Function):
    """Same-padded 1-D convolution over x[B, C, T].

    `depthwise`: weight[C, k], one filter per channel (k odd).
    `pointwise`: weight[C_out, C_in], a per-frame linear map."""
    def forward(self, x, weight, *bias):
        if x.ndim != 3:
            raise ShapeError(f'conv1d input must be B x C x T, got {x.shape}')
        self.mode = self.options['mode']
        self.x, self.weight = x, weight
        channels = x.shape[1]
        if self.mode == 'pointwise':
            if weight.ndim != 2 or weight.shape[1] != channels:
                raise ShapeError(f'pointwise weight {weight.shape} does not take {channels} channels')
            out = weight @ x
        elif self.mode == 'depthwise':
            if weight.ndim != 2 or weight.shape[0] != channels or weight.shape[1] % 2 != 1:
                raise ShapeError(f'depthwise weight {weight.shape} does not fit {channels} channels '
                                 f'with an odd kernel')
            k = weight.shape[1]
            half = k // 2
            self.padded = np.pad(x, ((0, 0), (0, 0), (half, half)))
            steps = x.shape[2]
            out = np.zeros(x.shape, dtype=np.result_type(x, weight))
            for j in range(k):
                out += weight[None, :, j, None] * self.padded[:, :, j:j + steps]
        else:
            raise ValueError(f'unknown conv1d mode {self.mode}')
        if bias:
            if bias[0].shape != (out.shape[1],):
                raise ShapeError(f'bias {bias[0].shape} does not match {out.shape[1]} channels')
            out = out + bias[0][None, :, None]
        return out

    def backward(self, grad):
        x, weight = _f64(self.x), _f64(self.weight)
        if self.mode == 'pointwise':
            grad_x = np.swapaxes(weight, 0, 1) @ grad
            grad_w = np.tensordot(grad, x, axes=([0, 2], [0, 2]))
        else:
            k = weight.shape[1]
            half = k // 2
            steps = x.shape[2]
            padded = _f64(self.padded)
            grad_padded = np.zeros(padded.shape, dtype=np.float64)
            grad_w = np.zeros(weight.shape, dtype=np.float64)
            for j in range(k):
                grad_w[:, j] = np.einsum('bct,bct->c', grad, padded[:, :, j:j + steps])
                grad_padded[:, :, j:j + steps] += weight[None, :, j, None] * grad
            grad_x = grad_padded[:, :, half:half + steps]
        grads = [grad_x, grad_w]
        if len(self.parents) == 3:
            grads.append(grad.sum(axis=(0, 2)))
        return grads


class LayerNorm(Function):
    """Normalize over the last axis, then scale and shift."""
    def forward(self, x, scale, shift):
        if scale.shape != (x.shape[-1],) or shift.shape != (x.shape[-1],):
            raise ShapeError(f'layer_norm parameters {scale.shape}, {shift.shape} do not match {x.shape}')
        eps = self.options['eps']
        xd = _f64(x)
        mean = xd.mean(axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(xd.var(axis=-1, keepdims=True) + eps)
        self.x_hat = (xd - mean) * self.inv_std
        self.scale = scale
        out = self.x_hat * scale + shift
        return out.astype(np.result_type(x, scale), copy=False)

    def backward(self, grad):
        g_hat = grad * _f64(self.scale)
        grad_x = self.inv_std * (g_hat - g_hat.mean(axis=-1, keepdims=True)
                                 - self.x_hat * (g_hat * self.x_hat).mean(axis=-1, keepdims=True))
        return grad_x, grad * self.x_hat, grad


class Norm(Function):
    """Euclidean norm along `axis`, kept as a size-1 axis."""
    def forward(self, a):
        self.a = a
        self.out = np.sqrt(np.sum(_f64(a) ** 2, axis=self.options['axis'], keepdims=True))
        return self.out.astype(a.dtype, copy=False)

    def backward(self, grad):
        scaled = np.divide(grad, self.out, out=np.zeros_like(self.out), where=self.out > 0)
        return (_f64(self.a) * scaled,)


class Atan2(Function):
    """Angle of (x, y) in (-pi, pi]; zero gradient at the origin."""
    def forward(self, y, x):
        self.y, self.x = _f64(y), _f64(x)
        angle = np.arctan2(y, x)
        return np.where(angle <= -np.pi, angle + 2 * np.pi, angle)

    def backward(self, grad):
        r2 = self.x ** 2 + self.y ** 2
        scaled = np.divide(grad, r2, out=np.zeros_like(r2), where=r2 > 0)
        return scaled * self.x, -scaled * self.y


class Hypot(Function):
    """sqrt(a^2 + b^2) with zero gradient at the origin."""
    def forward(self, a, b):
        self.a, self.b = _f64(a), _f64(b)
        self.out = np.hypot(self.a, self.b)
        return self.out

    def backward(self, grad):
        scaled = np.divide(grad, self.out, out=np.zeros_like(self.out), where=self.out > 0)
        return scaled * self.a, scaled * self.b


class Gelu(Function):
    def forward(self, a):
        self.a = _f64(a)
        return (0.5 * self.a * (1.0 + scipy.special.erf(self.a / math.sqrt(2.0)))).astype(a.dtype, copy=False)

    def backward(self, grad):
        cdf = 0.5 * (1.0 + scipy.special.erf(self.a / math.sqrt(2.0)))
        pdf = np.exp(-0.5 * self.a ** 2) / math.sqrt(2.0 * math.pi)
        return (grad * (cdf + self.a * pdf),)


class AntiWrap(Function):
    """|x - 2*pi*round(x / 2*pi)|; the subgradient is 0 at the kinks
    (x on a multiple of pi)."""
    def forward(self, a):
        residual = wrap_residual(a)
        self.slope = np.where(np.abs(residual) >= math.pi, 0.0, np.sign(residual))
        return np.minimum(np.abs(residual), math.pi)

    def backward(self, grad):
        return (grad * self.slope,)


class FrameDiff(Function):
    """Forward difference along `axis` with the last difference repeated."""
    def forward(self, a):
        self.axis = self.options['axis']
        return forward_difference(a, self.axis)

    def backward(self, grad):
        g = np.moveaxis(grad, self.axis, -1)
        per_step = g[..., :-1].copy()
        per_step[..., -1] += g[..., -1]
        out = np.zeros(g.shape, dtype=np.float64)
        out[..., 1:] += per_step
        out[..., :-1] -= per_step
        return (np.moveaxis(out, -1, self.axis),)


def add(a, b) -> Tensor:
    return Add.apply(a, b)

def sub(a, b) -> Tensor:
    return Sub.apply(a, b)

def neg(a) -> Tensor:
    return Neg.apply(a)

def mul(a, b) -> Tensor:
    return Mul.apply(a, b)

def div(a, b) -> Tensor:
    return Div.apply(a, b)

def square(a) -> Tensor:
    return Square.apply(a)

def sqrt(a) -> Tensor:
    return Sqrt.apply(a)

def exp(a) -> Tensor:
    return Exp.apply(a)

def log(a) -> Tensor:
    return Log.apply(a)

def sin(a) -> Tensor:
    return Sin.apply(a)

def cos(a) -> Tensor:
    return Cos.apply(a)

def abs(a) -> Tensor:
    return Abs.apply(a)

def clamp_min(a, floor: float) -> Tensor:
    return ClampMin.apply(a, floor=float(floor))

def sum(a, axis=None, keepdims: bool = False) -> Tensor:
    return Sum.apply(a, axis=axis, keepdims=keepdims)

def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    return Mean.apply(a, axis=axis, keepdims=keepdims)

def transpose(a, axes: typing.Optional[typing.Sequence[int]] = None) -> Tensor:
    return Transpose.apply(a, axes=tuple(axes) if axes is not None else None)

def reshape(a, shape: typing.Sequence[int]) -> Tensor:
    return Reshape.apply(a, shape=tuple(shape))

def index(a, index) -> Tensor:
    return Index.apply(a, index=index)

def matmul(a, b) -> Tensor:
    return MatMul.apply(a, b)

def conv1d(x, weight, bias=None, mode: str = 'pointwise') -> Tensor:
    if bias is None:
        return Conv1d.apply(x, weight, mode=mode)
    return Conv1d.apply(x, weight, bias, mode=mode)

def layer_norm(x, scale, shift, eps: float = 1e-6) -> Tensor:
    return LayerNorm.apply(x, scale, shift, eps=eps)

def norm(a, axis: int) -> Tensor:
    return Norm.apply(a, axis=axis)

def atan2(y, x) -> Tensor:
    return Atan2.apply(y, x)

def hypot(a, b) -> Tensor:
    return Hypot.apply(a, b)

def gelu(a) -> Tensor:
    return Gelu.apply(a)

def anti_wrap(a) -> Tensor:
    return AntiWrap.apply(a)

def frame_diff(a, axis: int) -> Tensor:
    return FrameDiff.apply(a, axis=axis)

def detach(a) -> Tensor:
    """The same value, cut off from the graph."""
    return Tensor(a.value if isinstance(a, Tensor) else a)
