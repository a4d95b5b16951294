"""Finite-difference verification of analytic gradients."""

import typing

import numpy as np

from autodiff.tensor import Tensor


def numerical_grad(fn: typing.Callable[..., Tensor], arrays: typing.Sequence[np.ndarray],
                   which: int, h: float = 1e-4) -> np.ndarray:
    """Central differences of scalar fn(*tensors) with respect to arrays[which]."""
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    target = arrays[which]
    out = np.zeros_like(target)
    for idx in np.ndindex(target.shape):
        saved = target[idx]
        target[idx] = saved + h
        upper = fn(*[Tensor(a) for a in arrays]).item()
        target[idx] = saved - h
        lower = fn(*[Tensor(a) for a in arrays]).item()
        target[idx] = saved
        out[idx] = (upper - lower) / (2 * h)
    return out


def analytic_grad(fn: typing.Callable[..., Tensor],
                  arrays: typing.Sequence[np.ndarray]) -> typing.List[np.ndarray]:
    tensors = [Tensor(np.array(a, dtype=np.float64), requires_grad=True) for a in arrays]
    fn(*tensors).backward()
    return [t.gradient() for t in tensors]


def gradcheck(fn: typing.Callable[..., Tensor], *arrays: np.ndarray, h: float = 1e-4) -> float:
    """Largest relative gradient error over all inputs.

    The error for an input is max|analytic - numeric| / (max|analytic| + 1e-8),
    so isolated near-zero entries don't dominate."""
    worst = 0.0
    for (i, analytic) in enumerate(analytic_grad(fn, arrays)):
        numeric = numerical_grad(fn, arrays, i, h)
        error = np.max(np.abs(analytic - numeric)) / (np.max(np.abs(analytic)) + 1e-8)
        worst = max(worst, float(error))
    return worst
