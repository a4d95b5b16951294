"""Reverse-mode differentiation over numpy arrays."""

from autodiff.tensor import Tensor, Function, no_grad, is_grad_enabled
