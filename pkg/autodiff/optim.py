"""AdamW with decoupled weight decay."""

from dataclasses import dataclass, field
import logging
import math
import typing

import numpy as np

from autodiff.tensor import Tensor
from errors import ConfigError, NumericalError, ShapeError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 2e-4
    beta1: float = 0.8
    beta2: float = 0.99
    eps: float = 1e-8
    weight_decay: float = 0.01
    # Multiplied into the learning rate once per step; 1.0 keeps it constant.
    lr_decay: float = 1.0

    def validate(self) -> 'OptimConfig':
        if not self.lr > 0:
            raise ConfigError(f'learning rate must be positive, got {self.lr}')
        for name in ('beta1', 'beta2'):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f'{name} must be in [0, 1), got {getattr(self, name)}')
        if self.eps < 0 or self.weight_decay < 0:
            raise ConfigError('eps and weight_decay must be non-negative')
        if not 0 < self.lr_decay <= 1:
            raise ConfigError(f'lr_decay must be in (0, 1], got {self.lr_decay}')
        return self

    def learning_rate(self, step: int) -> float:
        """Learning rate used for 1-based update `step`."""
        return self.lr * self.lr_decay ** (step - 1)


@dataclass
class OptimState:
    """Per-parameter moments (stored as float32) and the update count."""
    config: OptimConfig
    m: typing.Dict[str, np.ndarray] = field(default_factory=dict)
    v: typing.Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def create(cls, params: typing.Mapping[str, Tensor], config: OptimConfig) -> 'OptimState':
        return cls(config=config,
                   m={name: np.zeros(p.shape, dtype=np.float32) for (name, p) in params.items()},
                   v={name: np.zeros(p.shape, dtype=np.float32) for (name, p) in params.items()})


def adamw_step(params: typing.Mapping[str, Tensor],
               grads: typing.Mapping[str, np.ndarray],
               state: OptimState) -> typing.Tuple[typing.Mapping[str, Tensor], OptimState]:
    """Apply one update in place. Nothing is modified if any gradient is
    not finite; NumericalError names the offending parameters."""
    cfg = state.config.validate()
    bad = [name for (name, g) in grads.items() if not np.all(np.isfinite(g))]
    if bad:
        raise NumericalError(f'non-finite gradient for {", ".join(sorted(bad))}; step aborted')
    for (name, p) in params.items():
        if grads[name].shape != p.shape or state.m[name].shape != p.shape:
            raise ShapeError(f'{name}: parameter {p.shape}, gradient {grads[name].shape}, '
                             f'moment {state.m[name].shape}')

    state.t += 1
    lr = cfg.learning_rate(state.t)
    first_correction = 1.0 - cfg.beta1 ** state.t
    second_correction = 1.0 - cfg.beta2 ** state.t
    for (name, p) in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        theta = p.value.astype(np.float64)
        m = cfg.beta1 * state.m[name].astype(np.float64) + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.v[name].astype(np.float64) + (1.0 - cfg.beta2) * g * g
        update = (m / first_correction) / (np.sqrt(v / second_correction) + cfg.eps)
        theta = theta - lr * (update + cfg.weight_decay * theta)
        p.value = theta.astype(p.value.dtype)
        state.m[name] = m.astype(np.float32)
        state.v[name] = v.astype(np.float32)
    log.debug('adamw step %d lr %.3g', state.t, lr)
    return params, state


def grad_norm(grads: typing.Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values()))
