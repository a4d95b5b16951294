"""Model configuration and the named parameter collection."""

from dataclasses import dataclass
import enum
import typing

import numpy as np
import scipy.stats

from autodiff.tensor import Tensor
from dsp.config import SpectralConfig
from errors import ConfigError, ShapeError

INIT_STD = 0.02


class Activation(enum.Enum):
    SNAKE = 'snake'
    GELU = 'gelu'
    # Debug only: removes the nonlinearity so variants can be compared structurally.
    IDENTITY = 'identity'


class PriorKind(enum.Enum):
    PSEUDO_INVERSE = 'pseudo_inverse'
    LEARNABLE_LINEAR = 'learnable_linear'


@dataclass(frozen=True)
class ModelConfig:
    channels: int = 512
    hidden: int = 2304
    kernel: int = 7
    amplitude_blocks: int = 1
    phase_blocks: int = 4
    activation: Activation = Activation.SNAKE
    prior: PriorKind = PriorKind.PSEUDO_INVERSE
    # Feed the log prior to the phase stack as well as the predicted log amplitude.
    phase_sees_prior: bool = False
    # Stop gradients from the phase stack reaching the amplitude stack.
    detach_amplitude: bool = False

    def validate(self) -> 'ModelConfig':
        for name in ('channels', 'hidden', 'kernel', 'amplitude_blocks', 'phase_blocks'):
            if getattr(self, name) < 1:
                raise ConfigError(f'model {name} must be at least 1, got {getattr(self, name)}')
        if self.kernel % 2 != 1:
            raise ConfigError(f'depthwise kernel must be odd, got {self.kernel}')
        return self


@dataclass
class BlockParams:
    """One ConvNeXt-style block. `log_alpha` is None unless the block uses Snake."""
    dw_weight: Tensor
    dw_bias: Tensor
    norm_scale: Tensor
    norm_shift: Tensor
    expand_weight: Tensor
    expand_bias: Tensor
    grn_gamma: Tensor
    grn_beta: Tensor
    project_weight: Tensor
    project_bias: Tensor
    log_alpha: typing.Optional[Tensor] = None

    # Attribute name -> parameter name suffix.
    NAMES = {
        'dw_weight': 'dw.weight',
        'dw_bias': 'dw.bias',
        'norm_scale': 'norm.scale',
        'norm_shift': 'norm.shift',
        'expand_weight': 'expand.weight',
        'expand_bias': 'expand.bias',
        'grn_gamma': 'grn.gamma',
        'grn_beta': 'grn.beta',
        'project_weight': 'project.weight',
        'project_bias': 'project.bias',
        'log_alpha': 'snake.log_alpha',
    }

    @classmethod
    def from_params(cls, params: 'ModelParams', prefix: str) -> 'BlockParams':
        found = {attr: params.get(f'{prefix}.{suffix}') for (attr, suffix) in cls.NAMES.items()}
        missing = [attr for (attr, t) in found.items() if t is None and attr != 'log_alpha']
        if missing:
            raise ShapeError(f'block {prefix} is missing {", ".join(missing)}')
        return cls(**found)


def _block_shapes(prefix: str, cfg: ModelConfig) -> typing.Dict[str, typing.Tuple[int, ...]]:
    c, h = cfg.channels, cfg.hidden
    shapes = {
        'dw.weight': (c, cfg.kernel),
        'dw.bias': (c,),
        'norm.scale': (c,),
        'norm.shift': (c,),
        'expand.weight': (c, h),
        'expand.bias': (h,),
        'grn.gamma': (h,),
        'grn.beta': (h,),
        'project.weight': (h, c),
        'project.bias': (c,),
    }
    if cfg.activation == Activation.SNAKE:
        shapes['snake.log_alpha'] = (h,)
    return {f'{prefix}.{k}': v for (k, v) in shapes.items()}


def parameter_shapes(cfg: ModelConfig, spectral: SpectralConfig) -> typing.Dict[str, typing.Tuple[int, ...]]:
    """Name -> shape of every parameter, in a fixed order."""
    n, c = spectral.n_freq, cfg.channels
    shapes = {}
    if cfg.prior == PriorKind.LEARNABLE_LINEAR:
        shapes['prior.weight'] = (spectral.mel_bins, n)
    shapes['amp.in.weight'] = (c, n)
    shapes['amp.in.bias'] = (c,)
    shapes['amp.in_norm.scale'] = (c,)
    shapes['amp.in_norm.shift'] = (c,)
    for i in range(cfg.amplitude_blocks):
        shapes.update(_block_shapes(f'amp.blocks.{i}', cfg))
    shapes['amp.out_norm.scale'] = (c,)
    shapes['amp.out_norm.shift'] = (c,)
    shapes['amp.out.weight'] = (n, c)
    shapes['amp.out.bias'] = (n,)
    shapes['phase.in.weight'] = (c, n)
    shapes['phase.in.bias'] = (c,)
    if cfg.phase_sees_prior:
        shapes['phase.prior_in.weight'] = (c, n)
    shapes['phase.in_norm.scale'] = (c,)
    shapes['phase.in_norm.shift'] = (c,)
    for i in range(cfg.phase_blocks):
        shapes.update(_block_shapes(f'phase.blocks.{i}', cfg))
    shapes['phase.out_norm.scale'] = (c,)
    shapes['phase.out_norm.shift'] = (c,)
    for head in ('real', 'imag'):
        shapes[f'phase.{head}.weight'] = (n, c)
        shapes[f'phase.{head}.bias'] = (n,)
    return shapes


def _initial_value(name: str, shape: typing.Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    if name.endswith('.weight'):
        return scipy.stats.truncnorm.rvs(-2.0, 2.0, scale=INIT_STD, size=shape, random_state=rng)
    if name.endswith('.scale'):
        return np.ones(shape)
    # Biases, norm shifts, GRN gain/bias and log(alpha) = 0 (alpha = 1).
    return np.zeros(shape)


class ModelParams:
    """Named parameter tensors of the amplitude and phase predictors."""
    def __init__(self, tensors: typing.Dict[str, Tensor], config: ModelConfig, spectral: SpectralConfig):
        self.tensors = tensors
        self.config = config
        self.spectral = spectral

    @classmethod
    def init(cls, config: ModelConfig, spectral: SpectralConfig, seed: int = 0,
             dtype=np.float32) -> 'ModelParams':
        """Fresh parameters; the same seed always gives the same values."""
        config.validate()
        rng = np.random.Generator(np.random.Philox(key=seed))
        tensors = {}
        for (name, shape) in parameter_shapes(config, spectral).items():
            value = np.asarray(_initial_value(name, shape, rng), dtype=dtype)
            tensors[name] = Tensor(value, requires_grad=True, name=name)
        return cls(tensors, config, spectral)

    @classmethod
    def from_arrays(cls, arrays: typing.Mapping[str, np.ndarray], config: ModelConfig,
                    spectral: SpectralConfig) -> 'ModelParams':
        """Wrap stored arrays, checking names and shapes against the configuration."""
        expected = parameter_shapes(config, spectral)
        missing = [name for name in expected if name not in arrays]
        if missing:
            raise ShapeError(f'missing parameter {missing[0]}')
        unexpected = [name for name in arrays if name not in expected]
        if unexpected:
            raise ShapeError(f'unexpected parameter {unexpected[0]}')
        for (name, shape) in expected.items():
            if tuple(arrays[name].shape) != shape:
                raise ShapeError(f'parameter {name} has shape {tuple(arrays[name].shape)}, expected {shape}')
        tensors = {name: Tensor(np.array(arrays[name]), requires_grad=True, name=name) for name in expected}
        return cls(tensors, config, spectral)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def __iter__(self):
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def get(self, name: str) -> typing.Optional[Tensor]:
        return self.tensors.get(name)

    def items(self):
        return self.tensors.items()

    def block(self, stack: str, index: int) -> BlockParams:
        return BlockParams.from_params(self, f'{stack}.blocks.{index}')

    def zero_grad(self):
        for t in self.tensors.values():
            t.zero_grad()

    def grads(self) -> typing.Dict[str, np.ndarray]:
        return {name: t.gradient() for (name, t) in self.tensors.items()}

    def arrays(self) -> typing.Dict[str, np.ndarray]:
        return {name: t.value for (name, t) in self.tensors.items()}


def init_params(config: ModelConfig, spectral: SpectralConfig, seed: int = 0) -> ModelParams:
    return ModelParams.init(config, spectral, seed)
