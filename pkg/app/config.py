"""Run configuration parsing.

A configuration file holds one `section.key = value` assignment per line;
`#` starts a comment. Every key has a default, so an empty file is valid.
"""

from __future__ import annotations

import dataclasses
import enum
import io
import pathlib
import re
import typing
from typing import Type, TypeVar

import ruamel.yaml

from dsp.config import SpectralConfig
from errors import ConfigError
from model.params import Activation, ModelConfig, PriorKind
from objectives import LossConfig, LossWeights, PhaseLossKind
from autodiff.optim import OptimConfig
from train.config import TrainConfig

TEMPLATE_FILE = pathlib.Path(__file__).absolute().parent.parent / 'config' / 'template.cfg'

_LINE = re.compile(r'^(?P<section>[A-Za-z_]\w*)\.(?P<key>[A-Za-z_]\w*)\s*=\s*(?P<value>\S.*?)\s*$')

T = TypeVar('T')


class ConfigItem:
    """Parent class for all configuration values and containers."""
    def __init__(self, parent: ConfigSection, name: str) -> None:
        self.parent = parent
        self.name = name
        self.path = self.get_path(parent, name)

    @classmethod
    def get_path(cls, parent: ConfigSection, name: str) -> str:
        if parent:
            return f'{parent.path}/{name}'
        else:
            return f'/{name}'

    def __eq__(self, o: object) -> bool:
        if not isinstance(o, ConfigItem):
            return False
        return self.value == o.value

    @classmethod
    def from_data(cls: Type[T], parent: ConfigSection, name: str, data) -> T:
        raise NotImplementedError


class IntValue(ConfigItem):
    def __init__(self, parent: ConfigSection, name: str, value: int) -> None:
        super().__init__(parent, name)
        self.value = value

    @classmethod
    def from_data(cls: Type[T], parent: ConfigSection, name: str, data) -> T:
        if isinstance(data, bool):
            raise ConfigError(f'Not an int: {data} @{cls.get_path(parent, name)}')
        if isinstance(data, str):
            try:
                data = int(data, 10)
            except ValueError:
                raise ConfigError(f'Not an int: {data} @{cls.get_path(parent, name)}') from None
        if not isinstance(data, int):
            raise ConfigError(f'Not an int: {data} @{cls.get_path(parent, name)}')
        return cls(parent, name, data)


class FloatValue(ConfigItem):
    def __init__(self, parent: ConfigSection, name: str, value: float) -> None:
        super().__init__(parent, name)
        self.value = value

    @classmethod
    def from_data(cls: Type[T], parent: ConfigSection, name: str, data) -> T:
        if isinstance(data, bool):
            raise ConfigError(f'Not a number: {data} @{cls.get_path(parent, name)}')
        try:
            return cls(parent, name, float(data))
        except (TypeError, ValueError):
            raise ConfigError(f'Not a number: {data} @{cls.get_path(parent, name)}') from None


class BoolValue(ConfigItem):
    """true/false, yes/no, on/off or 1/0."""
    TRUE = ('true', 'yes', 'on', '1')
    FALSE = ('false', 'no', 'off', '0')

    def __init__(self, parent: ConfigSection, name: str, value: bool) -> None:
        super().__init__(parent, name)
        self.value = value

    @classmethod
    def from_data(cls: Type[T], parent: ConfigSection, name: str, data) -> T:
        if isinstance(data, str):
            if data.lower() in cls.TRUE:
                data = True
            elif data.lower() in cls.FALSE:
                data = False
        if not isinstance(data, bool):
            raise ConfigError(f'Not a bool: {data} @{cls.get_path(parent, name)}')
        return cls(parent, name, data)


class EnumValue(ConfigItem):
    """One of the string values of ENUM."""
    ENUM: Type[enum.Enum] = None

    def __init__(self, parent: ConfigSection, name: str, value: enum.Enum) -> None:
        super().__init__(parent, name)
        self.value = value

    @classmethod
    def from_data(cls: Type[T], parent: ConfigSection, name: str, data) -> T:
        if isinstance(data, cls.ENUM):
            return cls(parent, name, data)
        try:
            return cls(parent, name, cls.ENUM(data))
        except ValueError:
            choices = ', '.join(e.value for e in cls.ENUM)
            raise ConfigError(f'Not one of {choices}: {data} @{cls.get_path(parent, name)}') from None


class ActivationValue(EnumValue):
    ENUM = Activation


class PriorValue(EnumValue):
    ENUM = PriorKind


class PhaseLossValue(EnumValue):
    ENUM = PhaseLossKind


class ConfigSection(ConfigItem):
    """A container in the configuration."""
    KEYS = {}
    DEFAULTS = {}

    def __init__(self, parent: ConfigSection, name: str) -> None:
        super().__init__(parent, name)
        self.contents = {}

    def __getattr__(self, name: str) -> ConfigItem:
        if name in ('contents', 'KEYS', 'DEFAULTS'):
            raise AttributeError(name)
        if name in self.contents:
            return self.contents[name]
        if name in self.DEFAULTS and name in self.KEYS:
            return self.KEYS[name].from_data(self, name, self.DEFAULTS[name])
        raise AttributeError(f'No {name} in {self.path}')

    def __eq__(self, o: object) -> bool:
        if not isinstance(o, ConfigSection):
            return False
        return all(getattr(self, k) == getattr(o, k) for k in self.KEYS)

    def values(self) -> typing.Dict[str, typing.Any]:
        """Every key's value, defaults filled in."""
        return {k: getattr(self, k).value for k in self.KEYS}

    @classmethod
    def from_data(cls: Type[T], parent: ConfigSection, name: str, data) -> T:
        if not isinstance(data, dict):
            raise ConfigError(f'Not a section: {data} @{cls.get_path(parent, name)}')
        result = cls(parent, name)
        for (k, v) in data.items():
            if k not in cls.KEYS:
                raise ConfigError(f'Unknown key {k} @{result.path}')
            result.contents[k] = cls.KEYS[k].from_data(result, k, v)
        return result


def _defaults(instance) -> typing.Dict[str, typing.Any]:
    return {f.name: getattr(instance, f.name) for f in dataclasses.fields(instance)}


class SpectralSection(ConfigSection):
    KEYS = {
        'sample_rate_hz': IntValue,
        'frame_len': IntValue,
        'frame_shift': IntValue,
        'fft_size': IntValue,
        'mel_bins': IntValue,
        'amp_floor': FloatValue,
    }
    DEFAULTS = _defaults(SpectralConfig())

    def build(self) -> SpectralConfig:
        return SpectralConfig(**self.values())

    @staticmethod
    def flatten(cfg: SpectralConfig) -> typing.Dict[str, typing.Any]:
        return _defaults(cfg)


class ModelSection(ConfigSection):
    KEYS = {
        'channels': IntValue,
        'hidden': IntValue,
        'kernel': IntValue,
        'amplitude_blocks': IntValue,
        'phase_blocks': IntValue,
        'activation': ActivationValue,
        'prior': PriorValue,
        'phase_sees_prior': BoolValue,
        'detach_amplitude': BoolValue,
    }
    DEFAULTS = _defaults(ModelConfig())

    def build(self) -> ModelConfig:
        return ModelConfig(**self.values())

    @staticmethod
    def flatten(cfg: ModelConfig) -> typing.Dict[str, typing.Any]:
        return _defaults(cfg)


class LossSection(ConfigSection):
    KEYS = {
        'lambda_amp': FloatValue,
        'lambda_stft': FloatValue,
        'lambda_mel': FloatValue,
        'rho': FloatValue,
        'phase_loss': PhaseLossValue,
        'stft_consistency': BoolValue,
    }

    @staticmethod
    def flatten(cfg: LossConfig) -> typing.Dict[str, typing.Any]:
        return {
            'lambda_amp': cfg.weights.amplitude,
            'lambda_stft': cfg.weights.stft,
            'lambda_mel': cfg.weights.mel,
            'rho': cfg.rho,
            'phase_loss': cfg.phase_loss,
            'stft_consistency': cfg.stft_consistency,
        }

    def build(self) -> LossConfig:
        v = self.values()
        weights = LossWeights(amplitude=v['lambda_amp'], stft=v['lambda_stft'], mel=v['lambda_mel'])
        return LossConfig(weights=weights, rho=v['rho'], phase_loss=v['phase_loss'],
                          stft_consistency=v['stft_consistency'])


LossSection.DEFAULTS = LossSection.flatten(LossConfig())


class OptimSection(ConfigSection):
    KEYS = {
        'lr': FloatValue,
        'beta1': FloatValue,
        'beta2': FloatValue,
        'eps': FloatValue,
        'weight_decay': FloatValue,
        'lr_decay': FloatValue,
    }
    DEFAULTS = _defaults(OptimConfig())

    def build(self) -> OptimConfig:
        return OptimConfig(**self.values())

    @staticmethod
    def flatten(cfg: OptimConfig) -> typing.Dict[str, typing.Any]:
        return _defaults(cfg)


class TrainSection(ConfigSection):
    KEYS = {
        'steps': IntValue,
        'batch_size': IntValue,
        'segment_frames': IntValue,
        'seed': IntValue,
        'checkpoint_every': IntValue,
        'log_every': IntValue,
        'valid_fraction': FloatValue,
        'prefetch': BoolValue,
    }

    @staticmethod
    def flatten(cfg: TrainConfig) -> typing.Dict[str, typing.Any]:
        return {k: getattr(cfg, k) for k in TrainSection.KEYS}


TrainSection.DEFAULTS = TrainSection.flatten(TrainConfig())


class RunConfig(ConfigSection):
    """Top-level configuration."""
    KEYS = {
        'spectral': SpectralSection,
        'model': ModelSection,
        'loss': LossSection,
        'optim': OptimSection,
        'train': TrainSection,
    }
    DEFAULTS = {k: {} for k in KEYS}

    def build(self) -> TrainConfig:
        """The validated TrainConfig this configuration describes."""
        cfg = TrainConfig(spectral=self.spectral.build(), model=self.model.build(),
                          loss=self.loss.build(), optim=self.optim.build(), **self.train.values())
        return cfg.validate()


def parse_config_text(text: str, name: str = 'config') -> RunConfig:
    data = {}
    for (number, raw) in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f'{name}:{number}: expected section.key = value, got {raw.strip()!r}')
        (section, key, value) = m.group('section', 'key', 'value')
        if section not in RunConfig.KEYS:
            raise ConfigError(f'{name}:{number}: unknown section {section}')
        entries = data.setdefault(section, {})
        if key in entries:
            raise ConfigError(f'{name}:{number}: {section}.{key} is set twice')
        entries[key] = value
    return RunConfig.from_data(None, name, data)


def parse_config_file(file: pathlib.Path) -> RunConfig:
    try:
        text = pathlib.Path(file).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f'cannot read {file}: {e}') from e
    return parse_config_text(text, pathlib.Path(file).name)


def load_train_config(file: typing.Optional[pathlib.Path]) -> TrainConfig:
    """TrainConfig from `file`, or the defaults if no file is given."""
    if file is None:
        return RunConfig.from_data(None, 'defaults', {}).build()
    return parse_config_file(file).build()


def flatten_config(cfg: TrainConfig) -> typing.Dict[str, typing.Dict[str, typing.Any]]:
    return {name: section.flatten(getattr(cfg, name)) if name != 'train' else section.flatten(cfg)
            for (name, section) in RunConfig.KEYS.items()}


def _render(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: TrainConfig) -> str:
    """Config file text that parses back to `cfg`."""
    lines = []
    for (section, values) in flatten_config(cfg).items():
        lines.extend(f'{section}.{key} = {_render(value)}' for (key, value) in values.items())
    return '\n'.join(lines) + '\n'


def config_to_yaml(cfg: TrainConfig, extra: typing.Optional[typing.Dict] = None) -> str:
    """YAML rendering of the resolved configuration, plus optional extra entries."""
    data = {section: {k: (v.value if isinstance(v, enum.Enum) else v) for (k, v) in values.items()}
            for (section, values) in flatten_config(cfg).items()}
    if extra:
        data.update(extra)
    y = ruamel.yaml.YAML(typ='safe')
    y.default_flow_style = False
    stream = io.StringIO()
    y.dump(data, stream)
    return stream.getvalue()
