"""Training configuration."""

from dataclasses import dataclass, field

from autodiff.optim import OptimConfig
from dsp.config import SpectralConfig
from errors import ConfigError
from model.params import ModelConfig
from objectives import LossConfig


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on besides the data."""
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    steps: int = 5000
    batch_size: int = 16
    segment_frames: int = 64
    seed: int = 0
    checkpoint_every: int = 1000
    log_every: int = 100
    # Share of utterances held out and scored at every checkpoint.
    valid_fraction: float = 0.0
    # Prepare the next batch on a worker thread while the current step runs.
    prefetch: bool = False

    @property
    def segment_samples(self) -> int:
        return self.segment_frames * self.spectral.frame_shift

    def validate(self) -> 'TrainConfig':
        self.spectral.validate()
        self.model.validate()
        self.loss.validate()
        self.optim.validate()
        for name in ('steps', 'batch_size', 'segment_frames', 'checkpoint_every', 'log_every'):
            if getattr(self, name) < 1:
                raise ConfigError(f'train {name} must be at least 1, got {getattr(self, name)}')
        if self.segment_frames < 2:
            raise ConfigError('train segment_frames must be at least 2')
        if self.seed < 0:
            raise ConfigError(f'train seed must be non-negative, got {self.seed}')
        if not 0 <= self.valid_fraction < 1:
            raise ConfigError(f'train valid_fraction must be in [0, 1), got {self.valid_fraction}')
        return self
