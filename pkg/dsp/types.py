"""Spectrogram container types."""

from dataclasses import dataclass
import enum

import numpy as np

from dsp.config import SpectralConfig, DEFAULT
from errors import ShapeError, DomainError


class Domain(enum.Enum):
    AMPLITUDE = 'amplitude'
    LOG_AMPLITUDE = 'log_amplitude'
    PHASE = 'phase'
    MEL = 'mel'


@dataclass
class Spectrogram:
    """A frame-major (frames x bins) real matrix tagged with what it holds.

    Mel content has `config.mel_bins` columns, everything else has
    `config.n_freq`."""
    data: np.ndarray
    domain: Domain
    config: SpectralConfig = DEFAULT

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ShapeError(f'{self.domain.value} spectrogram must be 2-D, got shape {self.data.shape}')
        expected = self.config.mel_bins if self.domain == Domain.MEL else self.config.n_freq
        if self.data.shape[1] != expected:
            raise ShapeError(f'{self.domain.value} spectrogram needs {expected} columns, '
                             f'got {self.data.shape[1]}')
        if self.domain == Domain.AMPLITUDE and np.any(self.data < 0):
            raise DomainError('amplitude spectrogram has negative entries')

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]

    def expect(self, domain: Domain) -> 'Spectrogram':
        """Returns self if it holds `domain` content, raises DomainError otherwise."""
        if self.domain != domain:
            raise DomainError(f'expected a {domain.value} spectrogram, got {self.domain.value}')
        return self

    def __str__(self) -> str:
        return f'Spectrogram({self.domain.value}, {self.frames}x{self.bins})'
