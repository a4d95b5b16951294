"""Spectral analysis configuration."""

from dataclasses import dataclass

from errors import ConfigError


@dataclass(frozen=True)
class SpectralConfig:
    """Every spectral shape in the system derives from this."""
    sample_rate_hz: int = 16000
    frame_len: int = 320
    frame_shift: int = 80
    fft_size: int = 1024
    mel_bins: int = 80
    amp_floor: float = 1e-5

    @property
    def n_freq(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        """Reflect padding applied on each side before framing."""
        return self.frame_len // 2

    def validate(self) -> 'SpectralConfig':
        """Raise ConfigError if the configuration cannot be used.
        Returns self so it can be chained."""
        for name in ('sample_rate_hz', 'frame_len', 'frame_shift', 'fft_size', 'mel_bins'):
            if getattr(self, name) <= 0:
                raise ConfigError(f'{name} must be positive, got {getattr(self, name)}')
        if self.fft_size < self.frame_len:
            raise ConfigError(f'fft_size {self.fft_size} is smaller than frame_len {self.frame_len}')
        if self.frame_shift > self.frame_len:
            raise ConfigError(f'frame_shift {self.frame_shift} exceeds frame_len {self.frame_len}')
        if self.mel_bins < 2:
            raise ConfigError(f'mel_bins must be at least 2, got {self.mel_bins}')
        if self.mel_bins > self.n_freq:
            raise ConfigError(f'mel_bins {self.mel_bins} exceeds n_freq {self.n_freq}')
        if not self.amp_floor > 0:
            raise ConfigError(f'amp_floor must be positive, got {self.amp_floor}')
        return self


DEFAULT = SpectralConfig()
