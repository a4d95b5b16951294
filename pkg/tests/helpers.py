"""Shared configurations and signals for the test suite."""

import numpy as np

from dsp.config import SpectralConfig
from model.params import ModelConfig

# Small enough for finite differences over every entry.
SMALL = SpectralConfig(sample_rate_hz=8000, frame_len=16, frame_shift=4, fft_size=16, mel_bins=4)
TINY_MODEL = ModelConfig(channels=4, hidden=8, kernel=3, amplitude_blocks=1, phase_blocks=1)


def chirp(seconds: float, sample_rate_hz: int = 16000, f0: float = 120.0, f1: float = 300.0,
          amplitude: float = 0.5) -> np.ndarray:
    """A harmonic sweep with a little noise, loosely speech-like."""
    t = np.arange(int(seconds * sample_rate_hz)) / sample_rate_hz
    phase = 2 * np.pi * (f0 * t + 0.5 * (f1 - f0) * t * t / max(seconds, 1e-9))
    wave = sum(np.sin(k * phase) / k for k in range(1, 6))
    rng = np.random.Generator(np.random.Philox(key=7))
    return amplitude * wave / 2.3 + 0.003 * rng.standard_normal(t.shape[0])
