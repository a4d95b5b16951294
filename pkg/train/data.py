"""Training data: utterance sets, per-step batches and their spectral targets."""

import logging
import pathlib
import typing

import numpy as np

from app.audio import list_wavs, read_wav
from dsp.config import SpectralConfig
from dsp.mel import project_mel
from dsp.stft import analyze, principal_angle
from errors import InvalidInput
from objectives import Targets, log_amplitude_target
from train.config import TrainConfig

log = logging.getLogger(__name__)


class Utterance(typing.NamedTuple):
    name: str
    wave: np.ndarray


class Dataset:
    """An ordered set of utterances at one sample rate."""
    def __init__(self, utterances: typing.Sequence[Utterance]):
        if not utterances:
            raise InvalidInput('dataset is empty')
        self.utterances = list(utterances)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def __getitem__(self, index: int) -> Utterance:
        return self.utterances[index]

    @property
    def shortest(self) -> int:
        return min(u.wave.shape[0] for u in self.utterances)

    @property
    def total_samples(self) -> int:
        return sum(u.wave.shape[0] for u in self.utterances)

    @classmethod
    def from_waves(cls, waves: typing.Iterable[np.ndarray]) -> 'Dataset':
        return cls([Utterance(f'utt{i:04d}', np.asarray(w, dtype=np.float64)) for (i, w) in enumerate(waves)])

    @classmethod
    def from_dir(cls, directory: pathlib.Path, cfg: SpectralConfig) -> 'Dataset':
        """Every *.wav in `directory`; each must be mono 16-bit PCM at cfg's rate."""
        paths = list_wavs(directory)
        if not paths:
            raise InvalidInput(f'no .wav files in {directory}')
        utterances = [Utterance(p.stem, read_wav(p, cfg).samples) for p in paths]
        log.info('loaded %d utterances (%.1f s) from %s', len(utterances),
                 sum(u.wave.shape[0] for u in utterances) / cfg.sample_rate_hz, directory)
        return cls(utterances)


def split(dataset: Dataset, valid_fraction: float, seed: int) -> typing.Tuple[Dataset, typing.Optional[Dataset]]:
    """Hold out round(valid_fraction * len) utterances, chosen by the seed.

    At least one utterance always stays in the training part."""
    held = min(int(round(valid_fraction * len(dataset))), len(dataset) - 1)
    if held <= 0:
        return dataset, None
    order = np.random.Generator(np.random.Philox(key=seed)).permutation(len(dataset))
    valid = sorted(order[:held].tolist())
    train = sorted(order[held:].tolist())
    return Dataset([dataset[i] for i in train]), Dataset([dataset[i] for i in valid])


def step_rng(seed: int, step: int) -> np.random.Generator:
    """Random stream for training step `step`.

    Philox is counter based: placing the step in the counter's top word
    gives every step its own stream, independent of how many draws
    earlier steps made."""
    counter = np.array([0, 0, 0, step], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


def check_segment(dataset: Dataset, cfg: TrainConfig):
    if dataset.shortest < cfg.segment_samples:
        raise InvalidInput(f'shortest utterance has {dataset.shortest} samples, '
                           f'segments need {cfg.segment_samples}')


def sample_batch(dataset: Dataset, cfg: TrainConfig, step: int) -> np.ndarray:
    """batch_size x segment_samples waveform segments for 1-based `step`."""
    check_segment(dataset, cfg)
    rng = step_rng(cfg.seed, step)
    length = cfg.segment_samples
    batch = np.empty((cfg.batch_size, length), dtype=np.float64)
    for b in range(cfg.batch_size):
        wave = dataset[int(rng.integers(len(dataset)))].wave
        start = int(rng.integers(wave.shape[0] - length + 1))
        batch[b] = wave[start:start + length]
    return batch


def make_targets(waves: np.ndarray, cfg: SpectralConfig) -> Targets:
    """Natural mel, log amplitude and phase spectra of waves[B, L]."""
    spec = analyze(waves, cfg)
    amplitude = np.abs(spec)
    return Targets(mel=project_mel(amplitude, cfg),
                   log_amp=log_amplitude_target(amplitude, cfg.amp_floor),
                   phase=principal_angle(spec))


def validation_batch(dataset: Dataset, cfg: TrainConfig) -> np.ndarray:
    """The leading segment of every utterance, a fixed batch."""
    check_segment(dataset, cfg)
    return np.stack([u.wave[:cfg.segment_samples] for u in dataset])
