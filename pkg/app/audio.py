"""WAV and binary mel file I/O."""

from dataclasses import dataclass
import logging
import pathlib
import struct
import typing
import warnings

import numpy as np
import scipy.io.wavfile

from dsp.config import SpectralConfig
from dsp.types import Domain, Spectrogram
from errors import FormatError, InvalidInput

log = logging.getLogger(__name__)

MEL_MAGIC = b'MELB'
_MEL_HEADER = struct.Struct('<4sII')
PCM_SCALE = 32768.0


@dataclass
class AudioFile:
    samples: np.ndarray
    sample_rate_hz: int
    path: typing.Optional[pathlib.Path] = None

    @property
    def duration_s(self) -> float:
        return self.samples.shape[0] / self.sample_rate_hz


def read_wav(path: pathlib.Path, cfg: typing.Optional[SpectralConfig] = None) -> AudioFile:
    """Samples of a mono 16-bit PCM file as float64 in [-1, 1).

    If `cfg` is given the file's sample rate must match it."""
    try:
        with warnings.catch_warnings():
            # Unknown chunks (LIST, cue) are skipped with a warning.
            warnings.simplefilter('ignore', scipy.io.wavfile.WavFileWarning)
            (rate, data) = scipy.io.wavfile.read(str(path))
    except OSError as e:
        raise InvalidInput(f'cannot read {path}: {e}') from e
    except (ValueError, EOFError) as e:
        message = str(e)
        if 'format tag' in message.lower() or 'unknown wave file format' in message.lower():
            raise FormatError(f'{path}: unsupported WAV encoding ({message})') from e
        raise FormatError(f'{path}: not a readable WAV file ({message})') from e
    if data.dtype.kind == 'f':
        raise FormatError(f'{path}: format tag 3 (float) is not supported, expected 16-bit PCM')
    if data.ndim != 1:
        raise FormatError(f'{path}: channels={data.shape[1]}, expected mono')
    if data.dtype != np.int16:
        raise FormatError(f'{path}: {data.dtype.itemsize * 8}-bit samples, expected 16-bit PCM')
    if cfg is not None and rate != cfg.sample_rate_hz:
        raise InvalidInput(f'{path}: sample rate {rate} Hz, expected {cfg.sample_rate_hz}')
    return AudioFile(data.astype(np.float64) / PCM_SCALE, rate, pathlib.Path(path))


def write_wav(path: pathlib.Path, audio: AudioFile) -> int:
    """Write 16-bit PCM, clipping to full scale. Returns the number of clipped samples."""
    scaled = np.round(np.asarray(audio.samples, dtype=np.float64) * PCM_SCALE)
    clipped = int(np.count_nonzero((scaled > 32767) | (scaled < -32768)))
    if clipped:
        log.warning('%s: clipped %d samples', path, clipped)
    pathlib.Path(path).parent.mkdir(parents=True, exist_ok=True)
    scipy.io.wavfile.write(str(path), audio.sample_rate_hz, np.clip(scaled, -32768, 32767).astype(np.int16))
    return clipped


def read_mel(path: pathlib.Path, cfg: SpectralConfig) -> Spectrogram:
    """A `MELB` file: magic, u32 frames, u32 bins, then frames x bins float32, little-endian."""
    raw = pathlib.Path(path).read_bytes()
    if len(raw) < _MEL_HEADER.size:
        raise FormatError(f'{path}: truncated mel header')
    (magic, frames, bins) = _MEL_HEADER.unpack_from(raw)
    if magic != MEL_MAGIC:
        raise FormatError(f'{path}: bad magic {magic!r}, expected {MEL_MAGIC!r}')
    expected = _MEL_HEADER.size + 4 * frames * bins
    if len(raw) != expected:
        raise FormatError(f'{path}: {len(raw)} bytes, header promises {expected}')
    if bins != cfg.mel_bins:
        raise FormatError(f'{path}: {bins} mel bins, configuration expects {cfg.mel_bins}')
    data = np.frombuffer(raw, dtype='<f4', offset=_MEL_HEADER.size).reshape(frames, bins)
    return Spectrogram(data.astype(np.float64), Domain.MEL, cfg)


def write_mel(path: pathlib.Path, mel: Spectrogram):
    mel.expect(Domain.MEL)
    pathlib.Path(path).parent.mkdir(parents=True, exist_ok=True)
    header = _MEL_HEADER.pack(MEL_MAGIC, mel.frames, mel.bins)
    pathlib.Path(path).write_bytes(header + mel.data.astype('<f4').tobytes())


def list_wavs(directory: pathlib.Path) -> typing.List[pathlib.Path]:
    """*.wav files directly in `directory`, sorted by name."""
    directory = pathlib.Path(directory)
    if not directory.is_dir():
        raise InvalidInput(f'{directory} is not a directory')
    return sorted(p for p in directory.iterdir() if p.suffix.lower() == '.wav' and p.is_file())
