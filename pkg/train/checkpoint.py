"""Checkpoint files.

Layout, all little-endian: magic b'FGV1'; u32 tensor count; per tensor a
u16 name length, the UTF-8 name, u8 rank, rank x u32 dims and the float32
values; finally the u32 CRC32 of everything before it.

Besides the model parameters a checkpoint holds `meta/step`,
`meta/config` (the configuration text, one byte per value), `optim/t`
and the AdamW moments as `optim/m/<name>` and `optim/v/<name>`.
"""

from dataclasses import dataclass
import logging
import math
import pathlib
import struct
import typing
import zlib

import numpy as np

from autodiff.optim import OptimState
from errors import ConfigError, FormatError, ShapeError
from model.params import ModelParams, parameter_shapes
from train.config import TrainConfig

log = logging.getLogger(__name__)

MAGIC = b'FGV1'
_COUNT = struct.Struct('<I')
_NAME_LEN = struct.Struct('<H')
_RANK = struct.Struct('<B')
_CRC = struct.Struct('<I')

STEP = 'meta/step'
CONFIG = 'meta/config'
OPTIM_T = 'optim/t'
OPTIM_M = 'optim/m/'
OPTIM_V = 'optim/v/'


@dataclass
class Checkpoint:
    step: int
    params: ModelParams
    optim: OptimState
    config: TrainConfig


def encode_tensors(tensors: typing.Mapping[str, np.ndarray]) -> bytes:
    parts = [MAGIC, _COUNT.pack(len(tensors))]
    for (name, value) in tensors.items():
        encoded = name.encode('utf-8')
        value = np.asarray(value)
        parts.append(_NAME_LEN.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_RANK.pack(value.ndim))
        parts.append(struct.pack(f'<{value.ndim}I', *value.shape))
        parts.append(np.ascontiguousarray(value, dtype='<f4').tobytes())
    body = b''.join(parts)
    return body + _CRC.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise FormatError(f'{self.source}: truncated at byte {self.offset}')
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))


def decode_tensors(data: bytes, source: str = 'checkpoint') -> typing.Dict[str, np.ndarray]:
    if len(data) < len(MAGIC) + _COUNT.size + _CRC.size:
        raise FormatError(f'{source}: truncated ({len(data)} bytes)')
    if data[:len(MAGIC)] != MAGIC:
        raise FormatError(f'{source}: bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}')
    (stored_crc,) = _CRC.unpack(data[-_CRC.size:])
    body = data[:-_CRC.size]
    reader = _Reader(body, source)
    reader.take(len(MAGIC))
    (count,) = reader.unpack(_COUNT)
    tensors = {}
    for _ in range(count):
        (name_len,) = reader.unpack(_NAME_LEN)
        try:
            name = reader.take(name_len).decode('utf-8')
        except UnicodeDecodeError as e:
            raise FormatError(f'{source}: tensor name is not UTF-8') from e
        (rank,) = reader.unpack(_RANK)
        dims = struct.unpack(f'<{rank}I', reader.take(4 * rank))
        size = math.prod(dims)
        values = np.frombuffer(reader.take(4 * size), dtype='<f4').astype(np.float32)
        if name in tensors:
            raise FormatError(f'{source}: tensor {name} appears twice')
        tensors[name] = values.reshape(dims)
    if reader.offset != len(body):
        raise FormatError(f'{source}: {len(body) - reader.offset} unexpected trailing bytes')
    if zlib.crc32(body) != stored_crc:
        raise FormatError(f'{source}: CRC mismatch')
    return tensors


def _config_text(cfg: TrainConfig) -> str:
    # Imported here: app.config sits above train in the package layering.
    from app.config import format_config
    return format_config(cfg)


def _parse_config(text: str, source: str) -> TrainConfig:
    from app.config import parse_config_text
    return parse_config_text(text, f'{source}:{CONFIG}').build()


def checkpoint_tensors(ckpt: Checkpoint) -> typing.Dict[str, np.ndarray]:
    tensors = {name: t.value for (name, t) in ckpt.params.items()}
    tensors[STEP] = np.array([ckpt.step])
    tensors[CONFIG] = np.frombuffer(_config_text(ckpt.config).encode('utf-8'), dtype=np.uint8)
    tensors[OPTIM_T] = np.array([ckpt.optim.t])
    for name in ckpt.params:
        tensors[OPTIM_M + name] = ckpt.optim.m[name]
        tensors[OPTIM_V + name] = ckpt.optim.v[name]
    return tensors


def save_checkpoint(ckpt: Checkpoint, path: pathlib.Path):
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + '.tmp')
    tmp.write_bytes(encode_tensors(checkpoint_tensors(ckpt)))
    tmp.replace(path)
    log.info('saved checkpoint %s at step %d', path, ckpt.step)


def _scalar(tensors: typing.Mapping[str, np.ndarray], name: str, source: str) -> int:
    if name not in tensors or tensors[name].shape != (1,):
        raise FormatError(f'{source}: missing or malformed {name}')
    return int(tensors[name][0])


def load_checkpoint(path: pathlib.Path, expected: typing.Optional[TrainConfig] = None) -> Checkpoint:
    """Read a checkpoint. If `expected` is given every tensor must have the
    shape that configuration's model needs."""
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise FormatError(f'cannot read checkpoint {path}: {e}') from e
    source = str(path)
    tensors = decode_tensors(data, source)

    if CONFIG not in tensors:
        raise FormatError(f'{source}: missing {CONFIG}')
    try:
        text = tensors[CONFIG].astype(np.uint8).tobytes().decode('utf-8')
        stored = _parse_config(text, source)
    except (UnicodeDecodeError, ConfigError) as e:
        raise FormatError(f'{source}: unreadable configuration snapshot ({e})') from e
    config = expected or stored

    shapes = parameter_shapes(config.model, config.spectral)
    for (name, shape) in shapes.items():
        for key in (name, OPTIM_M + name, OPTIM_V + name):
            if key not in tensors:
                raise FormatError(f'{source}: tensor {key} is missing')
            if tensors[key].shape != shape:
                raise FormatError(f'{source}: tensor {key} has shape {tensors[key].shape}, expected {shape}')
    known = set(shapes) | {OPTIM_M + n for n in shapes} | {OPTIM_V + n for n in shapes} | {STEP, CONFIG, OPTIM_T}
    extra = sorted(set(tensors) - known)
    if extra:
        raise FormatError(f'{source}: tensor {extra[0]} does not belong to the configured model')

    try:
        params = ModelParams.from_arrays({n: tensors[n] for n in shapes}, config.model, config.spectral)
    except ShapeError as e:
        raise FormatError(f'{source}: {e}') from e
    optim = OptimState(config=config.optim,
                       m={n: tensors[OPTIM_M + n].copy() for n in shapes},
                       v={n: tensors[OPTIM_V + n].copy() for n in shapes},
                       t=_scalar(tensors, OPTIM_T, source))
    step = _scalar(tensors, STEP, source)
    log.debug('loaded %s: step %d, %d tensors', source, step, len(tensors))
    return Checkpoint(step=step, params=params, optim=optim, config=config)
