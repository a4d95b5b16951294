"""Command implementations behind the apvoc command line."""

import argparse
import logging
import pathlib
import sys

from app.audio import AudioFile, read_mel, read_wav, write_wav
from app.config import TEMPLATE_FILE, config_to_yaml, load_train_config
from dsp.mel import mel_spectrogram
from errors import ConfigError, FormatError, InvalidInput
from metrics.report import evaluate_dirs, write_report
from model.complexity import count_flops, count_params
from model.predictors import Vocoder
from train.checkpoint import load_checkpoint
from train.data import Dataset
from train.loop import train

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_INPUT = 2
EXIT_FORMAT = 3

CONFIG_SNAPSHOT = 'config.yaml'


def _progress(args: argparse.Namespace) -> bool:
    return not getattr(args, 'quiet', False) and sys.stderr.isatty()


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_train_config(args.config)
    try:
        dataset = Dataset.from_dir(args.data_dir, cfg.spectral)
    except FormatError as e:
        # Bad training audio is an input problem, not a checkpoint one.
        raise InvalidInput(str(e)) from e
    resume = load_checkpoint(args.resume, cfg) if args.resume else None
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_SNAPSHOT).write_text(config_to_yaml(cfg), encoding='utf-8')
    (ckpt, reports) = train(cfg, dataset, out_dir=out, resume=resume, progress=_progress(args))
    if reports:
        log.info('finished at step %d, last total loss %.4f', ckpt.step, reports[-1].total)
    return EXIT_OK


def _load_mel(path: pathlib.Path, cfg):
    if path.suffix.lower() == '.wav':
        return mel_spectrogram(read_wav(path, cfg).samples, cfg)
    return read_mel(path, cfg)


def cmd_synth(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    cfg = ckpt.config.spectral
    path = pathlib.Path(args.input)
    if args.command == 'copy-syn' and path.suffix.lower() != '.wav':
        raise InvalidInput(f'copy-syn needs a .wav input, got {path}')
    mel = _load_mel(path, cfg)
    wave = Vocoder(ckpt.params).synthesize(mel)
    write_wav(args.output, AudioFile(wave, cfg.sample_rate_hz))
    log.info('wrote %s (%d frames, %.2f s)', args.output, mel.frames, wave.shape[0] / cfg.sample_rate_hz)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = load_train_config(args.config).spectral
    result = evaluate_dirs(args.ref_dir, args.syn_dir, cfg, jobs=args.jobs, progress=_progress(args))
    write_report(result, args.report)
    if result.warnings:
        log.warning('%d warnings, see the end of %s', result.warnings, args.report)
    log.info('scored %d pairs into %s', len(result.rows), args.report)
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    params = ckpt.params
    print(f'step: {ckpt.step}')
    print(f'parameters: {count_params(params)}')
    # One operation per multiply-accumulate, the convention of published vocoder tables.
    print(f'flops_per_second: {count_flops(params, 1.0, per_mac=1)}')
    print(f'mul_add_flops_per_second: {count_flops(params, 1.0)}')
    print(config_to_yaml(ckpt.config), end='')
    return EXIT_OK


def cmd_init_config(args: argparse.Namespace) -> int:
    out = pathlib.Path(args.path)
    if out.exists() and not args.force:
        raise ConfigError(f'{out} exists, use --force to overwrite')
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(TEMPLATE_FILE.read_text(encoding='utf-8'), encoding='utf-8')
    log.info('wrote %s', out)
    return EXIT_OK
