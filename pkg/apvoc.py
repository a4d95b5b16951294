#!/usr/bin/env python3

"""apvoc - mel spectrogram vocoder predicting amplitude, then phase."""

import argparse
import logging
import pathlib
import sys
import typing

from app import commands
from errors import FormatError, NumericalError, ShapeError, VocoderError

log = logging.getLogger('apvoc')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='apvoc', description=__doc__)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', help='Log debug messages', action='store_true')
    verbosity.add_argument('-q', '--quiet', help='Only log warnings and errors', action='store_true')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', required=True)

    p = sub.add_parser('train', help='Train a model on a directory of WAV files')
    p.add_argument('--config', type=pathlib.Path, help='Configuration file, defaults apply otherwise')
    p.add_argument('--data-dir', type=pathlib.Path, required=True, help='Directory of 16-bit mono WAV files')
    p.add_argument('--out', type=pathlib.Path, required=True, help='Output directory for checkpoints and logs')
    p.add_argument('--resume', type=pathlib.Path, help='Checkpoint to continue training from')
    p.set_defaults(func=commands.cmd_train)

    for (name, help) in (('synth', 'Synthesize a waveform from a mel file or a WAV file'),
                         ('copy-syn', 'Resynthesize a WAV file through its mel spectrogram')):
        p = sub.add_parser(name, help=help)
        p.add_argument('--checkpoint', type=pathlib.Path, required=True, help='Trained checkpoint')
        p.add_argument('--input', type=pathlib.Path, required=True, help='Input .wav or MELB mel file')
        p.add_argument('--output', type=pathlib.Path, required=True, help='Output WAV file')
        p.set_defaults(func=commands.cmd_synth)

    p = sub.add_parser('eval', help='Score synthesized speech against references')
    p.add_argument('--ref-dir', type=pathlib.Path, required=True, help='Reference WAV directory')
    p.add_argument('--syn-dir', type=pathlib.Path, required=True, help='Synthesized WAV directory')
    p.add_argument('--report', type=pathlib.Path, required=True, help='Report file to write')
    p.add_argument('--config', type=pathlib.Path, help='Configuration file for the analysis settings')
    p.add_argument('--jobs', type=int, default=4, help='Worker threads (default 4)')
    p.set_defaults(func=commands.cmd_eval)

    p = sub.add_parser('inspect', help='Show checkpoint step, size, complexity and configuration')
    p.add_argument('--checkpoint', type=pathlib.Path, required=True, help='Checkpoint to inspect')
    p.set_defaults(func=commands.cmd_inspect)

    p = sub.add_parser('init-config', help='Write the documented configuration template')
    p.add_argument('path', type=pathlib.Path, help='Where to write it')
    p.add_argument('--force', help='Overwrite an existing file', action='store_true')
    p.set_defaults(func=commands.cmd_init_config)
    return parser


def exit_code(error: VocoderError) -> int:
    if isinstance(error, NumericalError):
        return commands.EXIT_DIVERGED
    if isinstance(error, (FormatError, ShapeError)):
        return commands.EXIT_FORMAT
    return commands.EXIT_INPUT


def main(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except VocoderError as e:
        log.error('%s: %s', type(e).__name__, e)
        print(f'apvoc: {type(e).__name__}: {e}', file=sys.stderr)
        return exit_code(e)


if __name__ == '__main__':
    sys.exit(main())
