"""Evaluation of synthesized utterances against references, and the report file."""

import concurrent.futures
import logging
import math
import pathlib
import typing

import numpy as np
import tqdm

from app.audio import list_wavs, read_wav
from dsp.config import SpectralConfig
from errors import InvalidInput
from metrics.objective import align, mcd, snr
from metrics.pitch import extract_f0, f0_metrics

log = logging.getLogger(__name__)

COLUMNS = ('name', 'snr_db', 'mcd_db', 'f0_rmse_cents', 'vuv_err_pct', 'utmos')


class PairScores(typing.NamedTuple):
    name: str
    snr_db: float
    mcd_db: float
    f0_rmse_cents: float
    vuv_err_pct: float
    # The signals differed in length and were trimmed.
    trimmed: bool = False


class EvalResult(typing.NamedTuple):
    rows: typing.List[PairScores]
    unmatched: typing.List[str]

    @property
    def warnings(self) -> int:
        return len(self.unmatched) + sum(1 for r in self.rows if r.trimmed)


def evaluate_pair(ref: np.ndarray, syn: np.ndarray, cfg: SpectralConfig, name: str = '') -> PairScores:
    (ref, syn, trimmed) = align(ref, syn, cfg)
    (rmse, vuv) = f0_metrics(extract_f0(ref, cfg), extract_f0(syn, cfg))
    return PairScores(name, snr(ref, syn, cfg), mcd(ref, syn, cfg), rmse, vuv, trimmed)


def _evaluate_files(ref_path: pathlib.Path, syn_path: pathlib.Path, cfg: SpectralConfig) -> PairScores:
    ref = read_wav(ref_path, cfg).samples
    syn = read_wav(syn_path, cfg).samples
    return evaluate_pair(ref, syn, cfg, ref_path.stem)


def evaluate_dirs(ref_dir: pathlib.Path, syn_dir: pathlib.Path, cfg: SpectralConfig,
                  jobs: int = 4, progress: bool = False) -> EvalResult:
    """Score every pair of same-named WAV files. Files present on one side
    only are reported as unmatched."""
    refs = {p.name: p for p in list_wavs(ref_dir)}
    syns = {p.name: p for p in list_wavs(syn_dir)}
    if not syns:
        raise InvalidInput(f'no .wav files in {syn_dir}')
    matched = sorted(set(refs) & set(syns))
    unmatched = sorted(set(refs) ^ set(syns))
    for name in unmatched:
        log.warning('%s has no counterpart', name)
    if not matched:
        raise InvalidInput(f'no file names in common between {ref_dir} and {syn_dir}')
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [pool.submit(_evaluate_files, refs[n], syns[n], cfg) for n in matched]
        rows = [f.result() for f in tqdm.tqdm(futures, unit='file', disable=not progress, leave=False)]
    return EvalResult(rows=rows, unmatched=unmatched)


def _mean(values: typing.Sequence[float]) -> float:
    finite = [v for v in values if not math.isnan(v)]
    return float(np.mean(finite)) if finite else float('nan')


def _cell(value: float) -> str:
    return 'nan' if math.isnan(value) else f'{value:.2f}'


def format_report(result: EvalResult) -> str:
    lines = ['\t'.join(COLUMNS)]
    for r in result.rows:
        lines.append('\t'.join([r.name] + [_cell(v) for v in r[1:5]] + ['']))
    means = [_mean([r[i] for r in result.rows]) for i in range(1, 5)]
    lines.append('\t'.join(['MEAN'] + [_cell(v) for v in means] + ['']))
    for name in result.unmatched:
        lines.append(f'# unmatched: {name}')
    lines.append(f'# warnings: {result.warnings}')
    return '\n'.join(lines) + '\n'


def write_report(result: EvalResult, path: pathlib.Path):
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_report(result), encoding='utf-8')
