"""The training loop."""

import concurrent.futures
import logging
import pathlib
import time
import typing

import numpy as np
import tqdm

from autodiff.optim import OptimState, adamw_step, grad_norm
from autodiff.tensor import no_grad
from errors import InvalidInput, NumericalError
from model.complexity import count_params
from model.params import ModelParams
from model.predictors import forward
from objectives import LossReport, compute_losses
from train.checkpoint import Checkpoint, save_checkpoint
from train.config import TrainConfig
from train.data import Dataset, check_segment, make_targets, sample_batch, split, validation_batch

log = logging.getLogger(__name__)

LOSS_LOG = 'loss.tsv'


def checkpoint_name(step: int) -> str:
    return f'ckpt_{step:06d}.fgv'


def format_loss_line(step: int, report: LossReport) -> str:
    """One tab-separated loss log line; values keep full double precision."""
    return '\t'.join([str(step)] + [format(v, '.17g') for v in report.row()])


def trim_loss_log(path: pathlib.Path, step: int):
    """Drop log lines past `step`, left behind by a run that stopped
    between checkpoints."""
    if not path.exists():
        return
    lines = path.read_text(encoding='utf-8').splitlines(keepends=True)
    kept = [line for line in lines if line.strip() and int(line.split('\t', 1)[0]) <= step]
    if len(kept) != len(lines):
        log.warning('dropping %d loss log lines after step %d', len(lines) - len(kept), step)
        path.write_text(''.join(kept), encoding='utf-8')


def train_step(params: ModelParams, state: OptimState, waves: np.ndarray, cfg: TrainConfig) -> LossReport:
    """Forward, backward and one AdamW update on a batch of waveforms."""
    targets = make_targets(waves, cfg.spectral)
    params.zero_grad()
    prediction = forward(targets.mel, params)
    (total, report) = compute_losses(prediction, targets, cfg.loss, cfg.spectral)
    total.backward()
    grads = params.grads()
    log.debug('gradient norm %.4g', grad_norm(grads))
    adamw_step(params.tensors, grads, state)
    return report


def evaluate_loss(params: ModelParams, waves: np.ndarray, cfg: TrainConfig) -> LossReport:
    targets = make_targets(waves, cfg.spectral)
    with no_grad():
        (_, report) = compute_losses(forward(targets.mel, params), targets, cfg.loss, cfg.spectral)
    return report


class Trainer:
    """Runs steps start+1 .. cfg.steps, writing the loss log and checkpoints
    to `out_dir` when one is given."""
    def __init__(self, cfg: TrainConfig, dataset: Dataset,
                 out_dir: typing.Optional[pathlib.Path] = None,
                 resume: typing.Optional[Checkpoint] = None,
                 progress: bool = False):
        self.cfg = cfg.validate()
        (self.train_set, self.valid_set) = split(dataset, cfg.valid_fraction, cfg.seed)
        check_segment(self.train_set, cfg)
        self.out_dir = pathlib.Path(out_dir) if out_dir is not None else None
        self.progress = progress
        if resume is not None:
            if resume.step > cfg.steps:
                raise InvalidInput(f'checkpoint is at step {resume.step}, beyond train.steps {cfg.steps}')
            self.params = resume.params
            self.state = resume.optim
            self.state.config = cfg.optim
            self.start = resume.step
        else:
            self.params = ModelParams.init(cfg.model, cfg.spectral, seed=cfg.seed)
            self.state = OptimState.create(self.params.tensors, cfg.optim)
            self.start = 0
        self.reports: typing.List[LossReport] = []

    def checkpoint(self, step: int) -> Checkpoint:
        return Checkpoint(step=step, params=self.params, optim=self.state, config=self.cfg)

    def _save(self, step: int):
        if self.out_dir is not None:
            save_checkpoint(self.checkpoint(step), self.out_dir / checkpoint_name(step))
        if self.valid_set is not None:
            report = evaluate_loss(self.params, validation_batch(self.valid_set, self.cfg), self.cfg)
            log.info('step %d validation total %.4f (mel %.4f)', step, report.total, report.mel)

    def run(self) -> Checkpoint:
        cfg = self.cfg
        log.info('training %d parameters for steps %d..%d on %d utterances',
                 count_params(self.params), self.start + 1, cfg.steps, len(self.train_set))
        loss_log = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            if self.start:
                trim_loss_log(self.out_dir / LOSS_LOG, self.start)
            loss_log = (self.out_dir / LOSS_LOG).open('a' if self.start else 'w', encoding='utf-8')
        pool = concurrent.futures.ThreadPoolExecutor(max_workers=1) if cfg.prefetch else None
        try:
            self._run(loss_log, pool)
        finally:
            if pool is not None:
                pool.shutdown(wait=True, cancel_futures=True)
            if loss_log is not None:
                loss_log.close()
        return self.checkpoint(cfg.steps)

    def _run(self, loss_log, pool):
        cfg = self.cfg
        pending = None
        started = time.perf_counter()
        interval_start = started
        steps = range(self.start + 1, cfg.steps + 1)
        bar = tqdm.tqdm(steps, total=cfg.steps, initial=self.start, unit='step',
                        disable=not self.progress, leave=False)
        for step in bar:
            if pending is not None:
                waves = pending.result()
            else:
                waves = sample_batch(self.train_set, cfg, step)
            if pool is not None and step < cfg.steps:
                pending = pool.submit(sample_batch, self.train_set, cfg, step + 1)
            try:
                report = train_step(self.params, self.state, waves, cfg)
            except NumericalError as e:
                log.error('training diverged at step %d: %s', step, e)
                raise
            self.reports.append(report)
            if loss_log is not None:
                loss_log.write(format_loss_line(step, report) + '\n')
                loss_log.flush()
            bar.set_postfix(total=f'{report.total:.3f}')
            if step % cfg.log_every == 0:
                now = time.perf_counter()
                log.info('step %d total %.4f (%.3f s/step)', step, report.total,
                         (now - interval_start) / cfg.log_every)
                interval_start = now
            if step % cfg.checkpoint_every == 0 or step == cfg.steps:
                self._save(step)
        elapsed = time.perf_counter() - started
        done = cfg.steps - self.start
        if done:
            seconds_per_pass = elapsed / done * self.train_set.total_samples / (cfg.batch_size * cfg.segment_samples)
            log.info('%d steps in %.1f s (%.3f s/step, %.1f s per pass over the data)',
                     done, elapsed, elapsed / done, seconds_per_pass)


def train(cfg: TrainConfig, dataset: Dataset, out_dir: typing.Optional[pathlib.Path] = None,
          resume: typing.Optional[Checkpoint] = None,
          progress: bool = False) -> typing.Tuple[Checkpoint, typing.List[LossReport]]:
    """Train and return the final checkpoint and the reports of the steps run."""
    trainer = Trainer(cfg, dataset, out_dir, resume, progress)
    ckpt = trainer.run()
    return ckpt, trainer.reports
