import dataclasses
import itertools
import math

import numpy as np
import pytest

from errors import InvalidInput
from model.params import Activation, PriorKind
from objectives import LossConfig
from objectives.phase import PhaseLossKind
from tests.helpers import SMALL, chirp
from train.checkpoint import load_checkpoint
from train.config import TrainConfig
from train.data import Dataset, make_targets, sample_batch, split, step_rng
from train.loop import LOSS_LOG, Trainer, checkpoint_name, format_loss_line, train


def test_step_streams_are_independent():
    a = step_rng(3, 5).integers(1 << 30, size=4)
    b = step_rng(3, 5).integers(1 << 30, size=4)
    c = step_rng(3, 6).integers(1 << 30, size=4)
    assert a.tolist() == b.tolist()
    assert a.tolist() != c.tolist()


def test_sample_batch(small_dataset, tiny_train_cfg):
    batch = sample_batch(small_dataset, tiny_train_cfg, 1)
    assert batch.shape == (2, tiny_train_cfg.segment_samples)
    assert np.array_equal(batch, sample_batch(small_dataset, tiny_train_cfg, 1))


def test_short_dataset_is_rejected(tiny_train_cfg):
    short = Dataset.from_waves([np.zeros(tiny_train_cfg.segment_samples - 1)])
    with pytest.raises(InvalidInput):
        sample_batch(short, tiny_train_cfg, 1)
    with pytest.raises(InvalidInput):
        Trainer(tiny_train_cfg, short)


def test_targets_shapes():
    waves = np.stack([chirp(0.01, SMALL.sample_rate_hz)] * 2)
    targets = make_targets(waves, SMALL)
    frames = 80 // SMALL.frame_shift + 1
    assert targets.mel.shape == (2, frames, SMALL.mel_bins)
    assert targets.log_amp.shape == targets.phase.shape == (2, frames, SMALL.n_freq)
    assert np.all(targets.log_amp >= math.log(SMALL.amp_floor))


def test_split_keeps_one_training_utterance(small_dataset):
    (train_set, valid) = split(small_dataset, 0.9, seed=1)
    assert len(train_set) == 1 and len(valid) == 2
    assert split(small_dataset, 0.0, seed=1) == (small_dataset, None)


def test_loss_line_format():
    from objectives import LossReport
    line = format_loss_line(12, LossReport(0.1, 0.2, 0.3, 1.0, 2.0, 3.0, 4.5))
    assert line.split('\t') == ['12', '0.10000000000000001', '0.20000000000000001', '0.29999999999999999',
                                '1', '2', '3', '4.5']
    assert checkpoint_name(100) == 'ckpt_000100.fgv'


def test_training_is_deterministic(small_dataset, tiny_train_cfg, tmp_path):
    train(tiny_train_cfg, small_dataset, out_dir=tmp_path / 'a')
    train(tiny_train_cfg, small_dataset, out_dir=tmp_path / 'b')
    first = (tmp_path / 'a' / LOSS_LOG).read_bytes()
    assert first == (tmp_path / 'b' / LOSS_LOG).read_bytes()
    assert len(first.decode().splitlines()) == tiny_train_cfg.steps


def test_outputs(small_dataset, tiny_train_cfg, tmp_path):
    (ckpt, reports) = train(tiny_train_cfg, small_dataset, out_dir=tmp_path)
    assert ckpt.step == 10
    assert len(reports) == 10
    assert all(math.isfinite(r.total) for r in reports)
    assert (tmp_path / 'ckpt_000005.fgv').exists()
    assert (tmp_path / 'ckpt_000010.fgv').exists()
    lines = (tmp_path / LOSS_LOG).read_text().splitlines()
    assert [int(line.split('\t')[0]) for line in lines] == list(range(1, 11))
    assert all(len(line.split('\t')) == 8 for line in lines)


def test_resume_continues_the_same_run(small_dataset, tiny_train_cfg, tmp_path):
    train(tiny_train_cfg, small_dataset, out_dir=tmp_path / 'full')
    half = dataclasses.replace(tiny_train_cfg, steps=5)
    train(half, small_dataset, out_dir=tmp_path / 'resumed')
    resume = load_checkpoint(tmp_path / 'resumed' / 'ckpt_000005.fgv', tiny_train_cfg)
    assert resume.step == 5
    (ckpt, reports) = train(tiny_train_cfg, small_dataset, out_dir=tmp_path / 'resumed', resume=resume)
    assert len(reports) == 5
    full = (tmp_path / 'full' / LOSS_LOG).read_text()
    assert (tmp_path / 'resumed' / LOSS_LOG).read_text() == full
    final = load_checkpoint(tmp_path / 'full' / 'ckpt_000010.fgv')
    for (name, t) in ckpt.params.items():
        assert np.array_equal(t.value, final.params[name].value)


def test_resume_drops_steps_after_the_checkpoint(small_dataset, tiny_train_cfg, tmp_path):
    train(tiny_train_cfg, small_dataset, out_dir=tmp_path / 'full')
    crashed = dataclasses.replace(tiny_train_cfg, steps=8)
    train(crashed, small_dataset, out_dir=tmp_path / 'resumed')
    resume = load_checkpoint(tmp_path / 'resumed' / 'ckpt_000005.fgv', tiny_train_cfg)
    train(tiny_train_cfg, small_dataset, out_dir=tmp_path / 'resumed', resume=resume)
    lines = (tmp_path / 'resumed' / LOSS_LOG).read_text().splitlines()
    assert [int(line.split('\t')[0]) for line in lines] == list(range(1, 11))
    assert (tmp_path / 'resumed' / LOSS_LOG).read_text() == (tmp_path / 'full' / LOSS_LOG).read_text()


def test_resume_beyond_steps(small_dataset, tiny_train_cfg, tmp_path):
    (ckpt, _) = train(tiny_train_cfg, small_dataset)
    with pytest.raises(InvalidInput):
        Trainer(dataclasses.replace(tiny_train_cfg, steps=5), small_dataset, resume=ckpt)


def test_prefetch_matches_plain_run(small_dataset, tiny_train_cfg):
    (_, plain) = train(tiny_train_cfg, small_dataset)
    (_, prefetched) = train(dataclasses.replace(tiny_train_cfg, prefetch=True), small_dataset)
    assert plain == prefetched


@pytest.mark.parametrize('activation, prior, phase_loss', itertools.product(
    [Activation.SNAKE, Activation.GELU],
    [PriorKind.PSEUDO_INVERSE, PriorKind.LEARNABLE_LINEAR],
    [PhaseLossKind.FWAW, PhaseLossKind.UNWEIGHTED]))
def test_ablation_variants_train(activation, prior, phase_loss, small_dataset, tiny_train_cfg):
    cfg = dataclasses.replace(
        tiny_train_cfg, steps=50, checkpoint_every=50, log_every=50,
        model=dataclasses.replace(tiny_train_cfg.model, activation=activation, prior=prior),
        loss=LossConfig(phase_loss=phase_loss))
    (ckpt, reports) = train(cfg, small_dataset)
    assert ckpt.step == 50
    assert all(math.isfinite(v) for r in reports for v in r)


@pytest.mark.slow
def test_toy_set_overfits(tmp_path):
    import apvoc
    from app.audio import AudioFile, read_wav, write_wav
    from app.config import parse_config_file, TEMPLATE_FILE
    from dsp.mel import amplitude_prior, mel_filterbank, mel_spectrogram
    from dsp.stft import analyze
    from dsp.types import Domain, Spectrogram
    from metrics.objective import mcd, snr
    from model.predictors import Vocoder, predict_amplitude

    cfg = parse_config_file(TEMPLATE_FILE.parent / 'toy.cfg').build()
    spectral = cfg.spectral
    waves = [chirp(0.5, f0=100 + 15 * i, f1=250 + 10 * i) for i in range(10)]
    dataset = Dataset.from_waves(waves)
    (ckpt, reports) = train(cfg, dataset, out_dir=tmp_path / 'run')

    per_pass = math.ceil(dataset.total_samples / (cfg.batch_size * cfg.segment_samples))
    early = np.mean([r.total for r in reports[100 - per_pass:100]])
    late = np.mean([r.total for r in reports[-per_pass:]])
    assert late < 0.5 * early

    wave = waves[0]
    mel = mel_spectrogram(wave, spectral)
    prior = amplitude_prior(mel, mel_filterbank(spectral), spectral.amp_floor)
    log_amp = predict_amplitude(Spectrogram(np.log(prior.data), Domain.LOG_AMPLITUDE, spectral), ckpt.params)
    target = np.log(np.maximum(np.abs(analyze(wave, spectral)), spectral.amp_floor))
    assert np.mean(np.abs(log_amp.data - target)) < 0.5

    synthesized = Vocoder(ckpt.params).synthesize(mel)
    assert snr(wave, synthesized, spectral) > 5.0
    assert mcd(wave, synthesized, spectral) < 4.0

    write_wav(tmp_path / 'utt.wav', AudioFile(wave, spectral.sample_rate_hz))
    code = apvoc.main(['-q', 'copy-syn', '--checkpoint', str(tmp_path / 'run' / checkpoint_name(cfg.steps)),
                       '--input', str(tmp_path / 'utt.wav'), '--output', str(tmp_path / 'syn.wav')])
    assert code == 0
    assert snr(wave, read_wav(tmp_path / 'syn.wav').samples, spectral) > 5.0
