from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
import numpy as np
import pytest

from dsp.config import DEFAULT, SpectralConfig
from dsp.mel import amplitude_prior, hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, pseudo_inverse
from dsp.stft import stft
from dsp.types import Domain, Spectrogram
from errors import ConfigError, DomainError, ShapeError
from tests.helpers import chirp


def test_filterbank_shapes():
    filt = mel_filterbank(DEFAULT)
    assert filt.forward.shape == (513, 80)
    assert filt.pseudo_inverse.shape == (80, 513)
    assert filt.mel_bins == 80


def test_filters_are_unit_peak_triangles():
    forward = mel_filterbank(DEFAULT).forward
    assert np.all(forward >= 0)
    assert np.all(forward.max(axis=0) <= 1.0)
    assert np.all(forward.max(axis=0) > 0)
    centres = np.argmax(forward, axis=0)
    assert np.all(np.diff(centres) >= 0)


def test_pseudo_inverse_properties():
    assert np.allclose(pseudo_inverse(np.eye(5)), np.eye(5))
    filt = mel_filterbank(DEFAULT)
    M, Mp = filt.forward, filt.pseudo_inverse
    assert np.allclose(M @ Mp @ M, M, atol=1e-8)
    assert np.allclose(Mp @ M @ Mp, Mp, atol=1e-6)


def test_mel_scale_round_trip():
    hz = np.array([0.0, 100.0, 1000.0, 8000.0])
    assert np.allclose(mel_to_hz(hz_to_mel(hz)), hz)
    assert hz_to_mel(1000.0) == pytest.approx(1000.0, abs=0.5)


def test_too_many_mel_bins():
    with pytest.raises(ConfigError):
        mel_filterbank(SpectralConfig(mel_bins=600))


def test_filter_without_bins_is_rejected():
    # 250 Hz bins cannot resolve 30 filters at low frequencies.
    with pytest.raises(ConfigError):
        mel_filterbank(SpectralConfig(frame_len=64, frame_shift=16, fft_size=64, mel_bins=30))


def test_silence_gives_floor():
    mel = mel_spectrogram(np.zeros(1600), DEFAULT)
    assert mel.domain == Domain.MEL
    assert np.all(mel.data == DEFAULT.amp_floor)


def test_noise_shape(rng):
    mel = mel_spectrogram(rng.standard_normal(16000), DEFAULT)
    assert mel.data.shape == (201, 80)


@pytest.mark.parametrize('seed', range(10))
def test_mel_grows_with_amplitude(seed):
    x = 0.1 * np.random.Generator(np.random.Philox(key=seed)).standard_normal(4000)
    quiet = mel_spectrogram(x, DEFAULT).data
    loud = mel_spectrogram(2 * x, DEFAULT).data
    assert np.all(loud >= quiet)


def test_prior_of_zero_mel_is_eps():
    filt = mel_filterbank(DEFAULT)
    prior = amplitude_prior(Spectrogram(np.zeros((4, 80)), Domain.MEL), filt, 1e-5)
    assert prior.domain == Domain.AMPLITUDE
    assert prior.data.shape == (4, 513)
    assert np.all(prior.data == 1e-5)


def test_prior_is_floored(rng):
    filt = mel_filterbank(DEFAULT)
    X = Spectrogram(rng.standard_normal((6, 80)), Domain.MEL)
    assert amplitude_prior(X, filt, 1e-5).data.min() >= 1e-5


def test_prior_tracks_true_amplitude():
    x = chirp(1.0)
    filt = mel_filterbank(DEFAULT)
    prior = amplitude_prior(mel_spectrogram(x, DEFAULT), filt, 1e-5)
    (amplitude, _) = stft(x, DEFAULT)
    r = np.corrcoef(prior.data.ravel(), amplitude.data.ravel())[0, 1]
    assert r > 0.9


def test_prior_errors():
    filt = mel_filterbank(DEFAULT)
    with pytest.raises(DomainError):
        amplitude_prior(Spectrogram(np.zeros((2, 513)), Domain.PHASE), filt, 1e-5)
    small = SpectralConfig(mel_bins=40)
    with pytest.raises(ShapeError):
        amplitude_prior(Spectrogram(np.zeros((2, 40)), Domain.MEL, small), filt, 1e-5)


@settings(deadline=None, max_examples=50)
@given(arrays(np.float64, (3, 80), elements=st.floats(-1e3, 1e3)))
def test_prior_floor_holds_for_any_mel(data):
    prior = amplitude_prior(Spectrogram(data, Domain.MEL), mel_filterbank(DEFAULT), 1e-5)
    assert prior.data.min() >= 1e-5
