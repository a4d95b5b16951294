import numpy as np
import pytest

from autodiff import Tensor, ops
from autodiff.gradcheck import gradcheck
from autodiff.spectral import istft, stft
from dsp.stft import analyze, synthesize
from errors import InvalidInput, ShapeError
from tests.helpers import SMALL


def projection(shape, seed):
    return np.random.Generator(np.random.Philox(key=seed)).standard_normal(shape)


@pytest.mark.parametrize('center', [True, False])
def test_stft_matches_dsp(center, rng):
    wave = rng.standard_normal((2, 40))
    (real, imag) = stft(wave, SMALL, center=center)
    spec = analyze(wave, SMALL, center=center)
    assert np.array_equal(real.value, spec.real)
    assert np.array_equal(imag.value, spec.imag)


@pytest.mark.parametrize('center', [True, False])
def test_stft_gradient(center, rng):
    wave = rng.standard_normal(24)
    shape = stft(wave, SMALL, center=center)[0].shape
    (R1, R2) = projection(shape, 1), projection(shape, 2)

    def loss(w):
        (re, im) = stft(w, SMALL, center=center)
        return ops.sum(re * R1) + ops.sum(im * R2)

    assert gradcheck(loss, wave) < 1e-6


@pytest.mark.parametrize('center', [True, False])
def test_istft_gradient(center, rng):
    (re, im) = (rng.standard_normal((5, SMALL.n_freq)), rng.standard_normal((5, SMALL.n_freq)))
    length = istft(re, im, SMALL, center=center).shape[-1]
    R = projection(length, 3)
    assert gradcheck(lambda a, b: ops.sum(istft(a, b, SMALL, center=center) * R), re, im) < 1e-6


def test_istft_inverts_stft(rng):
    wave = rng.standard_normal(40)
    (re, im) = stft(wave, SMALL)
    out = istft(re, im, SMALL).value
    assert np.allclose(out[:40], wave, atol=1e-10)
    assert np.array_equal(out, synthesize(re.value + 1j * im.value, SMALL))


def test_gradient_flows_through_round_trip(rng):
    wave = Tensor(rng.standard_normal(32), requires_grad=True)
    (re, im) = stft(wave, SMALL)
    ops.sum(ops.square(istft(re, im, SMALL))).backward()
    assert np.any(wave.gradient() != 0)


def test_errors():
    with pytest.raises(InvalidInput):
        stft(np.zeros(SMALL.pad), SMALL)
    with pytest.raises(ShapeError):
        istft(np.zeros((3, SMALL.n_freq)), np.zeros((4, SMALL.n_freq)), SMALL)
