import pytest

from dsp.config import DEFAULT
from model import ModelConfig, ModelParams, count_flops, count_macs, count_params
from model.complexity import conv_flops, frames_for, layer_macs
from tests.helpers import SMALL, TINY_MODEL


@pytest.fixture(scope='module')
def default_params():
    return ModelParams.init(ModelConfig(), DEFAULT)


def test_pointwise_convention():
    assert conv_flops(1, 1, 1, 100) == 200
    assert conv_flops(1, 1, 1, 100, per_mac=1) == 100
    assert conv_flops(4, 4, 7, 10, depthwise=True) == 2 * 4 * 7 * 10


def test_frames_for():
    assert frames_for(1.0, DEFAULT) == 200
    assert frames_for(0.001, DEFAULT) == 1


def test_default_parameter_budget(default_params):
    assert 10_700_000 <= count_params(default_params) <= 16_100_000
    assert abs(count_params(default_params) - 13_400_000) <= 0.2 * 13_400_000


def test_default_operation_budget(default_params):
    macs = count_macs(default_params, 1.0)
    assert 2_160_000_000 <= count_flops(default_params, 1.0, per_mac=1) <= 3_240_000_000
    assert count_flops(default_params, 1.0) == 2 * macs


def test_layer_macs_cover_every_weight():
    params = ModelParams.init(TINY_MODEL, SMALL)
    layers = dict(layer_macs(params))
    assert layers['prior.pinv'] == SMALL.mel_bins * SMALL.n_freq
    assert layers['amp.in'] == TINY_MODEL.channels * SMALL.n_freq
    assert layers['phase.blocks.0.dw'] == TINY_MODEL.channels * TINY_MODEL.kernel
    weights = [n for n in params if n.endswith('.weight')]
    assert len(layers) == len(weights) + 1


def test_count_params_sums_sizes():
    params = ModelParams.init(TINY_MODEL, SMALL)
    assert count_params(params) == sum(v.size for v in params.arrays().values())
