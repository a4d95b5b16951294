"""The vocoder network: amplitude predictor, phase predictor and waveform head."""

from model.params import Activation, BlockParams, ModelConfig, ModelParams, PriorKind, init_params
from model.predictors import Prediction, Vocoder, forward, predict_amplitude, predict_phase, reconstruct
from model.complexity import count_flops, count_macs, count_params
