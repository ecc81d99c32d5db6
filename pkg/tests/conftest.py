import numpy as np
import pytest
import torch

from labnet.dsp import StftConfig
from labnet.model.config import ModelConfig
from labnet.spatial import ArrayGeometry, SpatialCodecConfig


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "smoke: long-running training smoke tests (acceptance 7 and 8)"
    )


@pytest.fixture(scope="session")
def micro_stft() -> StftConfig:
    # 16-point transform, 1 ms window, 50% hop: 40 samples -> 6 frames, 9 bins
    return StftConfig(fft_size=16, window_length_ms=1.0, hop_fraction=0.5)


@pytest.fixture(scope="session")
def micro_codec() -> SpatialCodecConfig:
    return SpatialCodecConfig(bins=4, theta_min_deg=-15.0, theta_step_deg=52.5,
                              sigma_deg=8.0, observers=2)


@pytest.fixture(scope="session")
def micro_geometry() -> ArrayGeometry:
    return ArrayGeometry(mic_positions=((0.0, 0.0), (0.28, 0.0)))


@pytest.fixture(scope="session")
def micro_model_cfg() -> ModelConfig:
    return ModelConfig(
        channels=2,
        crf_half_width=1,
        crf_rnn_hidden=8,
        crf_head_hidden=8,
        bf_rnn_hidden=8,
    )


@pytest.fixture
def torch_rng():
    gen = torch.Generator()
    gen.manual_seed(1234)
    return gen


@pytest.fixture
def np_rng():
    return np.random.default_rng(1234)
