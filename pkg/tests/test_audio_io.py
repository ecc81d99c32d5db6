import numpy as np
import pytest
from scipy.io import wavfile

from labnet.audio_io import read_wav, write_wav
from labnet.errors import DatasetError, InvalidInputError


def test_float32_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    samples = rng.uniform(-1, 1, (500, 6)).astype(np.float32)
    path = tmp_path / "x.wav"
    write_wav(path, samples, 16000)
    back, rate = read_wav(path)
    assert rate == 16000
    np.testing.assert_array_equal(back, samples)


def test_int16_normalized_to_unit_range(tmp_path):
    path = tmp_path / "x.wav"
    data = np.array([[-32768, 16384], [32767, 0]], dtype=np.int16)
    wavfile.write(path, 16000, data)
    back, _ = read_wav(path)
    assert back.dtype == np.float32
    np.testing.assert_allclose(back, [[-1.0, 0.5], [32767 / 32768, 0.0]], atol=1e-9)
    assert back.min() >= -1.0 and back.max() < 1.0


def test_mono_files_get_channel_axis(tmp_path):
    path = tmp_path / "m.wav"
    write_wav(path, np.zeros(100, dtype=np.float32), 16000)
    back, _ = read_wav(path)
    assert back.shape == (100, 1)


def test_expected_rate_and_channels_enforced(tmp_path):
    path = tmp_path / "x.wav"
    write_wav(path, np.zeros((100, 2), dtype=np.float32), 8000)
    with pytest.raises(InvalidInputError):
        read_wav(path, expected_rate=16000)
    with pytest.raises(InvalidInputError):
        read_wav(path, expected_channels=6)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(DatasetError):
        read_wav(tmp_path / "none.wav")
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"RIFFgarbage")
    with pytest.raises(DatasetError):
        read_wav(bad)


def test_non_finite_samples_refused(tmp_path):
    with pytest.raises(InvalidInputError):
        write_wav(tmp_path / "x.wav", np.array([np.inf]), 16000)
