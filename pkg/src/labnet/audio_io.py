"""RIFF WAV reading and writing.

Files are 16 kHz interleaved multichannel, either 16-bit integer or 32-bit
float. Integer samples are normalized to [-1, 1) on load; float samples are
passed through untouched so write/read round trips are bit exact.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.io import wavfile

from labnet.errors import DatasetError, InvalidInputError


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float32 samples of shape [L] or [L, M]."""
    arr = np.asarray(samples)
    if arr.ndim not in (1, 2):
        raise InvalidInputError(f"samples must be [L] or [L, M], got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidInputError("refusing to write non-finite samples")
    wavfile.write(path, int(sample_rate), arr.astype(np.float32, copy=False))


def read_wav(
    path,
    expected_rate: int | None = None,
    expected_channels: int | None = None,
) -> tuple[np.ndarray, int]:
    """Load a WAV file as float32 [L, M].

    Raises DatasetError for missing or malformed files and InvalidInputError
    when the file does not match the expected rate or channel count.
    """
    if not os.path.exists(path):
        raise DatasetError(f"audio file not found: {path}")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:  # scipy raises bare ValueError on malformed RIFF
        raise DatasetError(f"failed to parse WAV file {path}: {exc}") from exc
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype == np.float32:
        samples = data
    elif data.dtype == np.float64:
        samples = data.astype(np.float32)
    else:
        raise DatasetError(f"unsupported WAV sample format {data.dtype} in {path}")
    if samples.ndim == 1:
        samples = samples[:, None]
    if expected_rate is not None and rate != expected_rate:
        raise InvalidInputError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz")
    if expected_channels is not None and samples.shape[1] != expected_channels:
        raise InvalidInputError(
            f"{path}: {samples.shape[1]} channels, expected {expected_channels}"
        )
    return samples, rate
