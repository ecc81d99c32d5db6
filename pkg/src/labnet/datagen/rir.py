"""Impulse-response provisioning.

The built-in provider is anechoic: one windowed-sinc fractional-delay pulse
per microphone at delay r / c with 1 / max(r, 0.1) attenuation. Reverberant
responses simulated elsewhere enter through :func:`labnet.datagen.store.ingest_rirs`.
"""

from __future__ import annotations

import numpy as np

from labnet.datagen.scene import ScenePlacement, mic_room_positions
from labnet.errors import InvalidInputError
from labnet.spatial import ArrayGeometry

SPEED_OF_SOUND = 343.0  # m/s
FRACTIONAL_DELAY_TAPS = 81


def _hann_taps(taps: int) -> np.ndarray:
    n = np.arange(taps)
    return 0.5 - 0.5 * np.cos(2 * np.pi * n / (taps - 1))


def rir_anechoic(
    source_position,
    mic_positions: np.ndarray,
    sample_rate: int,
    taps: int = FRACTIONAL_DELAY_TAPS,
) -> np.ndarray:
    """Anechoic impulse responses, [M, length].

    Arguments:
        source_position: (x, y, z) meters
        mic_positions: [M, 3] meters
    The pulse for a microphone at distance r peaks at r / c * fs samples.
    """
    src = np.asarray(source_position, dtype=np.float64)
    mics = np.asarray(mic_positions, dtype=np.float64)
    if mics.ndim != 2 or mics.shape[1] != 3 or src.shape != (3,):
        raise InvalidInputError("positions must be (3,) and [M, 3]")
    dist = np.linalg.norm(mics - src, axis=1)
    delays = dist / SPEED_OF_SOUND * sample_rate
    half = taps // 2
    length = int(np.ceil(delays.max())) + half + 1
    out = np.zeros((mics.shape[0], length))
    idx = np.arange(taps)
    for m, (delay, r) in enumerate(zip(delays, dist)):
        start = int(round(delay)) - half
        n = start + idx
        keep = n >= 0
        kernel = np.sinc(n - delay) * _hann_taps(taps)
        out[m, n[keep]] = kernel[keep] / max(r, 0.1)
    return out


def scene_rirs(
    placement: ScenePlacement,
    geometry: ArrayGeometry,
    sample_rate: int,
) -> list[np.ndarray]:
    """Anechoic responses for every source of a placement, one [M, L] per source."""
    mics = mic_room_positions(placement, geometry)
    return [rir_anechoic(pos, mics, sample_rate) for pos in placement.source_positions]
