"""Synthetic single-speaker source material.

Stands in for a speech corpus when none is supplied: harmonic tones with a
wandering fundamental, syllable-rate amplitude gating and a weak noise floor.
Deterministic for a fixed generator state.
"""

from __future__ import annotations

import numpy as np


def synthetic_utterance(rng: np.random.Generator, num_samples: int, sample_rate: int) -> np.ndarray:
    t = np.arange(num_samples) / sample_rate
    f0 = rng.uniform(90.0, 240.0)
    vibrato = 1.0 + 0.03 * np.sin(2 * np.pi * rng.uniform(3.0, 7.0) * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0 * vibrato) / sample_rate

    voiced = np.zeros(num_samples)
    for k in range(1, 11):
        if k * f0 > 0.45 * sample_rate:
            break
        voiced += rng.uniform(0.5, 1.0) / k * np.sin(k * phase + rng.uniform(0, 2 * np.pi))

    # syllable-rate gate: smoothed random telegraph with duty around 70%
    gate_rate = rng.uniform(2.0, 5.0)
    edges = np.sort(rng.uniform(0, t[-1], max(2, int(gate_rate * t[-1]))))
    gate = np.ones(num_samples)
    state = True
    prev = 0.0
    for e in edges:
        i0, i1 = int(prev * sample_rate), int(e * sample_rate)
        gate[i0:i1] = 1.0 if state else 0.15
        state = not state or rng.uniform() < 0.4
        prev = e
    kernel = np.hanning(int(0.03 * sample_rate) | 1)
    gate = np.convolve(gate, kernel / kernel.sum(), mode="same")

    noise = rng.standard_normal(num_samples)
    noise = np.convolve(noise, np.ones(8) / 8.0, mode="same")

    x = gate * voiced + 0.05 * noise
    rms = np.sqrt(np.mean(x * x))
    return 0.08 * x / max(rms, 1e-9)
