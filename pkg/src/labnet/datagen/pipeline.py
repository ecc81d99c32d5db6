"""End-to-end example generation.

Each example derives its own generator from (master_seed, index), so
generation order does not matter and reruns are byte-identical.
"""

from __future__ import annotations

import os

import numpy as np

from labnet.audio_io import read_wav
from labnet.datagen.render import DEFAULT_DURATION_S, MixtureExample, render_mixture
from labnet.datagen.rir import FRACTIONAL_DELAY_TAPS, scene_rirs
from labnet.datagen.scene import SceneConstraints, sample_scene
from labnet.datagen.synth import synthetic_utterance
from labnet.errors import DatasetError
from labnet.spatial import ArrayGeometry


class SyntheticSourcePool:
    """Deterministic stand-in for a speech corpus."""

    def draw_pair(self, rng: np.random.Generator, num_samples: int, sample_rate: int):
        return (
            synthetic_utterance(rng, num_samples, sample_rate),
            synthetic_utterance(rng, num_samples, sample_rate),
        )


class CorpusSourcePool:
    """Dry material from ``<corpus>/<speaker>/*.wav``; the two sources of an
    example always come from different speakers. Short files are tiled."""

    def __init__(self, corpus_dir):
        self.corpus_dir = corpus_dir
        speakers = sorted(
            d for d in os.listdir(corpus_dir)
            if os.path.isdir(os.path.join(corpus_dir, d))
        )
        if len(speakers) < 2:
            raise DatasetError(
                f"corpus {corpus_dir} needs at least two speaker directories"
            )
        self.files = {}
        for spk in speakers:
            wavs = sorted(
                f for f in os.listdir(os.path.join(corpus_dir, spk))
                if f.lower().endswith(".wav")
            )
            if wavs:
                self.files[spk] = wavs
        if len(self.files) < 2:
            raise DatasetError(f"corpus {corpus_dir} has fewer than two non-empty speakers")
        self.speakers = sorted(self.files)

    def _load(self, speaker: str, name: str, num_samples: int, sample_rate: int):
        path = os.path.join(self.corpus_dir, speaker, name)
        samples, _ = read_wav(path, expected_rate=sample_rate)
        mono = samples.mean(axis=1).astype(np.float64)
        if mono.shape[0] < num_samples:
            reps = int(np.ceil(num_samples / mono.shape[0]))
            mono = np.tile(mono, reps)
        return mono[:num_samples]

    def draw_pair(self, rng: np.random.Generator, num_samples: int, sample_rate: int):
        a, b = rng.choice(len(self.speakers), size=2, replace=False)
        out = []
        for spk in (self.speakers[a], self.speakers[b]):
            name = self.files[spk][int(rng.integers(len(self.files[spk])))]
            out.append(self._load(spk, name, num_samples, sample_rate))
        return tuple(out)


def generate_example(
    master_seed: int,
    index: int,
    constraints: SceneConstraints,
    geometry: ArrayGeometry,
    source_pool,
    sample_rate: int = 16000,
    duration_s: float = DEFAULT_DURATION_S,
    id_prefix: str = "ex",
    stream: int = 0,
) -> MixtureExample:
    rng = np.random.default_rng((master_seed, stream, index))
    room, placement = sample_scene(rng, constraints, geometry)
    target = int(round(duration_s * sample_rate))
    # leave convolution headroom so the truncated render covers the duration
    dry_len = target + FRACTIONAL_DELAY_TAPS
    dry = source_pool.draw_pair(rng, dry_len, sample_rate)
    rirs = scene_rirs(placement, geometry, sample_rate)
    return render_mixture(
        room, placement, dry, rirs, geometry,
        sample_rate=sample_rate, duration_s=duration_s,
        example_id=f"{id_prefix}{index:05d}", seed=index,
    )


def generate_examples(
    master_seed: int,
    count: int,
    constraints: SceneConstraints = SceneConstraints(),
    geometry: ArrayGeometry | None = None,
    source_pool=None,
    sample_rate: int = 16000,
    duration_s: float = DEFAULT_DURATION_S,
    id_prefix: str = "ex",
    stream: int = 0,
):
    geometry = geometry or ArrayGeometry.linear()
    source_pool = source_pool or SyntheticSourcePool()
    for index in range(count):
        yield generate_example(
            master_seed, index, constraints, geometry, source_pool,
            sample_rate, duration_s, id_prefix, stream,
        )


def bucket_counts(metadatas) -> dict:
    counts = {}
    for meta in metadatas:
        counts[meta.bucket] = counts.get(meta.bucket, 0) + 1
    return counts
