"""Mixture rendering: dry signals convolved with per-source responses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from labnet.datagen.scene import (
    RoomSpec,
    SceneMetadata,
    ScenePlacement,
    azimuth_bucket,
    scene_source_locations,
)
from labnet.dsp import AudioSegment
from labnet.errors import InvalidInputError
from labnet.spatial import ArrayGeometry

DEFAULT_DURATION_S = 4.0


@dataclass
class MixtureExample:
    """One rendered scene: the 6-channel mixture, the two reverberant
    single-source references and the full scene metadata. The mixture is the
    sample-exact float32 sum of the references."""

    mixture: AudioSegment
    references: tuple  # two AudioSegment of the same shape
    metadata: SceneMetadata

    @property
    def example_id(self) -> str:
        return self.metadata.example_id


def render_mixture(
    room: RoomSpec,
    placement: ScenePlacement,
    dry_signals,
    rirs,
    geometry: ArrayGeometry,
    sample_rate: int = 16000,
    duration_s: float = DEFAULT_DURATION_S,
    example_id: str = "",
    seed: int = 0,
) -> MixtureExample:
    """Convolve, truncate to the target duration and normalize on clipping.

    Arguments:
        dry_signals: two single-channel arrays [L_dry]
        rirs: two response stacks [M, L_rir]
    Peaks beyond full scale rescale the mixture and both references by the
    same factor, recorded in the metadata.
    """
    if len(dry_signals) != 2 or len(rirs) != 2:
        raise InvalidInputError("rendering expects exactly two sources")
    target = int(round(duration_s * sample_rate))
    refs = []
    for dry, rir in zip(dry_signals, rirs):
        dry = np.asarray(dry, dtype=np.float64)
        if dry.ndim != 1:
            raise InvalidInputError("dry signals must be single-channel")
        rir = np.asarray(rir, dtype=np.float64)
        out_len = dry.shape[0] + rir.shape[1] - 1
        if out_len < target:
            raise InvalidInputError(
                f"dry signal too short: {out_len} convolved samples < {target}"
            )
        ref = np.stack(
            [fftconvolve(dry, rir[m])[:target] for m in range(rir.shape[0])], axis=1
        )
        refs.append(ref)

    peak = np.abs(refs[0] + refs[1]).max()
    gain = 1.0 / peak if peak > 1.0 else 1.0
    refs32 = [np.asarray(r * gain, dtype=np.float32) for r in refs]
    mixture32 = refs32[0] + refs32[1]

    locations = scene_source_locations(placement, geometry)
    diff = abs(locations[0].doa_centroid - locations[1].doa_centroid)
    metadata = SceneMetadata(
        room=room,
        placement=placement,
        source_locations=locations,
        bucket=azimuth_bucket(diff),
        seed=seed,
        normalization=gain,
        example_id=example_id,
    )
    return MixtureExample(
        mixture=AudioSegment(mixture32, sample_rate),
        references=tuple(AudioSegment(r, sample_rate) for r in refs32),
        metadata=metadata,
    )
