"""Dataset persistence and reverberant-response ingestion.

Layout per split: ``<root>/<split>/<id>.mix.wav``, ``<id>.src0.wav``,
``<id>.src1.wav`` and one ``manifest.jsonl`` line per example. Audio is
32-bit float so write/read round trips are bit exact.

Ingestion format for externally simulated responses: a directory holding
``rir.src0.wav`` and ``rir.src1.wav`` (float32, one channel per microphone)
plus ``rir.json`` with sample_rate, channel_count, mic_positions and
source_positions for the geometry cross-check.
"""

from __future__ import annotations

import json
import os

import numpy as np

from labnet.audio_io import read_wav, write_wav
from labnet.datagen.render import MixtureExample
from labnet.datagen.scene import SceneMetadata, ScenePlacement, mic_room_positions
from labnet.dsp import AudioSegment
from labnet.errors import DatasetError, GeometryMismatchError
from labnet.spatial import ArrayGeometry

MANIFEST_NAME = "manifest.jsonl"


def _split_dir(root, split: str) -> str:
    return os.path.join(root, split)


def write_dataset(examples, root, split: str = "train", append: bool = False) -> int:
    """Persist examples; returns the number written.

    Refuses to touch a split that already has a manifest unless ``append``
    is set, so an interrupted run cannot be silently extended.
    """
    directory = _split_dir(root, split)
    os.makedirs(directory, exist_ok=True)
    manifest = os.path.join(directory, MANIFEST_NAME)
    if os.path.exists(manifest) and not append:
        raise DatasetError(
            f"split {split!r} already has a manifest at {manifest}; "
            "pass append=True to extend it"
        )
    count = 0
    with open(manifest, "a" if append else "w", encoding="utf-8") as fh:
        for ex in examples:
            eid = ex.metadata.example_id
            if not eid:
                raise DatasetError("examples must carry a non-empty example_id")
            rate = ex.mixture.sample_rate
            write_wav(os.path.join(directory, f"{eid}.mix.wav"), ex.mixture.numpy(), rate)
            for i, ref in enumerate(ex.references):
                write_wav(os.path.join(directory, f"{eid}.src{i}.wav"), ref.numpy(), rate)
            fh.write(json.dumps(ex.metadata.to_dict(), sort_keys=True) + "\n")
            count += 1
    return count


def read_manifest(root, split: str = "train") -> list[SceneMetadata]:
    manifest = os.path.join(_split_dir(root, split), MANIFEST_NAME)
    if not os.path.exists(manifest):
        raise DatasetError(f"manifest not found: {manifest}")
    records = []
    with open(manifest, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(SceneMetadata.from_dict(json.loads(line)))
            except (KeyError, ValueError) as exc:
                raise DatasetError(f"{manifest}:{line_no}: malformed record: {exc}") from exc
    return records


def read_example(root, split: str, metadata: SceneMetadata, sample_rate: int = 16000) -> MixtureExample:
    directory = _split_dir(root, split)
    eid = metadata.example_id
    mix, rate = read_wav(os.path.join(directory, f"{eid}.mix.wav"), expected_rate=sample_rate)
    refs = []
    for i in range(2):
        ref, _ = read_wav(os.path.join(directory, f"{eid}.src{i}.wav"), expected_rate=sample_rate)
        if ref.shape != mix.shape:
            raise DatasetError(f"{eid}: reference {i} shape {ref.shape} != mixture {mix.shape}")
        refs.append(ref)
    return MixtureExample(
        mixture=AudioSegment(mix, rate),
        references=tuple(AudioSegment(r, rate) for r in refs),
        metadata=metadata,
    )


def read_dataset(root, split: str = "train", sample_rate: int = 16000) -> list[MixtureExample]:
    """Load a whole split into memory."""
    return [
        read_example(root, split, meta, sample_rate) for meta in read_manifest(root, split)
    ]


RIR_SIDECAR = "rir.json"


def write_rirs(directory, rirs, placement: ScenePlacement, geometry: ArrayGeometry,
               sample_rate: int = 16000) -> None:
    """Persist per-source responses with their geometry sidecar."""
    os.makedirs(directory, exist_ok=True)
    mics = mic_room_positions(placement, geometry)
    for i, rir in enumerate(rirs):
        write_wav(os.path.join(directory, f"rir.src{i}.wav"),
                  np.asarray(rir, dtype=np.float32).T, sample_rate)
    sidecar = {
        "sample_rate": sample_rate,
        "channel_count": int(mics.shape[0]),
        "mic_positions": mics.tolist(),
        "source_positions": [list(p) for p in placement.source_positions],
    }
    with open(os.path.join(directory, RIR_SIDECAR), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True)


def ingest_rirs(
    directory,
    placement: ScenePlacement | None = None,
    geometry: ArrayGeometry | None = None,
    sample_rate: int = 16000,
    position_tol: float = 1e-6,
) -> list[np.ndarray]:
    """Load externally simulated responses, cross-checking their geometry.

    Returns one [M, L] array per source. Raises GeometryMismatchError when
    the sidecar disagrees with the expected scene or array.
    """
    sidecar_path = os.path.join(directory, RIR_SIDECAR)
    if not os.path.exists(sidecar_path):
        raise DatasetError(f"missing response sidecar: {sidecar_path}")
    try:
        with open(sidecar_path, encoding="utf-8") as fh:
            sidecar = json.load(fh)
        channel_count = int(sidecar["channel_count"])
        rate = int(sidecar["sample_rate"])
        source_positions = np.asarray(sidecar["source_positions"], dtype=np.float64)
        mic_positions = np.asarray(sidecar["mic_positions"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed response sidecar {sidecar_path}: {exc}") from exc

    if rate != sample_rate:
        raise DatasetError(
            f"{directory}: responses sampled at {rate} Hz, expected {sample_rate} Hz"
        )
    if geometry is not None and channel_count != geometry.channel_count:
        raise GeometryMismatchError(
            f"{directory}: {channel_count} channels, expected {geometry.channel_count}"
        )
    if placement is not None and geometry is not None:
        expected_mics = mic_room_positions(placement, geometry)
        if mic_positions.shape != expected_mics.shape or np.max(
            np.abs(mic_positions - expected_mics)
        ) > position_tol:
            raise GeometryMismatchError(f"{directory}: microphone positions do not match scene")
        expected_src = np.asarray(placement.source_positions, dtype=np.float64)
        if source_positions.shape != expected_src.shape or np.max(
            np.abs(source_positions - expected_src)
        ) > position_tol:
            raise GeometryMismatchError(f"{directory}: source positions do not match scene")

    rirs = []
    for i in range(source_positions.shape[0]):
        samples, _ = read_wav(os.path.join(directory, f"rir.src{i}.wav"), expected_rate=rate)
        if samples.shape[1] != channel_count:
            raise GeometryMismatchError(
                f"{directory}: rir.src{i}.wav has {samples.shape[1]} channels, "
                f"sidecar says {channel_count}"
            )
        rirs.append(samples.T.astype(np.float64))
    return rirs
