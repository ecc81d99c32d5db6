from labnet.datagen.pipeline import (
    CorpusSourcePool,
    SyntheticSourcePool,
    bucket_counts,
    generate_example,
    generate_examples,
)
from labnet.datagen.render import DEFAULT_DURATION_S, MixtureExample, render_mixture
from labnet.datagen.rir import (
    FRACTIONAL_DELAY_TAPS,
    SPEED_OF_SOUND,
    rir_anechoic,
    scene_rirs,
)
from labnet.datagen.scene import (
    BUCKET_LABELS,
    RoomSpec,
    SceneConstraints,
    SceneMetadata,
    ScenePlacement,
    azimuth_bucket,
    mic_room_positions,
    sample_scene,
    scene_source_locations,
    to_array_frame,
    validate_placement,
)
from labnet.datagen.store import (
    ingest_rirs,
    read_dataset,
    read_example,
    read_manifest,
    write_dataset,
    write_rirs,
)
from labnet.datagen.synth import synthetic_utterance

__all__ = [
    "BUCKET_LABELS",
    "CorpusSourcePool",
    "DEFAULT_DURATION_S",
    "FRACTIONAL_DELAY_TAPS",
    "MixtureExample",
    "RoomSpec",
    "SPEED_OF_SOUND",
    "SceneConstraints",
    "SceneMetadata",
    "ScenePlacement",
    "SyntheticSourcePool",
    "azimuth_bucket",
    "bucket_counts",
    "generate_example",
    "generate_examples",
    "ingest_rirs",
    "mic_room_positions",
    "read_dataset",
    "read_example",
    "read_manifest",
    "render_mixture",
    "rir_anechoic",
    "sample_scene",
    "scene_rirs",
    "scene_source_locations",
    "synthetic_utterance",
    "to_array_frame",
    "validate_placement",
    "write_dataset",
    "write_rirs",
]
