"""Run configuration: profiles, config files and override resolution.

A run configuration bundles every sub-config the pipeline needs. The
``paper`` profile carries the full-scale defaults; the ``desk`` profile keeps
the 6-microphone array and shrinks the network and angle grid so the whole
pipeline trains on a workstation CPU. Config files are JSON with one optional
section per field group; anything not listed falls back to the profile.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

from labnet.dsp import StftConfig
from labnet.errors import InvalidInputError
from labnet.model.config import ModelConfig
from labnet.objectives import LossWeights
from labnet.spatial import DEFAULT_MIC_SPACINGS, ArrayGeometry, SpatialCodecConfig
from labnet.datagen.scene import SceneConstraints

PROFILES = ("desk", "paper")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 4
    learning_rate: float = 1e-4
    warmup_epochs: int = 1
    grad_clip_norm: float = 3.0
    epochs: int = 40
    loss_weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    max_steps: int | None = None
    device: str = "cpu"

    def __post_init__(self):
        if self.batch_size <= 0 or self.epochs <= 0:
            raise InvalidInputError("batch_size and epochs must be positive")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0:
            raise InvalidInputError("learning_rate and grad_clip_norm must be positive")
        if self.warmup_epochs < 0:
            raise InvalidInputError("warmup_epochs must be >= 0")
        if self.max_steps is not None and self.max_steps <= 0:
            raise InvalidInputError("max_steps must be positive when set")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "warmup_epochs": self.warmup_epochs,
            "grad_clip_norm": self.grad_clip_norm,
            "epochs": self.epochs,
            "loss_schedule": [list(iv) for iv in self.loss_weights.schedule],
            "seed": self.seed,
            "max_steps": self.max_steps,
            "device": self.device,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        schedule = d.pop("loss_schedule", None)
        weights = (
            LossWeights(schedule=tuple(tuple(iv) for iv in schedule))
            if schedule is not None
            else LossWeights()
        )
        return cls(loss_weights=weights, **d)


@dataclass(frozen=True)
class DataConfig:
    train_count: int = 32
    val_count: int = 8
    test_count: int = 8
    duration_s: float = 4.0
    corpus_dir: str | None = None
    constraints: SceneConstraints = field(default_factory=SceneConstraints)

    def to_dict(self) -> dict:
        return {
            "train_count": self.train_count,
            "val_count": self.val_count,
            "test_count": self.test_count,
            "duration_s": self.duration_s,
            "corpus_dir": self.corpus_dir,
            "constraints": self.constraints.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DataConfig":
        d = dict(d)
        constraints = d.pop("constraints", None)
        return cls(
            constraints=SceneConstraints.from_dict(constraints) if constraints else SceneConstraints(),
            **d,
        )


@dataclass(frozen=True)
class RunConfig:
    profile: str = "desk"
    sample_rate: int = 16000
    stft: StftConfig = field(default_factory=StftConfig)
    codec: SpatialCodecConfig = field(default_factory=SpatialCodecConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    mic_spacings: tuple = DEFAULT_MIC_SPACINGS
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.linear(self.mic_spacings)

    def build_model(self, seed: int | None = None):
        from labnet.model.net import build_model

        return build_model(
            self.model, self.stft, self.codec, self.geometry,
            seed=self.train.seed if seed is None else seed,
            sample_rate=self.sample_rate,
        )

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "sample_rate": self.sample_rate,
            "stft": self.stft.to_dict(),
            "codec": self.codec.to_dict(),
            "model": self.model.to_dict(),
            "mic_spacings": list(self.mic_spacings),
            "train": self.train.to_dict(),
            "data": self.data.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            profile=d.get("profile", "desk"),
            sample_rate=d.get("sample_rate", 16000),
            stft=StftConfig.from_dict(d["stft"]),
            codec=SpatialCodecConfig.from_dict(d["codec"]),
            model=ModelConfig.from_dict(d["model"]),
            mic_spacings=tuple(d.get("mic_spacings", DEFAULT_MIC_SPACINGS)),
            train=TrainConfig.from_dict(d["train"]),
            data=DataConfig.from_dict(d["data"]),
        )


def paper_profile() -> RunConfig:
    return RunConfig(
        profile="paper",
        stft=StftConfig(fft_size=512, window="hamming", window_length_ms=32.0, hop_fraction=0.5),
        codec=SpatialCodecConfig(bins=210, theta_min_deg=-15.0, theta_step_deg=1.0,
                                 sigma_deg=8.0, observers=2),
        model=ModelConfig(),
        train=TrainConfig(),
        data=DataConfig(train_count=40000, val_count=5000, test_count=3000),
    )


def desk_profile() -> RunConfig:
    return RunConfig(
        profile="desk",
        stft=StftConfig(fft_size=512, window="hamming", window_length_ms=32.0, hop_fraction=0.5),
        codec=SpatialCodecConfig(bins=21, theta_min_deg=-15.0, theta_step_deg=10.0,
                                 sigma_deg=8.0, observers=2),
        model=ModelConfig(
            crf_half_width=0,
            crf_rnn_hidden=32,
            crf_head_hidden=32,
            bf_rnn_hidden=16,
        ),
        train=TrainConfig(),
        data=DataConfig(train_count=32, val_count=8, test_count=8),
    )


def profile_config(name: str) -> RunConfig:
    if name == "paper":
        return paper_profile()
    if name == "desk":
        return desk_profile()
    raise InvalidInputError(f"unknown profile {name!r}; choose from {PROFILES}")


def _apply_width_multiplier(model_cfg: ModelConfig, multiplier: float) -> ModelConfig:
    if multiplier <= 0:
        raise InvalidInputError("width_multiplier must be positive")
    if multiplier == 1.0:
        return model_cfg
    scale = lambda width: max(4, int(round(width * multiplier)))
    return replace(
        model_cfg,
        crf_rnn_hidden=scale(model_cfg.crf_rnn_hidden),
        crf_head_hidden=scale(model_cfg.crf_head_hidden),
        bf_rnn_hidden=scale(model_cfg.bf_rnn_hidden),
    )


def load_run_config(
    path=None,
    profile: str | None = None,
    seed: int | None = None,
) -> RunConfig:
    """Resolve profile defaults, then config-file sections, then overrides."""
    raw = {}
    if path is not None:
        if not os.path.exists(path):
            raise InvalidInputError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except ValueError as exc:
                raise InvalidInputError(f"malformed config file {path}: {exc}") from exc
    base = profile_config(profile or raw.get("profile", "desk"))

    stft = replace(base.stft, **raw.get("stft", {}))
    codec = replace(base.codec, **raw.get("codec", {}))
    model_section = dict(raw.get("model", {}))
    multiplier = model_section.pop("width_multiplier", 1.0)
    model = _apply_width_multiplier(replace(base.model, **model_section), multiplier)

    train_section = dict(raw.get("train", {}))
    schedule = train_section.pop("loss_schedule", None)
    train = replace(base.train, **train_section)
    if schedule is not None:
        train = replace(train, loss_weights=LossWeights(tuple(tuple(iv) for iv in schedule)))
    if seed is not None:
        train = replace(train, seed=seed)

    data_section = dict(raw.get("data", {}))
    constraints_section = data_section.pop("constraints", None)
    data = replace(base.data, **data_section)
    if constraints_section is not None:
        data = replace(
            data,
            constraints=SceneConstraints.from_dict(
                {**base.data.constraints.to_dict(), **constraints_section}
            ),
        )

    return RunConfig(
        profile=base.profile,
        sample_rate=raw.get("sample_rate", base.sample_rate),
        stft=stft,
        codec=codec,
        model=model,
        mic_spacings=tuple(raw.get("mic_spacings", base.mic_spacings)),
        train=train,
        data=data,
    )
