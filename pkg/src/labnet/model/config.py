"""Trainable-model hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass

from labnet.errors import InvalidInputError


@dataclass(frozen=True)
class ModelConfig:
    """Sizes and switches for the separation network.

    ``crf_half_width`` is the K of a (2K+1) x (2K+1) filter neighborhood.
    The locator's recurrent width is tied to the codec (bins * observers) and
    is not listed here. With ``use_locator`` false the network reduces to the
    covariance-only recurrent beamformer baseline.
    """

    channels: int = 6
    sources: int = 2
    crf_half_width: int = 1
    crf_rnn_layers: int = 2
    crf_rnn_hidden: int = 500
    crf_head_hidden: int = 500
    doa_rnn_layers: int = 2
    bf_rnn_layers: int = 2
    bf_rnn_hidden: int = 300
    use_locator: bool = True
    use_direction_embedding: bool = True
    use_location_embedding: bool = True
    locator_stop_gradient: bool = False

    def __post_init__(self):
        if self.channels < 2:
            raise InvalidInputError("model needs at least two channels")
        if self.sources != 2:
            raise InvalidInputError("only two-source separation is supported")
        if self.crf_half_width < 0:
            raise InvalidInputError("crf_half_width must be >= 0")
        for name in ("crf_rnn_layers", "crf_rnn_hidden", "crf_head_hidden",
                     "doa_rnn_layers", "bf_rnn_layers", "bf_rnn_hidden"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if not self.use_locator and (self.use_direction_embedding or self.use_location_embedding):
            raise InvalidInputError("embeddings require the locator to be enabled")

    @property
    def filter_taps(self) -> int:
        side = 2 * self.crf_half_width + 1
        return side * side

    @property
    def branches(self) -> int:
        return 2  # target speech and interference

    def crf_output_dim(self, freq_bins: int) -> int:
        """Head width per frame: F * sources * branches * M * taps * (re, im)."""
        return freq_bins * self.sources * self.branches * self.channels * self.filter_taps * 2

    def beamformer_input_dim(self, spectrum_width: int) -> int:
        """Per T-F feature width seen by each beamformer."""
        dim = 4 * self.channels * self.channels
        if self.use_direction_embedding:
            dim += spectrum_width
        if self.use_location_embedding:
            dim += 2
        return dim

    def to_dict(self) -> dict:
        return {
            "channels": self.channels,
            "sources": self.sources,
            "crf_half_width": self.crf_half_width,
            "crf_rnn_layers": self.crf_rnn_layers,
            "crf_rnn_hidden": self.crf_rnn_hidden,
            "crf_head_hidden": self.crf_head_hidden,
            "doa_rnn_layers": self.doa_rnn_layers,
            "bf_rnn_layers": self.bf_rnn_layers,
            "bf_rnn_hidden": self.bf_rnn_hidden,
            "use_locator": self.use_locator,
            "use_direction_embedding": self.use_direction_embedding,
            "use_location_embedding": self.use_location_embedding,
            "locator_stop_gradient": self.locator_stop_gradient,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)
