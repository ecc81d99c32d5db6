"""Full separation network: filter estimator, covariance coding, locator and
location-aware beamformers composed end to end."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn

from labnet.dsp import (
    AudioSegment,
    StftConfig,
    istft_tensor,
    magnitude_and_cos_ipd,
    stft_tensor,
)
from labnet.errors import InvalidInputError
from labnet.model.blocks import (
    Beamformer,
    CovarianceEncoder,
    CrfEstimator,
    DoaEstimator,
    init_recurrent_orthogonal,
)
from labnet.model.config import ModelConfig
from labnet.model.ops import apply_beamforming, apply_crf
from labnet.spatial import (
    EPS_PARALLEL_DEG,
    MAX_RANGE_M,
    ArrayGeometry,
    SpatialCodecConfig,
)


def decode_locations(
    spectrums: torch.Tensor,
    grid_angles: torch.Tensor,
    baseline_m: float,
    eps_parallel_deg: float = EPS_PARALLEL_DEG,
    max_range_m: float = MAX_RANGE_M,
):
    """Soft (expectation) decode of two observer spectrums to 2D coordinates.

    Arguments:
        spectrums: [B, T, 2, bins], strictly positive likelihoods
        grid_angles: [bins] grid in degrees
    Return:
        coords [B, T, 2] meters and a degenerate flag [B, T]. Degenerate
        frames (parallel or divergent rays) take the coordinates of the last
        valid frame, or (0, max_range) if none occurred yet. Ranges beyond
        ``max_range_m`` are clamped. The decode keeps gradients flowing from
        coordinates back into the spectrums.
    """
    if spectrums.shape[-2] != 2:
        raise InvalidInputError("coordinate decode requires exactly two observers")
    b, t = spectrums.shape[0], spectrums.shape[1]
    mass = spectrums.sum(dim=-1).clamp_min(1e-12)
    theta = (spectrums * grid_angles).sum(dim=-1) / mass  # [B, T, 2] degrees
    theta1, theta2 = theta[..., 0], theta[..., 1]
    opening = theta2 - theta1
    t1 = torch.deg2rad(theta1)
    t2 = torch.deg2rad(theta2)
    sin_open = torch.sin(torch.deg2rad(opening))
    valid = (opening > eps_parallel_deg) & (opening < 180.0 - 1e-6) & (torch.sin(t2) > 0)
    r1 = baseline_m * torch.sin(t2) / torch.where(valid, sin_open, torch.ones_like(sin_open))
    r1 = r1.clamp(max=max_range_m)
    coords = torch.stack([r1 * torch.cos(t1), r1 * torch.sin(t1)], dim=-1)  # [B, T, 2]

    # carry the last valid frame forward; frames before the first valid one
    # fall back to a broadside point at maximum range
    index = torch.arange(t, device=spectrums.device).expand(b, t)
    last_valid = torch.cummax(torch.where(valid, index, index.new_full((), -1)), dim=1).values
    has_prior = last_valid >= 0
    gather_idx = last_valid.clamp_min(0).unsqueeze(-1).expand(b, t, 2)
    carried = torch.gather(coords, 1, gather_idx)
    default = coords.new_zeros(2)
    default[1] = max_range_m
    resolved = torch.where(has_prior.unsqueeze(-1), carried, default)
    return resolved, ~valid


def location_embedding(
    spectrums: torch.Tensor,
    grid_angles: torch.Tensor,
    baseline_m: float,
    freq_bins: int,
):
    """Per-frame coordinates repeated along the frequency axis.

    [B, T, 2, bins] likelihoods -> embedding [B, T, F, 2] whose F slices
    within a frame are identical, plus the per-frame degenerate flag [B, T].
    """
    coords, flags = decode_locations(spectrums, grid_angles, baseline_m)
    return coords.unsqueeze(2).expand(-1, -1, freq_bins, -1), flags


@dataclass
class ForwardOutputs:
    """Batched network outputs.

    waveforms: [B, S, L] time-domain estimates
    spectrums: [B, S, N, T, bins] observer likelihoods, None without locator
    direction: [B, S, T, F, bins*N] embeddings, None without locator
    locations: [B, S, T, 2] decoded coordinates, None without locator
    location_degenerate: [B, S, T] flags for frames that used the fallback
    """

    waveforms: torch.Tensor
    spectrums: Optional[torch.Tensor] = None
    direction: Optional[torch.Tensor] = None
    locations: Optional[torch.Tensor] = None
    location_degenerate: Optional[torch.Tensor] = None


class LabNet(nn.Module):
    """Joint locator and beamformer over a fixed array and codec."""

    def __init__(
        self,
        model_cfg: ModelConfig,
        stft_cfg: StftConfig,
        codec_cfg: SpatialCodecConfig,
        geometry: ArrayGeometry,
        sample_rate: int = 16000,
    ):
        super().__init__()
        if geometry.channel_count != model_cfg.channels:
            raise InvalidInputError(
                f"geometry has {geometry.channel_count} mics, model expects "
                f"{model_cfg.channels}"
            )
        self.cfg = model_cfg
        self.stft_cfg = stft_cfg
        self.codec_cfg = codec_cfg
        self.geometry = geometry
        self.sample_rate = sample_rate
        self.baseline_m = geometry.baseline_c

        freq_bins = stft_cfg.freq_bins
        self.crf = CrfEstimator(model_cfg, freq_bins)
        self.cov_speech = CovarianceEncoder(model_cfg.channels)
        self.cov_interf = CovarianceEncoder(model_cfg.channels)
        self.spectrum_width = codec_cfg.bins * codec_cfg.observers
        if model_cfg.use_locator:
            self.locator = DoaEstimator(
                model_cfg.channels, codec_cfg.bins, codec_cfg.observers,
                model_cfg.doa_rnn_layers,
            )
        else:
            self.locator = None
        bf_in = model_cfg.beamformer_input_dim(self.spectrum_width)
        self.beamformers = nn.ModuleList(
            Beamformer(bf_in, model_cfg.bf_rnn_hidden, model_cfg.bf_rnn_layers,
                       model_cfg.channels)
            for _ in range(model_cfg.sources)
        )
        self.register_buffer(
            "grid_angles", torch.as_tensor(codec_cfg.grid_angles, dtype=torch.float32)
        )

    @property
    def beamformer_input_dim(self) -> int:
        return self.beamformers[0].input_dim

    def forward(self, mixture: torch.Tensor) -> ForwardOutputs:
        """Separate a batch of mixtures [B, L, M]."""
        if mixture.ndim != 3 or mixture.shape[-1] != self.cfg.channels:
            raise InvalidInputError(
                f"mixture must be [B, L, {self.cfg.channels}], got {tuple(mixture.shape)}"
            )
        length = mixture.shape[1]
        spec = stft_tensor(mixture, self.stft_cfg, self.sample_rate)  # [B, T, F, M]
        mag, cos_ipd = magnitude_and_cos_ipd(spec, reference_channel=0)
        filters = self.crf(mag, cos_ipd)  # [B, S, 2, T, F, M, k, k]

        waveforms = []
        spectrums = []
        directions = []
        locations = []
        degenerate = []
        for s in range(self.cfg.sources):
            est_speech = apply_crf(spec, filters[:, s, 0])
            est_interf = apply_crf(spec, filters[:, s, 1])
            _, norm_speech = self.cov_speech(est_speech)
            _, norm_interf = self.cov_interf(est_interf)

            feats = [norm_speech, norm_interf]
            if self.locator is not None:
                direction, spec_i = self.locator(norm_speech, norm_interf)
                spectrums.append(spec_i)
                directions.append(direction)
                if self.cfg.use_direction_embedding:
                    feats.append(direction)
                if self.cfg.use_location_embedding:
                    decoded = spec_i.detach() if self.cfg.locator_stop_gradient else spec_i
                    embedding, flags = location_embedding(
                        decoded, self.grid_angles.to(spec_i.dtype), self.baseline_m,
                        spec.shape[2],
                    )
                    locations.append(embedding[:, :, 0, :])
                    degenerate.append(flags)
                    feats.append(embedding)

            weights = self.beamformers[s](*feats)
            beamformed = apply_beamforming(weights, spec)  # [B, T, F]
            wave = istft_tensor(
                beamformed.unsqueeze(-1), self.stft_cfg, self.sample_rate, length
            ).squeeze(-1)
            waveforms.append(wave)

        out = ForwardOutputs(waveforms=torch.stack(waveforms, dim=1))
        if spectrums:
            # [B, T, N, bins] per source -> [B, S, N, T, bins]
            out.spectrums = torch.stack(spectrums, dim=1).permute(0, 1, 3, 2, 4)
            out.direction = torch.stack(directions, dim=1)
        if locations:
            out.locations = torch.stack(locations, dim=1)
            out.location_degenerate = torch.stack(degenerate, dim=1)
        return out


def build_model(
    model_cfg: ModelConfig,
    stft_cfg: StftConfig,
    codec_cfg: SpatialCodecConfig,
    geometry: ArrayGeometry,
    seed: int = 0,
    sample_rate: int = 16000,
) -> LabNet:
    """Construct and deterministically initialize the network."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        net = LabNet(model_cfg, stft_cfg, codec_cfg, geometry, sample_rate)
        init_recurrent_orthogonal(net)
    return net


@dataclass
class SeparationResult:
    """Single-example outputs of :func:`labnet_forward`.

    waveforms: [S, L]; spectrums: [S, N, T, bins] or None; locations:
    [S, T, 2] or None; location_degenerate: [S, T] or None.
    """

    waveforms: torch.Tensor
    spectrums: Optional[torch.Tensor]
    locations: Optional[torch.Tensor]
    location_degenerate: Optional[torch.Tensor]


def labnet_forward(model: LabNet, mixture: AudioSegment) -> SeparationResult:
    """Run the full pipeline on one segment."""
    if mixture.sample_rate != model.sample_rate:
        raise InvalidInputError(
            f"segment rate {mixture.sample_rate} != model rate {model.sample_rate}"
        )
    batch = mixture.samples.to(next(model.parameters()).dtype).unsqueeze(0)
    out = model(batch)
    return SeparationResult(
        waveforms=out.waveforms[0],
        spectrums=None if out.spectrums is None else out.spectrums[0],
        locations=None if out.locations is None else out.locations[0],
        location_degenerate=(
            None if out.location_degenerate is None else out.location_degenerate[0]
        ),
    )
