"""Trainable blocks of the separation network.

All complex quantities cross module boundaries as paired real/imaginary
features; recurrent and affine layers operate on real tensors only.
"""

from __future__ import annotations

import torch
from torch import nn

from labnet.errors import InvalidInputError
from labnet.model.config import ModelConfig
from labnet.model.ops import covariance_features, covariance_raw


def init_recurrent_orthogonal(module: nn.Module) -> None:
    """Orthogonal recurrent kernels, gate block by gate block; affine and
    input kernels keep their default uniform fan-in initialization."""
    for rnn in module.modules():
        if not isinstance(rnn, nn.GRU):
            continue
        for name, param in rnn.named_parameters():
            if name.startswith("weight_hh"):
                hidden = param.shape[1]
                for gate in range(param.shape[0] // hidden):
                    nn.init.orthogonal_(param.data[gate * hidden : (gate + 1) * hidden])


class CovarianceEncoder(nn.Module):
    """Outer-product covariance per T-F unit followed by layer normalization.

    forward: complex [..., T, F, M] -> (raw [..., T, F, M, M] complex,
    normed [..., T, F, 2*M*M] real). The normalization runs over the
    flattened [real || imag] feature axis with learnable scale and offset.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.norm = nn.LayerNorm(2 * channels * channels)

    def forward(self, estimate: torch.Tensor):
        if estimate.shape[-1] != self.channels:
            raise InvalidInputError(
                f"expected {self.channels} channels, got {estimate.shape[-1]}"
            )
        raw = covariance_raw(estimate)
        return raw, self.norm(covariance_features(raw))


class CrfEstimator(nn.Module):
    """Recurrent estimator of per-source speech and interference filters.

    Per frame, maps the concatenated [magnitude || cosIPD] vector of
    F * (1 + P) values through a uni-directional GRU stack and four affine
    layers (rectified-linear on the first three, linear output) to the
    real and imaginary parts of every filter tap.
    """

    def __init__(self, cfg: ModelConfig, freq_bins: int):
        super().__init__()
        self.cfg = cfg
        self.freq_bins = freq_bins
        self.input_dim = freq_bins * cfg.channels  # magnitude + (M - 1) IPD pairs
        self.output_dim = cfg.crf_output_dim(freq_bins)
        self.rnn = nn.GRU(
            self.input_dim, cfg.crf_rnn_hidden, cfg.crf_rnn_layers, batch_first=True
        )
        h = cfg.crf_head_hidden
        self.head = nn.Sequential(
            nn.Linear(cfg.crf_rnn_hidden, h), nn.ReLU(),
            nn.Linear(h, h), nn.ReLU(),
            nn.Linear(h, h), nn.ReLU(),
            nn.Linear(h, self.output_dim),
        )

    def forward(self, magnitude: torch.Tensor, cos_ipd: torch.Tensor) -> torch.Tensor:
        """[B, T, F], [B, T, F, P] -> complex filters
        [B, sources, branches, T, F, M, 2K+1, 2K+1]."""
        b, t, f = magnitude.shape
        if f != self.freq_bins:
            raise InvalidInputError(f"expected F={self.freq_bins}, got {f}")
        if cos_ipd.shape != (b, t, f, self.cfg.channels - 1):
            raise InvalidInputError(
                f"cos_ipd shape {tuple(cos_ipd.shape)} does not match config"
            )
        feats = torch.cat([magnitude.unsqueeze(-1), cos_ipd], dim=-1).reshape(b, t, -1)
        hidden, _ = self.rnn(feats)
        flat = self.head(hidden)
        side = 2 * self.cfg.crf_half_width + 1
        filt = flat.view(
            b, t, f, self.cfg.sources, self.cfg.branches, self.cfg.channels, side, side, 2
        )
        filt = torch.complex(filt[..., 0], filt[..., 1])
        return filt.permute(0, 3, 4, 1, 2, 5, 6, 7)


class DoaEstimator(nn.Module):
    """Projects covariance features into the angle grid and refines over time.

    The first layer is a pointwise (1x1) convolution of the 4*M^2 per-T-F
    feature onto bins * N channels, realized as a per-unit affine map (the
    direction embedding). The second convolution smooths over the
    (time, angle) plane with a 5x5 kernel and the frequency axis is then
    mean-aggregated. A uni-directional GRU with bins * N hidden units
    refines the per-frame vector; an affine readout and a sigmoid map it
    into (0, 1). The readout is load-bearing: recurrent states are
    tanh-bounded, so squashing them directly caps the spectrum at
    sigmoid(1) < 1 and saturation freezes the peak placement.
    """

    def __init__(self, channels: int, bins: int, observers: int, layers: int):
        super().__init__()
        self.bins = bins
        self.observers = observers
        self.width = bins * observers
        self.project = nn.Linear(4 * channels * channels, self.width)
        self.smooth = nn.Conv2d(1, 1, kernel_size=5, padding=2)
        self.rnn = nn.GRU(self.width, self.width, layers, batch_first=True)
        self.readout = nn.Linear(self.width, self.width)

    def forward(self, cov_speech: torch.Tensor, cov_interf: torch.Tensor):
        """[B, T, F, 2M^2] x2 -> (direction [B, T, F, bins*N],
        spectrums [B, T, N, bins])."""
        b, t, f, _ = cov_speech.shape
        half = self.project.weight.shape[1] // 2
        direction = (
            cov_speech @ self.project.weight[:, :half].T
            + cov_interf @ self.project.weight[:, half:].T
            + self.project.bias
        )  # [B, T, F, W]

        # the shared-kernel smoothing and the frequency mean are both linear
        # and commute exactly, so aggregating first avoids convolving every
        # frequency plane separately
        pooled = direction.mean(dim=2)  # [B, T, W]
        smoothed = self.smooth(pooled.unsqueeze(1)).squeeze(1)

        refined, _ = self.rnn(smoothed)
        spectrums = torch.sigmoid(self.readout(refined)).view(b, t, self.observers, self.bins)
        return direction, spectrums


class Beamformer(nn.Module):
    """Frame-level complex weights from concatenated per-T-F features.

    The recurrence runs along time independently per frequency bin with
    shared parameters: affine-in, a uni-directional GRU stack, affine-out
    to 2M reals reinterpreted as M complex weights. The input affine is
    applied block by block, which is identical to concatenating the feature
    blocks first but avoids materializing the concatenation.
    """

    def __init__(self, input_dim: int, hidden: int, layers: int, channels: int):
        super().__init__()
        self.input_dim = input_dim
        self.channels = channels
        self.inp = nn.Linear(input_dim, hidden)
        self.rnn = nn.GRU(hidden, hidden, layers, batch_first=True)
        self.out = nn.Linear(hidden, 2 * channels)

    def forward(self, *blocks: torch.Tensor) -> torch.Tensor:
        """Feature blocks of total width D, each [B, T, F, d_i], ordered as
        [speech covariance || interference covariance || direction ||
        location] -> complex weights [B, T, F, M]."""
        widths = [blk.shape[-1] for blk in blocks]
        if sum(widths) != self.input_dim:
            raise InvalidInputError(
                f"expected feature width {self.input_dim}, got {sum(widths)}"
            )
        b, t, f = blocks[0].shape[:3]
        x = self.inp.bias
        offset = 0
        for blk, width in zip(blocks, widths):
            x = x + blk @ self.inp.weight[:, offset : offset + width].T
            offset += width
        x = x.permute(0, 2, 1, 3).reshape(b * f, t, -1)
        x, _ = self.rnn(x)
        w = self.out(x).reshape(b, f, t, self.channels, 2).permute(0, 2, 1, 3, 4)
        return torch.complex(w[..., 0], w[..., 1])
