"""Waveform <-> time-frequency conversion and input feature assembly.

All operations are pure functions over immutable inputs and are implemented
with differentiable tensor ops so they can sit inside a trainable graph.
Shape notation: L samples, M channels, T frames, F frequency bins, P channel
pairs (= M - 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from labnet.errors import InvalidInputError, NumericalDegeneracyError

_EPS = 1e-8
_WINDOWS = ("hamming", "hann")


def _as_tensor(values, name: str) -> torch.Tensor:
    if isinstance(values, torch.Tensor):
        return values
    arr = np.asarray(values)
    if arr.dtype == np.float32 or arr.dtype == np.float64:
        return torch.from_numpy(np.ascontiguousarray(arr))
    if np.iscomplexobj(arr):
        return torch.from_numpy(np.ascontiguousarray(arr))
    return torch.as_tensor(arr, dtype=torch.float64)


@dataclass(frozen=True)
class StftConfig:
    """Analysis/synthesis parameters.

    The window length is given in milliseconds and resolved against the
    segment sample rate; it must not exceed ``fft_size`` samples.
    """

    fft_size: int = 512
    window: str = "hamming"
    window_length_ms: float = 32.0
    hop_fraction: float = 0.5

    def __post_init__(self):
        if self.fft_size <= 0 or self.fft_size % 2 != 0:
            raise InvalidInputError(f"fft_size must be a positive even integer, got {self.fft_size}")
        if self.window not in _WINDOWS:
            raise InvalidInputError(f"window must be one of {_WINDOWS}, got {self.window!r}")
        if self.window_length_ms <= 0:
            raise InvalidInputError("window_length_ms must be positive")
        if not 0 < self.hop_fraction <= 1:
            raise InvalidInputError("hop_fraction must lie in (0, 1]")

    @property
    def freq_bins(self) -> int:
        return self.fft_size // 2 + 1

    def window_samples(self, sample_rate: int) -> int:
        win = int(round(self.window_length_ms * sample_rate / 1000.0))
        if win <= 0:
            raise InvalidInputError("window shorter than one sample")
        if win > self.fft_size:
            raise InvalidInputError(
                f"window of {win} samples exceeds fft_size {self.fft_size}"
            )
        return win

    def hop_samples(self, sample_rate: int) -> int:
        return max(1, int(round(self.window_samples(sample_rate) * self.hop_fraction)))

    def to_dict(self) -> dict:
        return {
            "fft_size": self.fft_size,
            "window": self.window,
            "window_length_ms": self.window_length_ms,
            "hop_fraction": self.hop_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StftConfig":
        return cls(**d)


@dataclass
class AudioSegment:
    """A finite multichannel waveform, shape [L, M]."""

    samples: torch.Tensor
    sample_rate: int = 16000

    def __post_init__(self):
        self.samples = _as_tensor(self.samples, "samples")
        if self.samples.ndim == 1:
            self.samples = self.samples.unsqueeze(-1)
        if self.samples.ndim != 2:
            raise InvalidInputError(f"samples must be [L, M], got shape {tuple(self.samples.shape)}")
        if self.samples.shape[0] == 0 or self.samples.shape[1] == 0:
            raise InvalidInputError("empty audio segment")
        if self.sample_rate <= 0:
            raise InvalidInputError("sample_rate must be positive")
        if not torch.isfinite(self.samples).all():
            raise InvalidInputError("samples contain non-finite values")

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def channel_count(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def numpy(self) -> np.ndarray:
        return self.samples.detach().cpu().numpy()


@dataclass
class ComplexSpectrogram:
    """Complex STFT values, shape [T, F, M]."""

    values: torch.Tensor
    config: StftConfig
    sample_rate: int = 16000
    num_samples: int = 0  # original waveform length, used to trim synthesis

    def __post_init__(self):
        self.values = _as_tensor(self.values, "values")
        if not self.values.is_complex():
            raise InvalidInputError("spectrogram values must be complex")
        if self.values.ndim != 3:
            raise InvalidInputError(f"values must be [T, F, M], got {tuple(self.values.shape)}")
        if self.values.shape[1] != self.config.freq_bins:
            raise InvalidInputError(
                f"frequency axis {self.values.shape[1]} does not match config F={self.config.freq_bins}"
            )
        if not torch.isfinite(torch.view_as_real(self.values)).all():
            raise InvalidInputError("spectrogram contains non-finite values")

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def freq_bins(self) -> int:
        return self.values.shape[1]

    @property
    def channel_count(self) -> int:
        return self.values.shape[2]


@dataclass
class FeaturePack:
    """Per-frame network inputs: reference magnitude and pairwise cosine IPD."""

    magnitude: torch.Tensor  # [T, F]
    cos_ipd: torch.Tensor  # [T, F, P]

    def __post_init__(self):
        if self.magnitude.ndim != 2 or self.cos_ipd.ndim != 3:
            raise InvalidInputError("magnitude must be [T, F] and cos_ipd [T, F, P]")

    @property
    def pair_count(self) -> int:
        return self.cos_ipd.shape[-1]


def make_window(kind: str, length: int, dtype=torch.float64) -> torch.Tensor:
    """Periodic analysis window of the given length."""
    n = torch.arange(length, dtype=dtype)
    if kind == "hamming":
        return 0.54 - 0.46 * torch.cos(2 * torch.pi * n / length)
    if kind == "hann":
        return 0.5 - 0.5 * torch.cos(2 * torch.pi * n / length)
    raise InvalidInputError(f"unsupported window {kind!r}")


def frame_count(num_samples: int, config: StftConfig, sample_rate: int) -> int:
    """Number of analysis frames for a center-padded signal of L samples."""
    win = config.window_samples(sample_rate)
    hop = config.hop_samples(sample_rate)
    padded = num_samples + 2 * (config.fft_size // 2)
    return (padded - win) // hop + 1


def stft_tensor(x: torch.Tensor, config: StftConfig, sample_rate: int) -> torch.Tensor:
    """Forward transform of ``x`` with shape [..., L, M] to [..., T, F, M].

    The signal is reflect-padded by fft_size/2 on both ends so every sample
    is covered by an analysis window.
    """
    win = config.window_samples(sample_rate)
    hop = config.hop_samples(sample_rate)
    pad = config.fft_size // 2
    if x.shape[-2] <= pad:
        raise InvalidInputError(
            f"segment of {x.shape[-2]} samples is too short for reflect padding of {pad}"
        )
    window = make_window(config.window, win, dtype=x.dtype).to(x.device)
    lead = x.shape[:-2]
    length, channels = x.shape[-2], x.shape[-1]
    flat = x.reshape(-1, length, channels)
    padded = torch.cat([flat[:, 1 : pad + 1].flip(1), flat, flat[:, -pad - 1 : -1].flip(1)], dim=1)
    frames = padded.unfold(dimension=1, size=win, step=hop)  # [B, T, M, win]
    spec = torch.fft.rfft(frames * window, n=config.fft_size, dim=-1)  # [B, T, M, F]
    spec = spec.transpose(-1, -2)  # [B, T, F, M]
    return spec.reshape(*lead, spec.shape[1], spec.shape[2], channels)


def istft_tensor(
    spec: torch.Tensor,
    config: StftConfig,
    sample_rate: int,
    num_samples: int,
) -> torch.Tensor:
    """Inverse transform of [..., T, F, M] back to [..., num_samples, M].

    Weighted overlap-add with the analysis window reused for synthesis and
    normalization by the summed squared window. Raises
    NumericalDegeneracyError when the normalization envelope vanishes over
    the region that must be reconstructed.
    """
    win = config.window_samples(sample_rate)
    hop = config.hop_samples(sample_rate)
    pad = config.fft_size // 2
    lead = spec.shape[:-3]
    frames_n, channels = spec.shape[-3], spec.shape[-1]
    real_dtype = torch.empty(0, dtype=spec.dtype).real.dtype
    window = make_window(config.window, win, dtype=real_dtype).to(spec.device)

    flat = spec.reshape(-1, frames_n, spec.shape[-2], channels)
    frames = torch.fft.irfft(flat.transpose(-1, -2), n=config.fft_size, dim=-1)  # [B, T, M, fft]
    frames = frames[..., :win] * window

    padded_len = (frames_n - 1) * hop + win
    batch = frames.shape[0]
    # fold performs the overlap-add; treat the 1-D signal as a [padded_len, 1] image
    cols = frames.permute(0, 2, 3, 1).reshape(batch, channels * win, frames_n)
    out = torch.nn.functional.fold(
        cols, output_size=(padded_len, 1), kernel_size=(win, 1), stride=(hop, 1)
    ).reshape(batch, channels, padded_len)

    env_cols = (window * window).reshape(1, win, 1).expand(1, win, frames_n)
    envelope = torch.nn.functional.fold(
        env_cols, output_size=(padded_len, 1), kernel_size=(win, 1), stride=(hop, 1)
    ).reshape(padded_len)

    start, stop = pad, pad + num_samples
    if stop > padded_len or torch.any(envelope[start:stop] < 1e-10):
        raise NumericalDegeneracyError(
            "synthesis window normalization vanishes inside the reconstruction region"
        )
    x = out[..., start:stop] / envelope[start:stop]
    return x.transpose(-1, -2).reshape(*lead, num_samples, channels)


def stft(segment: AudioSegment, config: StftConfig) -> ComplexSpectrogram:
    """Compute the complex spectrogram of a segment, [T, F, M]."""
    values = stft_tensor(segment.samples, config, segment.sample_rate)
    return ComplexSpectrogram(
        values=values,
        config=config,
        sample_rate=segment.sample_rate,
        num_samples=segment.num_samples,
    )


def istft(spec: ComplexSpectrogram) -> AudioSegment:
    """Reconstruct the waveform for a spectrogram produced by :func:`stft`."""
    if spec.num_samples <= 0:
        raise InvalidInputError("spectrogram carries no original length to reconstruct")
    samples = istft_tensor(spec.values, spec.config, spec.sample_rate, spec.num_samples)
    return AudioSegment(samples=samples, sample_rate=spec.sample_rate)


def magnitude_and_cos_ipd(values: torch.Tensor, reference_channel: int = 0):
    """Features from complex values [..., T, F, M].

    Returns:
        magnitude: [..., T, F] of the reference channel
        cos_ipd:   [..., T, F, P] with one pair (reference, other) per
                   remaining channel, in channel order
    """
    channels = values.shape[-1]
    if channels < 2:
        raise InvalidInputError("cosine IPD features require at least two channels")
    if not 0 <= reference_channel < channels:
        raise InvalidInputError(
            f"reference channel {reference_channel} out of range for M={channels}"
        )
    ref = values[..., reference_channel]
    others = [values[..., m] for m in range(channels) if m != reference_channel]
    others = torch.stack(others, dim=-1)  # [..., T, F, P]
    cross = ref.unsqueeze(-1) * others.conj()
    denom = (ref.abs().unsqueeze(-1) * others.abs()).clamp_min(_EPS)
    cos_ipd = (cross.real / denom).clamp(-1.0, 1.0)
    return ref.abs(), cos_ipd


def extract_features(spec: ComplexSpectrogram, reference_channel: int = 0) -> FeaturePack:
    """Assemble the [magnitude || cosIPD] input features for the estimator."""
    mag, cos_ipd = magnitude_and_cos_ipd(spec.values, reference_channel)
    return FeaturePack(magnitude=mag, cos_ipd=cos_ipd)
