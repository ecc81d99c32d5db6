"""Differentiable tensor operations on complex spectrograms.

Shape notation: leading batch axes are written ``...``; T frames, F bins,
M channels.
"""

from __future__ import annotations

import torch

from labnet.errors import InvalidInputError


def apply_crf(spec: torch.Tensor, filters: torch.Tensor) -> torch.Tensor:
    """Filter each T-F unit with its complex neighborhood filter.

    Arguments:
        spec: complex [..., T, F, M]
        filters: complex [..., T, F, M, 2K+1, 2K+1], tap axes ordered
            (time offset, frequency offset) from -K to +K
    Return:
        complex [..., T, F, M]; neighbors outside the grid contribute zero.
    """
    if filters.shape[-3] != spec.shape[-1] or filters.shape[:-5] != spec.shape[:-3]:
        raise InvalidInputError(
            f"filter shape {tuple(filters.shape)} incompatible with spectrogram "
            f"{tuple(spec.shape)}"
        )
    if filters.shape[-5:-3] != spec.shape[-3:-1]:
        raise InvalidInputError("filter T-F axes do not match the spectrogram")
    taps_t, taps_f = filters.shape[-2], filters.shape[-1]
    if taps_t != taps_f or taps_t % 2 != 1:
        raise InvalidInputError("filter neighborhood must be square with odd side")
    k = (taps_t - 1) // 2
    if k == 0:
        return filters[..., 0, 0] * spec

    frames, bins = spec.shape[-3], spec.shape[-2]
    padded = spec.new_zeros(spec.shape[:-3] + (frames + 2 * k, bins + 2 * k, spec.shape[-1]))
    padded[..., k : k + frames, k : k + bins, :] = spec
    out = torch.zeros_like(spec)
    for i in range(taps_t):
        for j in range(taps_f):
            out = out + filters[..., i, j] * padded[..., i : i + frames, j : j + bins, :]
    return out


def apply_beamforming(weights: torch.Tensor, spec: torch.Tensor) -> torch.Tensor:
    """Conjugate inner product over channels: [..., T, F, M] x2 -> [..., T, F]."""
    if weights.shape != spec.shape:
        raise InvalidInputError(
            f"weight shape {tuple(weights.shape)} != spectrogram shape {tuple(spec.shape)}"
        )
    return (weights.conj() * spec).sum(dim=-1)


def covariance_raw(estimate: torch.Tensor) -> torch.Tensor:
    """Per T-F outer product with the conjugate transpose.

    [..., T, F, M] -> [..., T, F, M, M]; every matrix is Hermitian, positive
    semidefinite and rank <= 1 by construction.
    """
    return estimate.unsqueeze(-1) * estimate.unsqueeze(-2).conj()


def covariance_features(raw: torch.Tensor) -> torch.Tensor:
    """Flatten [..., T, F, M, M] complex to [..., T, F, 2*M*M] real, real
    parts first then imaginary parts."""
    m = raw.shape[-1]
    flat = raw.reshape(raw.shape[:-2] + (m * m,))
    return torch.cat([flat.real, flat.imag], dim=-1)
