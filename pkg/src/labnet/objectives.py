"""Training objectives and the azimuth label-ordering policy.

wsdr_loss(y, s, s_hat) = gamma * cos_loss(s, s_hat)
                       + (1 - gamma) * cos_loss(y - s, y - s_hat)
with gamma = ||s||^2 / (||s||^2 + ||y - s||^2) and
cos_loss(x, xh) = -<x, xh> / (||x|| * ||xh||). The value lies in [-1, 1].

Zero norms are guarded by clamping denominators at 1e-8 instead of raising;
silence-padded batches hit them routinely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch

from labnet.errors import InvalidInputError

EPS = 1e-8

DEFAULT_SCHEDULE = ((1, 10, 5.0, 1.0), (11, None, 1.0, 10.0))


@dataclass(frozen=True)
class LossWeights:
    """Epoch-dependent task weights (alpha for DOA, beta for separation).

    ``schedule`` is a tuple of (first_epoch, last_epoch_or_None, alpha, beta)
    intervals; the final interval is open-ended so every epoch is covered.
    """

    schedule: tuple = DEFAULT_SCHEDULE

    def __post_init__(self):
        if not self.schedule:
            raise InvalidInputError("loss schedule must not be empty")
        norm = []
        expected_start = None
        for i, (start, stop, alpha, beta) in enumerate(self.schedule):
            if alpha < 0 or beta < 0:
                raise InvalidInputError("loss weights must be non-negative")
            if expected_start is not None and start != expected_start:
                raise InvalidInputError("schedule intervals must be contiguous")
            if stop is None and i != len(self.schedule) - 1:
                raise InvalidInputError("only the final interval may be open-ended")
            if stop is not None and stop < start:
                raise InvalidInputError("interval end before start")
            expected_start = None if stop is None else stop + 1
            norm.append((int(start), None if stop is None else int(stop), float(alpha), float(beta)))
        if norm[-1][1] is not None:
            raise InvalidInputError("final interval must be open-ended to cover all epochs")
        if norm[0][0] != 1:
            raise InvalidInputError("schedule must start at epoch 1")
        object.__setattr__(self, "schedule", tuple(norm))

    def at_epoch(self, epoch: int) -> tuple[float, float]:
        if epoch < 1:
            raise InvalidInputError("epochs are 1-based")
        for start, stop, alpha, beta in self.schedule:
            if epoch >= start and (stop is None or epoch <= stop):
                return alpha, beta
        raise InvalidInputError(f"no schedule interval covers epoch {epoch}")

    def alpha(self, epoch: int) -> float:
        return self.at_epoch(epoch)[0]

    def beta(self, epoch: int) -> float:
        return self.at_epoch(epoch)[1]

    def to_dict(self) -> dict:
        return {"schedule": [list(iv) for iv in self.schedule]}

    @classmethod
    def from_dict(cls, d: dict) -> "LossWeights":
        return cls(schedule=tuple(tuple(iv) for iv in d["schedule"]))


def sdr_cosine(x: torch.Tensor, xh: torch.Tensor) -> torch.Tensor:
    """Negative cosine similarity over the last axis, -<x, xh> / (||x|| ||xh||),
    with the denominator clamped at EPS so zero-norm operands stay finite."""
    num = (x * xh).sum(dim=-1)
    den = (x.norm(dim=-1) * xh.norm(dim=-1)).clamp_min(EPS)
    return -num / den


def wsdr_weight(mixture: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Energy weight gamma between the target-fit and residual-fit terms."""
    s2 = (target * target).sum(dim=-1)
    n2 = ((mixture - target) * (mixture - target)).sum(dim=-1)
    return s2 / (s2 + n2).clamp_min(EPS)


def wsdr_loss(mixture: torch.Tensor, target: torch.Tensor, estimate: torch.Tensor) -> torch.Tensor:
    """Weighted SDR loss over the last (time) axis; leading axes broadcast."""
    if mixture.shape != target.shape or target.shape != estimate.shape:
        raise InvalidInputError(
            f"waveform shapes differ: {tuple(mixture.shape)} vs {tuple(target.shape)} "
            f"vs {tuple(estimate.shape)}"
        )
    gamma = wsdr_weight(mixture, target)
    return gamma * sdr_cosine(target, estimate) + (1 - gamma) * sdr_cosine(
        mixture - target, mixture - estimate
    )


def doa_loss(estimate: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Squared-error spectrum loss, [N, T, bins] or [B, N, T, bins].

    Summed over observers and grid bins, averaged over frames and batch so
    the magnitude is independent of the utterance length.
    """
    if estimate.shape != target.shape:
        raise InvalidInputError(
            f"spectrum shapes differ: {tuple(estimate.shape)} vs {tuple(target.shape)}"
        )
    if estimate.ndim == 3:
        estimate = estimate.unsqueeze(0)
        target = target.unsqueeze(0)
    if estimate.ndim != 4:
        raise InvalidInputError("spectrums must be [N, T, bins] or [B, N, T, bins]")
    sq = (estimate - target) ** 2
    # reduced per observer first, then summed, so the N = 2 loss equals the
    # sum of the two per-observer losses exactly
    return sq.sum(dim=3).mean(dim=2).sum(dim=1).mean(dim=0)


def multitask_loss(
    doa_losses: Sequence,
    wsdr_losses: Sequence,
    weights: LossWeights,
    epoch: int,
):
    """alpha(epoch) * sum(DOA losses) + beta(epoch) * sum(wSDR losses)."""
    alpha, beta = weights.at_epoch(epoch)
    doa_total = sum(doa_losses)
    sep_total = sum(wsdr_losses)
    return alpha * doa_total + beta * sep_total


def sort_by_azimuth(labels: Sequence) -> list:
    """Order (payload, SourceLocation) labels ascending by centroid DOA.

    Ties break by the first observer angle and then by the original index
    (the sort is stable).
    """
    return sorted(labels, key=lambda item: (item[1].doa_centroid, item[1].doas[0]))
