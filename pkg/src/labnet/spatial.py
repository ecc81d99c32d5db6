"""Spatial spectrum coding, DOA readout and two-observer triangulation.

Angles are azimuths in degrees on the horizontal plane. The array frame puts
the first outermost microphone at the origin with the array along +x, sources
in the y > 0 half-plane. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from labnet.errors import (
    InvalidInputError,
    NumericalDegeneracyError,
    TriangulationDegenerateError,
)

DEFAULT_MIC_SPACINGS = (0.04, 0.04, 0.12, 0.04, 0.04)
GRID_SPAN_DEG = 210.0
EPS_PARALLEL_DEG = 0.5
MAX_RANGE_M = 10.0


@dataclass(frozen=True)
class ArrayGeometry:
    """A linear microphone array on the horizontal plane, mics on the x-axis."""

    mic_positions: tuple  # M tuples of (x, y) meters
    outermost_indices: tuple = (0, -1)

    def __post_init__(self):
        pos = np.asarray(self.mic_positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 2:
            raise InvalidInputError("mic_positions must be [M >= 2, 2]")
        if not np.allclose(pos[:, 1], pos[0, 1], atol=1e-12):
            raise InvalidInputError("microphones must be collinear along the local x-axis")
        first, last = self.outermost_indices
        if abs(pos[last, 0] - pos[first, 0]) <= 0:
            raise InvalidInputError("outermost microphones must be distinct")
        object.__setattr__(self, "mic_positions", tuple(map(tuple, pos.tolist())))

    @classmethod
    def linear(cls, spacings=DEFAULT_MIC_SPACINGS) -> "ArrayGeometry":
        xs = np.concatenate([[0.0], np.cumsum(spacings)])
        return cls(mic_positions=tuple((x, 0.0) for x in xs))

    @property
    def positions(self) -> np.ndarray:
        return np.asarray(self.mic_positions, dtype=np.float64)

    @property
    def channel_count(self) -> int:
        return len(self.mic_positions)

    @property
    def baseline_c(self) -> float:
        pos = self.positions
        first, last = self.outermost_indices
        return float(np.linalg.norm(pos[last] - pos[first]))

    @property
    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def to_dict(self) -> dict:
        return {
            "mic_positions": [list(p) for p in self.mic_positions],
            "outermost_indices": list(self.outermost_indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArrayGeometry":
        return cls(
            mic_positions=tuple(tuple(p) for p in d["mic_positions"]),
            outermost_indices=tuple(d["outermost_indices"]),
        )


@dataclass(frozen=True)
class SpatialCodecConfig:
    """Discretized azimuth grid and Gaussian coding width.

    The grid covers ``bins * theta_step_deg`` = 210 degrees starting at
    ``theta_min_deg``; with the defaults that is -15 .. +194 inclusive at one
    degree resolution.
    """

    bins: int = 210
    theta_min_deg: float = -15.0
    theta_step_deg: float = 1.0
    sigma_deg: float = 8.0
    observers: int = 2

    def __post_init__(self):
        if self.bins < 2:
            raise InvalidInputError("grid needs at least two bins")
        if self.sigma_deg <= 0:
            raise InvalidInputError("sigma must be positive")
        if self.observers not in (1, 2):
            raise InvalidInputError("observers must be 1 or 2")
        if abs(self.bins * self.theta_step_deg - GRID_SPAN_DEG) > 1e-9:
            raise InvalidInputError(
                f"bins * theta_step must span {GRID_SPAN_DEG} degrees, "
                f"got {self.bins * self.theta_step_deg}"
            )

    @property
    def grid_angles(self) -> np.ndarray:
        return self.theta_min_deg + np.arange(self.bins) * self.theta_step_deg

    @property
    def theta_max_deg(self) -> float:
        return self.theta_min_deg + (self.bins - 1) * self.theta_step_deg

    def to_dict(self) -> dict:
        return {
            "bins": self.bins,
            "theta_min_deg": self.theta_min_deg,
            "theta_step_deg": self.theta_step_deg,
            "sigma_deg": self.sigma_deg,
            "observers": self.observers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpatialCodecConfig":
        return cls(**d)


@dataclass(frozen=True)
class SourceLocation:
    """Ground-truth geometry of one source relative to the reference outermost mic."""

    xy: tuple  # (x, y) meters
    doas: tuple  # (theta_1, theta_2) degrees at the two outermost mics
    doa_centroid: float  # degrees at the array centroid

    def __post_init__(self):
        if self.xy[1] < 0:
            raise InvalidInputError("source must lie in the front half-plane (y >= 0)")

    def to_dict(self) -> dict:
        return {
            "xy": list(self.xy),
            "doas": list(self.doas),
            "doa_centroid": self.doa_centroid,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceLocation":
        return cls(xy=tuple(d["xy"]), doas=tuple(d["doas"]), doa_centroid=d["doa_centroid"])


class TriangulatedPoint(NamedTuple):
    x: float
    y: float
    clamped: bool  # True when the range exceeded MAX_RANGE_M and was clamped


def angular_distance(a, b):
    """Plain absolute angle difference in degrees; the grid spans only 210
    degrees so no circular wrap is applied."""
    return np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))


def encode_spatial_spectrum(theta_gt_deg: float, config: SpatialCodecConfig) -> np.ndarray:
    """Gaussian likelihood over the grid, exp(-d(theta, theta_gt)^2 / sigma^2)."""
    if not np.isfinite(theta_gt_deg):
        raise InvalidInputError("ground-truth angle must be finite")
    if theta_gt_deg < config.theta_min_deg - 1e-9 or theta_gt_deg > config.theta_max_deg + 1e-9:
        raise InvalidInputError(
            f"angle {theta_gt_deg} deg outside grid "
            f"[{config.theta_min_deg}, {config.theta_max_deg}]"
        )
    d = angular_distance(config.grid_angles, theta_gt_deg)
    return np.exp(-(d * d) / (config.sigma_deg * config.sigma_deg))


def decode_doa(spectrum: np.ndarray, config: SpatialCodecConfig, mode: str = "argmax") -> float:
    """Read one angle out of a grid likelihood vector.

    argmax mode returns the grid angle of the maximum (ties break toward the
    lowest angle); expectation mode returns the likelihood-weighted grid mean.
    """
    p = np.asarray(spectrum, dtype=np.float64)
    if p.shape != (config.bins,):
        raise InvalidInputError(f"spectrum must have {config.bins} bins, got {p.shape}")
    if np.any(p < -1e-12):
        raise InvalidInputError("spectrum must be non-negative")
    if mode == "argmax":
        return float(config.grid_angles[int(np.argmax(p))])
    if mode == "expectation":
        total = p.sum()
        if total <= 0:
            raise NumericalDegeneracyError("expectation decode of an all-zero spectrum")
        return float((config.grid_angles * p).sum() / total)
    raise InvalidInputError(f"unknown decode mode {mode!r}")


def decode_doa_frames(spectrums: np.ndarray, config: SpatialCodecConfig) -> np.ndarray:
    """Vectorized argmax decode over the trailing bin axis, [..., bins] -> [...]."""
    p = np.asarray(spectrums, dtype=np.float64)
    if p.shape[-1] != config.bins:
        raise InvalidInputError(f"last axis must have {config.bins} bins")
    return config.grid_angles[np.argmax(p, axis=-1)]


def triangulate(
    theta1_deg: float,
    theta2_deg: float,
    baseline_m: float,
    eps_parallel_deg: float = EPS_PARALLEL_DEG,
    max_range_m: float = MAX_RANGE_M,
) -> TriangulatedPoint:
    """Intersect the two observer rays via the Law of Sines.

    theta1 is the azimuth at the reference outermost mic (origin), theta2 at
    the other outermost mic (+baseline on x). Raises
    TriangulationDegenerateError when the rays are parallel or divergent
    (theta2 - theta1 <= eps_parallel).
    """
    if baseline_m <= 0:
        raise InvalidInputError("baseline must be positive")
    opening = theta2_deg - theta1_deg
    if not np.isfinite(opening) or opening <= eps_parallel_deg:
        raise TriangulationDegenerateError(
            f"observer rays with opening {opening:.4f} deg do not intersect in front"
        )
    t1 = math.radians(theta1_deg)
    t2 = math.radians(theta2_deg)
    r1 = baseline_m * math.sin(t2) / math.sin(t2 - t1)
    clamped = r1 > max_range_m
    if clamped:
        r1 = max_range_m
    return TriangulatedPoint(x=r1 * math.cos(t1), y=r1 * math.sin(t1), clamped=clamped)


def ground_truth_doas(source_xy, geometry: ArrayGeometry) -> SourceLocation:
    """Exact observer angles for a source given in the array frame.

    The inverse of :func:`triangulate`: feeding the returned angles back
    recovers ``source_xy`` to numerical precision.
    """
    x, y = float(source_xy[0]), float(source_xy[1])
    if y <= 0:
        raise InvalidInputError("source must lie strictly in front of the array axis (y > 0)")
    pos = geometry.positions
    first, last = geometry.outermost_indices
    ref = pos[first]
    theta = []
    for idx in (first, last):
        mic = pos[idx] - ref  # mic y offsets vanish for a collinear array
        theta.append(math.degrees(math.atan2(y - mic[1], x - mic[0])))
    cen = geometry.centroid - ref
    theta_c = math.degrees(math.atan2(y - cen[1], x - cen[0]))
    return SourceLocation(xy=(x, y), doas=(theta[0], theta[1]), doa_centroid=theta_c)
