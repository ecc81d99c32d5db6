"""Scene sampling: rooms, array pose and two source positions.

Rooms are shoebox-shaped with the array parallel to the x-wall. Sources are
placed at the array height in its front half-plane, so the horizontal
geometry fully determines delays and ground-truth angles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from labnet.errors import ConstraintInfeasibleError, InvalidInputError
from labnet.spatial import ArrayGeometry, SourceLocation, ground_truth_doas

BUCKET_LABELS = ("<15", "15-45", "45-90", ">90")
_BUCKET_EDGES = (15.0, 45.0, 90.0)


def azimuth_bucket(diff_deg: float) -> str:
    """Bucket an azimuth difference with boundaries [0,15), [15,45), [45,90), [90,180]."""
    if not 0 <= diff_deg <= 180:
        raise InvalidInputError(f"azimuth difference {diff_deg} outside [0, 180]")
    for label, edge in zip(BUCKET_LABELS, _BUCKET_EDGES):
        if diff_deg < edge:
            return label
    return BUCKET_LABELS[-1]


ROOM_LENGTH_RANGE = (4.0, 12.0)
ROOM_WIDTH_RANGE = (3.0, 9.0)
ROOM_HEIGHT_RANGE = (2.5, 5.0)
RT60_RANGE = (0.3, 0.8)


@dataclass(frozen=True)
class RoomSpec:
    length: float
    width: float
    height: float
    rt60: float

    def __post_init__(self):
        for value, (lo, hi), name in (
            (self.length, ROOM_LENGTH_RANGE, "length"),
            (self.width, ROOM_WIDTH_RANGE, "width"),
            (self.height, ROOM_HEIGHT_RANGE, "height"),
            (self.rt60, RT60_RANGE, "rt60"),
        ):
            if not lo <= value <= hi:
                raise InvalidInputError(f"room {name} {value} outside [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return {"length": self.length, "width": self.width,
                "height": self.height, "rt60": self.rt60}

    @classmethod
    def from_dict(cls, d: dict) -> "RoomSpec":
        return cls(**d)


@dataclass(frozen=True)
class ScenePlacement:
    """Array pose and source positions in room coordinates (meters).

    ``array_origin`` is the first outermost microphone; the array axis is
    horizontal and unit length. Sources sit at the array height.
    """

    array_origin: tuple  # (x, y, z)
    array_axis: tuple = (1.0, 0.0)
    source_positions: tuple = ()  # two (x, y, z)
    source_distances: tuple = ()  # to the array centroid
    inter_source_distance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "array_origin": list(self.array_origin),
            "array_axis": list(self.array_axis),
            "source_positions": [list(p) for p in self.source_positions],
            "source_distances": list(self.source_distances),
            "inter_source_distance": self.inter_source_distance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenePlacement":
        return cls(
            array_origin=tuple(d["array_origin"]),
            array_axis=tuple(d["array_axis"]),
            source_positions=tuple(tuple(p) for p in d["source_positions"]),
            source_distances=tuple(d["source_distances"]),
            inter_source_distance=d["inter_source_distance"],
        )


@dataclass(frozen=True)
class SceneConstraints:
    room_length: tuple = (4.0, 12.0)
    room_width: tuple = (3.0, 9.0)
    room_height: tuple = (2.5, 5.0)
    rt60: tuple = (0.3, 0.8)
    source_distance: tuple = (0.5, 8.0)
    min_inter_source: float = 1.0
    wall_margin: float = 0.3
    array_height: tuple = (1.0, 2.0)
    front_clearance: float = 0.01  # minimum source offset from the array axis
    max_draws: int = 10_000

    def to_dict(self) -> dict:
        return {
            "room_length": list(self.room_length),
            "room_width": list(self.room_width),
            "room_height": list(self.room_height),
            "rt60": list(self.rt60),
            "source_distance": list(self.source_distance),
            "min_inter_source": self.min_inter_source,
            "wall_margin": self.wall_margin,
            "array_height": list(self.array_height),
            "front_clearance": self.front_clearance,
            "max_draws": self.max_draws,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConstraints":
        d = dict(d)
        for key in ("room_length", "room_width", "room_height", "rt60",
                    "source_distance", "array_height"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class SceneMetadata:
    room: RoomSpec
    placement: ScenePlacement
    source_locations: tuple  # two SourceLocation in the array frame
    bucket: str
    seed: int
    normalization: float = 1.0
    example_id: str = ""

    @property
    def azimuth_difference(self) -> float:
        a, b = self.source_locations
        return abs(a.doa_centroid - b.doa_centroid)

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "room": self.room.to_dict(),
            "placement": self.placement.to_dict(),
            "source_locations": [loc.to_dict() for loc in self.source_locations],
            "bucket": self.bucket,
            "seed": self.seed,
            "normalization": self.normalization,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneMetadata":
        return cls(
            room=RoomSpec.from_dict(d["room"]),
            placement=ScenePlacement.from_dict(d["placement"]),
            source_locations=tuple(
                SourceLocation.from_dict(loc) for loc in d["source_locations"]
            ),
            bucket=d["bucket"],
            seed=d["seed"],
            normalization=d["normalization"],
            example_id=d["example_id"],
        )


def mic_room_positions(placement: ScenePlacement, geometry: ArrayGeometry) -> np.ndarray:
    """3D microphone positions in room coordinates, [M, 3]."""
    origin = np.asarray(placement.array_origin, dtype=np.float64)
    axis = np.asarray(placement.array_axis, dtype=np.float64)
    local = geometry.positions - geometry.positions[geometry.outermost_indices[0]]
    out = np.empty((geometry.channel_count, 3))
    out[:, 0] = origin[0] + local[:, 0] * axis[0]
    out[:, 1] = origin[1] + local[:, 0] * axis[1]
    out[:, 2] = origin[2]
    return out


def to_array_frame(position, placement: ScenePlacement) -> tuple:
    """Project a room-coordinate point into the horizontal array frame."""
    p = np.asarray(position, dtype=np.float64)[:2]
    origin = np.asarray(placement.array_origin, dtype=np.float64)[:2]
    axis = np.asarray(placement.array_axis, dtype=np.float64)
    normal = np.array([-axis[1], axis[0]])
    rel = p - origin
    return float(rel @ axis), float(rel @ normal)


def scene_source_locations(
    placement: ScenePlacement, geometry: ArrayGeometry
) -> tuple:
    """Exact per-source geometry labels for a placement."""
    return tuple(
        ground_truth_doas(to_array_frame(pos, placement), geometry)
        for pos in placement.source_positions
    )


def validate_placement(
    room: RoomSpec,
    placement: ScenePlacement,
    constraints: SceneConstraints,
    geometry: ArrayGeometry,
) -> bool:
    """Check every placement invariant; used by the sampler and by tests."""
    m = constraints.wall_margin
    mics = mic_room_positions(placement, geometry)
    bounds = np.array([room.length, room.width, room.height])
    if np.any(mics < m - 1e-12) or np.any(mics > bounds - m + 1e-12):
        return False
    centroid = mics.mean(axis=0)
    srcs = np.asarray(placement.source_positions, dtype=np.float64)
    if srcs.shape != (2, 3):
        return False
    if np.any(srcs < m - 1e-12) or np.any(srcs > bounds - m + 1e-12):
        return False
    lo, hi = constraints.source_distance
    for pos in srcs:
        d = float(np.linalg.norm(pos - centroid))
        if not lo - 1e-12 <= d <= hi + 1e-12:
            return False
        _, local_y = to_array_frame(pos, placement)
        if local_y < constraints.front_clearance - 1e-12:
            return False
    if float(np.linalg.norm(srcs[0] - srcs[1])) < constraints.min_inter_source - 1e-12:
        return False
    return True


def sample_scene(
    rng: np.random.Generator,
    constraints: SceneConstraints = SceneConstraints(),
    geometry: ArrayGeometry | None = None,
) -> tuple[RoomSpec, ScenePlacement]:
    """Rejection-sample a feasible scene; deterministic for a fixed rng state."""
    geometry = geometry or ArrayGeometry.linear()
    span = geometry.positions[:, 0].max() - geometry.positions[:, 0].min()
    m = constraints.wall_margin
    for _ in range(constraints.max_draws):
        room = RoomSpec(
            length=rng.uniform(*constraints.room_length),
            width=rng.uniform(*constraints.room_width),
            height=rng.uniform(*constraints.room_height),
            rt60=rng.uniform(*constraints.rt60),
        )
        z_lo = max(constraints.array_height[0], m)
        z_hi = min(constraints.array_height[1], room.height - m)
        if z_hi <= z_lo or room.length - m - span <= m:
            continue
        origin = (
            rng.uniform(m, room.length - m - span),
            rng.uniform(m, room.width - m),
            rng.uniform(z_lo, z_hi),
        )
        placement = ScenePlacement(array_origin=origin, array_axis=(1.0, 0.0))
        centroid = mic_room_positions(placement, geometry).mean(axis=0)
        positions = []
        for _ in range(2):
            d = rng.uniform(*constraints.source_distance)
            phi = np.radians(rng.uniform(0.0, 180.0))
            positions.append((
                float(centroid[0] + d * np.cos(phi)),
                float(centroid[1] + d * np.sin(phi)),
                float(origin[2]),
            ))
        srcs = np.asarray(positions)
        placement = ScenePlacement(
            array_origin=origin,
            array_axis=(1.0, 0.0),
            source_positions=tuple(map(tuple, positions)),
            source_distances=tuple(
                float(np.linalg.norm(p - centroid)) for p in srcs
            ),
            inter_source_distance=float(np.linalg.norm(srcs[0] - srcs[1])),
        )
        if validate_placement(room, placement, constraints, geometry):
            return room, placement
    raise ConstraintInfeasibleError(
        f"no feasible scene after {constraints.max_draws} draws"
    )
