"""Value types passed between the pipeline stages and some common operations on them"""
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from sparsenav.exceptions import DegenerateInputError


__all__ = ['TAG_INLIER', 'TAG_OUTLIER', 'TAG_CLOSURE', 'TAGS', 'as_point2', 'as_point3',
           'AffinePlane', 'PointCloud', 'OutlierResult', 'MinimaxCertificate', 'AngularBin',
           'CoveredInterval', 'AngularMap', 'GapSegment', 'ExitPoint', 'ConvexPolygon',
           'ObstacleSet', 'Path']


TAG_INLIER = 'inlier'
TAG_OUTLIER = 'outlier'
TAG_CLOSURE = 'closure'
TAGS = (TAG_INLIER, TAG_OUTLIER, TAG_CLOSURE)

ORTHONORMAL_TOL = 1e-9


def _finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f'{what} has a non-finite coordinate')
    return arr


def as_point2(p) -> np.ndarray:
    """(u, v) as a float array of shape (2,)"""
    return _finite(np.asarray(p, dtype=float).reshape(2), 'Point2')


def as_point3(p) -> np.ndarray:
    """(x, y, z) as a float array of shape (3,)"""
    return _finite(np.asarray(p, dtype=float).reshape(3), 'Point3')


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AffinePlane:
    """2D plane in 3D space: points A @ q + v for q in R^2"""
    basis: np.ndarray       # A, shape (3, 2), orthonormal columns
    offset: np.ndarray      # v, shape (3,)

    def __post_init__(self):
        basis = _finite(np.asarray(self.basis, dtype=float), 'plane basis')
        if basis.shape != (3, 2):
            raise DegenerateInputError(f'plane basis must be 3x2, got {basis.shape}')
        gram_err = np.max(np.abs(basis.T @ basis - np.eye(2)))
        if gram_err > ORTHONORMAL_TOL:
            raise DegenerateInputError(f'plane basis is not orthonormal (error {gram_err:.3g})')
        object.__setattr__(self, 'basis', _frozen(basis))
        object.__setattr__(self, 'offset', _frozen(as_point3(self.offset)))

    @property
    def normal(self) -> np.ndarray:
        n = np.cross(self.basis[:, 0], self.basis[:, 1])
        return n / np.linalg.norm(n)

    def to_list(self) -> List[float]:
        """9 reals: A column-major, then v"""
        return [float(x) for x in self.basis.T.reshape(-1)] + [float(x) for x in self.offset]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> 'AffinePlane':
        values = np.asarray(values, dtype=float)
        if values.shape != (9,):
            raise DegenerateInputError(f'a plane needs 9 reals, got {values.size}')
        return cls(values[:6].reshape(2, 3).T, values[6:])

    def __eq__(self, other) -> bool:
        if isinstance(other, self.__class__):
            return np.array_equal(self.basis, other.basis) and np.array_equal(self.offset, other.offset)
        return False


class PointCloud:
    """Ordered 3D points with stable indices and an optional provenance tag per point"""
    def __init__(self, points=None, tags: Optional[Sequence[str]] = None):
        if points is None:
            points = np.empty((0, 3))
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = np.empty((0, 3))
        pts = pts.reshape(-1, 3)
        _finite(pts, 'PointCloud')
        self.points = _frozen(pts)
        if tags is not None:
            tags = tuple(tags)
            if len(tags) != len(pts):
                raise ValueError(f'{len(tags)} tags for {len(pts)} points')
            unknown = set(tags) - set(TAGS)
            if unknown:
                raise ValueError(f'unknown tags: {sorted(unknown)}')
        self.tags: Optional[Tuple[str, ...]] = tags

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f'{__class__.__name__}({len(self)} points)'

    def __eq__(self, other) -> bool:
        if isinstance(other, self.__class__):
            return np.array_equal(self.points, other.points) and self.tags == other.tags
        return False

    def subset(self, indices: Sequence[int]) -> 'PointCloud':
        indices = np.asarray(indices, dtype=int)
        tags = None if self.tags is None else [self.tags[i] for i in indices]
        return PointCloud(self.points[indices], tags)

    def tagged(self, tag: str) -> np.ndarray:
        """Indices of the points carrying 'tag' (none when the cloud is untagged)"""
        if self.tags is None:
            return np.empty(0, dtype=int)
        return np.array([i for i, t in enumerate(self.tags) if t == tag], dtype=int)

    def concat(self, other: 'PointCloud') -> 'PointCloud':
        if (self.tags is None) != (other.tags is None):
            # a missing tag on one side reads as inlier
            mine = self.tags or (TAG_INLIER,) * len(self)
            theirs = other.tags or (TAG_INLIER,) * len(other)
            tags = mine + theirs
        else:
            tags = None if self.tags is None else self.tags + other.tags
        return PointCloud(np.vstack([self.points, other.points]), tags)


@dataclass(frozen=True)
class OutlierResult:
    outliers: Tuple[int, ...]               # returned X
    inliers: Tuple[int, ...]                # N1 \ X
    objective_trace: Tuple[float, ...]      # f(X_{i-1} ∪ Y_i) per iteration
    representatives: Tuple[int, ...] = ()   # Y of the last iteration
    iterations: int = 0
    scale: float = 1.0                      # normalization factor applied before scoring


@dataclass(frozen=True)
class MinimaxCertificate:
    tau: float
    x_star: Tuple[int, ...]
    per_x_max: Dict[FrozenSet[int], float]


@dataclass(frozen=True, eq=False)
class AngularBin:
    index: int
    members: np.ndarray                 # Point2 rows
    interval: Tuple[float, float]       # [start, end) in radians

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class CoveredInterval:
    index: int
    start: float
    end: float
    d_hat: float        # mean of ||p - x'|| over the bin


@dataclass(frozen=True)
class AngularMap:
    covered: Tuple[CoveredInterval, ...]
    r: float
    n_bins: int = 360

    @property
    def bin_width(self) -> float:
        return 2 * np.pi / self.n_bins

    @cached_property
    def covered_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_bins, dtype=bool)
        mask[[c.index for c in self.covered]] = True
        return mask


@dataclass(frozen=True)
class GapSegment:
    start: float        # radians in [0, 2π)
    end: float          # radians in [0, 2π], may be smaller than start when the gap wraps
    midpoint: float
    width: float

    def contains(self, angle: float, tol: float = 1e-12) -> bool:
        offset = np.mod(angle - self.start, 2 * np.pi)
        return offset <= self.width + tol


@dataclass(frozen=True, eq=False)
class ExitPoint:
    point2: np.ndarray      # y'
    point3: np.ndarray      # y
    angle: float            # s̄
    range: float            # r
    agent2: np.ndarray      # x'
    angular_map: Optional[AngularMap] = None
    gap: Optional[GapSegment] = None


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Counterclockwise vertex loop without repeated closing vertex"""
    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'vertices', _frozen(np.asarray(self.vertices, dtype=float).reshape(-1, 2)))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class ObstacleSet:
    polygons: Tuple[ConvexPolygon, ...] = ()
    provenance: Tuple[int, ...] = ()      # cluster index per polygon

    def __len__(self) -> int:
        return len(self.polygons)

    # Edge arrays shared by every collision query against this set
    @cached_property
    def edge_starts(self) -> np.ndarray:
        if not self.polygons:
            return np.empty((0, 2))
        return np.vstack([p.vertices for p in self.polygons])

    @cached_property
    def edge_ends(self) -> np.ndarray:
        if not self.polygons:
            return np.empty((0, 2))
        return np.vstack([np.roll(p.vertices, -1, axis=0) for p in self.polygons])

    @cached_property
    def polygon_offsets(self) -> np.ndarray:
        """Index of the first edge of every polygon in the edge arrays"""
        sizes = [len(p) for p in self.polygons]
        return np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int) if sizes else np.empty(0, dtype=int)

    @cached_property
    def vertices(self) -> np.ndarray:
        return self.edge_starts


@dataclass(frozen=True, eq=False)
class Path:
    waypoints: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'waypoints', _frozen(np.asarray(self.waypoints, dtype=float).reshape(-1, 2)))

    def __len__(self) -> int:
        return len(self.waypoints)

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        if len(self.waypoints) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))

    def __eq__(self, other) -> bool:
        if isinstance(other, self.__class__):
            return np.array_equal(self.waypoints, other.waypoints)
        return False
