"""Ground-truth rooms, simulated feature observation and the visited-area mask"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt, PositiveFloat
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from sparsenav.datatype import TAG_CLOSURE, TAG_INLIER, TAG_OUTLIER, AffinePlane, PointCloud, as_point3
from sparsenav.exceptions import InvalidSpecError
from sparsenav.geometry import TWO_PI, lift_from_plane, plane_from_three_points, project_point, segments_intersect
from sparsenav.lib import make_rng


__all__ = ['Room', 'Doorway', 'EnvironmentSpec', 'Environment', 'VisitedSector', 'AgentState',
           'generate_env', 'observe', 'mask_visited', 'triangle_plane', 'wall_hit', 'free_space_connected']


logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
# sides of a room in wall-id order: bottom, right, top, left
SIDES = ('bottom', 'right', 'top', 'left')
# a ray blocked this close to its target point is hitting the target's own wall
LINE_OF_SIGHT_EPS = 1e-9
GEOMETRY_EPS = 1e-9


class Room(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def corners(self) -> np.ndarray:
        return np.array([[self.xmin, self.ymin], [self.xmax, self.ymin],
                         [self.xmax, self.ymax], [self.xmin, self.ymax]])


class Doorway(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)
    # room_index * 4 + side (0 bottom, 1 right, 2 top, 3 left)
    wall: NonNegativeInt
    # distance from the wall's start corner, walls run counterclockwise around their room
    offset: NonNegativeFloat
    width: PositiveFloat


class EnvironmentSpec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)
    format_version: int = FORMAT_VERSION
    rooms: List[Room]
    doorways: List[Doorway] = Field(default_factory=list)
    # points per unit of wall length
    feature_density: NonNegativeFloat = 20.0
    # spurious points as a fraction of the visible wall points
    outlier_rate: NonNegativeFloat = 0.0
    outlier_radius: NonNegativeFloat = 10.0
    sensor_noise: NonNegativeFloat = 0.0
    seed: NonNegativeInt = 0
    start: Tuple[float, float]
    flight_height: float = 1.0
    height_jitter: NonNegativeFloat = 0.0


@dataclass(frozen=True, eq=False)
class Environment:
    spec: EnvironmentSpec
    starts: np.ndarray          # wall segments after doorway cut-outs
    ends: np.ndarray
    wall_ids: Tuple[int, ...]   # source wall of every segment

    @property
    def segments(self) -> np.ndarray:
        return np.stack([self.starts, self.ends], axis=1)

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        corners = np.vstack([room.corners() for room in self.spec.rooms])
        lo, hi = corners.min(axis=0), corners.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def contains(self, xy) -> bool:
        """Whether xy lies inside the bounding box of the rooms"""
        x, y = np.asarray(xy, dtype=float)[:2]
        xmin, ymin, xmax, ymax = self.bbox
        return xmin <= x <= xmax and ymin <= y <= ymax

    def in_room(self, xy) -> bool:
        x, y = np.asarray(xy, dtype=float)[:2]
        return any(r.xmin < x < r.xmax and r.ymin < y < r.ymax for r in self.spec.rooms)


@dataclass(frozen=True)
class VisitedSector:
    # world frame, the flight plane is re-estimated on every iteration
    center: Tuple[float, float, float]
    radius: float


@dataclass
class AgentState:
    position: np.ndarray
    plane: AffinePlane
    visited_sectors: List[VisitedSector] = field(default_factory=list)


def _cross2(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _room_walls(room: Room) -> List[Tuple[np.ndarray, np.ndarray]]:
    c = room.corners()
    return [(c[i], c[(i + 1) % 4]) for i in range(4)]


def _cut(a: np.ndarray, b: np.ndarray, origin: np.ndarray, direction: np.ndarray,
         t0: float, t1: float) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Remove the stretch [t0, t1] of the line origin + t·direction from segment a-b"""
    ta = float(np.dot(a - origin, direction))
    tb = float(np.dot(b - origin, direction))
    lo, hi = min(ta, tb), max(ta, tb)
    if hi <= t0 + GEOMETRY_EPS or lo >= t1 - GEOMETRY_EPS:
        return [(a, b)]
    pieces = []
    for p, q in ((lo, t0), (t1, hi)):
        if q - p > GEOMETRY_EPS:
            pieces.append((origin + p * direction, origin + q * direction))
    if ta > tb:
        pieces = [(q, p) for p, q in reversed(pieces)]
    return pieces


def generate_env(spec: EnvironmentSpec) -> 'Environment':
    """Wall segments of all rooms with the doorways cut out of every collinear wall they overlap"""
    if not spec.rooms:
        raise InvalidSpecError('an environment needs at least one room')
    walls: List[Tuple[np.ndarray, np.ndarray]] = []
    for i, room in enumerate(spec.rooms):
        if not (room.xmin < room.xmax and room.ymin < room.ymax):
            raise InvalidSpecError(f'room {i} has no area')
        walls.extend(_room_walls(room))
    segments = [(a, b, wall_id) for wall_id, (a, b) in enumerate(walls)]

    for j, door in enumerate(spec.doorways):
        if door.wall >= len(walls):
            raise InvalidSpecError(f'doorway {j} refers to wall {door.wall}, only {len(walls)} walls exist')
        a, b = walls[door.wall]
        length = float(np.linalg.norm(b - a))
        if door.offset + door.width > length + GEOMETRY_EPS:
            raise InvalidSpecError(f'doorway {j} ends at {door.offset + door.width:g}, '
                                   f'beyond wall {door.wall} of length {length:g}')
        direction = (b - a) / length
        t0, t1 = door.offset, door.offset + door.width
        cut = []
        for p, q, wall_id in segments:
            on_line = (abs(_cross2(direction, p - a)) <= GEOMETRY_EPS
                       and abs(_cross2(direction, q - a)) <= GEOMETRY_EPS)
            if on_line:
                cut.extend((s, e, wall_id) for s, e in _cut(p, q, a, direction, t0, t1))
            else:
                cut.append((p, q, wall_id))
        segments = cut

    env = Environment(spec,
                      np.array([s for s, _, _ in segments]).reshape(-1, 2),
                      np.array([e for _, e, _ in segments]).reshape(-1, 2),
                      tuple(w for _, _, w in segments))
    if not env.in_room(spec.start):
        raise InvalidSpecError(f'start {list(spec.start)} lies outside every room')
    logger.debug(f'environment: {len(spec.rooms)} room(s), {len(spec.doorways)} doorway(s), '
                 f'{len(segments)} wall segment(s)')
    return env


def wall_hit(env: Environment, a, b) -> bool:
    """Whether the segment a-b (world xy) touches a ground-truth wall"""
    a = np.asarray(a, dtype=float)[:2]
    b = np.asarray(b, dtype=float)[:2]
    return bool(segments_intersect(a, b, env.starts, env.ends).any())


def _crossings(origins: np.ndarray, targets: np.ndarray, starts: np.ndarray, ends: np.ndarray,
               t_max: float) -> np.ndarray:
    """(rays, walls) matrix: ray origin->target crosses the wall at a fraction t in (0, t_max)"""
    r = targets - origins                           # (n, 2)
    e = ends - starts                               # (w, 2)
    denom = r[:, None, 0] * e[None, :, 1] - r[:, None, 1] * e[None, :, 0]
    diff = starts[None, :, :] - origins[:, None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        t = (diff[..., 0] * e[None, :, 1] - diff[..., 1] * e[None, :, 0]) / denom
        u = (diff[..., 0] * r[:, None, 1] - diff[..., 1] * r[:, None, 0]) / denom
    valid = np.abs(denom) > GEOMETRY_EPS
    return valid & (t > 0) & (t < t_max) & (u >= 0) & (u <= 1)


def _visible_wall_points(env: Environment, eye: np.ndarray, density: float) -> np.ndarray:
    samples = []
    for a, b in zip(env.starts, env.ends):
        length = float(np.linalg.norm(b - a))
        count = int(np.floor(length * density + GEOMETRY_EPS))
        if count == 0:
            continue
        t = (np.arange(count) + 0.5) / density / length
        samples.append(a + t[:, None] * (b - a))
    if not samples:
        return np.empty((0, 2))
    points = np.vstack(samples)
    origins = np.broadcast_to(eye, points.shape)
    blocked = _crossings(origins, points, env.starts, env.ends, 1.0 - LINE_OF_SIGHT_EPS).any(axis=1)
    return points[~blocked]


def observe(env: Environment, agent: AgentState, spec: EnvironmentSpec, iteration: int = 0) -> PointCloud:
    """Simulated panoramic scan: visible wall features plus spurious points, tagged inlier/outlier"""
    rng = make_rng(spec.seed, iteration)
    eye = np.asarray(agent.position, dtype=float)[:2]
    walls = _visible_wall_points(env, eye, spec.feature_density)
    n_wall = len(walls)
    if spec.sensor_noise > 0 and n_wall:
        walls = walls + rng.normal(0.0, spec.sensor_noise, walls.shape)
    heights = np.full(n_wall, spec.flight_height)
    if spec.height_jitter > 0 and n_wall:
        heights = heights + rng.normal(0.0, spec.height_jitter, n_wall)
    points = np.column_stack([walls, heights]) if n_wall else np.empty((0, 3))

    n_spurious = int(round(spec.outlier_rate * n_wall))
    if n_spurious and spec.outlier_radius > 0:
        # uniform in a ball around the agent
        direction = rng.normal(size=(n_spurious, 3))
        direction /= np.linalg.norm(direction, axis=1)[:, None]
        radius = spec.outlier_radius * rng.random(n_spurious) ** (1.0 / 3.0)
        spurious = np.asarray(agent.position, dtype=float) + direction * radius[:, None]
        points = np.vstack([points, spurious])
    else:
        n_spurious = 0
    tags = [TAG_INLIER] * n_wall + [TAG_OUTLIER] * n_spurious
    logger.debug(f'observation {iteration}: {n_wall} wall feature(s), {n_spurious} spurious')
    return PointCloud(points, tags)


def _closure_points(eye: np.ndarray, center: np.ndarray, radius: float, n_bins: int) -> np.ndarray:
    """Two points per bin on the near side of the circle (center, radius) seen from eye"""
    offset = center - eye
    distance = float(np.linalg.norm(offset))
    phi = float(np.arctan2(offset[1], offset[0]))
    alpha = float(np.arcsin(radius / distance))
    lo, hi = phi - alpha, phi + alpha
    width = TWO_PI / n_bins
    points = []
    for j in range(int(np.floor(lo / width)), int(np.ceil(hi / width))):
        a, b = max(lo, j * width), min(hi, (j + 1) * width)
        if b - a <= 1e-12:
            continue
        for theta in (a + (b - a) / 3, a + 2 * (b - a) / 3):
            delta = theta - phi
            along = distance * np.cos(delta)
            across = distance * np.sin(delta)
            t = along - np.sqrt(max(radius ** 2 - across ** 2, 0.0))
            points.append(eye + t * np.array([np.cos(theta), np.sin(theta)]))
    return np.array(points).reshape(-1, 2)


def mask_visited(cloud: PointCloud, agent: AgentState, n_bins: int = 360) -> PointCloud:
    """Append closure points on the arcs of earlier visited sectors so their directions read as covered"""
    if not agent.visited_sectors:
        return cloud
    plane = agent.plane
    eye = project_point(plane, np.asarray(agent.position, dtype=float))
    closures = []
    for sector in agent.visited_sectors:
        center = project_point(plane, as_point3(sector.center))
        if np.linalg.norm(center - eye) <= sector.radius:
            logger.warning(f'agent is inside the visited sector around {list(sector.center)}, sector ignored')
            continue
        closures.append(_closure_points(eye, center, sector.radius, n_bins))
    if not closures:
        return cloud
    closure2d = np.vstack(closures)
    closure = PointCloud(lift_from_plane(plane, closure2d), [TAG_CLOSURE] * len(closure2d))
    return cloud.concat(closure)


def triangle_plane(position, size: float, rng: np.random.Generator) -> AffinePlane:
    """Flight plane from a triangular flight of leg 'size' at constant height starting at position"""
    p1 = as_point3(position)
    theta = float(rng.uniform(0.0, TWO_PI))
    p2 = p1 + size * np.array([np.cos(theta), np.sin(theta), 0.0])
    p3 = p1 + size * np.array([np.cos(theta + np.pi / 3), np.sin(theta + np.pi / 3), 0.0])
    return plane_from_three_points(p1, p2, p3)


def free_space_connected(env: Environment, a, b, resolution: float = 0.05) -> bool:
    """Grid flood fill: can a reach b without crossing a wall?"""
    xmin, ymin, xmax, ymax = env.bbox
    # a quarter-cell shift keeps cell centers off integer wall coordinates
    origin = np.array([xmin, ymin]) - 2 * resolution + 0.25 * resolution
    nx = int(np.ceil((xmax - xmin) / resolution)) + 4
    ny = int(np.ceil((ymax - ymin) / resolution)) + 4
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing='ij')
    centers = origin + (np.column_stack([ix.ravel(), iy.ravel()]) + 0.5) * resolution
    index = np.arange(nx * ny).reshape(nx, ny)

    edges = []
    for here, there in ((index[:-1, :], index[1:, :]), (index[:, :-1], index[:, 1:])):
        u, v = here.ravel(), there.ravel()
        crossed = _crossings(centers[u], centers[v], env.starts, env.ends, 1.0 + GEOMETRY_EPS).any(axis=1)
        edges.append((u[~crossed], v[~crossed]))
    rows = np.concatenate([e[0] for e in edges])
    cols = np.concatenate([e[1] for e in edges])
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(nx * ny, nx * ny))
    _, labels = connected_components(graph, directed=False)

    def cell(p) -> int:
        i, j = np.floor((np.asarray(p, dtype=float)[:2] - origin) / resolution).astype(int)
        return int(index[np.clip(i, 0, nx - 1), np.clip(j, 0, ny - 1)])

    return bool(labels[cell(a)] == labels[cell(b)])
