"""RRT over convex polygon obstacles and shortcut refinement of the resulting path"""
import logging
from typing import List, Optional

import numpy as np

from sparsenav.config import Bounds, PlannerParams
from sparsenav.datatype import ObstacleSet, Path, as_point2
from sparsenav.exceptions import DegenerateInputError, PlanningFailureError
from sparsenav.geometry import orientation, segments_intersect
from sparsenav.lib import make_rng


__all__ = ['points_in_obstacles', 'segment_collides', 'path_collides', 'default_bounds', 'path_length',
           'rrt_plan', 'shortcut_refine']


logger = logging.getLogger(__name__)

CONTAINMENT_TOL = 1e-12
SAME_POINT = 1e-12


def points_in_obstacles(points, obstacles: ObstacleSet) -> np.ndarray:
    """For every point, whether it lies inside or on the boundary of some polygon"""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(obstacles) == 0:
        return np.zeros(len(points), dtype=bool)
    starts, ends = obstacles.edge_starts, obstacles.edge_ends
    # (points, edges): left-of-edge test for every counterclockwise edge
    cross = orientation(starts[None, :, :], ends[None, :, :], points[:, None, :])
    worst = np.minimum.reduceat(cross, obstacles.polygon_offsets, axis=1)
    return (worst >= -CONTAINMENT_TOL).any(axis=1)


def segment_collides(a, b, obstacles: ObstacleSet) -> bool:
    """Whether the closed segment a-b touches any polygon"""
    if len(obstacles) == 0:
        return False
    if segments_intersect(a, b, obstacles.edge_starts, obstacles.edge_ends).any():
        return True
    # no edge crossed: the segment is either fully inside one polygon or outside all of them
    return bool(points_in_obstacles(np.asarray(a, dtype=float), obstacles)[0])


def path_collides(path: Path, obstacles: ObstacleSet) -> bool:
    w = path.waypoints
    if len(w) == 1:
        return segment_collides(w[0], w[0], obstacles)
    return any(segment_collides(w[i], w[i + 1], obstacles) for i in range(len(w) - 1))


def default_bounds(start, goal, obstacles: ObstacleSet) -> Bounds:
    """Bounding box of the obstacles, start and goal, grown by 10% of its span on each side"""
    pts = np.vstack([np.asarray(start, dtype=float).reshape(1, 2), np.asarray(goal, dtype=float).reshape(1, 2),
                     obstacles.vertices])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    center = (lo + hi) / 2
    lo, hi = center - 0.6 * span, center + 0.6 * span
    return Bounds(xmin=float(lo[0]), ymin=float(lo[1]), xmax=float(hi[0]), ymax=float(hi[1]))


def path_length(waypoints) -> float:
    return Path(waypoints).length


def _trace_back(nodes: np.ndarray, parents: List[int], leaf: int) -> np.ndarray:
    chain = []
    while leaf >= 0:
        chain.append(leaf)
        leaf = parents[leaf]
    return nodes[chain[::-1]]


def rrt_plan(start, goal, obstacles: ObstacleSet, params: PlannerParams,
             rng: Optional[np.random.Generator] = None) -> Path:
    """Grow a tree from start until a node comes within params.tolerance of goal"""
    start, goal = as_point2(start), as_point2(goal)
    if segment_collides(start, start, obstacles):
        raise DegenerateInputError(f'start {start.tolist()} lies inside an obstacle')
    if np.linalg.norm(goal - start) <= SAME_POINT:
        return Path(start[None, :])
    if rng is None:
        rng = make_rng(params.seed)
    bounds = params.bounds or default_bounds(start, goal, obstacles)
    lo = np.array([bounds.xmin, bounds.ymin])
    hi = np.array([bounds.xmax, bounds.ymax])

    nodes = np.empty((params.max_iters + 1, 2))
    nodes[0] = start
    parents = [-1]
    count = 1
    for iteration in range(1, params.max_iters + 1):
        if rng.random() < params.goal_bias:
            sample = goal
        else:
            sample = rng.uniform(lo, hi)
        nearest = int(np.argmin(np.sum((nodes[:count] - sample) ** 2, axis=1)))
        direction = sample - nodes[nearest]
        distance = float(np.linalg.norm(direction))
        if distance <= SAME_POINT:
            continue
        new = nodes[nearest] + direction * min(1.0, params.step_size / distance)
        if segment_collides(nodes[nearest], new, obstacles):
            continue
        nodes[count] = new
        parents.append(nearest)
        count += 1
        if np.linalg.norm(new - goal) <= params.tolerance:
            path = Path(_trace_back(nodes[:count], parents, count - 1))
            logger.debug(f'RRT reached the goal after {iteration} iterations, {count} nodes, '
                         f'path length {path.length:.3f}')
            return path
    raise PlanningFailureError(params.max_iters, count)


def shortcut_refine(path: Path, obstacles: ObstacleSet) -> Path:
    """Replace sub-paths by single collision-free edges, farthest shortcut first, until nothing changes"""
    points = list(path.waypoints)
    while True:
        refined = [points[0]]
        i = 0
        while i < len(points) - 1:
            j = len(points) - 1
            while j > i + 1 and segment_collides(points[i], points[j], obstacles):
                j -= 1
            refined.append(points[j])
            i = j
        if len(refined) == len(points):
            break
        points = refined
    return Path(np.array(points))
