"""Planes, projections, angles and the pairwise distance score"""
import logging

import numpy as np
from scipy.spatial.distance import cdist, pdist

from sparsenav.config import ScoreParams
from sparsenav.datatype import AffinePlane, as_point2, as_point3
from sparsenav.exceptions import DegenerateInputError


__all__ = ['plane_from_three_points', 'project_point', 'lift_from_plane', 'point_plane_residual',
           'distance_score', 'pairwise_scores', 'normalization_scale', 'relative_angle',
           'relative_angles', 'orientation', 'segments_intersect']


logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
MIN_TRIANGLE_AREA = 1e-12
MIN_ANGLE_DISTANCE = 1e-12


def plane_from_three_points(p1, p2, p3) -> AffinePlane:
    """Plane through three points, v = p1, basis from Gram-Schmidt on (p2-p1, p3-p1)"""
    p1, p2, p3 = as_point3(p1), as_point3(p2), as_point3(p3)
    e1 = p2 - p1
    e2 = p3 - p1
    area = 0.5 * np.linalg.norm(np.cross(e1, e2))
    if area <= MIN_TRIANGLE_AREA:
        raise DegenerateInputError(f'points are collinear or coincident (triangle area {area:.3g})')
    a1 = e1 / np.linalg.norm(e1)
    w = e2 - np.dot(e2, a1) * a1
    a2 = w / np.linalg.norm(w)
    return AffinePlane(np.column_stack([a1, a2]), p1)


def project_point(plane: AffinePlane, p) -> np.ndarray:
    """A^T (p - v); p may be a single point or an (n, 3) array"""
    p = np.asarray(p, dtype=float)
    return (p - plane.offset) @ plane.basis


def lift_from_plane(plane: AffinePlane, q) -> np.ndarray:
    """A q + v; q may be a single point or an (n, 2) array"""
    q = np.asarray(q, dtype=float)
    return q @ plane.basis.T + plane.offset


def point_plane_residual(plane: AffinePlane, p) -> float:
    """Distance between p and the plane"""
    p = as_point3(p)
    return float(np.linalg.norm(p - lift_from_plane(plane, project_point(plane, p))))


def distance_score(a, b, params: ScoreParams = ScoreParams()) -> float:
    """s = 1 - 1/d(a, b), or 0 for pairs closer than params.epsilon"""
    a, b = as_point3(a), as_point3(b)
    d = float(np.sqrt(np.sum((a - b) ** 2)))
    if d < params.epsilon:
        return 0.0
    return 1.0 - 1.0 / d


def pairwise_scores(a, b, params: ScoreParams = ScoreParams()) -> np.ndarray:
    """Matrix of distance_score(a[i], b[j])"""
    a = np.asarray(a, dtype=float).reshape(-1, 3)
    b = np.asarray(b, dtype=float).reshape(-1, 3)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    d = cdist(a, b)
    close = d < params.epsilon
    with np.errstate(divide='ignore'):
        s = 1.0 - 1.0 / np.where(close, 1.0, d)
    s[close] = 0.0
    return s


def normalization_scale(points) -> float:
    """Factor that brings the median pairwise distance of 'points' to 1"""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) < 2:
        return 1.0
    median = float(np.median(pdist(points)))
    if median <= 0.0:
        logger.warning('more than half of the point pairs coincide, the cloud is not rescaled')
        return 1.0
    return 1.0 / median


def relative_angles(origin, points) -> np.ndarray:
    """Angles of points - origin in [0, 2π); no check for coincident points"""
    origin = np.asarray(origin, dtype=float).reshape(2)
    delta = np.asarray(points, dtype=float).reshape(-1, 2) - origin
    angles = np.mod(np.arctan2(delta[:, 1], delta[:, 0]), TWO_PI)
    # tiny negative angles round up to exactly 2π
    angles[angles >= TWO_PI] = 0.0
    return angles


def relative_angle(origin, p) -> float:
    origin, p = as_point2(origin), as_point2(p)
    if np.hypot(*(p - origin)) < MIN_ANGLE_DISTANCE:
        raise DegenerateInputError(f'angle of {p.tolist()} seen from itself is undefined')
    return float(relative_angles(origin, p)[0])


def orientation(a, b, c) -> np.ndarray:
    """Twice the signed area of (a, b, c); positive for a left turn. Broadcasts over rows."""
    a, b, c = np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(c, dtype=float)
    return ((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
            - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))


def segments_intersect(a, b, starts, ends) -> np.ndarray:
    """For every segment starts[i]-ends[i], whether it meets the closed segment a-b

    Touching and collinear overlap count as intersection.
    """
    a = np.asarray(a, dtype=float).reshape(2)
    b = np.asarray(b, dtype=float).reshape(2)
    p = np.asarray(starts, dtype=float).reshape(-1, 2)
    q = np.asarray(ends, dtype=float).reshape(-1, 2)
    d1 = orientation(p, q, a)
    d2 = orientation(p, q, b)
    d3 = orientation(a, b, p)
    d4 = orientation(a, b, q)
    straddle = (d1 * d2 <= 0) & (d3 * d4 <= 0)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    boxes = ((np.minimum(p, q) <= hi) & (lo <= np.maximum(p, q))).all(axis=1)
    return straddle & boxes
