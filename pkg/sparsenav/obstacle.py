"""Obstacle synthesis: K-means on the projected cloud, one convex hull per cluster"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from sparsenav.config import ObstacleParams
from sparsenav.datatype import ConvexPolygon, ObstacleSet
from sparsenav.geometry import orientation


__all__ = ['K_PRESETS', 'Clustering', 'kmeans', 'within_cluster_ss', 'convex_hull', 'point_in_polygon',
           'build_obstacles']


logger = logging.getLogger(__name__)

# cluster counts: 300 for sparse maps, 1000 as shipped
K_PRESETS = {'sparse': 300, 'default': 1000}
# half-width given to zero-area hulls
DEGENERATE_HALF_WIDTH = 1e-3
COLLINEAR_TOL = 1e-9
MITER_LIMIT = 2.0


@dataclass(frozen=True, eq=False)
class Clustering:
    labels: np.ndarray          # cluster index per point, 0..n_clusters-1
    centroids: np.ndarray
    wcss_trace: Tuple[float, ...]
    iterations: int
    converged: bool

    @property
    def clusters(self) -> List[np.ndarray]:
        """Point indices of every cluster, in cluster order"""
        return [np.flatnonzero(self.labels == c) for c in range(len(self.centroids))]


def within_cluster_ss(points, labels, centroids) -> float:
    points = np.asarray(points, dtype=float)
    return float(np.sum((points - np.asarray(centroids)[labels]) ** 2))


def _farthest_point_seeds(points: np.ndarray, k: int) -> np.ndarray:
    seeds = [0]
    nearest = np.linalg.norm(points - points[0], axis=1)
    while len(seeds) < k:
        pick = int(np.argmax(nearest))
        if nearest[pick] == 0.0:
            break   # fewer distinct points than k
        seeds.append(pick)
        nearest = np.minimum(nearest, np.linalg.norm(points - points[pick], axis=1))
    return points[seeds].copy()


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.argmin(cdist(points, centroids, 'sqeuclidean'), axis=1)


def _update(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    k = len(centroids)
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros_like(centroids)
    np.add.at(sums, labels, points)
    updated = centroids.copy()
    filled = counts > 0
    updated[filled] = sums[filled] / counts[filled, None]
    return updated


def kmeans(points, params: ObstacleParams) -> Clustering:
    """Lloyd iterations from farthest-point seeding until the labels stop changing"""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(points)
    if n == 0:
        raise ValueError('kmeans needs at least one point')
    if params.K >= n:
        labels = np.arange(n)
        return Clustering(labels, points.copy(), (0.0,), 0, True)

    centroids = _farthest_point_seeds(points, params.K)
    labels = _assign(points, centroids)
    trace = [within_cluster_ss(points, labels, centroids)]
    converged = False
    iteration = 0
    for iteration in range(1, params.max_iters + 1):
        centroids = _update(points, labels, centroids)
        new_labels = _assign(points, centroids)
        trace.append(within_cluster_ss(points, new_labels, centroids))
        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
    if not converged:
        logger.warning(f'K-means did not converge within {params.max_iters} iterations')

    # drop empty clusters, keep the order of the rest
    used = np.unique(labels)
    remap = np.full(len(centroids), -1)
    remap[used] = np.arange(len(used))
    logger.debug(f'K-means: {len(used)} non-empty clusters of {len(centroids)} after {iteration} iteration(s)')
    return Clustering(remap[labels], centroids[used], tuple(trace), iteration, converged)


def _monotone_chain(points: np.ndarray) -> np.ndarray:
    """Counterclockwise hull without collinear vertices"""
    pts = np.unique(points, axis=0)   # sorted by x, then y
    if len(pts) <= 2:
        return pts

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and orientation(chain[-2], chain[-1], p) <= COLLINEAR_TOL:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def _offset(hull: np.ndarray, margin: float) -> np.ndarray:
    """Push every edge of a counterclockwise hull outward by margin

    Sharp corners (miter longer than MITER_LIMIT·margin) are beveled.
    """
    if margin == 0:
        return hull
    edge = np.roll(hull, -1, axis=0) - hull
    normal = np.column_stack([edge[:, 1], -edge[:, 0]]) / np.linalg.norm(edge, axis=1)[:, None]
    n_prev = np.roll(normal, 1, axis=0)
    out = []
    # vertex i sits on edges i-1 and i
    for vertex, a, b in zip(hull, n_prev, normal):
        cos = float(np.dot(a, b))
        if np.sqrt(2.0 / (1.0 + cos)) > MITER_LIMIT:
            out.append(vertex + a * margin)
            out.append(vertex + b * margin)
        else:
            out.append(vertex + (a + b) * margin / (1.0 + cos))
    return np.array(out)


def _inflate_degenerate(pts: np.ndarray, margin: float) -> np.ndarray:
    half_width = max(margin, DEGENERATE_HALF_WIDTH)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if np.allclose(lo, hi, atol=0.0, rtol=0.0):
        x, y = lo
        return np.array([[x - half_width, y - half_width], [x + half_width, y - half_width],
                         [x + half_width, y + half_width], [x - half_width, y + half_width]])
    # segment between the two extreme points, thickened and extended by half_width
    a, b = pts[0], pts[-1]
    direction = (b - a) / np.linalg.norm(b - a)
    normal = np.array([-direction[1], direction[0]])
    a = a - direction * half_width
    b = b + direction * half_width
    return np.array([a - normal * half_width, b - normal * half_width,
                     b + normal * half_width, a + normal * half_width])


def convex_hull(cluster, margin: float = 0.0) -> ConvexPolygon:
    """Monotone-chain hull offset outward by margin; points and segments are inflated"""
    pts = np.asarray(cluster, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError('convex_hull needs at least one point')
    hull = _monotone_chain(pts)
    if len(hull) < 3:
        # hull endpoints after np.unique are the extreme points of a collinear set
        return ConvexPolygon(_inflate_degenerate(hull, margin))
    return ConvexPolygon(_offset(hull, margin))


def point_in_polygon(polygon: ConvexPolygon, p, tol: float = 1e-9) -> bool:
    """Closed containment test for a counterclockwise convex polygon"""
    v = polygon.vertices
    cross = orientation(v, np.roll(v, -1, axis=0), np.asarray(p, dtype=float)[None, :])
    return bool(np.all(cross >= -tol * np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))


def build_obstacles(cloud2d, params: ObstacleParams) -> ObstacleSet:
    """K-means then one hull per cluster; polygons may overlap"""
    cloud2d = np.asarray(cloud2d, dtype=float).reshape(-1, 2)
    if len(cloud2d) == 0:
        return ObstacleSet()
    clustering = kmeans(cloud2d, params)
    polygons = tuple(convex_hull(cloud2d[members], params.margin) for members in clustering.clusters)
    logger.debug(f'{len(polygons)} obstacle polygon(s) from {len(cloud2d)} points')
    return ObstacleSet(polygons, tuple(range(len(polygons))))
