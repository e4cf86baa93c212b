"""Exit finder: largest uncovered angular gap around the agent on the projection plane"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from sparsenav.config import ExitParams, RadiusVariant
from sparsenav.datatype import (AffinePlane, AngularBin, AngularMap, CoveredInterval, ExitPoint, GapSegment,
                                PointCloud, as_point2)
from sparsenav.exceptions import EmptyMapError, NoGapError
from sparsenav.geometry import TWO_PI, MIN_ANGLE_DISTANCE, lift_from_plane, project_point, relative_angles


__all__ = ['bin_points', 'build_angular_map', 'largest_gap', 'find_exit']


logger = logging.getLogger(__name__)


def bin_points(m2d, x2d, n_bins: int = 360,
               r_variant: RadiusVariant = RadiusVariant.origin) -> Tuple[List[AngularBin], float]:
    """Dissect the projected points into n_bins sectors around x2d

    Bin i holds the points whose angle lies in [i·w, (i+1)·w) with w = 2π/n_bins. r is the mean
    of ||p|| (origin variant) or of ||p - x'|| (agent variant) over the binned points.
    """
    x2d = as_point2(x2d)
    m2d = np.asarray(m2d, dtype=float).reshape(-1, 2)
    if len(m2d) == 0:
        raise EmptyMapError('no projected point to bin')
    distance = np.linalg.norm(m2d - x2d, axis=1)
    coincident = distance < MIN_ANGLE_DISTANCE
    if coincident.any():
        logger.warning(f'{int(coincident.sum())} point(s) coincide with the agent and are skipped')
        m2d, distance = m2d[~coincident], distance[~coincident]
    if len(m2d) == 0:
        raise EmptyMapError('every projected point coincides with the agent')
    edges = np.arange(n_bins + 1) * (TWO_PI / n_bins)
    # membership is decided against the same edges the intervals carry
    index = np.searchsorted(edges[1:-1], relative_angles(x2d, m2d), side='right')
    bins = [AngularBin(i, m2d[index == i], (float(edges[i]), float(edges[i + 1]))) for i in range(n_bins)]
    if r_variant == RadiusVariant.agent:
        r = float(np.mean(distance))
    else:
        r = float(np.mean(np.linalg.norm(m2d, axis=1)))
    return bins, r


def build_angular_map(bins: List[AngularBin], x2d, r: Optional[float] = None) -> AngularMap:
    """Covered intervals (bins with more than one member) and their mean range

    r defaults to the mean of ||p|| over all binned points.
    """
    x2d = as_point2(x2d)
    covered = []
    for b in bins:
        if len(b) > 1:
            d_hat = float(np.mean(np.linalg.norm(b.members - x2d, axis=1)))
            covered.append(CoveredInterval(b.index, b.interval[0], b.interval[1], d_hat))
    if r is None:
        members = [b.members for b in bins if len(b)]
        r = float(np.mean(np.linalg.norm(np.vstack(members), axis=1))) if members else 0.0
    return AngularMap(tuple(covered), r, len(bins))


def _runs(free: np.ndarray, circular: bool) -> List[Tuple[int, int]]:
    """Maximal runs of free bins as (start bin, length)"""
    n = len(free)
    runs = []
    if circular:
        # start scanning right after a covered bin so no run is cut by the seam
        first = int(np.argmin(free))
        order = [(first + 1 + i) % n for i in range(n)]
    else:
        order = list(range(n))
    start, length = None, 0
    for i in order:
        if free[i]:
            if start is None:
                start, length = i, 0
            length += 1
        elif start is not None:
            runs.append((start, length))
            start = None
    if start is not None:
        runs.append((start, length))
    return runs


def largest_gap(amap: AngularMap, circular: bool = True) -> GapSegment:
    """Longest maximal arc without covered bins; ties go to the smallest start angle"""
    free = ~amap.covered_mask
    n, width = amap.n_bins, amap.bin_width
    if not free.any():
        raise NoGapError(f'all {n} angular bins are covered')
    if free.all():
        return GapSegment(0.0, TWO_PI, np.pi, TWO_PI)
    start, length = min(_runs(free, circular), key=lambda run: (-run[1], run[0]))
    # bin units keep the seam exact
    end_bin = start + length
    if circular:
        end_bin %= n
    midpoint = float(np.mod(start + length / 2, n) * width)
    return GapSegment(start * width, end_bin * width, midpoint, length * width)


def find_exit(m3d, x3d, plane: AffinePlane, params: ExitParams = ExitParams()) -> ExitPoint:
    """Exit point on the plane: x' + r·(cos s̄, sin s̄) lifted back to 3D"""
    points = m3d.points if isinstance(m3d, PointCloud) else np.asarray(m3d, dtype=float).reshape(-1, 3)
    m2d = project_point(plane, points)
    x2d = project_point(plane, np.asarray(x3d, dtype=float).reshape(3))
    bins, r = bin_points(m2d, x2d, params.n_bins, params.r_variant)
    amap = build_angular_map(bins, x2d, r)
    gap = largest_gap(amap, params.circular_gap)
    y2d = x2d + r * np.array([np.cos(gap.midpoint), np.sin(gap.midpoint)])
    y3d = lift_from_plane(plane, y2d)
    logger.info(f'exit at {np.degrees(gap.midpoint):.1f}° (gap {np.degrees(gap.width):.1f}°), r={r:.3f}, '
                f'{len(amap.covered)}/{amap.n_bins} bins covered')
    return ExitPoint(y2d, y3d, gap.midpoint, r, x2d, amap, gap)
