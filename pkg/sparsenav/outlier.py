"""Minimax outlier removal with the jointly-submodular outliers score

The score of a candidate outlier set X ⊆ N1 against representatives Y ⊆ N2 is

    f(X ∪ Y) = Σ_{v ∈ N1\\X} max_{u ∈ Y} s(u, v) - (1/|N2|) Σ_{u, w ∈ Y} s(u, w) + λ|X|

with the max over an empty Y taken as 0 so that f(∅) = 0. Iterative X growing alternates a
greedy maximization over Y with an exact minimization over X, which is modular in X once Y and
the previous X are fixed.
"""
import heapq
import logging
from itertools import combinations
from math import comb
from typing import Callable, Dict, FrozenSet, Iterable, List, Sequence, Set, Tuple

import numpy as np

from sparsenav.config import GreedyOracle, OutlierParams, ScoreParams
from sparsenav.datatype import MinimaxCertificate, OutlierResult, PointCloud
from sparsenav.exceptions import EmptyCloudError, IndexOutOfRangeError, InstanceTooLargeError
from sparsenav.geometry import normalization_scale, pairwise_scores
from sparsenav.lib import make_rng


__all__ = ['GroundSets', 'eval_f', 'greedy_max_Y', 'lazy_greedy_max_Y', 'exact_min_X',
           'iterative_x_growing', 'max_over_Y', 'brute_force_minimax', 'approximation_ratio',
           'submodularity_violations', 'detection_quality', 'remove_outliers']


logger = logging.getLogger(__name__)

MAX_BRUTE_FORCE_N1 = 16
MAX_Y_CANDIDATES = 10**6


class GroundSets:
    """Two ground sets N1 (candidate outliers) and N2 (representatives) with their score matrices"""
    def __init__(self, n1, n2, score: ScoreParams = ScoreParams()):
        self.n1 = np.asarray(n1, dtype=float).reshape(-1, 3)
        self.n2 = np.asarray(n2, dtype=float).reshape(-1, 3)
        self.score = score
        # cross[u, v] = s(u ∈ N2, v ∈ N1)
        self.cross = pairwise_scores(self.n2, self.n1, score)
        self.within = pairwise_scores(self.n2, self.n2, score)

    @classmethod
    def from_cloud(cls, points, score: ScoreParams = ScoreParams()) -> 'GroundSets':
        """N1 = N2 = the cloud"""
        return cls(points, points, score)

    @property
    def size1(self) -> int:
        return len(self.n1)

    @property
    def size2(self) -> int:
        return len(self.n2)

    def __repr__(self) -> str:
        return f'{__class__.__name__}(|N1|={self.size1}, |N2|={self.size2})'


def _index_array(name: str, indices: Iterable[int], size: int) -> np.ndarray:
    arr = np.array(sorted(set(int(i) for i in indices)), dtype=int)
    bad = arr[(arr < 0) | (arr >= size)]
    if bad.size:
        raise IndexOutOfRangeError(name, int(bad[0]), size)
    return arr


def _kept_mask(g: GroundSets, X: np.ndarray) -> np.ndarray:
    keep = np.ones(g.size1, dtype=bool)
    keep[X] = False
    return keep


def _facility(g: GroundSets, keep: np.ndarray, Y: np.ndarray) -> float:
    if Y.size == 0:
        return 0.0
    return float(np.sum(np.max(g.cross[np.ix_(Y, keep.nonzero()[0])], axis=0)))


def _pair_term(g: GroundSets, Y: np.ndarray) -> float:
    if Y.size == 0:
        return 0.0
    return float(np.sum(g.within[np.ix_(Y, Y)])) / g.size2


def eval_f(g: GroundSets, X: Iterable[int], Y: Iterable[int], params: OutlierParams) -> float:
    """Outliers score of the joint set X ∪ Y"""
    X = _index_array('X', X, g.size1)
    Y = _index_array('Y', Y, g.size2)
    keep = _kept_mask(g, X)
    return _facility(g, keep, Y) - _pair_term(g, Y) + params.lam * X.size


def _marginal_gains(g: GroundSets, keep_idx: np.ndarray, best: np.ndarray, y_mask: np.ndarray,
                    candidates: np.ndarray) -> np.ndarray:
    """f(X ∪ Y ∪ {u}) - f(X ∪ Y) for every u in candidates

    best holds max_{w ∈ Y} s(w, v) for the kept v, -inf while Y is empty.
    """
    rows = g.cross[np.ix_(candidates, keep_idx)]
    empty = not y_mask.any()
    current = 0.0 if empty else float(np.sum(best))
    facility = np.sum(np.maximum(rows, best[None, :]), axis=1) - current
    pair = (2.0 * np.sum(g.within[np.ix_(candidates, y_mask.nonzero()[0])], axis=1)
            + g.within[candidates, candidates]) / g.size2
    return facility - pair


def greedy_max_Y(g: GroundSets, X: Iterable[int], params: OutlierParams) -> Tuple[int, ...]:
    """Greedy maximization of f(X ∪ Y) over |Y| ≤ k

    Adds the element of largest marginal gain (smallest index on ties) and stops once no
    gain is positive.
    """
    X = _index_array('X', X, g.size1)
    keep_idx = _kept_mask(g, X).nonzero()[0]
    y_mask = np.zeros(g.size2, dtype=bool)
    best = np.full(keep_idx.size, -np.inf)
    chosen: List[int] = []
    while len(chosen) < params.k and len(chosen) < g.size2:
        candidates = (~y_mask).nonzero()[0]
        gains = _marginal_gains(g, keep_idx, best, y_mask, candidates)
        pick = int(np.argmax(gains))
        if gains[pick] <= 0:
            break
        u = int(candidates[pick])
        chosen.append(u)
        y_mask[u] = True
        best = np.maximum(best, g.cross[u, keep_idx])
    return tuple(sorted(chosen))


def lazy_greedy_max_Y(g: GroundSets, X: Iterable[int], params: OutlierParams) -> Tuple[int, ...]:
    """Greedy with stale upper bounds in a priority queue

    Gives the same Y as greedy_max_Y when f(X ∪ ·) is submodular (all scores ≥ 0).
    """
    X = _index_array('X', X, g.size1)
    keep_idx = _kept_mask(g, X).nonzero()[0]
    y_mask = np.zeros(g.size2, dtype=bool)
    best = np.full(keep_idx.size, -np.inf)
    chosen: List[int] = []
    if g.size2 == 0:
        return ()
    all_idx = np.arange(g.size2)
    gains = _marginal_gains(g, keep_idx, best, y_mask, all_idx)
    heap = [(-float(gains[u]), u) for u in range(g.size2)]
    heapq.heapify(heap)
    while len(chosen) < params.k and heap:
        _, u = heapq.heappop(heap)
        fresh = float(_marginal_gains(g, keep_idx, best, y_mask, np.array([u]))[0])
        if heap and (-fresh, u) > heap[0]:
            heapq.heappush(heap, (-fresh, u))
            continue
        if fresh <= 0:
            break
        chosen.append(u)
        y_mask[u] = True
        best = np.maximum(best, g.cross[u, keep_idx])
    return tuple(sorted(chosen))


def _representative_strength(g: GroundSets, Y: np.ndarray) -> np.ndarray:
    """max_{u ∈ Y} s(u, v) for every v in N1, 0 when Y is empty"""
    if Y.size == 0:
        return np.zeros(g.size1)
    return np.max(g.cross[Y, :], axis=0)


def exact_min_X(g: GroundSets, X_prev: Iterable[int], Y: Iterable[int], params: OutlierParams) -> Tuple[int, ...]:
    """Exact minimizer of β·f(X ∪ X_prev) + f(X ∪ Y) over X ⊆ N1

    Both terms are modular in X: v joins X iff λ(1 + β[v ∉ X_prev]) < max_{u ∈ Y} s(u, v).
    Ties stay out.
    """
    X_prev = _index_array('X_prev', X_prev, g.size1)
    Y = _index_array('Y', Y, g.size2)
    cost = np.full(g.size1, params.lam * (1.0 + params.beta))
    cost[X_prev] = params.lam
    include = cost < _representative_strength(g, Y)
    return tuple(int(i) for i in include.nonzero()[0])


def _oracle(params: OutlierParams) -> Callable[[GroundSets, Iterable[int], OutlierParams], Tuple[int, ...]]:
    if params.oracle == GreedyOracle.lazy_greedy:
        return lazy_greedy_max_Y
    return greedy_max_Y


def iterative_x_growing(g: GroundSets, params: OutlierParams) -> OutlierResult:
    X: Set[int] = set(exact_min_X(g, (), (), params))
    trace: List[float] = []
    Y: Tuple[int, ...] = ()
    oracle = _oracle(params)
    iteration = 0
    for iteration in range(1, g.size1 + 2):
        Y = oracle(g, X, params)
        trace.append(eval_f(g, X, Y, params))
        X_new = set(exact_min_X(g, X, Y, params))
        logger.debug(f'iteration {iteration}: |X|={len(X)}, Y={list(Y)}, f={trace[-1]:.6g}')
        if X_new <= X:
            break
        X |= X_new
    outliers = tuple(sorted(X))
    inliers = tuple(i for i in range(g.size1) if i not in X)
    return OutlierResult(outliers, inliers, tuple(trace), tuple(Y), iteration)


def _y_candidates(size2: int, k: int) -> Iterable[Tuple[int, ...]]:
    for size in range(0, min(k, size2) + 1):
        yield from combinations(range(size2), size)


def _count_y_candidates(size2: int, k: int) -> int:
    return sum(comb(size2, j) for j in range(0, min(k, size2) + 1))


def max_over_Y(g: GroundSets, X: Iterable[int], params: OutlierParams) -> Tuple[float, Tuple[int, ...]]:
    """Exhaustive max of f(X ∪ Y) over |Y| ≤ k; the first maximizer in (size, lexicographic) order"""
    candidates = _count_y_candidates(g.size2, params.k)
    if candidates > MAX_Y_CANDIDATES:
        raise InstanceTooLargeError(g.size1, candidates)
    X = tuple(X)
    best_value, best_Y = -np.inf, ()
    for Y in _y_candidates(g.size2, params.k):
        value = eval_f(g, X, Y, params)
        if value > best_value:
            best_value, best_Y = value, Y
    return best_value, best_Y


def brute_force_minimax(g: GroundSets, params: OutlierParams) -> MinimaxCertificate:
    """τ = min over X ⊆ N1 of max over |Y| ≤ k of f(X ∪ Y), by enumeration"""
    candidates = _count_y_candidates(g.size2, params.k)
    if g.size1 > MAX_BRUTE_FORCE_N1 or candidates > MAX_Y_CANDIDATES:
        raise InstanceTooLargeError(g.size1, candidates)
    ys = list(_y_candidates(g.size2, params.k))
    # per candidate Y: the facility row over N1 and the pair term
    strength = np.vstack([_representative_strength(g, np.array(Y, dtype=int)) for Y in ys])
    pair = np.array([_pair_term(g, np.array(Y, dtype=int)) for Y in ys])
    per_x_max: Dict[FrozenSet[int], float] = {}
    tau, x_star = np.inf, ()
    for size in range(g.size1 + 1):
        for X in combinations(range(g.size1), size):
            keep = _kept_mask(g, np.array(X, dtype=int))
            values = strength[:, keep].sum(axis=1) - pair + params.lam * size
            value = float(np.max(values))
            per_x_max[frozenset(X)] = value
            if value < tau:
                tau, x_star = value, X
    return MinimaxCertificate(float(tau), tuple(x_star), per_x_max)


def approximation_ratio(result: OutlierResult, certificate: MinimaxCertificate, g: GroundSets,
                        params: OutlierParams) -> float:
    """max_Y f(X̂ ∪ Y) / τ"""
    value, _ = max_over_Y(g, result.outliers, params)
    if certificate.tau == 0:
        return 1.0 if value == 0 else float('inf')
    return value / certificate.tau


def submodularity_violations(g: GroundSets, params: OutlierParams, samples: int = 1000,
                             seed: int = 0, tol: float = 1e-9) -> Tuple[int, int]:
    """Sample S ⊆ T and u ∉ T over N1 ⊔ N2 and count f(u|S) < f(u|T) - tol

    Returns (checked, violations).
    """
    total = g.size1 + g.size2
    if total < 2:
        return 0, 0
    rng = make_rng(seed)
    violations = 0

    def split(members: Sequence[int]) -> Tuple[List[int], List[int]]:
        return [i for i in members if i < g.size1], [i - g.size1 for i in members if i >= g.size1]

    def value(members: Sequence[int]) -> float:
        X, Y = split(members)
        return eval_f(g, X, Y, params)

    for _ in range(samples):
        order = rng.permutation(total)
        u = int(order[0])
        t_size = int(rng.integers(0, total))
        T = [int(i) for i in order[1:1 + t_size]]
        S = [i for i in T if rng.random() < 0.5]
        gain_s = value(S + [u]) - value(S)
        gain_t = value(T + [u]) - value(T)
        if gain_s < gain_t - tol:
            violations += 1
    if violations:
        logger.info(f'{violations} of {samples} diminishing-returns checks failed')
    return samples, violations


def detection_quality(result: OutlierResult, truth: Iterable[int]) -> Tuple[float, float]:
    """(precision, recall) of result.outliers against the true outlier indices"""
    predicted = set(result.outliers)
    truth = set(int(i) for i in truth)
    hits = len(predicted & truth)
    precision = hits / len(predicted) if predicted else 1.0
    recall = hits / len(truth) if truth else 1.0
    return precision, recall


def remove_outliers(cloud: PointCloud, params: OutlierParams) -> OutlierResult:
    """Run iterative X growing with N1 = N2 = the cloud"""
    if len(cloud) == 0:
        raise EmptyCloudError('cannot remove outliers from an empty cloud')
    points = cloud.points
    scale = 1.0
    if params.score.normalize:
        scale = normalization_scale(points)
        points = points * scale
    g = GroundSets.from_cloud(points, params.score)
    result = iterative_x_growing(g, params)
    logger.info(f'outlier removal: {len(result.outliers)} of {len(cloud)} points removed '
                f'after {result.iterations} iteration(s)')
    return OutlierResult(result.outliers, result.inliers, result.objective_trace,
                         result.representatives, result.iterations, scale)
