import os
import sys
import pytest
import numpy as np
from itertools import combinations


sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from sparsenav.config import GreedyOracle, OutlierParams
from sparsenav.datatype import PointCloud
from sparsenav.exceptions import EmptyCloudError, IndexOutOfRangeError, InstanceTooLargeError
from sparsenav.lib import make_rng
from sparsenav.outlier import (GroundSets, approximation_ratio, brute_force_minimax, detection_quality, eval_f,
                               exact_min_X, greedy_max_Y, iterative_x_growing, lazy_greedy_max_Y, max_over_Y,
                               remove_outliers, submodularity_violations)


def random_ground_sets(rng, n1, n2=None, scale=2.0) -> GroundSets:
    points = rng.normal(size=(n1, 3)) * scale
    if n2 is None:
        return GroundSets.from_cloud(points)
    return GroundSets(points, rng.normal(size=(n2, 3)) * scale)


def lattice_cloud(rng, n) -> np.ndarray:
    """Jittered lattice points, every pairwise distance above 1 so that all scores are non-negative"""
    cells = rng.choice(6 ** 3, size=n, replace=False)
    lattice = np.column_stack(np.unravel_index(cells, (6, 6, 6))).astype(float)
    return 1.2 * lattice + rng.uniform(-0.05, 0.05, lattice.shape)


def all_subsets(n, max_size=None):
    max_size = n if max_size is None else min(n, max_size)
    for size in range(max_size + 1):
        yield from combinations(range(n), size)


def test_eval_f_empty_is_zero():
    g = GroundSets.from_cloud([[0, 0, 0], [3, 0, 0], [0, 4, 0]])
    assert eval_f(g, (), (), OutlierParams()) == 0.0


def test_eval_f_by_hand():
    # N1 = N2 = {a, b} at distance 2, s(a, b) = 0.5, s(a, a) = 0
    g = GroundSets.from_cloud([[0, 0, 0], [2, 0, 0]])
    params = OutlierParams(lam=0.6)
    # Y = {a}: facility max s over kept v = s(a,a) + s(a,b) = 0.5, pair term 0
    assert eval_f(g, (), (0,), params) == pytest.approx(0.5)
    # Y = {a, b}: facility 0.5 + 0.5, pair term (0.5 + 0.5) / 2
    assert eval_f(g, (), (0, 1), params) == pytest.approx(0.5)
    # X = {b}, Y = {a}: facility 0, λ|X| = 0.6
    assert eval_f(g, (1,), (0,), params) == pytest.approx(0.6)


def test_eval_f_index_checks():
    g = GroundSets.from_cloud([[0, 0, 0], [2, 0, 0]])
    with pytest.raises(IndexOutOfRangeError):
        eval_f(g, (2,), (), OutlierParams())
    with pytest.raises(IndexOutOfRangeError):
        greedy_max_Y(g, (-1,), OutlierParams())


@pytest.mark.trials(50)
def test_minimax_lower_bound(seed):
    rng = make_rng(seed)
    n = int(rng.integers(2, 9))
    params = OutlierParams(lam=float(rng.uniform(0.1, 1.0)), k=int(rng.integers(1, 3)), beta=1.0)
    g = random_ground_sets(rng, n)
    certificate = brute_force_minimax(g, params)
    result = iterative_x_growing(g, params)
    value, _ = max_over_Y(g, result.outliers, params)
    assert value >= certificate.tau - 1e-9
    assert value == pytest.approx(certificate.per_x_max[frozenset(result.outliers)], abs=1e-9)
    ratio = approximation_ratio(result, certificate, g, params)
    assert ratio == pytest.approx(value / certificate.tau) if certificate.tau else ratio in (1.0, float('inf'))


@pytest.mark.trials(100)
def test_exact_min_X_matches_enumeration(seed):
    rng = make_rng(seed)
    n = int(rng.integers(1, 11))
    params = OutlierParams(lam=float(rng.uniform(0.05, 0.8)), k=3, beta=float(rng.uniform(0.0, 2.0)))
    g = random_ground_sets(rng, n)
    X_prev = tuple(int(i) for i in np.flatnonzero(rng.random(n) < 0.3))
    Y = tuple(sorted(rng.choice(n, size=min(n, int(rng.integers(0, 4))), replace=False).tolist()))

    def objective(X):
        return params.beta * eval_f(g, set(X) | set(X_prev), (), params) + eval_f(g, X, Y, params)

    best_value, best_X = np.inf, None
    for X in all_subsets(n):
        value = objective(X)
        if value < best_value - 1e-12:
            best_value, best_X = value, X
    X_hat = exact_min_X(g, X_prev, Y, params)
    assert objective(X_hat) == pytest.approx(best_value, abs=1e-9)
    assert set(X_hat) == set(best_X)


@pytest.mark.trials(100)
def test_greedy_never_beats_enumeration(seed):
    rng = make_rng(seed)
    n2 = int(rng.integers(1, 13))
    params = OutlierParams(lam=0.6, k=int(rng.integers(1, 4)))
    g = random_ground_sets(rng, int(rng.integers(1, 6)), n2)
    X = tuple(int(i) for i in np.flatnonzero(rng.random(g.size1) < 0.3))
    optimum, _ = max_over_Y(g, X, params)
    Y = greedy_max_Y(g, X, params)
    assert len(Y) <= params.k
    assert eval_f(g, X, Y, params) <= optimum + 1e-12


@pytest.mark.trials(100)
def test_greedy_single_pick_is_optimal(seed):
    rng = make_rng(seed)
    params = OutlierParams(lam=0.6, k=1)
    g = random_ground_sets(rng, int(rng.integers(1, 6)), int(rng.integers(1, 13)))
    optimum, _ = max_over_Y(g, (), params)
    assert eval_f(g, (), greedy_max_Y(g, (), params), params) == pytest.approx(optimum, abs=1e-12)


def is_monotone_in_Y(g, X, params, max_size):
    for Y in all_subsets(g.size2, max_size):
        base = eval_f(g, X, Y, params)
        for u in range(g.size2):
            if u not in Y and eval_f(g, X, Y + (u,), params) < base - 1e-12:
                return False
    return True


@pytest.mark.trials(100)
def test_greedy_guarantee_on_monotone_instances(seed):
    rng = make_rng(seed)
    n = int(rng.integers(2, 9))
    params = OutlierParams(lam=0.6, k=int(rng.integers(1, 4)))
    g = GroundSets.from_cloud(lattice_cloud(rng, n))
    if not is_monotone_in_Y(g, (), params, 2 * params.k - 1):
        pytest.skip('objective not monotone in Y on this instance')
    optimum, _ = max_over_Y(g, (), params)
    for oracle in (greedy_max_Y, lazy_greedy_max_Y):
        value = eval_f(g, (), oracle(g, (), params), params)
        assert value >= (1 - 1 / np.e) * optimum - 1e-9


@pytest.mark.trials(30)
def test_lazy_greedy_matches_greedy_on_nonnegative_scores(seed):
    rng = make_rng(seed)
    params = OutlierParams(lam=0.6, k=int(rng.integers(1, 5)), oracle=GreedyOracle.lazy_greedy)
    g = GroundSets.from_cloud(lattice_cloud(rng, int(rng.integers(2, 15))))
    X = tuple(int(i) for i in np.flatnonzero(rng.random(g.size1) < 0.2))
    greedy_value = eval_f(g, X, greedy_max_Y(g, X, params), params)
    lazy_value = eval_f(g, X, lazy_greedy_max_Y(g, X, params), params)
    assert lazy_value == pytest.approx(greedy_value, abs=1e-9)


@pytest.mark.parametrize('n', [4, 8, 12])
def test_submodular_on_spread_clouds(n):
    g = GroundSets.from_cloud(lattice_cloud(make_rng(n), n))
    checked, violations = submodularity_violations(g, OutlierParams(), samples=1000, seed=n)
    assert checked == 1000
    assert violations == 0


def test_submodularity_reported_on_dense_clouds():
    # unit-ball clouds have negative scores; violations are counted, not forbidden
    g = GroundSets.from_cloud(make_rng(3).normal(size=(8, 3)) * 0.3)
    checked, violations = submodularity_violations(g, OutlierParams(), samples=200, seed=3)
    assert checked == 200
    assert 0 <= violations <= checked


def test_brute_force_refuses_large_instances():
    g = GroundSets.from_cloud(make_rng(0).normal(size=(17, 3)))
    with pytest.raises(InstanceTooLargeError):
        brute_force_minimax(g, OutlierParams(k=1))
    g = GroundSets.from_cloud(make_rng(0).normal(size=(60, 3)))
    with pytest.raises(InstanceTooLargeError):
        max_over_Y(g, (), OutlierParams(k=6))


def test_iterative_x_growing_monotone_X():
    g = GroundSets.from_cloud(np.vstack([make_rng(1).normal(size=(12, 3)) * 0.4, [[9, 0, 0], [0, -9, 0]]]))
    params = OutlierParams(lam=0.3, k=2)
    result = iterative_x_growing(g, params)
    assert set(result.outliers).isdisjoint(result.inliers)
    assert sorted(result.outliers + result.inliers) == list(range(g.size1))
    assert 1 <= result.iterations <= g.size1 + 1
    assert len(result.objective_trace) == result.iterations


def test_zero_lambda_removes_every_covered_point():
    cloud = [[0, 0, 0], [3, 0, 0], [0, 3, 0]]
    result = remove_outliers(PointCloud(cloud), OutlierParams(lam=0.0, k=1))
    assert result.inliers == ()


def test_remove_outliers_empty():
    with pytest.raises(EmptyCloudError):
        remove_outliers(PointCloud(), OutlierParams())


def test_shipped_defaults_keep_tight_cloud(planted_cloud):
    cloud, _ = planted_cloud(0, n_outliers=0)
    result = remove_outliers(cloud, OutlierParams())
    assert result.outliers == ()


@pytest.mark.trials(10)
def test_planted_outlier_recovery(seed, planted_cloud, calibrated_config):
    cloud, truth = planted_cloud(seed)
    result = remove_outliers(cloud, calibrated_config.outlier)
    precision, recall = detection_quality(result, truth)
    assert precision >= 0.9
    assert recall >= 0.9
    assert result.scale != 1.0


def test_detection_quality():
    result = iterative_x_growing(GroundSets.from_cloud([[0, 0, 0]]), OutlierParams())
    assert detection_quality(result, ()) == (1.0, 1.0)
    assert detection_quality(result, (0,)) == (1.0, 0.0)
