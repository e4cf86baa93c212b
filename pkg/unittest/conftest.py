import os
import sys
import pytest
import numpy as np


sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from sparsenav.config import load_config
from sparsenav.datatype import TAG_INLIER, TAG_OUTLIER, AffinePlane, PointCloud
from sparsenav.lib import make_rng
from sparsenav.sim import Doorway, EnvironmentSpec, Room, generate_env


data_dir = os.path.join(os.path.dirname(__file__), 'data')

# horizontal plane at height 1 whose 2D frame is the world xy frame
FLAT_PLANE = AffinePlane(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), np.array([0.0, 0.0, 1.0]))


def pytest_addoption(parser):
    parser.addoption(
        "--trials", action="store", type=int, default=0,
        help="number of seeded random instances per property test (0: the count each test declares)"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "trials(n): run the test once per seed 0..n-1")


def pytest_generate_tests(metafunc):
    if 'seed' in metafunc.fixturenames:
        marker = metafunc.definition.get_closest_marker('trials')
        count = marker.args[0] if marker else 1
        override = metafunc.config.getoption("--trials")
        if override > 0:
            count = override
        metafunc.parametrize('seed', range(count))


@pytest.fixture
def output_dir(tmp_path):
    out = tmp_path / 'output'
    out.mkdir()
    return out


@pytest.fixture
def default_config():
    return load_config(os.path.join(os.path.dirname(__file__), '..', 'config.yml'))


@pytest.fixture
def calibrated_config():
    """Outlier parameters tuned for the planted-outlier cloud (see tools/calibrate_outliers.py)"""
    return load_config(os.path.join(data_dir, 'calibrated.yml'))


def fibonacci_directions(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5 ** 0.5) * i
    rho = np.sqrt(1.0 - z ** 2)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def make_planted_cloud(seed: int, n_inliers: int = 200, n_outliers: int = 20, radius: float = 10.0):
    """Uniform points in the unit ball followed by well spread outliers at the given radius

    Returns the tagged cloud and the outlier indices.
    """
    rng = make_rng(seed)
    direction = rng.normal(size=(n_inliers, 3))
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    inliers = direction * rng.random(n_inliers)[:, None] ** (1.0 / 3.0)
    outliers = radius * fibonacci_directions(n_outliers) @ random_rotation(make_rng(seed, 1)).T
    cloud = PointCloud(np.vstack([inliers, outliers]), [TAG_INLIER] * n_inliers + [TAG_OUTLIER] * n_outliers)
    return cloud, tuple(range(n_inliers, n_inliers + n_outliers))


@pytest.fixture
def planted_cloud():
    return make_planted_cloud


def door_endpoints(spec: EnvironmentSpec, door: Doorway):
    room = spec.rooms[door.wall // 4]
    c = room.corners()
    a, b = c[door.wall % 4], c[(door.wall % 4 + 1) % 4]
    direction = (b - a) / np.linalg.norm(b - a)
    return a + direction * door.offset, a + direction * (door.offset + door.width)


def make_single_door_room(seed: int, density: float = 40.0):
    """10×10 room, agent near the center, one 3-unit doorway on a random wall

    From anywhere in [4, 6]² the doorway spans more than 20°. Returns (env, doorway endpoints).
    """
    rng = make_rng(seed)
    start = tuple(float(c) for c in rng.uniform(4.0, 6.0, 2))
    door = Doorway(wall=int(rng.integers(0, 4)), offset=float(rng.uniform(2.0, 5.0)), width=3.0)
    spec = EnvironmentSpec(rooms=[Room(xmin=0, ymin=0, xmax=10, ymax=10)], doorways=[door],
                           feature_density=density, seed=seed, start=start, flight_height=1.0)
    return generate_env(spec), door_endpoints(spec, door)


@pytest.fixture
def single_door_room():
    return make_single_door_room


@pytest.fixture
def flat_plane():
    return FLAT_PLANE
