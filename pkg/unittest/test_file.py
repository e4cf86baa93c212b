import io
import os
import sys
import pytest
import numpy as np


sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from sparsenav.datatype import TAG_OUTLIER, ConvexPolygon, ObstacleSet, Path, PointCloud
from sparsenav.exceptions import CloudParseError, EmptyCloudError, FormatError, InvalidSpecError
from sparsenav.file import (fmt_real, parse_cloud, read_env_spec, read_episode, read_obstacles, read_path,
                            read_plane, write_cloud, write_episode, write_obstacles, write_path, write_plane)
from sparsenav.sim import EpisodeLog, Termination, generate_env, run_exploration


data_dir = os.path.join(os.path.dirname(__file__), 'data')


def test_parse_cloud_minimal():
    cloud = parse_cloud(io.StringIO('x,y,z\n0,0,0\n'))
    assert len(cloud) == 1
    assert cloud.tags is None
    assert cloud.points.tolist() == [[0.0, 0.0, 0.0]]


def test_parse_cloud_comments_and_blank_lines():
    text = '# format_version 1\n# scanned at 1.5 m\nx,y,z\n\n1,2,3\n 4 , 5 , 6 \n'
    cloud = parse_cloud(io.StringIO(text))
    assert cloud.points.tolist() == [[1, 2, 3], [4, 5, 6]]


@pytest.mark.parametrize('text, lineno', [
    ('x,y,z\n0,0\n', 2),
    ('x,y,z\n0,0,0\n1,a,2\n', 3),
    ('x,y,z\n0,0,nan\n', 2),
    ('a,b,c\n0,0,0\n', 1),
    ('x,y,z,tag\n0,0,0,noise\n', 2),
])
def test_parse_cloud_malformed(text, lineno):
    with pytest.raises(CloudParseError) as e:
        parse_cloud(io.StringIO(text))
    assert e.value.lineno == lineno
    assert f':{lineno}' in str(e.value) or f'line {lineno}' in str(e.value)


@pytest.mark.parametrize('text', ['', '\n\n', '# format_version 1\n'])
def test_parse_cloud_empty(text):
    with pytest.raises(EmptyCloudError):
        parse_cloud(io.StringIO(text))


def test_parse_cloud_header_only():
    assert len(parse_cloud(io.StringIO('x,y,z\n'))) == 0


def test_newer_format_rejected():
    with pytest.raises(FormatError):
        parse_cloud(io.StringIO('# format_version 2\nx,y,z\n0,0,0\n'))
    with pytest.raises(FormatError):
        read_path(io.StringIO('# format_version 99\nu,v\n0,0\n'))


def test_cloud_tags_written_and_read(tmp_path):
    cloud = PointCloud([[0.1, 0.2, 0.3], [1e-17, -2.5, 1 / 3]])
    target = tmp_path / 'cloud.csv'
    write_cloud(target, cloud, ['inlier', TAG_OUTLIER])
    text = target.read_text(encoding='utf-8')
    assert text.splitlines()[1] == 'x,y,z,tag'
    assert text.splitlines()[3].endswith(',outlier')
    back = parse_cloud(target)
    assert back.tags == ('inlier', 'outlier')
    assert np.array_equal(back.points, cloud.points)


def test_fmt_real():
    assert fmt_real(0.1) == '0.10000000000000001'
    assert float(fmt_real(1 / 3)) == 1 / 3
    assert fmt_real(2) == '2'


def test_plane_file(tmp_path, flat_plane):
    target = tmp_path / 'plane.txt'
    write_plane(target, flat_plane)
    assert read_plane(target) == flat_plane
    # commas and line breaks are accepted as separators
    assert read_plane(io.StringIO('1,0,0\n0,1,0\n0 0 1\n')) == flat_plane
    with pytest.raises(FormatError):
        read_plane(io.StringIO('1 0 0 0 1 0 0 0\n'))
    with pytest.raises(FormatError):
        read_plane(io.StringIO('1 0 0 1 0 0 0 0 0\n'))


def test_path_file(tmp_path):
    path = Path([[0, 0], [1.5, 2.25], [3, -1]])
    target = tmp_path / 'path.csv'
    write_path(target, path)
    assert target.read_text(encoding='utf-8').splitlines()[1] == 'u,v'
    assert read_path(target) == path
    with pytest.raises(FormatError):
        read_path(io.StringIO('u,v\n'))
    with pytest.raises(FormatError):
        read_path(io.StringIO('x,y\n0,0\n'))


def test_obstacle_file(tmp_path):
    obstacles = ObstacleSet((ConvexPolygon([[0, 0], [1, 0], [0, 1]]), ConvexPolygon([[2, 2], [3, 2], [3, 3]])), (4, 9))
    target = tmp_path / 'obstacles.json'
    write_obstacles(target, obstacles, {'K': 10, 'seed': 0})
    back = read_obstacles(target)
    assert back.provenance == (4, 9)
    assert [p.vertices.tolist() for p in back.polygons] == [p.vertices.tolist() for p in obstacles.polygons]
    assert len(read_obstacles(io.StringIO('{"format_version": 1, "polygons": []}'))) == 0
    with pytest.raises(FormatError):
        read_obstacles(io.StringIO('{"format_version": 5, "polygons": []}'))
    with pytest.raises(FormatError):
        read_obstacles(io.StringIO('not json'))


def test_env_spec_file():
    spec = read_env_spec(os.path.join(data_dir, 'two_rooms.json'))
    assert len(spec.rooms) == 2 and spec.doorways[1].wall == 5
    with pytest.raises(InvalidSpecError):
        read_env_spec(io.StringIO('{"rooms": [], "start": [0, 0], "color": "red"}'))
    with pytest.raises(InvalidSpecError):
        read_env_spec(io.StringIO('{"format_version": 2, "rooms": [], "start": [0, 0]}'))


def test_episode_file(default_config):
    env = generate_env(read_env_spec(os.path.join(data_dir, 'closed_room.json')))
    log = run_exploration(env, default_config)
    buffer = io.StringIO()
    write_episode(buffer, log, env)
    lines = buffer.getvalue().splitlines()
    assert len(lines) == len(log) + 2
    assert lines[-1] == '{"type":"termination","reason":"no-exit"}'

    back = read_episode(io.StringIO(buffer.getvalue()))
    assert back.termination == Termination.no_exit
    assert back.metadata['environment']['seed'] == 3
    assert len(back) == len(log)
    assert back.records[0].cloud == log.records[0].cloud
    assert back.records[0].plane == log.records[0].plane
    assert back.records[0].inliers == log.records[0].inliers


def test_episode_file_errors():
    with pytest.raises(FormatError):
        read_episode(io.StringIO('{"type": "episode", "format_version": 3}\n'))
    with pytest.raises(FormatError):
        read_episode(io.StringIO('{"type": "snapshot"}\n'))
    with pytest.raises(FormatError):
        read_episode(io.StringIO('{"type": "iteration"}\n'))
    assert read_episode(io.StringIO('')).termination is None
    assert len(EpisodeLog()) == 0
