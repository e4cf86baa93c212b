import os
import sys
import pytest
import numpy as np
from lxml import etree


sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from sparsenav.__main__ import run_cli
from sparsenav.datatype import TAG_OUTLIER, ObstacleSet, Path, PointCloud
from sparsenav.file import parse_cloud, read_episode, read_obstacles, read_path, write_cloud, write_plane
from sparsenav import svg
from conftest import FLAT_PLANE, make_planted_cloud


data_dir = os.path.join(os.path.dirname(__file__), 'data')
NS = {'svg': 'http://www.w3.org/2000/svg'}


def ring_cloud(target, degrees=range(300), radius=5.0):
    angles = np.radians([d + f for d in degrees for f in (0.3, 0.6)])
    points = np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.ones(len(angles))])
    write_cloud(target, PointCloud(points))
    return str(target)


def svg_ids(data: bytes):
    return set(etree.fromstring(data).xpath('//@id'))


def test_usage_errors(capsys):
    assert run_cli([]) == 2
    assert run_cli(['gen', os.path.join(data_dir, 'two_rooms.json')]) == 2
    assert run_cli(['exit', 'cloud.csv', '--pose', '0,0,1']) == 2
    assert run_cli(['exit', 'cloud.csv', '--pose', '0,0', '--tri', '0,0,1', '1,0,1', '0,1,1']) == 2
    assert run_cli(['clean', 'cloud.csv', '-o', 'no_equals_sign']) == 2
    assert 'usage' in capsys.readouterr().err


def test_missing_and_malformed_files(tmp_path, capsys):
    assert run_cli(['clean', str(tmp_path / 'missing.csv'), '-d', str(tmp_path)]) == 1
    bad = tmp_path / 'bad.csv'
    bad.write_text('x,y,z\n0,0\n', encoding='utf-8')
    assert run_cli(['clean', str(bad), '-d', str(tmp_path)]) == 1
    assert 'line 2' in capsys.readouterr().err
    assert run_cli(['render', str(bad), '-d', str(tmp_path)]) == 1


def test_clean_tags_planted_outliers(tmp_path, capsys):
    cloud, truth = make_planted_cloud(0)
    source = tmp_path / 'planted.csv'
    write_cloud(source, cloud)
    target = tmp_path / 'clean.csv'
    code = run_cli(['clean', str(source), '-c', os.path.join(data_dir, 'calibrated.yml'), '--out', str(target)])
    assert code == 0
    tagged = set(parse_cloud(target).tagged(TAG_OUTLIER).tolist())
    assert len(tagged & set(truth)) >= 0.9 * len(truth)
    assert len(tagged - set(truth)) <= 0.1 * len(tagged)
    assert f'-> {target}' in capsys.readouterr().out


def test_exit_on_ring(tmp_path, capsys):
    cloud = ring_cloud(tmp_path / 'ring.csv')
    plane_file = tmp_path / 'plane.txt'
    write_plane(plane_file, FLAT_PLANE)
    for plane_args in (['--tri', '0,0,1', '1,0,1', '0,1,1'], ['--plane', str(plane_file)]):
        assert run_cli(['exit', cloud, '--pose', '0,0,1', *plane_args, '-d', str(tmp_path)]) == 0
        out = capsys.readouterr().out
        angle = float(out.split('exit angle:')[1].split('deg')[0])
        assert abs(angle - 330.0) <= 1.0
        assert 'range: 5.000000' in out


def test_exit_svg(tmp_path):
    cloud = ring_cloud(tmp_path / 'ring.csv')
    target = tmp_path / 'map.svg'
    assert run_cli(['exit', cloud, '--pose', '0,0,1', '--tri', '0,0,1', '1,0,1', '0,1,1', '--svg', str(target)]) == 0
    root = etree.fromstring(target.read_bytes())
    assert root.tag == '{http://www.w3.org/2000/svg}svg'
    # one radial segment per covered bin
    assert len(root.xpath('//svg:g[@id="ranges"]/svg:line', namespaces=NS)) == 300
    assert {'agent', 'exit', 'features'} <= svg_ids(target.read_bytes())


def test_exit_closed_ring_fails(tmp_path, capsys):
    cloud = ring_cloud(tmp_path / 'ring.csv', degrees=range(360))
    assert run_cli(['exit', cloud, '--pose', '0,0,1', '--tri', '0,0,1', '1,0,1', '0,1,1']) == 1
    assert 'exit' in capsys.readouterr().err


def test_plan_writes_paths(tmp_path):
    cloud = ring_cloud(tmp_path / 'ring.csv')
    args = ['plan', cloud, '--pose', '0,0,1', '--tri', '0,0,1', '1,0,1', '0,1,1', '--goal', '4,-2',
            '--seed', '3', '-d', str(tmp_path), '-o', 'obstacle.K=40', '--svg', str(tmp_path / 'plan.svg')]
    assert run_cli(args) == 0
    path = read_path(tmp_path / 'path.csv')
    raw = read_path(tmp_path / 'path_raw.csv')
    assert np.array_equal(path.start, [0, 0]) and np.array_equal(path.start, raw.start)
    assert path.length <= raw.length + 1e-9
    assert 0 < len(read_obstacles(tmp_path / 'obstacles.json')) <= 40
    assert {'path', 'raw-path', 'obstacles'} <= svg_ids((tmp_path / 'plan.svg').read_bytes())


def test_gen_explore_render_reproducible(tmp_path):
    spec = os.path.join(data_dir, 'two_rooms.json')
    outputs = []
    for name in ('a', 'b'):
        out = tmp_path / name
        assert run_cli(['gen', spec, '--seed', '7', '-d', str(out)]) == 0
        assert run_cli(['explore', spec, '--seed', '7', '-d', str(out), '--svg', str(out / 'run.svg')]) == 0
        assert run_cli(['render', str(out / 'episode.jsonl'), '-d', str(out)]) == 0
        outputs.append({f: (out / f).read_bytes() for f in
                        ('environment.json', 'cloud.csv', 'plane.txt', 'episode.jsonl', 'episode.svg', 'run.svg')})
    assert outputs[0] == outputs[1]
    log = read_episode(tmp_path / 'a' / 'episode.jsonl')
    ids = svg_ids(outputs[0]['episode.svg'])
    assert {f'path-{i}' for i in range(len(log))} <= ids
    assert 'walls' in ids
    assert outputs[0]['episode.svg'] == outputs[0]['run.svg']


def test_render_single_iteration(tmp_path):
    spec = os.path.join(data_dir, 'two_rooms.json')
    assert run_cli(['explore', spec, '--seed', '7', '-d', str(tmp_path)]) == 0
    log_file = str(tmp_path / 'episode.jsonl')
    for scene, expected in (('cloud', 'features'), ('map', 'ranges'), ('plan', 'path')):
        target = tmp_path / f'{scene}.svg'
        assert run_cli(['render', log_file, '--iteration', '0', '--scene', scene, '--out', str(target)]) == 0
        assert expected in svg_ids(target.read_bytes())
    assert run_cli(['render', log_file, '--iteration', '99', '--out', str(tmp_path / 'x.svg')]) == 1


def test_explore_closed_room(tmp_path, capsys):
    assert run_cli(['explore', os.path.join(data_dir, 'closed_room.json'), '--seed', '3', '-d', str(tmp_path)]) == 0
    assert 'termination: no-exit' in capsys.readouterr().out
    # the only iteration has no angular map to draw
    assert run_cli(['render', str(tmp_path / 'episode.jsonl'), '--iteration', '0', '--scene', 'map',
                    '-d', str(tmp_path)]) == 1


def test_explore_needs_spec(tmp_path):
    assert run_cli(['explore', '--seed', '1', '-d', str(tmp_path)]) == 1


def test_svg_empty_inputs():
    doc = svg.render_plan(np.empty((0, 2)), ObstacleSet(), Path([[0.0, 0.0]]), (0.0, 0.0))
    root = etree.fromstring(svg.to_bytes(doc))
    assert len(root.xpath('//svg:g[@id="obstacles"]/*', namespaces=NS)) == 0
    assert svg.to_bytes(svg.render_episode([])) == svg.to_bytes(svg.render_episode([]))
    assert svg.render_svg('episode', []) == svg.to_bytes(svg.render_episode([]))
    with pytest.raises(ValueError):
        svg.render_svg('histogram', [])
