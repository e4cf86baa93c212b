"""Reading and writing the cloud, plane, path, obstacle, environment and episode files"""
import csv
import json
import logging
from contextlib import contextmanager
from pathlib import Path as FilePath
from typing import Any, Dict, IO, Iterator, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from sparsenav.datatype import (TAGS, AffinePlane, AngularMap, ConvexPolygon, CoveredInterval, ExitPoint,
                                GapSegment, ObstacleSet, Path, PointCloud)
from sparsenav.exceptions import CloudParseError, DegenerateInputError, EmptyCloudError, FormatError, InvalidSpecError
from sparsenav.sim.env import Environment, EnvironmentSpec
from sparsenav.sim.episode import EpisodeLog, IterationRecord, Termination


__all__ = ['FORMAT_VERSION', 'fmt_real', 'parse_cloud', 'write_cloud', 'read_plane', 'write_plane',
           'read_path', 'write_path', 'read_obstacles', 'write_obstacles', 'read_env_spec',
           'write_environment', 'write_episode', 'read_episode']


logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
VERSION_LINE = f'# format_version {FORMAT_VERSION}'
CLOUD_HEADER = ['x', 'y', 'z']
PATH_HEADER = ['u', 'v']

Source = Union[str, FilePath, IO[str]]


def fmt_real(x: float) -> str:
    """17 significant digits, enough for an exact round trip"""
    return format(float(x), '.17g')


@contextmanager
def _open(target: Source, mode: str) -> Iterator[IO[str]]:
    if isinstance(target, (str, FilePath)):
        with open(target, mode, encoding='utf-8', newline='') as f:
            yield f
    else:
        yield target


def _name(source: Source) -> str:
    if isinstance(source, (str, FilePath)):
        return str(source)
    return getattr(source, 'name', '<stream>')


def _check_version(line: str, source: Source):
    """Accept '# format_version N' comment lines for N up to the current version"""
    parts = line.lstrip('#').split()
    if len(parts) == 2 and parts[0] == 'format_version':
        try:
            version = int(parts[1])
        except ValueError:
            raise FormatError(f'{_name(source)}: bad version line: {line!r}')
        if version > FORMAT_VERSION:
            raise FormatError(f'{_name(source)}: format_version {version} is newer than {FORMAT_VERSION}')


def parse_cloud(source: Source) -> PointCloud:
    """Read 'x,y,z[,tag]' rows; indices follow line order"""
    name = _name(source)
    points: List[List[float]] = []
    tags: List[str] = []
    with _open(source, 'r') as f:
        header = None
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or not ''.join(row).strip():
                continue
            if row[0].lstrip().startswith('#'):
                _check_version(','.join(row), source)
                continue
            cells = [c.strip() for c in row]
            if header is None:
                if cells not in (CLOUD_HEADER, CLOUD_HEADER + ['tag']):
                    raise CloudParseError(name, lineno, f"expected header 'x,y,z' or 'x,y,z,tag', got {','.join(cells)!r}")
                header = cells
                continue
            if len(cells) != len(header):
                raise CloudParseError(name, lineno, f'expected {len(header)} fields, got {len(cells)}')
            try:
                xyz = [float(c) for c in cells[:3]]
            except ValueError:
                raise CloudParseError(name, lineno, f'not a number in {",".join(cells[:3])!r}')
            if not np.all(np.isfinite(xyz)):
                raise CloudParseError(name, lineno, 'coordinates must be finite')
            if len(header) == 4:
                if cells[3] not in TAGS:
                    raise CloudParseError(name, lineno, f'unknown tag {cells[3]!r}')
                tags.append(cells[3])
            points.append(xyz)
    if header is None:
        raise EmptyCloudError(f'{name}: empty cloud file')
    return PointCloud(np.array(points).reshape(-1, 3), tags if len(header) == 4 else None)


def write_cloud(target: Source, cloud: PointCloud, tags: Optional[List[str]] = None):
    """Write a cloud; 'tags' overrides the cloud's own tags"""
    tags = tags if tags is not None else cloud.tags
    with _open(target, 'w') as f:
        f.write(VERSION_LINE + '\n')
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CLOUD_HEADER + (['tag'] if tags is not None else []))
        for i, p in enumerate(cloud.points):
            row = [fmt_real(c) for c in p]
            if tags is not None:
                row.append(tags[i])
            writer.writerow(row)


def _data_lines(f: IO[str], source: Source) -> Iterator[str]:
    for line in f:
        line = line.strip()
        if not line:
            continue
        if line.startswith('#'):
            _check_version(line, source)
            continue
        yield line


def read_plane(source: Source) -> AffinePlane:
    """9 reals, A column-major then v, separated by whitespace or commas"""
    with _open(source, 'r') as f:
        text = ' '.join(_data_lines(f, source))
    try:
        values = [float(x) for x in text.replace(',', ' ').split()]
        return AffinePlane.from_list(values)
    except (ValueError, DegenerateInputError) as e:
        raise FormatError(f'{_name(source)}: not a valid plane: {e}')


def write_plane(target: Source, plane: AffinePlane):
    with _open(target, 'w') as f:
        f.write(VERSION_LINE + '\n')
        f.write(' '.join(fmt_real(x) for x in plane.to_list()) + '\n')


def read_path(source: Source) -> Path:
    rows = []
    with _open(source, 'r') as f:
        lines = list(_data_lines(f, source))
    if not lines or [c.strip() for c in lines[0].split(',')] != PATH_HEADER:
        raise FormatError(f"{_name(source)}: expected header 'u,v'")
    for line in lines[1:]:
        try:
            u, v = (float(c) for c in line.split(','))
        except ValueError:
            raise FormatError(f'{_name(source)}: bad waypoint {line!r}')
        rows.append([u, v])
    if not rows:
        raise FormatError(f'{_name(source)}: path without waypoints')
    return Path(np.array(rows))


def write_path(target: Source, path: Path):
    with _open(target, 'w') as f:
        f.write(VERSION_LINE + '\n')
        f.write(','.join(PATH_HEADER) + '\n')
        for u, v in path.waypoints:
            f.write(f'{fmt_real(u)},{fmt_real(v)}\n')


def _floats(arr) -> List:
    return np.asarray(arr, dtype=float).tolist()


def obstacles_to_dict(obstacles: ObstacleSet) -> Dict[str, Any]:
    return {'polygons': [{'cluster': int(c), 'vertices': _floats(p.vertices)}
                         for p, c in zip(obstacles.polygons, obstacles.provenance)]}


def obstacles_from_dict(data: Dict[str, Any]) -> ObstacleSet:
    polygons = data.get('polygons', [])
    return ObstacleSet(tuple(ConvexPolygon(np.array(p['vertices'])) for p in polygons),
                       tuple(int(p['cluster']) for p in polygons))


def _dump(data: Dict[str, Any], f: IO[str], **kwargs):
    json.dump(data, f, ensure_ascii=False, allow_nan=False, **kwargs)


def read_obstacles(source: Source) -> ObstacleSet:
    with _open(source, 'r') as f:
        try:
            data = json.load(f)
            _check_version(f"format_version {data.get('format_version', FORMAT_VERSION)}", source)
            return obstacles_from_dict(data)
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise FormatError(f'{_name(source)}: not an obstacle file: {e}')


def write_obstacles(target: Source, obstacles: ObstacleSet, metadata: Optional[Dict[str, Any]] = None):
    data = {'format_version': FORMAT_VERSION, **(metadata or {}), **obstacles_to_dict(obstacles)}
    with _open(target, 'w') as f:
        _dump(data, f, indent=1)
        f.write('\n')


def read_env_spec(source: Source) -> EnvironmentSpec:
    with _open(source, 'r') as f:
        text = f.read()
    try:
        spec = EnvironmentSpec.model_validate_json(text)
    except ValidationError as e:
        raise InvalidSpecError(f'{_name(source)}: {e}')
    if spec.format_version > FORMAT_VERSION:
        raise InvalidSpecError(f'{_name(source)}: format_version {spec.format_version} is newer than {FORMAT_VERSION}')
    return spec


def write_environment(target: Source, env: Environment):
    """Environment spec as JSON, readable by read_env_spec"""
    data = env.spec.model_dump(mode='json')
    with _open(target, 'w') as f:
        _dump(data, f, indent=1)
        f.write('\n')


def _angular_map_to_dict(amap: AngularMap) -> Dict[str, Any]:
    return {'r': amap.r, 'n_bins': amap.n_bins,
            'covered': [[c.index, c.start, c.end, c.d_hat] for c in amap.covered]}


def _angular_map_from_dict(data: Dict[str, Any]) -> AngularMap:
    covered = tuple(CoveredInterval(int(i), float(s), float(e), float(d)) for i, s, e, d in data['covered'])
    return AngularMap(covered, float(data['r']), int(data['n_bins']))


def _exit_to_dict(exit_point: ExitPoint) -> Dict[str, Any]:
    gap = exit_point.gap
    return {'point2': _floats(exit_point.point2), 'point3': _floats(exit_point.point3),
            'angle': exit_point.angle, 'range': exit_point.range, 'agent2': _floats(exit_point.agent2),
            'gap': None if gap is None else [gap.start, gap.end, gap.midpoint, gap.width]}


def _exit_from_dict(data: Dict[str, Any], amap: Optional[AngularMap]) -> ExitPoint:
    gap = None if data.get('gap') is None else GapSegment(*[float(x) for x in data['gap']])
    return ExitPoint(np.array(data['point2']), np.array(data['point3']), float(data['angle']),
                     float(data['range']), np.array(data['agent2']), amap, gap)


def record_to_dict(record: IterationRecord) -> Dict[str, Any]:
    return {
        'type': 'iteration',
        'iteration': record.iteration,
        'position': _floats(record.position),
        'plane': record.plane.to_list(),
        'cloud': _floats(record.cloud.points),
        'tags': list(record.cloud.tags) if record.cloud.tags is not None else None,
        'outliers': list(record.outliers),
        'closure_count': record.closure_count,
        'angular_map': None if record.angular_map is None else _angular_map_to_dict(record.angular_map),
        'exit': None if record.exit is None else _exit_to_dict(record.exit),
        'obstacles': obstacles_to_dict(record.obstacles)['polygons'],
        'raw_path': None if record.raw_path is None else _floats(record.raw_path.waypoints),
        'path': None if record.path is None else _floats(record.path.waypoints),
        'next_position': None if record.next_position is None else _floats(record.next_position),
    }


def record_from_dict(data: Dict[str, Any]) -> IterationRecord:
    cloud = PointCloud(np.array(data['cloud']).reshape(-1, 3), data.get('tags'))
    outliers = tuple(int(i) for i in data['outliers'])
    dropped = set(outliers)
    amap = None if data['angular_map'] is None else _angular_map_from_dict(data['angular_map'])
    return IterationRecord(
        iteration=int(data['iteration']),
        position=np.array(data['position']),
        plane=AffinePlane.from_list(data['plane']),
        cloud=cloud,
        outliers=outliers,
        inliers=tuple(i for i in range(len(cloud)) if i not in dropped),
        closure_count=int(data.get('closure_count', 0)),
        angular_map=amap,
        exit=None if data['exit'] is None else _exit_from_dict(data['exit'], amap),
        obstacles=obstacles_from_dict({'polygons': data['obstacles']}),
        raw_path=None if data['raw_path'] is None else Path(np.array(data['raw_path'])),
        path=None if data['path'] is None else Path(np.array(data['path'])),
        next_position=None if data['next_position'] is None else np.array(data['next_position']),
    )


def write_episode(target: Source, log: EpisodeLog, env: Optional[Environment] = None):
    """One JSON object per line: a header, one record per iteration, the termination"""
    with _open(target, 'w') as f:
        header = {'type': 'episode', 'format_version': FORMAT_VERSION, 'metadata': log.metadata}
        if env is not None:
            header['environment'] = env.spec.model_dump(mode='json')
        for item in [header, *map(record_to_dict, log.records),
                     {'type': 'termination', 'reason': log.termination.value if log.termination else None}]:
            _dump(item, f, separators=(',', ':'))
            f.write('\n')


def read_episode(source: Source) -> EpisodeLog:
    """Inverse of write_episode; the environment spec (if any) lands in metadata['environment']"""
    log = EpisodeLog()
    reason = None
    with _open(source, 'r') as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                kind = item['type']
                if kind == 'episode':
                    if item.get('format_version', FORMAT_VERSION) > FORMAT_VERSION:
                        raise FormatError(f'{_name(source)}: unsupported format_version {item["format_version"]}')
                    log.metadata = dict(item.get('metadata', {}))
                    if 'environment' in item:
                        log.metadata['environment'] = item['environment']
                elif kind == 'iteration':
                    log.records.append(record_from_dict(item))
                elif kind == 'termination':
                    reason = item['reason']
                else:
                    raise FormatError(f'{_name(source)}: line {lineno}: unknown record type {kind!r}')
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, DegenerateInputError) as e:
                raise FormatError(f'{_name(source)}: line {lineno}: {e}')
    log.termination = None if reason is None else Termination(reason)
    return log
