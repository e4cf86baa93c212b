"""SVG renders of clouds, angular maps, obstacle maps and whole episodes

Colors: features blue, agent red, per-bin mean range green, exit yellow X, obstacles grey,
refined path black (raw path dashed), ground-truth walls dark grey, closure points purple.
"""
import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np
from lxml.builder import ElementMaker
from lxml.etree import tostring

from sparsenav.datatype import TAG_CLOSURE, TAG_OUTLIER, AngularMap, ExitPoint, ObstacleSet, Path
from sparsenav.geometry import lift_from_plane


__all__ = ['render_cloud', 'render_angular_map', 'render_plan', 'render_episode', 'render_svg', 'to_bytes']


logger = logging.getLogger(__name__)

SVG_NS = 'http://www.w3.org/2000/svg'
E = ElementMaker(namespace=SVG_NS, nsmap={None: SVG_NS})

CANVAS = 800            # pixels on the longer side
PAD = 0.05              # fraction of the scene span
COLORS = {
    'feature': 'blue',
    'outlier': 'orange',
    'closure': 'purple',
    'agent': 'red',
    'range': 'green',
    'exit': 'yellow',
    'obstacle': 'grey',
    'path': 'black',
    'wall': 'dimgrey',
}


def _n(x: float) -> str:
    return f'{float(x):.4f}'


class _Canvas:
    """Maps scene coordinates (y up) to SVG user units (y down)"""
    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(points) == 0:
            points = np.zeros((1, 2))
        lo, hi = points.min(axis=0), points.max(axis=0)
        span = np.maximum(hi - lo, 1e-6)
        pad = PAD * span.max()
        self.lo = lo - pad
        self.span = span + 2 * pad
        self.scale = CANVAS / self.span.max()
        self.size = self.span * self.scale
        self.unit = 1.0 / self.scale     # one pixel in scene units

    def xy(self, p) -> tuple:
        p = np.asarray(p, dtype=float)
        return (p[0] - self.lo[0]) * self.scale, self.size[1] - (p[1] - self.lo[1]) * self.scale

    def points_attr(self, pts) -> str:
        return ' '.join(f'{_n(x)},{_n(y)}' for x, y in (self.xy(p) for p in pts))

    def document(self, title: str, layers: Iterable):
        w, h = self.size
        return E.svg(E.title(title), *layers,
                     width=_n(w), height=_n(h), viewBox=f'0 0 {_n(w)} {_n(h)}')


def _dots(canvas: _Canvas, pts, color: str, name: str, radius: float = 1.5):
    group = E.g(id=name, fill=color)
    for p in np.asarray(pts, dtype=float).reshape(-1, 2):
        x, y = canvas.xy(p)
        group.append(E.circle(cx=_n(x), cy=_n(y), r=_n(radius)))
    return group


def _agent(canvas: _Canvas, p):
    x, y = canvas.xy(p)
    return E.circle(id='agent', cx=_n(x), cy=_n(y), r='5', fill=COLORS['agent'])


def _exit_marker(canvas: _Canvas, p):
    x, y = canvas.xy(p)
    s = 6
    return E.g(E.line(x1=_n(x - s), y1=_n(y - s), x2=_n(x + s), y2=_n(y + s)),
               E.line(x1=_n(x - s), y1=_n(y + s), x2=_n(x + s), y2=_n(y - s)),
               id='exit', stroke=COLORS['exit'], **{'stroke-width': '3'})


def _obstacles(canvas: _Canvas, obstacles: ObstacleSet):
    group = E.g(id='obstacles', fill=COLORS['obstacle'], **{'fill-opacity': '0.6'})
    for poly in obstacles.polygons:
        group.append(E.polygon(points=canvas.points_attr(poly.vertices)))
    return group


def _polyline(canvas: _Canvas, pts, name: str, dashed: bool = False):
    attrs = {'fill': 'none', 'stroke': COLORS['path'], 'stroke-width': '2'}
    if dashed:
        attrs['stroke-dasharray'] = '6,4'
        attrs['stroke-opacity'] = '0.5'
    return E.polyline(id=name, points=canvas.points_attr(pts), **attrs)


def _legend(entries: Sequence[str]):
    group = E.g(id='legend', **{'font-size': '12', 'font-family': 'sans-serif'})
    for i, key in enumerate(entries):
        y = 16 + 16 * i
        group.append(E.rect(x='8', y=_n(y - 9), width='10', height='10', fill=COLORS[key]))
        group.append(E.text(key, x='24', y=_n(y)))
    return group


def to_bytes(doc) -> bytes:
    return tostring(doc, pretty_print=True, xml_declaration=True, encoding='utf-8')


def _split_tags(points2d: np.ndarray, tags: Optional[Sequence[str]]):
    if tags is None:
        return points2d, np.empty((0, 2)), np.empty((0, 2))
    tags = np.asarray(tags)
    return (points2d[(tags != TAG_OUTLIER) & (tags != TAG_CLOSURE)], points2d[tags == TAG_OUTLIER],
            points2d[tags == TAG_CLOSURE])


def render_cloud(points2d, agent2d, tags: Optional[Sequence[str]] = None,
                 obstacles: ObstacleSet = ObstacleSet(), title: str = 'cloud'):
    """Projected features around the agent"""
    points2d = np.asarray(points2d, dtype=float).reshape(-1, 2)
    features, outliers, closure = _split_tags(points2d, tags)
    canvas = _Canvas(np.vstack([points2d, np.reshape(agent2d, (1, 2)), obstacles.vertices]))
    layers = []
    if len(obstacles):
        layers.append(_obstacles(canvas, obstacles))
    layers += [_dots(canvas, features, COLORS['feature'], 'features'),
               _dots(canvas, outliers, COLORS['outlier'], 'outliers'),
               _dots(canvas, closure, COLORS['closure'], 'closure'),
               _agent(canvas, agent2d),
               _legend(['feature', 'outlier', 'closure', 'agent'])]
    return canvas.document(title, layers)


def render_angular_map(amap: AngularMap, exit_point: ExitPoint, points2d=None, title: str = 'angular map'):
    """Radial segments of length d̂ for every covered bin, the exit and (optionally) the points"""
    x2d = np.asarray(exit_point.agent2, dtype=float)
    ends = []
    for c in amap.covered:
        mid = (c.start + c.end) / 2
        ends.append(x2d + c.d_hat * np.array([np.cos(mid), np.sin(mid)]))
    ends = np.array(ends).reshape(-1, 2)
    extent = [ends, x2d[None, :], np.reshape(exit_point.point2, (1, 2))]
    if points2d is not None:
        extent.append(np.asarray(points2d, dtype=float).reshape(-1, 2))
    canvas = _Canvas(np.vstack(extent))
    layers = []
    if points2d is not None:
        layers.append(_dots(canvas, points2d, COLORS['feature'], 'features', radius=1.0))
    rays = E.g(id='ranges', stroke=COLORS['range'], **{'stroke-width': '1'})
    ax, ay = canvas.xy(x2d)
    for end in ends:
        bx, by = canvas.xy(end)
        rays.append(E.line(x1=_n(ax), y1=_n(ay), x2=_n(bx), y2=_n(by)))
    layers += [rays, _agent(canvas, x2d), _exit_marker(canvas, exit_point.point2),
               _legend(['feature', 'range', 'agent', 'exit'])]
    return canvas.document(title, layers)


def render_plan(points2d, obstacles: ObstacleSet, path: Path, agent2d, goal2d=None,
                raw_path: Optional[Path] = None, title: str = 'plan'):
    """Obstacles with the refined path (and the raw RRT path dashed)"""
    extent = [np.asarray(points2d, dtype=float).reshape(-1, 2), obstacles.vertices, path.waypoints,
              np.reshape(agent2d, (1, 2))]
    if goal2d is not None:
        extent.append(np.reshape(goal2d, (1, 2)))
    canvas = _Canvas(np.vstack(extent))
    layers = [_obstacles(canvas, obstacles), _dots(canvas, points2d, COLORS['feature'], 'features', radius=1.0)]
    if raw_path is not None:
        layers.append(_polyline(canvas, raw_path.waypoints, 'raw-path', dashed=True))
    layers += [_polyline(canvas, path.waypoints, 'path'), _agent(canvas, agent2d)]
    if goal2d is not None:
        layers.append(_exit_marker(canvas, goal2d))
    layers.append(_legend(['feature', 'obstacle', 'path', 'agent', 'exit']))
    return canvas.document(title, layers)


def render_episode(records: Sequence, walls: Optional[np.ndarray] = None, title: str = 'episode'):
    """World-frame overview: walls, one polyline per iteration, scan poses and exits"""
    polylines: List[np.ndarray] = []
    poses, exits = [], []
    for record in records:
        poses.append(np.asarray(record.position, dtype=float)[:2])
        if record.path is not None:
            polylines.append(lift_from_plane(record.plane, record.path.waypoints)[:, :2])
        if record.exit is not None:
            exits.append(np.asarray(record.exit.point3, dtype=float)[:2])
    extent = [np.reshape(poses, (-1, 2)), np.reshape(exits, (-1, 2))] + polylines
    if walls is not None:
        extent.append(np.asarray(walls, dtype=float).reshape(-1, 2))
    canvas = _Canvas(np.vstack(extent))
    layers = []
    if walls is not None:
        group = E.g(id='walls', stroke=COLORS['wall'], **{'stroke-width': '3'})
        for a, b in np.asarray(walls, dtype=float).reshape(-1, 2, 2):
            (x1, y1), (x2, y2) = canvas.xy(a), canvas.xy(b)
            group.append(E.line(x1=_n(x1), y1=_n(y1), x2=_n(x2), y2=_n(y2)))
        layers.append(group)
    for i, line in enumerate(polylines):
        layers.append(_polyline(canvas, line, f'path-{i}'))
    for i, pose in enumerate(poses):
        agent = _agent(canvas, pose)
        agent.set('id', f'agent-{i}')
        layers.append(agent)
    for i, p in enumerate(exits):
        marker = _exit_marker(canvas, p)
        marker.set('id', f'exit-{i}')
        layers.append(marker)
    layers.append(_legend(['wall', 'path', 'agent', 'exit']))
    return canvas.document(title, layers)


RENDERERS = {
    'cloud': render_cloud,
    'map': render_angular_map,
    'plan': render_plan,
    'episode': render_episode,
}


def render_svg(scene: str, *args, **kwargs) -> bytes:
    """Render one of the RENDERERS scenes and serialize it"""
    try:
        renderer = RENDERERS[scene]
    except KeyError:
        raise ValueError(f"unknown scene '{scene}', expected one of {sorted(RENDERERS)}") from None
    return to_bytes(renderer(*args, **kwargs))
