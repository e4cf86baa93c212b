import sys
import json
import logging
from argparse import ArgumentParser, ArgumentTypeError, RawTextHelpFormatter
from pathlib import Path
from typing import List, Optional

import colorama
import pretty_errors
from colorama import Fore
from pydantic import ValidationError


pretty_errors.configure(display_link=True)


from sparsenav.print import TqdmOut, install_print
from sparsenav.config import PipelineConfig, load_config, parse_overrides
from sparsenav.datatype import TAG_INLIER, TAG_OUTLIER, PointCloud
from sparsenav.exceptions import FormatError, InvalidSpecError, SparseNavError
from sparsenav.exit_finder import find_exit
from sparsenav.file import (parse_cloud, read_env_spec, read_episode, read_plane, write_cloud, write_environment,
                            write_episode, write_obstacles, write_path, write_plane)
from sparsenav.geometry import plane_from_three_points, point_plane_residual, project_point
from sparsenav.lib import deg, make_rng
from sparsenav.obstacle import build_obstacles
from sparsenav.outlier import detection_quality, remove_outliers
from sparsenav.planner import rrt_plan, shortcut_refine
from sparsenav.sim import AgentState, EnvironmentSpec, Termination, generate_env, observe, run_exploration, triangle_plane
from sparsenav.sim.episode import PLANE_STREAM
from sparsenav import svg


logger = logging.getLogger('main')

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'


def setup_logging(level: str):
    """Route the root logger's stream handlers through TqdmOut"""
    root_logger = logging.getLogger()
    if not root_logger.handlers:
        handler = logging.StreamHandler(TqdmOut)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root_logger.addHandler(handler)
    for handler in root_logger.handlers:
        if type(handler) == logging.StreamHandler:
            handler.stream = TqdmOut
    root_logger.setLevel(level)


def _floats(text: str, n: int) -> List[float]:
    try:
        values = [float(x) for x in text.split(',')]
    except ValueError:
        values = []
    if len(values) != n:
        raise ArgumentTypeError(f"expected {n} comma-separated numbers, got '{text}'")
    return values


def point3(text: str) -> List[float]:
    return _floats(text, 3)


def point2(text: str) -> List[float]:
    return _floats(text, 2)


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('-c', '--config', help='YAML configuration file (default: config.yml of the repository)')
    common.add_argument('-o', '--override', action='append', default=[], metavar='KEY=VALUE',
                        help="override one option, e.g. -o outlier.lam=0.45 (repeatable)")
    common.add_argument('-d', '--output-dir', help='directory for the written artifacts (other.output_directory)')

    plane_args = ArgumentParser(add_help=False)
    plane_args.add_argument('cloud', help="cloud file ('x,y,z[,tag]' rows)")
    plane_args.add_argument('--pose', type=point3, required=True, metavar='X,Y,Z', help='agent position')
    group = plane_args.add_mutually_exclusive_group(required=True)
    group.add_argument('--plane', help='plane file: 9 reals, A column-major then v')
    group.add_argument('--tri', type=point3, nargs=3, metavar='X,Y,Z',
                       help='estimate the plane from three points of a triangular flight')
    plane_args.add_argument('--svg', help='also write an SVG render to this file')

    parser = ArgumentParser(prog='sparsenav', description='Exit finding and path planning on sparse feature maps',
                            formatter_class=RawTextHelpFormatter)
    sub = parser.add_subparsers(dest='command', required=True, metavar='command')

    p = sub.add_parser('gen', parents=[common], help='build an environment and its first observation')
    p.add_argument('spec', help='environment spec (JSON)')
    p.add_argument('--seed', type=int, required=True)

    p = sub.add_parser('clean', parents=[common], help='tag the outliers of a cloud file')
    p.add_argument('cloud')
    p.add_argument('--out', help='output cloud (default: <output-dir>/cloud_clean.csv)')

    p = sub.add_parser('exit', parents=[common, plane_args], help='exit point of a cloud seen from a pose')
    p.add_argument('--clean', action='store_true', help='remove outliers before binning')

    p = sub.add_parser('plan', parents=[common, plane_args], help='obstacles, RRT path and refinement')
    p.add_argument('--goal', type=point2, metavar='U,V', help='goal on the plane (default: the exit point)')
    p.add_argument('--seed', type=int, required=True)

    p = sub.add_parser('explore', parents=[common], help='run a closed-loop episode in a simulated environment')
    p.add_argument('spec', nargs='?', help='environment spec (default: sim.spec_path)')
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--svg', help='also write the episode render to this file')

    p = sub.add_parser('render', parents=[common], help='render an episode log as SVG')
    p.add_argument('log', help='episode log (line-delimited JSON)')
    p.add_argument('--iteration', type=int, help='render a single iteration instead of the whole episode')
    p.add_argument('--scene', choices=['cloud', 'map', 'plan'], default='map',
                   help='scene of the single iteration (default: map)')
    p.add_argument('--out', help='SVG file (default: <output-dir>/episode.svg)')
    return parser


def _config(args, extra: Optional[List[str]] = None) -> PipelineConfig:
    items = list(args.override) + (extra or [])
    if args.output_dir:
        items.append(f'other.output_directory={json.dumps(args.output_dir)}')
    cfg = load_config(args.config, parse_overrides(items))
    setup_logging(cfg.other.log_level)
    return cfg


def _output_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.other.output_directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plane(args):
    if args.plane:
        return read_plane(args.plane)
    return plane_from_three_points(*args.tri)


def cmd_gen(args, cfg: PipelineConfig) -> int:
    spec = read_env_spec(args.spec).model_copy(update={'seed': args.seed})
    env = generate_env(spec)
    position = [spec.start[0], spec.start[1], spec.flight_height]
    plane = triangle_plane(position, cfg.sim.triangle_size, make_rng(spec.seed, 0, PLANE_STREAM))
    cloud = observe(env, AgentState(position, plane), spec, 0)
    out = _output_dir(cfg)
    write_environment(out / 'environment.json', env)
    write_cloud(out / 'cloud.csv', cloud)
    write_plane(out / 'plane.txt', plane)
    print(f'{len(env.starts)} wall segment(s), {len(cloud)} observed point(s) '
          f'({len(cloud.tagged(TAG_OUTLIER))} spurious)')
    print(f"pose: {','.join(format(c, 'g') for c in position)}")
    print(f'written to {out}')
    return 0


def cmd_clean(args, cfg: PipelineConfig) -> int:
    cloud = parse_cloud(args.cloud)
    result = remove_outliers(cloud, cfg.outlier)
    dropped = set(result.outliers)
    tags = [TAG_OUTLIER if i in dropped else TAG_INLIER for i in range(len(cloud))]
    target = Path(args.out) if args.out else _output_dir(cfg) / 'cloud_clean.csv'
    write_cloud(target, cloud, tags)
    if cloud.tags is not None and len(cloud.tagged(TAG_OUTLIER)):
        precision, recall = detection_quality(result, cloud.tagged(TAG_OUTLIER))
        logger.info(f'against the file tags: precision {precision:.3f}, recall {recall:.3f}')
    print(f'{len(dropped)} of {len(cloud)} point(s) tagged as outliers -> {target}')
    return 0


def cmd_exit(args, cfg: PipelineConfig) -> int:
    cloud = parse_cloud(args.cloud)
    plane = _plane(args)
    if args.clean:
        cloud = cloud.subset(remove_outliers(cloud, cfg.outlier).inliers)
    exit_point = find_exit(cloud, args.pose, plane, cfg.exit)
    logger.debug(f'exit point residual to the plane: {point_plane_residual(plane, exit_point.point3):.3g}')
    print(f'exit angle: {deg(exit_point.angle):.3f} deg')
    print(f"exit point: {','.join(format(c, '.6f') for c in exit_point.point3)}")
    print(f'range: {exit_point.range:.6f}')
    if args.svg:
        doc = svg.render_angular_map(exit_point.angular_map, exit_point, project_point(plane, cloud.points))
        Path(args.svg).write_bytes(svg.to_bytes(doc))
    return 0


def cmd_plan(args, cfg: PipelineConfig) -> int:
    cloud = parse_cloud(args.cloud)
    plane = _plane(args)
    points2d = project_point(plane, cloud.points)
    start = project_point(plane, args.pose)
    goal = args.goal if args.goal is not None else find_exit(cloud, args.pose, plane, cfg.exit).point2
    obstacles = build_obstacles(points2d, cfg.obstacle)
    raw = rrt_plan(start, goal, obstacles, cfg.planner, make_rng(cfg.planner.seed))
    path = shortcut_refine(raw, obstacles)
    out = _output_dir(cfg)
    write_path(out / 'path.csv', path)
    write_path(out / 'path_raw.csv', raw)
    write_obstacles(out / 'obstacles.json', obstacles, {'K': cfg.obstacle.K, 'seed': cfg.obstacle.seed})
    print(f'{len(obstacles)} obstacle(s); path length {path.length:.6f} ({len(path)} waypoints), '
          f'raw {raw.length:.6f} ({len(raw)} waypoints)')
    if args.svg:
        doc = svg.render_plan(points2d, obstacles, path, start, goal, raw)
        Path(args.svg).write_bytes(svg.to_bytes(doc))
    return 0


def cmd_explore(args, cfg: PipelineConfig) -> int:
    spec_path = args.spec or cfg.sim.spec_path
    if spec_path is None:
        raise InvalidSpecError('no environment spec given (argument or sim.spec_path)')
    spec = read_env_spec(spec_path).model_copy(update={'seed': args.seed})
    env = generate_env(spec)
    log = run_exploration(env, cfg, progress=True)
    out = _output_dir(cfg)
    write_episode(out / 'episode.jsonl', log, env)
    if args.svg:
        Path(args.svg).write_bytes(svg.to_bytes(svg.render_episode(log.records, env.segments)))
    print(f'{len(log)} iteration(s), termination: {log.termination.value}')
    if log.termination == Termination.planning_failure:
        print(Fore.RED + 'planning failed, episode halted', file=sys.stderr)
        return 1
    return 0


def cmd_render(args, cfg: PipelineConfig) -> int:
    log = read_episode(args.log)
    target = Path(args.out) if args.out else _output_dir(cfg) / 'episode.svg'
    if args.iteration is None:
        walls = None
        if 'environment' in log.metadata:
            env = generate_env(EnvironmentSpec.model_validate(log.metadata['environment']))
            walls = env.segments
        scene, scene_args = 'episode', (log.records, walls)
    else:
        records = [r for r in log.records if r.iteration == args.iteration]
        if not records:
            raise FormatError(f'{args.log}: no iteration {args.iteration}')
        record = records[0]
        title = f'iteration {record.iteration}'
        kept = record.cloud.subset(record.inliers) if record.inliers else PointCloud()
        scene = args.scene
        if scene == 'cloud':
            scene_args = (project_point(record.plane, record.cloud.points),
                          project_point(record.plane, record.position), record.cloud.tags, record.obstacles, title)
        elif scene == 'map':
            if record.exit is None or record.angular_map is None:
                raise FormatError(f'{args.log}: iteration {record.iteration} has no angular map')
            scene_args = (record.angular_map, record.exit, project_point(record.plane, kept.points), title)
        else:
            if record.path is None:
                raise FormatError(f'{args.log}: iteration {record.iteration} has no path')
            scene_args = (project_point(record.plane, kept.points), record.obstacles, record.path,
                          record.path.start, record.exit.point2 if record.exit else None, record.raw_path, title)
    target.write_bytes(svg.render_svg(scene, *scene_args))
    print(f'written to {target}')
    return 0


COMMANDS = {
    'gen': cmd_gen,
    'clean': cmd_clean,
    'exit': cmd_exit,
    'plan': cmd_plan,
    'explore': cmd_explore,
    'render': cmd_render,
}


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; 0 on success, 1 on pipeline errors, 2 on usage errors"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    extra = []
    if args.command in ('plan', 'explore'):
        extra.append(f'planner.seed={args.seed}')
    try:
        cfg = _config(args, extra)
    except ValueError as e:
        if isinstance(e, ValidationError):
            print(Fore.RED + f'invalid configuration: {e}', file=sys.stderr)
            return 1
        print(f'sparsenav: error: {e}', file=sys.stderr)
        return 2
    except OSError as e:
        print(Fore.RED + f'cannot read the configuration: {e}', file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args, cfg)
    except (SparseNavError, ValidationError, OSError) as e:
        logger.error(f'{args.command} failed: {type(e).__name__}')
        print(Fore.RED + f'{args.command}: {e}', file=sys.stderr)
        return 1


def entry():
    colorama.init(autoreset=True)
    install_print()
    sys.exit(run_cli())


if __name__ == "__main__":
    entry()
