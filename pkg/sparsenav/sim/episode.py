"""Closed-loop exploration: observe, clean, mask, find the exit, plan, move, repeat"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from tqdm import tqdm

from sparsenav.config import PipelineConfig
from sparsenav.datatype import TAG_CLOSURE, AffinePlane, AngularMap, ExitPoint, ObstacleSet, Path, PointCloud
from sparsenav.exceptions import DegenerateInputError, EmptyCloudError, EmptyMapError, NoGapError, PlanningFailureError
from sparsenav.exit_finder import find_exit
from sparsenav.geometry import lift_from_plane, project_point
from sparsenav.lib import make_rng
from sparsenav.obstacle import build_obstacles
from sparsenav.outlier import remove_outliers
from sparsenav.planner import rrt_plan, shortcut_refine
from sparsenav.sim.env import AgentState, Environment, VisitedSector, mask_visited, observe, triangle_plane


__all__ = ['Termination', 'IterationRecord', 'EpisodeLog', 'run_exploration']


logger = logging.getLogger(__name__)

# random streams per iteration, the observation uses (seed, iteration)
PLANE_STREAM = 1
PLANNER_STREAM = 2


class Termination(str, Enum):
    no_exit = 'no-exit'
    exit_reached = 'exit-reached'
    cap = 'cap'
    planning_failure = 'planning-failure'


@dataclass(eq=False)
class IterationRecord:
    iteration: int
    position: np.ndarray                    # agent pose when the scan was taken
    plane: AffinePlane                      # flight plane estimated at position
    cloud: PointCloud                       # raw observation, ground-truth tags
    outliers: tuple
    inliers: tuple
    closure_count: int = 0
    angular_map: Optional[AngularMap] = None
    exit: Optional[ExitPoint] = None
    obstacles: ObstacleSet = field(default_factory=ObstacleSet)
    raw_path: Optional[Path] = None
    path: Optional[Path] = None
    next_position: Optional[np.ndarray] = None


@dataclass(eq=False)
class EpisodeLog:
    records: List[IterationRecord] = field(default_factory=list)
    termination: Optional[Termination] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: IterationRecord):
        if self.termination is not None:
            raise RuntimeError('episode already terminated')
        self.records.append(record)


def run_exploration(env: Environment, cfg: PipelineConfig, progress: bool = False) -> EpisodeLog:
    """Explore from spec.start until no exit is left, the agent leaves the rooms or the cap is hit"""
    spec = env.spec
    sim = cfg.sim
    log = EpisodeLog(metadata={'seed': spec.seed, 'planner_seed': cfg.planner.seed,
                               'normalize': cfg.outlier.score.normalize})
    position = np.array([spec.start[0], spec.start[1], spec.flight_height], dtype=float)
    visited: List[VisitedSector] = []

    bar = tqdm(range(sim.max_iterations), desc='explore', ascii=True, leave=False, disable=not progress)
    for iteration in bar:
        plane = triangle_plane(position, sim.triangle_size, make_rng(spec.seed, iteration, PLANE_STREAM))
        agent = AgentState(position, plane, list(visited))
        cloud = observe(env, agent, spec, iteration)
        record = IterationRecord(iteration, position, plane, cloud, (), ())
        log.append(record)

        try:
            result = remove_outliers(cloud, cfg.outlier)
        except EmptyCloudError:
            logger.info(f'iteration {iteration}: nothing observed')
            log.termination = Termination.no_exit
            break
        record.outliers, record.inliers = result.outliers, result.inliers
        kept = cloud.subset(result.inliers)
        masked = mask_visited(kept, agent, cfg.exit.n_bins)
        record.closure_count = len(masked.tagged(TAG_CLOSURE))

        try:
            exit_point = find_exit(masked, position, plane, cfg.exit)
        except (NoGapError, EmptyMapError) as e:
            logger.info(f'iteration {iteration}: {e}')
            log.termination = Termination.no_exit
            break
        record.exit = exit_point
        record.angular_map = exit_point.angular_map

        # closure points never reach obstacle synthesis
        record.obstacles = build_obstacles(project_point(plane, kept.points), cfg.obstacle)
        try:
            raw = rrt_plan(exit_point.agent2, exit_point.point2, record.obstacles, cfg.planner,
                           make_rng(cfg.planner.seed, iteration, PLANNER_STREAM))
        except (PlanningFailureError, DegenerateInputError) as e:
            logger.error(f'iteration {iteration}: {e}')
            log.termination = Termination.planning_failure
            break
        path = shortcut_refine(raw, record.obstacles)
        record.raw_path, record.path = raw, path

        visited.append(VisitedSector(tuple(float(c) for c in position), sim.visited_radius_scale * exit_point.range))
        position = lift_from_plane(plane, path.end)
        record.next_position = position
        logger.info(f'iteration {iteration}: moved to ({position[0]:.3f}, {position[1]:.3f}), '
                    f'path length {path.length:.3f} ({len(path)} waypoints)')
        if not env.contains(position):
            log.termination = Termination.exit_reached
            break
    else:
        log.termination = Termination.cap
    bar.close()
    logger.info(f'episode finished after {len(log)} iteration(s): {log.termination.value}')
    return log
