import os
import re
import json
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal
from confz import BaseConfig, DataSource, EnvSource, FileSource
from pydantic import ConfigDict, Field, NonNegativeFloat, NonNegativeInt, PositiveFloat, PositiveInt, model_validator

from sparsenav.lib import resource_path


__all__ = ['ScoreParams', 'GreedyOracle', 'OutlierParams', 'RadiusVariant', 'ExitParams', 'ObstacleParams',
           'Bounds', 'PlannerParams', 'SimParams', 'Other', 'PipelineConfig', 'substitute_env_vars',
           'parse_overrides', 'get_config_source', 'load_config']


def substitute_env_vars(content: str) -> str:
    """Replace ${VAR_NAME} references with values from the environment

    Unknown variables are left untouched.
    """
    def replace_var(match):
        var_name = match.group(1)
        return os.environ.get(var_name, match.group(0))

    pattern = r'\$\{([A-Z_][A-Z0-9_]*)\}'
    return re.sub(pattern, replace_var, content)


class _Section(BaseConfig):
    # a misspelled option is an error, not a silently ignored key
    model_config = ConfigDict(extra='forbid')


class ScoreParams(_Section):
    # pairs closer than epsilon score 0
    epsilon: PositiveFloat = 1e-6
    # rescale the cloud so that the median pairwise distance is 1
    normalize: bool = False


class GreedyOracle(str, Enum):
    greedy = 'greedy'
    lazy_greedy = 'lazy_greedy'


class OutlierParams(_Section):
    lam: NonNegativeFloat = 0.6
    k: PositiveInt = 4
    beta: NonNegativeFloat = 1.0
    score: ScoreParams = Field(default_factory=ScoreParams)
    oracle: GreedyOracle = GreedyOracle.greedy


class RadiusVariant(str, Enum):
    origin = 'origin'   # mean of ||p||, p relative to the plane offset
    agent = 'agent'     # mean of ||p - x'||


class ExitParams(_Section):
    circular_gap: bool = True
    r_variant: RadiusVariant = RadiusVariant.origin
    n_bins: int = Field(default=360, ge=3)


class ObstacleParams(_Section):
    K: PositiveInt = 1000
    margin: NonNegativeFloat = 0.05
    max_iters: PositiveInt = 50
    # farthest-point seeding is deterministic, the seed is carried into output metadata
    seed: NonNegativeInt = 0


class Bounds(_Section):
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @model_validator(mode='after')
    def check_order(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f'empty sampling bounds: {self}')
        return self

    def contains(self, u: float, v: float) -> bool:
        return self.xmin <= u <= self.xmax and self.ymin <= v <= self.ymax


class PlannerParams(_Section):
    step_size: PositiveFloat = 0.25
    goal_bias: float = Field(default=0.1, ge=0.0, le=1.0)
    # None means 2 * step_size
    goal_tolerance: PositiveFloat | None = None
    max_iters: PositiveInt = 10000
    bounds: Bounds | None = None
    seed: NonNegativeInt = 0

    @property
    def tolerance(self) -> float:
        if self.goal_tolerance is None:
            return 2 * self.step_size
        return self.goal_tolerance


class SimParams(_Section):
    spec_path: Path | None = None
    max_iterations: NonNegativeInt = 10
    # radius of a visited sector as a fraction of the iteration's r
    visited_radius_scale: PositiveFloat = 1.0
    # leg length of the simulated triangular flight
    triangle_size: PositiveFloat = 0.5


class Other(_Section):
    output_directory: Path = Path('output')
    log_level: Literal['DEBUG', 'INFO', 'WARNING', 'ERROR'] = 'INFO'


class PipelineConfig(_Section):
    outlier: OutlierParams = Field(default_factory=OutlierParams)
    exit: ExitParams = Field(default_factory=ExitParams)
    obstacle: ObstacleParams = Field(default_factory=ObstacleParams)
    planner: PlannerParams = Field(default_factory=PlannerParams)
    sim: SimParams = Field(default_factory=SimParams)
    other: Other = Field(default_factory=Other)


def _set_nested(d: Dict[str, Any], dotted: str, value: Any):
    keys = dotted.split('.')
    for key in keys[:-1]:
        d = d.setdefault(key, {})
        if not isinstance(d, dict):
            raise ValueError(f"'{dotted}' overrides a scalar option")
    d[keys[-1]] = value


def parse_overrides(items: Iterable[str]) -> Dict[str, Any]:
    """Turn ['planner.step_size=0.5', ...] into a nested dict

    Values are read as JSON when possible (numbers, booleans, null), otherwise kept as strings.
    """
    data: Dict[str, Any] = {}
    for item in items:
        key, sep, raw = item.partition('=')
        if not sep or not key:
            raise ValueError(f"override must look like 'section.key=value': '{item}'")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_nested(data, key.strip(), value)
    return data


def _load_dotenv():
    try:
        from dotenv import load_dotenv, find_dotenv
        dotenv_path = find_dotenv(usecwd=True)
        if dotenv_path:
            load_dotenv(dotenv_path, override=False)
    except Exception:
        pass  # .env is optional


def get_config_source(substituted_file: str, overrides: Dict[str, Any] | None) -> List:
    sources = [FileSource(file=substituted_file)]
    sources.append(EnvSource(prefix='SPARSENAV_', allow_all=True, nested_separator='__'))
    if overrides:
        sources.append(DataSource(data=overrides))
    return sources


def load_config(config_file: str | os.PathLike | None = None, overrides: Dict[str, Any] | None = None) -> PipelineConfig:
    """Read the YAML file, the SPARSENAV_ environment and the overrides into a PipelineConfig"""
    _load_dotenv()
    if config_file is None:
        config_file = resource_path('config.yml')
    with open(config_file, 'r', encoding='utf-8') as f:
        content = substitute_env_vars(f.read())
    # FileSource picks the parser from the suffix
    tmp = tempfile.NamedTemporaryFile(mode='w', encoding='utf-8', suffix='.yml', delete=False)
    try:
        tmp.write(content)
        tmp.close()
        sources = get_config_source(tmp.name, overrides)
        return PipelineConfig(config_sources=sources)
    finally:
        os.unlink(tmp.name)
