"""Helpers that do not depend on any sparsenav type"""
import sys
from pathlib import Path

import numpy as np


__all__ = ['resource_path', 'make_rng', 'deg']


def resource_path(path: str) -> str:
    """Path of a file shipped next to the package (config.yml and friends)"""
    if getattr(sys, "frozen", False):
        return path
    else:
        path_joined = Path(__file__).parent.parent / path
        return str(path_joined)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream...), e.g. one stream per episode iteration"""
    return np.random.default_rng([int(seed), *[int(i) for i in stream]])


def deg(rad: float) -> float:
    return float(np.degrees(rad))
