"""Simulated rooms, feature observation and the exploration loop"""
from sparsenav.sim.env import (AgentState, Doorway, Environment, EnvironmentSpec, Room, VisitedSector,
                               free_space_connected, generate_env, mask_visited, observe, triangle_plane,
                               wall_hit)
from sparsenav.sim.episode import EpisodeLog, IterationRecord, Termination, run_exploration


__all__ = ['AgentState', 'Doorway', 'Environment', 'EnvironmentSpec', 'Room', 'VisitedSector',
           'free_space_connected', 'generate_env', 'mask_visited', 'observe', 'triangle_plane', 'wall_hit',
           'EpisodeLog', 'IterationRecord', 'Termination', 'run_exploration']
