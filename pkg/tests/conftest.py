"""Shared fixtures and toy systems for the test suite."""

import numpy as np
import pytest

from ftle_verify import (
    GridSystem,
    build_scattered_blocks,
    build_simple_wall,
    build_u_shape_trap,
    make_scripted,
)
from ftle_verify.errors import InvalidStateError


class ToyGridSystem:
    """Duck-typed grid system driven by an arbitrary cell map."""

    def __init__(self, height, width, fn, obstacles=frozenset()):
        self.height = height
        self.width = width
        self.fn = fn
        self.obstacles = frozenset(obstacles)
        self.transition_calls = 0

    @property
    def grid_shape(self):
        return (self.height, self.width)

    def is_valid(self, cell):
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width and cell not in self.obstacles

    def valid_cells(self):
        return [
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if (r, c) not in self.obstacles
        ]

    def step(self, cell):
        if not self.is_valid(cell):
            raise InvalidStateError(f"invalid toy state {cell}")
        self.transition_calls += 1
        return self.fn(cell)


def identity_system(height=4, width=4, obstacles=frozenset()):
    return ToyGridSystem(height, width, lambda c: c, obstacles)


@pytest.fixture
def simple_wall():
    return build_simple_wall()


@pytest.fixture
def scattered():
    return build_scattered_blocks()


@pytest.fixture
def u_trap():
    return build_u_shape_trap()


@pytest.fixture
def wall_system(simple_wall):
    return GridSystem(simple_wall, make_scripted("shortest_path", simple_wall))


def rollout(world, policy, start, steps):
    """Independent rollout oracle: applies world.transition directly."""
    s = start
    for _ in range(steps):
        s = world.transition(s, policy(s))
    return s


def rollout_hits_goal(world, policy, start, steps):
    s = start
    for _ in range(steps):
        s = world.transition(s, policy(s))
        if s == world.goal:
            return True
    return False
