"""Closed-loop dynamics: policy + environment as one autonomous map.

A deterministic policy pi and an environment transition T define the
discrete-time system s_{k+1} = f(s_k) = T(s_k, pi(s_k)). This module
provides the grid and continuous flavors of that closed loop, plus the
finite-horizon flow map computed by direct forward iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError, InvariantError
from .gridworld import Cell, GridWorld


class GridSystem:
    """Closed loop over a grid world. States are (row, col) cells.

    The transition-call counter counts every environment transition
    evaluated through this object; flow-map construction checks it
    against the |free cells| * horizon work bound.
    """

    def __init__(self, world: GridWorld, policy):
        self.world = world
        self.policy = policy
        self.transition_calls = 0

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (self.world.height, self.world.width)

    def is_valid(self, cell: Cell) -> bool:
        return self.world.is_free(cell)

    def valid_cells(self) -> list[Cell]:
        return self.world.free_cells()

    def step(self, cell: Cell) -> Cell:
        if not self.world.is_free(cell):
            raise InvalidStateError(f"state {cell} is not a free cell")
        self.transition_calls += 1
        return self.world.transition(cell, self.policy(cell))


class ContinuousSystem:
    """Closed loop over continuous dynamics. States are float vectors."""

    def __init__(self, env, policy):
        self.env = env
        self.policy = policy
        self.transition_calls = 0

    @property
    def dims(self) -> int:
        return self.env.dims

    def step(self, state: np.ndarray) -> np.ndarray:
        return self.flow_batch(np.asarray(state, dtype=float)[None, :], 1)[0]

    def flow_batch(self, states: np.ndarray, k: int) -> np.ndarray:
        """Advance a batch of states k steps through the closed loop."""
        x = np.array(states, dtype=float)
        for _ in range(k):
            u = self.policy.action_batch(x)
            x = self.env.step_batch(x, u)
            self.transition_calls += len(x)
        return x


def is_grid_system(sys) -> bool:
    """Grid-mode systems enumerate their valid cells; sliced ones have lattices."""
    return hasattr(sys, "valid_cells")


def step(sys, s):
    """One closed-loop step s -> T(s, pi(s))."""
    return sys.step(s)


def iterate(sys, s0, k: int):
    """k-fold composition f^k(s0); requires k >= 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s = s0
    for _ in range(k):
        s = sys.step(s)
    return s


@dataclass
class FlowMapField:
    """Flow map over the analysis grid: every free cell's horizon-T image.

    `images[r, c]` holds the image cell of (r, c); rows of invalid cells
    are (-1, -1) and masked out in `valid`.
    """

    horizon: int
    images: np.ndarray  # (H, W, n) int64 for grids, float64 for lattices
    valid: np.ndarray  # (H, W) bool
    transition_calls: int

    def has(self, cell: Cell) -> bool:
        r, c = cell
        h, w = self.valid.shape
        return 0 <= r < h and 0 <= c < w and bool(self.valid[r, c])

    def image_of(self, cell: Cell) -> np.ndarray:
        if not self.has(cell):
            raise InvalidStateError(f"flow map has no entry for {cell}")
        return self.images[cell[0], cell[1]]


def compute_flow_map_field(sys: GridSystem, t_int: int) -> FlowMapField:
    """Advance every free cell t_int steps (direct forward iteration).

    Performs exactly |free cells| * t_int transition calls; the counter
    in the returned field records the measured count.
    """
    if t_int < 1:
        raise ValueError("t_int must be >= 1")
    height, width = sys.grid_shape
    images = np.full((height, width, 2), -1, dtype=np.int64)
    valid = np.zeros((height, width), dtype=bool)
    free = sys.valid_cells()
    before = sys.transition_calls
    for cell in free:
        s = cell
        for _ in range(t_int):
            s = sys.step(s)
        images[cell[0], cell[1]] = s
        valid[cell[0], cell[1]] = True
    calls = sys.transition_calls - before
    if calls != len(free) * t_int:
        raise InvariantError(
            f"flow map made {calls} transition calls, expected {len(free) * t_int}"
        )
    return FlowMapField(t_int, images, valid, calls)
