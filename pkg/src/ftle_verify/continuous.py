"""Continuous benchmark dynamics and 2-D analysis slicing.

Pendulum state is (angle in radians wrapped to [-pi, pi), angular step in
radians per step); storing velocity in per-step units keeps the two axes
at comparable scale on analysis grids. Mountain-car state is (position,
velocity) with the classic cosine-hill force term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ContinuousSystem
from .errors import ConfigError

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap angles to [-pi, pi)."""
    return (theta + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class PendulumParams:
    g: float = 10.0
    m: float = 1.0
    l: float = 1.0
    dt: float = 0.05
    max_torque: float = 2.0
    max_speed: float = 8.0  # rad/s
    damping: float = 0.0  # viscous coefficient on angular velocity


class Pendulum:
    """Torque-actuated pendulum; angle 0 is upright.

    Semi-implicit Euler update of the standard rod model. The goal
    region (used by metrics, not by the dynamics) is a disc around the
    upright rest state; the dynamics never absorb.
    """

    dims = 2

    def __init__(self, params: PendulumParams | None = None,
                 goal_radius: float = 0.3):
        self.params = params or PendulumParams()
        p = self.params
        self.bounds = (
            np.array([-np.pi, -p.max_speed * p.dt]),
            np.array([np.pi, p.max_speed * p.dt]),
        )
        self.wrapped_dims = frozenset({0})
        self.max_action = p.max_torque
        self.goal_state = np.zeros(2)
        self.goal_radius = goal_radius
        self.name = "pendulum"

    def step_batch(self, states: np.ndarray, torques: np.ndarray) -> np.ndarray:
        p = self.params
        theta = states[:, 0]
        omega = states[:, 1] / p.dt  # rad/s internally
        u = np.clip(torques, -p.max_torque, p.max_torque)
        accel = (1.5 * p.g / p.l) * np.sin(theta) + 3.0 / (p.m * p.l**2) * u
        accel = accel - p.damping * omega
        omega = np.clip(omega + accel * p.dt, -p.max_speed, p.max_speed)
        theta = wrap_angle(theta + omega * p.dt)
        return np.column_stack([theta, omega * p.dt])

    def step(self, state, torque: float) -> np.ndarray:
        return self.step_batch(np.asarray(state, dtype=float)[None, :],
                               np.array([torque]))[0]

    def energy(self, state) -> float:
        """Mechanical energy of the rod (kinetic + potential, upright max)."""
        p = self.params
        theta, w = float(state[0]), float(state[1])
        omega = w / p.dt
        return (p.m * p.l**2 / 6.0) * omega**2 + 0.5 * p.m * p.g * p.l * np.cos(theta)

    def in_goal(self, states: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(np.atleast_2d(states) - self.goal_state, axis=1)
        return d <= self.goal_radius


def pendulum_step(state, torque: float, params: PendulumParams | None = None):
    """Single pendulum update; module-level convenience over Pendulum.step."""
    return Pendulum(params).step(state, torque)


@dataclass(frozen=True)
class MountainCarParams:
    power: float = 0.0015
    gravity: float = 0.0025
    min_position: float = -1.2
    max_position: float = 0.6
    max_speed: float = 0.07
    goal_position: float = 0.45
    max_action: float = 1.0


class MountainCar:
    """Valley car that must pump momentum; absorbing past the goal position."""

    dims = 2

    def __init__(self, params: MountainCarParams | None = None,
                 goal_radius: float = 0.12):
        self.params = params or MountainCarParams()
        p = self.params
        self.bounds = (
            np.array([p.min_position, -p.max_speed]),
            np.array([p.max_position, p.max_speed]),
        )
        self.wrapped_dims = frozenset()
        self.max_action = p.max_action
        # goal region center sits mid-way through the absorbing band
        self.goal_state = np.array([(p.goal_position + p.max_position) / 2.0, 0.0])
        self.goal_radius = goal_radius
        self.name = "mountain_car"

    def step_batch(self, states: np.ndarray, forces: np.ndarray) -> np.ndarray:
        p = self.params
        pos = states[:, 0].copy()
        vel = states[:, 1].copy()
        live = pos < p.goal_position  # absorbed states stay frozen
        f = np.clip(forces, -p.max_action, p.max_action)
        v = vel + f * p.power - p.gravity * np.cos(3.0 * pos)
        v = np.clip(v, -p.max_speed, p.max_speed)
        x = np.clip(pos + v, p.min_position, p.max_position)
        v = np.where((x <= p.min_position) & (v < 0.0), 0.0, v)  # inelastic wall
        pos[live] = x[live]
        vel[live] = v[live]
        return np.column_stack([pos, vel])

    def step(self, state, force: float) -> np.ndarray:
        return self.step_batch(np.asarray(state, dtype=float)[None, :],
                               np.array([force]))[0]

    def in_goal(self, states: np.ndarray) -> np.ndarray:
        return np.atleast_2d(states)[:, 0] >= self.params.goal_position


def mountain_car_step(state, force: float, params: MountainCarParams | None = None):
    return MountainCar(params).step(state, force)


class AffineEnv:
    """Unbounded linear/affine test dynamics x -> A x + b (action ignored)."""

    dims = 2

    def __init__(self, matrix, offset=None):
        self.matrix = np.asarray(matrix, dtype=float)
        self.offset = np.zeros(self.matrix.shape[0]) if offset is None else np.asarray(offset, dtype=float)
        self.bounds = None
        self.wrapped_dims = frozenset()
        self.max_action = 0.0
        self.goal_state = None
        self.goal_radius = 0.0
        self.name = "affine"
        self.dims = self.matrix.shape[0]

    def step_batch(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return states @ self.matrix.T + self.offset

    def step(self, state, action=0.0) -> np.ndarray:
        return self.step_batch(np.asarray(state, dtype=float)[None, :], None)[0]


def _affine_from_params(params=None):
    params = params or {}
    if "matrix" not in params:
        raise ConfigError("affine environment needs a 'matrix' in env_params")
    return AffineEnv(np.asarray(params["matrix"], dtype=float), params.get("offset"))


ENV_FACTORIES = {
    "pendulum": lambda params=None: Pendulum(PendulumParams(**(params or {}))),
    "mountain_car": lambda params=None: MountainCar(MountainCarParams(**(params or {}))),
    "affine": _affine_from_params,
}


@dataclass(frozen=True)
class AnalysisSlice:
    """2-D analysis lattice: two free dimensions, the rest held fixed.

    `fixed_values` is a full-dimension template; entries at the free
    dimensions are ignored. `bounds` defaults to the environment bounds
    of the free dimensions.
    """

    free_dims: tuple[int, int]
    fixed_values: tuple[float, ...]
    resolution: tuple[int, int]
    bounds: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self):
        if len(self.free_dims) != 2 or self.free_dims[0] == self.free_dims[1]:
            raise ConfigError("slice needs two distinct free dimensions")
        if min(self.resolution) < 8:
            raise ConfigError("slice resolution must be >= 8 per axis")


class SlicedSystem:
    """Closed-loop system restricted to a 2-D slice.

    Points live on (and around) the analysis lattice; the flow embeds
    them into the full state space, advances the full dynamics, then
    projects back onto the free dimensions.
    """

    def __init__(self, closed: ContinuousSystem, spec: AnalysisSlice):
        env = closed.env
        if max(spec.free_dims) >= env.dims or min(spec.free_dims) < 0:
            raise ConfigError(
                f"slice dims {spec.free_dims} out of range for {env.dims}-D environment"
            )
        if len(spec.fixed_values) != env.dims:
            raise ConfigError(
                f"fixed_values must have {env.dims} entries, got {len(spec.fixed_values)}"
            )
        self.closed = closed
        self.spec = spec
        d0, d1 = spec.free_dims
        if spec.bounds is not None:
            (lo0, hi0), (lo1, hi1) = spec.bounds
        elif env.bounds is not None:
            lo, hi = env.bounds
            lo0, hi0, lo1, hi1 = lo[d0], hi[d0], lo[d1], hi[d1]
        else:
            raise ConfigError("unbounded environment: slice bounds are required")
        # fixed coordinates must be admissible states of the full system
        if env.bounds is not None:
            lo, hi = env.bounds
            for d in range(env.dims):
                if d in spec.free_dims or d in env.wrapped_dims:
                    continue
                v = spec.fixed_values[d]
                if not (lo[d] <= v <= hi[d]):
                    raise ConfigError(
                        f"fixed value {v} for dim {d} outside bounds [{lo[d]}, {hi[d]}]"
                    )
        self.row_coords = np.linspace(lo0, hi0, spec.resolution[0])
        self.col_coords = np.linspace(lo1, hi1, spec.resolution[1])
        self.spacing = (
            float(self.row_coords[1] - self.row_coords[0]),
            float(self.col_coords[1] - self.col_coords[0]),
        )

    @property
    def env(self):
        return self.closed.env

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (len(self.row_coords), len(self.col_coords))

    def embed(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        full = np.tile(np.asarray(self.spec.fixed_values, dtype=float), (len(pts), 1))
        full[:, self.spec.free_dims[0]] = pts[:, 0]
        full[:, self.spec.free_dims[1]] = pts[:, 1]
        return full

    def project(self, states: np.ndarray) -> np.ndarray:
        return np.column_stack([
            states[:, self.spec.free_dims[0]],
            states[:, self.spec.free_dims[1]],
        ])

    def flow_batch(self, points: np.ndarray, k: int) -> np.ndarray:
        """Horizon-k flow of slice points: embed, roll the full system, project."""
        return self.project(self.closed.flow_batch(self.embed(points), k))

    def points_valid(self, points: np.ndarray) -> np.ndarray:
        """Admissibility of slice points as full states (wrapped dims always pass)."""
        pts = np.atleast_2d(points)
        ok = np.ones(len(pts), dtype=bool)
        env = self.env
        if env.bounds is None:
            return ok
        lo, hi = env.bounds
        for axis, dim in enumerate(self.spec.free_dims):
            if dim in env.wrapped_dims:
                continue
            ok &= (pts[:, axis] >= lo[dim]) & (pts[:, axis] <= hi[dim])
        return ok

    def node_points(self) -> np.ndarray:
        """All lattice nodes as (H*W, 2) points in row-major order."""
        rr, cc = np.meshgrid(self.row_coords, self.col_coords, indexing="ij")
        return np.column_stack([rr.ravel(), cc.ravel()])

    def bin_of(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Nearest-node bin indices (clipped to the lattice) for slice points."""
        pts = np.atleast_2d(points)
        r = np.rint((pts[:, 0] - self.row_coords[0]) / self.spacing[0]).astype(int)
        c = np.rint((pts[:, 1] - self.col_coords[0]) / self.spacing[1]).astype(int)
        return (
            np.clip(r, 0, len(self.row_coords) - 1),
            np.clip(c, 0, len(self.col_coords) - 1),
        )

    def goal_region_cells(self) -> frozenset[tuple[int, int]]:
        """Lattice cells whose embedded node lies within the goal radius."""
        env = self.env
        if env.goal_state is None:
            return frozenset()
        nodes = self.embed(self.node_points())
        diff = nodes - np.asarray(env.goal_state, dtype=float)
        for d in env.wrapped_dims:
            diff[:, d] = wrap_angle(diff[:, d])
        inside = np.linalg.norm(diff, axis=1) <= env.goal_radius
        h, w = self.grid_shape
        rows, cols = np.divmod(np.flatnonzero(inside), w)
        return frozenset(zip(rows.tolist(), cols.tolist()))


def slice_to_grid(closed: ContinuousSystem, spec: AnalysisSlice) -> SlicedSystem:
    """Build the analysis-grid system for a continuous closed loop."""
    return SlicedSystem(closed, spec)
