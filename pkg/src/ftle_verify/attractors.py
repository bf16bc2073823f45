"""Attractor approximation: trajectory ensembles and final-state histograms.

Attracting structure is read off a 2-D histogram of ensemble final
states; local density peaks (8-connected neighborhoods, one
representative per plateau) are the candidate attractors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._util import chunk_slices, max_workers
from .dynamics import is_grid_system
from .errors import InvariantError

Cell = tuple[int, int]


@dataclass
class TrajectoryEnsemble:
    """Start/final pairs of a simulated trajectory bundle.

    Grid ensembles carry integer cell arrays; sliced continuous
    ensembles carry float points in slice coordinates. `paths` (when
    recorded) has shape (n, horizon + 1, 2) including the start.
    """

    starts: np.ndarray
    finals: np.ndarray
    horizon: int
    seed: int
    exhaustive: bool
    paths: np.ndarray | None = None

    @property
    def n_traj(self) -> int:
        return len(self.starts)


@dataclass
class DensityMap:
    """Final-state counts per cell; total mass equals the ensemble size."""

    counts: np.ndarray  # (H, W) int64
    total: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.total:
            raise InvariantError("histogram mass does not match ensemble size")


class Peak(NamedTuple):
    cell: Cell
    value: float


def simulate_ensemble(sys, n: int, t_int: int, seed: int,
                      exhaustive: bool = False,
                      record_paths: bool = False) -> TrajectoryEnsemble:
    """Simulate n trajectories of exactly t_int steps.

    Starts are drawn uniformly from the valid states under `seed`;
    exhaustive mode instead starts once from every valid state (n is
    ignored), which removes sampling noise for deterministic systems.
    """
    if t_int < 1:
        raise ValueError("t_int must be >= 1")
    if not exhaustive and n < 1:
        raise ValueError("n must be >= 1")
    if is_grid_system(sys):
        return _simulate_grid(sys, n, t_int, seed, exhaustive, record_paths)
    return _simulate_sliced(sys, n, t_int, seed, exhaustive, record_paths)


def _simulate_grid(sys, n, t_int, seed, exhaustive, record_paths):
    free = sys.valid_cells()
    if exhaustive:
        starts = list(free)
    else:
        rng = np.random.default_rng(seed)
        starts = [free[i] for i in rng.integers(len(free), size=n)]
    finals = np.empty((len(starts), 2), dtype=np.int64)
    paths = np.empty((len(starts), t_int + 1, 2), dtype=np.int64) if record_paths else None
    for i, s0 in enumerate(starts):
        s = s0
        if record_paths:
            paths[i, 0] = s
        for k in range(t_int):
            s = sys.step(s)
            if record_paths:
                paths[i, k + 1] = s
        finals[i] = s
    return TrajectoryEnsemble(np.array(starts, dtype=np.int64), finals,
                              t_int, seed, exhaustive, paths)


def _simulate_sliced(sys, n, t_int, seed, exhaustive, record_paths):
    if exhaustive:
        starts = sys.node_points()
    else:
        rng = np.random.default_rng(seed)
        lo = np.array([sys.row_coords[0], sys.col_coords[0]])
        hi = np.array([sys.row_coords[-1], sys.col_coords[-1]])
        starts = lo + rng.random((n, 2)) * (hi - lo)
    if record_paths:
        paths = np.empty((len(starts), t_int + 1, 2))
        paths[:, 0] = starts
        x = starts
        for k in range(t_int):
            x = sys.flow_batch(x, 1)
            paths[:, k + 1] = x
        finals = x
    else:
        paths = None
        finals = np.empty_like(starts)
        workers = max_workers()
        slices = chunk_slices(len(starts), workers)
        if workers == 1 or len(slices) == 1:
            finals = sys.flow_batch(starts, t_int)
        else:
            # disjoint output slices keep the result schedule-independent
            def run(sl):
                finals[sl] = sys.flow_batch(starts[sl], t_int)

            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, slices))
    return TrajectoryEnsemble(np.asarray(starts, dtype=float), np.asarray(finals),
                              t_int, seed, exhaustive, paths)


def final_state_histogram(ens: TrajectoryEnsemble, sys) -> DensityMap:
    """Bin final states onto the analysis grid; mass is conserved exactly."""
    height, width = sys.grid_shape
    counts = np.zeros((height, width), dtype=np.int64)
    if is_grid_system(sys):
        rows = ens.finals[:, 0]
        cols = ens.finals[:, 1]
    else:
        rows, cols = sys.bin_of(ens.finals)
    np.add.at(counts, (rows, cols), 1)
    return DensityMap(counts, ens.n_traj)


def _neighbors8(cell: Cell):
    r, c = cell
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr or dc:
                yield (r + dr, c + dc)


def detect_local_peaks(h, exclude=frozenset()) -> list[Peak]:
    """Local maxima of a 2-D histogram outside `exclude`.

    A cell qualifies when its value is positive and >= every 8-neighbor.
    Adjacent qualifying cells necessarily share one value, so each
    8-connected plateau reports only its lexicographically smallest
    cell. Returned peaks are sorted by cell.
    """
    counts = h.counts if isinstance(h, DensityMap) else np.asarray(h)
    height, width = counts.shape
    exclude = set(exclude)
    padded = np.full((height + 2, width + 2), -np.inf)
    padded[1:-1, 1:-1] = counts
    is_max = np.ones((height, width), dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            is_max &= padded[1:-1, 1:-1] >= padded[1 + dr:height + 1 + dr,
                                                   1 + dc:width + 1 + dc]
    candidates = {
        (int(r), int(c))
        for r, c in zip(*np.nonzero(is_max & (counts > 0)))
        if (int(r), int(c)) not in exclude
    }
    peaks = []
    seen = set()
    for cell in sorted(candidates):
        if cell in seen:
            continue
        # flood-fill the plateau component; `cell` is its smallest member
        component = [cell]
        seen.add(cell)
        stack = [cell]
        while stack:
            cur = stack.pop()
            for nb in _neighbors8(cur):
                if nb in candidates and nb not in seen:
                    seen.add(nb)
                    component.append(nb)
                    stack.append(nb)
        peaks.append(Peak(cell, float(counts[cell])))
    return peaks
