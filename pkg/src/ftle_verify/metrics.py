"""Safety and robustness metrics: MBR, ASAS, and TASAS.

MBR averages the exponent field over safe cells adjacent to obstacles
(the strength of the repelling barrier). ASAS compares aggregated
off-goal density peaks to the goal's peak. TASAS reweights each peak by
its persistence: the fraction of rollouts from the peak that fail to
reach the goal within the escape horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import inf, isinf

import numpy as np

from .attractors import DensityMap, Peak, detect_local_peaks
from .dynamics import is_grid_system
from .errors import InvariantError
from .ftle import FtleField
from .gridworld import ACTIONS, Cell, GridWorld


def obstacle_boundary(world: GridWorld) -> list[Cell]:
    """Free cells 1-norm-adjacent to an obstacle, sorted."""
    boundary = [
        cell
        for cell in world.free_cells()
        if any((cell[0] + dr, cell[1] + dc) in world.obstacles for dr, dc in ACTIONS)
    ]
    return boundary


def mbr(sigma: FtleField, boundary) -> float:
    """Mean exponent over boundary cells; 0 for an empty (or fully masked) boundary."""
    vals = [sigma.values[cell] for cell in boundary if sigma.valid[cell]]
    if not vals:
        return 0.0
    return float(np.mean(vals))


@dataclass
class AsasResult:
    value: float  # may be inf
    h_goal: float
    significant: list[Peak]


def _as_counts(h) -> np.ndarray:
    return h.counts if isinstance(h, DensityMap) else np.asarray(h)


def asas(h, goal_cells, alpha: float = 0.25) -> AsasResult:
    """Aggregated spurious attractor strength.

    h_goal is the largest histogram value inside the goal region. Peaks
    outside the goal with value >= alpha * h_goal are significant; the
    ratio sums their values against h_goal. Defined as infinity when
    h_goal is zero.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    goal_cells = frozenset(goal_cells)
    if not goal_cells:
        raise ValueError("goal region is empty")
    counts = _as_counts(h)
    h_goal = float(max(counts[cell] for cell in goal_cells))
    if h_goal == 0.0:
        return AsasResult(inf, 0.0, [])
    peaks = detect_local_peaks(counts, exclude=goal_cells)
    significant = [p for p in peaks if p.value >= alpha * h_goal]
    value = sum(p.value for p in significant) / h_goal
    return AsasResult(float(value), h_goal, significant)


def escape_ratio(sys, start, goal_cells, n: int, t_escape: int, seed: int = 0) -> float:
    """Fraction of n rollouts from `start` that reach the goal within t_escape steps.

    Goal membership is tested after each transition. For a deterministic
    system all rollouts agree, so the result is 0.0 or 1.0 and n = 1
    gives the same answer as any larger n.
    """
    if n < 1 or t_escape < 1:
        raise ValueError("n and t_escape must be >= 1")
    goal_cells = frozenset(goal_cells)
    escaped = 0
    for _ in range(n):
        escaped += _single_escape(sys, start, goal_cells, t_escape)
    return escaped / n


def _single_escape(sys, start, goal_cells, t_escape: int) -> int:
    if is_grid_system(sys):
        s = start
        for _ in range(t_escape):
            s = sys.step(s)
            if s in goal_cells:
                return 1
        return 0
    x = np.atleast_2d(np.asarray(start, dtype=float))
    for _ in range(t_escape):
        x = sys.flow_batch(x, 1)
        r, c = sys.bin_of(x)
        if (int(r[0]), int(c[0])) in goal_cells:
            return 1
    return 0


@dataclass
class PeakStats:
    cell: Cell
    value: float
    escape_ratio: float
    persistence: float


@dataclass
class TasasResult:
    value: float  # may be inf
    peaks: list[PeakStats]


def tasas(h, significant, h_goal: float, sys, goal_cells,
          n: int, t_escape: int, seed: int = 0) -> TasasResult:
    """Persistence-weighted spurious strength: sum h(p) * (1 - E(p)) / h_goal."""
    if h_goal == 0.0:
        return TasasResult(inf, [])
    counts = _as_counts(h)
    stats = []
    total = 0.0
    for peak in significant:
        e = escape_ratio(sys, peak.cell, goal_cells, n, t_escape, seed)
        rho = 1.0 - e
        if not 0.0 <= rho <= 1.0:
            raise InvariantError(f"persistence {rho} outside [0, 1]")
        total += float(counts[peak.cell]) * rho
        stats.append(PeakStats(peak.cell, peak.value, e, rho))
    return TasasResult(total / h_goal, stats)


@dataclass
class MetricReport:
    """MBR/ASAS/TASAS values plus the peak evidence and run parameters."""

    mbr: float
    asas: float
    tasas: float
    alpha: float
    h_goal: float
    peaks: list[PeakStats]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (isinf(self.asas) or isinf(self.tasas)):
            if self.tasas > self.asas + 1e-12:
                raise InvariantError(
                    f"TASAS {self.tasas} exceeds ASAS {self.asas}"
                )

    def to_dict(self) -> dict:
        def enc(v: float):
            return "inf" if isinf(v) else v

        return {
            "mbr": self.mbr,
            "asas": enc(self.asas),
            "tasas": enc(self.tasas),
            "alpha": self.alpha,
            "h_goal": self.h_goal,
            "peaks": [
                {
                    "cell": list(p.cell),
                    "h": p.value,
                    "escape_ratio": p.escape_ratio,
                    "persistence": p.persistence,
                }
                for p in self.peaks
            ],
            "params": self.params,
        }


def build_metric_report(sys, field: FtleField, h, goal_cells, *,
                        alpha: float = 0.25, n_sim: int = 10,
                        t_escape: int | None = None, seed: int = 0,
                        boundary=None, params: dict | None = None) -> MetricReport:
    """Run the full metric pipeline on a precomputed field and histogram."""
    if t_escape is None:
        t_escape = 4 * field.horizon
    if boundary is None:
        boundary = obstacle_boundary(sys.world) if hasattr(sys, "world") else []
    mbr_value = mbr(field, boundary)
    asas_res = asas(h, goal_cells, alpha)
    tasas_res = tasas(h, asas_res.significant, asas_res.h_goal, sys, goal_cells,
                      n_sim, t_escape, seed)
    merged = {"n_sim": n_sim, "t_escape": t_escape, "t_int": field.horizon,
              "seed": seed, "alpha": alpha}
    merged.update(params or {})
    return MetricReport(mbr_value, asas_res.value, tasas_res.value, alpha,
                        asas_res.h_goal, tasas_res.peaks, merged)
