"""Local stability certificates from the exponent field.

Over a convex region R with sigma_max = max FTLE, two trajectories
started in R separate by at most exp(sigma_max * T) times their initial
distance after T steps. For a target final separation epsilon this
certifies tolerance of any initial perturbation below
epsilon * exp(-sigma_max * T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import utc_timestamp
from .dynamics import is_grid_system
from .errors import FtleVerifyError, RegionError
from .ftle import FtleField


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("disc radius must be positive")

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.linalg.norm(pts - np.asarray(self.center), axis=1) <= self.radius

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points via rejection from the bounding box."""
        out = np.empty((n, 2))
        filled = 0
        lo = np.asarray(self.center) - self.radius
        while filled < n:
            cand = lo + rng.random((2 * (n - filled) + 8, 2)) * (2 * self.radius)
            keep = cand[self.contains(cand)]
            take = min(len(keep), n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out

    def to_dict(self) -> dict:
        return {"shape": "disc", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box:
    lower: tuple[float, float]
    upper: tuple[float, float]

    def __post_init__(self):
        if not all(l < u for l, u in zip(self.lower, self.upper)):
            raise ValueError("box needs lower < upper componentwise")

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return lo + rng.random((n, 2)) * (hi - lo)

    def to_dict(self) -> dict:
        return {"shape": "box", "lower": list(self.lower), "upper": list(self.upper)}


def region_from_dict(data: dict):
    shape = data.get("shape")
    if shape == "disc":
        return Disc(tuple(data["center"]), float(data["radius"]))
    if shape == "box":
        return Box(tuple(data["lower"]), tuple(data["upper"]))
    raise FtleVerifyError(f"unknown region shape {shape!r}")


def region_max_ftle(field: FtleField, region) -> float:
    """Max exponent over valid cells whose centers lie in the region."""
    rr, cc = np.meshgrid(field.row_coords, field.col_coords, indexing="ij")
    centers = np.column_stack([rr.ravel(), cc.ravel()])
    inside = region.contains(centers).reshape(field.shape) & field.valid
    if not np.any(inside):
        raise RegionError("region does not intersect the valid field domain")
    return float(field.values[inside].max())


def certify_delta(sigma_max: float, t_int: int, epsilon: float) -> float:
    """Supremum of admissible initial perturbations for final tolerance epsilon.

    Certificates must use a delta strictly below this value.
    """
    if t_int < 1:
        raise ValueError("t_int must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return float(epsilon * math.exp(-sigma_max * t_int))


@dataclass(frozen=True)
class StabilityCertificate:
    """Certified region with its exponent bound and (delta, epsilon) pair."""

    region: Disc | Box
    sigma_max: float
    t_int: int
    epsilon: float
    delta: float
    field_resolution: tuple[int, int]
    timestamp: str

    def __post_init__(self):
        if not self.delta < certify_delta(self.sigma_max, self.t_int, self.epsilon):
            raise FtleVerifyError(
                "certificate delta must lie strictly below epsilon * exp(-sigma_max * T)"
            )

    def to_dict(self) -> dict:
        return {
            "region": self.region.to_dict(),
            "sigma_max": self.sigma_max,
            "t_int": self.t_int,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "field_resolution": list(self.field_resolution),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StabilityCertificate":
        return cls(
            region=region_from_dict(data["region"]),
            sigma_max=float(data["sigma_max"]),
            t_int=int(data["t_int"]),
            epsilon=float(data["epsilon"]),
            delta=float(data["delta"]),
            field_resolution=tuple(data["field_resolution"]),
            timestamp=str(data["timestamp"]),
        )


def make_certificate(region, sigma_max: float, t_int: int, epsilon: float,
                     field_resolution: tuple[int, int],
                     timestamp: str | None = None) -> StabilityCertificate:
    """Certificate at the tightest representable delta below the supremum."""
    sup = certify_delta(sigma_max, t_int, epsilon)
    delta = math.nextafter(sup, 0.0)
    return StabilityCertificate(region, sigma_max, t_int, epsilon, delta,
                                field_resolution, utc_timestamp(timestamp))


@dataclass
class DivergenceValidation:
    """Empirical check of the separation bound on sampled state pairs."""

    n_pairs: int
    n_violations: int
    max_growth: float
    bound: float
    sigma_max: float
    t_int: int
    tol: float
    seed: int

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_violations": self.n_violations,
            "max_growth": self.max_growth,
            "bound": self.bound,
            "sigma_max": self.sigma_max,
            "t_int": self.t_int,
            "tol": self.tol,
            "seed": self.seed,
            "passed": self.passed,
        }


def _sample_pairs(sys, region, pairs: int, rng: np.random.Generator):
    if is_grid_system(sys):
        cells = np.array([c for c in sys.valid_cells()
                          if region.contains(np.array([c], dtype=float))[0]])
        if len(cells) < 2:
            raise RegionError("region holds fewer than two valid cells")
        ia = rng.integers(len(cells), size=pairs)
        ib = rng.integers(len(cells), size=pairs)
        same = ia == ib
        while np.any(same):
            ib[same] = rng.integers(len(cells), size=int(same.sum()))
            same = ia == ib
        return cells[ia].astype(float), cells[ib].astype(float)
    return region.sample(pairs, rng), region.sample(pairs, rng)


def _roll_pairs(sys, pts: np.ndarray, t_int: int) -> np.ndarray:
    if is_grid_system(sys):
        out = np.empty_like(pts)
        for i, p in enumerate(pts):
            s = (int(p[0]), int(p[1]))
            for _ in range(t_int):
                s = sys.step(s)
            out[i] = s
        return out
    return sys.flow_batch(pts, t_int)


def validate_divergence_bound(sys, region, field: FtleField, t_int: int,
                              pairs: int = 1000, seed: int = 0,
                              tol: float = 1e-6) -> DivergenceValidation:
    """Sample state pairs in the region and compare separation growth to the bound.

    Violations are reported, never raised: grid maps are discontinuous
    and need not satisfy the smooth-map assumption behind the bound.
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    sigma_max = region_max_ftle(field, region)
    bound = math.exp(sigma_max * t_int)
    rng = np.random.default_rng(seed)
    pa, pb = _sample_pairs(sys, region, pairs, rng)
    fa = _roll_pairs(sys, pa, t_int)
    fb = _roll_pairs(sys, pb, t_int)
    d0 = np.linalg.norm(pb - pa, axis=1)
    d1 = np.linalg.norm(fb - fa, axis=1)
    nonzero = d0 > 0
    growth = np.divide(d1, d0, out=np.zeros_like(d1), where=nonzero)
    violations = int(np.count_nonzero(growth > bound * (1.0 + tol)))
    max_growth = float(growth.max()) if len(growth) else 0.0
    return DivergenceValidation(int(nonzero.sum()), violations, max_growth,
                                bound, sigma_max, t_int, tol, seed)
