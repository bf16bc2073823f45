"""Finite-time Lyapunov exponent fields from flow maps.

The local deformation of the flow is approximated by finite differences
of the flow map, J = (1/h)[u_1 | u_2] with u_i the image displacement of
a perturbation along axis i. The right Cauchy-Green tensor C = J^T J
isolates stretch from rotation; its largest eigenvalue gives the
exponent sigma = ln(lambda_max) / (2 T) when lambda_max > 0, else 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import FlowMapField, compute_flow_map_field, is_grid_system
from .errors import DegenerateStencilError, FtleVerifyError

# eigenvalues in (-PSD_SLACK, 0] are treated as exact zeros
PSD_SLACK = 1e-12

_AXES = ((1, 0), (0, 1))  # row axis, col axis


@dataclass
class FtleField:
    """Scalar exponent field over the analysis grid.

    `values` is 0.0 wherever `valid` is False (obstacle cells and cells
    whose difference stencil is degenerate). `row_coords`/`col_coords`
    are cell-center coordinates in state-space units; for grid worlds
    they are just the integer indices.
    """

    values: np.ndarray  # (H, W) float64
    valid: np.ndarray  # (H, W) bool
    horizon: int
    scheme: str
    row_coords: np.ndarray
    col_coords: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def finite_difference_jacobian(flow: FlowMapField, s0, h: float = 1.0) -> np.ndarray:
    """Forward-difference Jacobian of a grid flow map at cell s0.

    Along each axis the forward neighbor is preferred; if it is invalid
    the backward neighbor substitutes with the difference negated. If
    neither neighbor is valid the stencil is degenerate.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if not flow.has(s0):
        raise DegenerateStencilError(f"no flow-map entry at {s0}")
    phi0 = np.asarray(flow.image_of(s0), dtype=float)
    n = phi0.shape[0]
    jac = np.empty((n, len(_AXES)))
    for i, (dr, dc) in enumerate(_AXES):
        fwd = (s0[0] + dr, s0[1] + dc)
        bwd = (s0[0] - dr, s0[1] - dc)
        if flow.has(fwd):
            u = np.asarray(flow.image_of(fwd), dtype=float) - phi0
        elif flow.has(bwd):
            u = phi0 - np.asarray(flow.image_of(bwd), dtype=float)
        else:
            raise DegenerateStencilError(
                f"no valid perturbation neighbor along axis {i} at {s0}"
            )
        jac[:, i] = u / h
    return jac


def cauchy_green(jac: np.ndarray) -> np.ndarray:
    """Right Cauchy-Green tensor C = J^T J (symmetric, PSD)."""
    jac = np.asarray(jac, dtype=float)
    if not np.all(np.isfinite(jac)):
        raise FtleVerifyError("Jacobian contains non-finite entries")
    return jac.T @ jac


def max_eigenvalue_symmetric(c: np.ndarray, tol: float = 1e-8) -> float:
    """Largest eigenvalue of a symmetric matrix; closed form for 2x2."""
    c = np.asarray(c, dtype=float)
    scale = max(1.0, float(np.max(np.abs(c))))
    asym = float(np.max(np.abs(c - c.T)))
    if asym > tol * scale:
        raise FtleVerifyError(f"matrix asymmetry {asym:g} exceeds tolerance")
    if c.shape == (2, 2):
        a, d = c[0, 0], c[1, 1]
        b = 0.5 * (c[0, 1] + c[1, 0])
        half_trace = 0.5 * (a + d)
        radius = np.hypot(0.5 * (a - d), b)
        return float(half_trace + radius)
    return float(np.linalg.eigvalsh(c)[-1])


def ftle_value(lambda_max: float, t_int: int) -> float:
    """Exponent from the maximal squared stretch: ln(lambda)/(2 T), 0 if lambda <= 0."""
    if t_int < 1:
        raise ValueError("t_int must be >= 1")
    if lambda_max <= 0.0:
        # covers exact zeros and floating-point PSD violations alike
        return 0.0
    return float(np.log(lambda_max) / (2.0 * t_int))


def _cell_sigma(jac: np.ndarray, t_int: int) -> float:
    return ftle_value(max_eigenvalue_symmetric(cauchy_green(jac)), t_int)


def _compute_grid_field(sys, t_int: int) -> FtleField:
    flow = compute_flow_map_field(sys, t_int)
    height, width = sys.grid_shape
    values = np.zeros((height, width))
    valid = np.zeros((height, width), dtype=bool)
    for cell in sys.valid_cells():
        try:
            jac = finite_difference_jacobian(flow, cell, h=1.0)
        except DegenerateStencilError:
            continue
        values[cell] = _cell_sigma(jac, t_int)
        valid[cell] = True
    return FtleField(
        values=values,
        valid=valid,
        horizon=t_int,
        scheme="grid-forward h=1",
        row_coords=np.arange(height, dtype=float),
        col_coords=np.arange(width, dtype=float),
    )


def _compute_sliced_field(sys, t_int: int, h) -> FtleField:
    """Central-difference field on a continuous 2-D slice.

    All stencil points (centers and the four perturbations per cell) are
    advanced in one batch; out-of-bounds perturbations fall back to a
    one-sided difference, and cells with no usable neighbor pair along
    some axis are masked.
    """
    rows, cols = sys.grid_shape
    if h is None:
        hr, hc = sys.spacing
    elif np.isscalar(h):
        hr = hc = float(h)
    else:
        hr, hc = float(h[0]), float(h[1])
    if hr <= 0 or hc <= 0:
        raise ValueError("h must be positive")

    centers = sys.node_points()
    offsets = [
        np.array([hr, 0.0]),
        np.array([-hr, 0.0]),
        np.array([0.0, hc]),
        np.array([0.0, -hc]),
    ]
    stencil = [centers] + [centers + off for off in offsets]
    batch = np.vstack(stencil)
    usable = np.concatenate([sys.points_valid(part) for part in stencil])
    images = np.full((len(batch), 2), np.nan)
    if np.any(usable):
        images[usable] = sys.flow_batch(batch[usable], t_int)
    n = len(centers)
    phi_c = images[:n]
    phi_rp, phi_rm = images[n:2 * n], images[2 * n:3 * n]
    phi_cp, phi_cm = images[3 * n:4 * n], images[4 * n:5 * n]
    ok = usable.reshape(5, n)

    values = np.zeros((rows, cols))
    valid = np.zeros((rows, cols), dtype=bool)
    steps = (hr, hc)
    plus_minus = ((phi_rp, phi_rm, ok[1], ok[2]), (phi_cp, phi_cm, ok[3], ok[4]))
    for idx in range(n):
        if not ok[0, idx]:
            continue
        jac = np.empty((2, 2))
        degenerate = False
        for axis, (plus, minus, okp, okm) in enumerate(plus_minus):
            step = steps[axis]
            if okp[idx] and okm[idx]:
                u = (plus[idx] - minus[idx]) / (2.0 * step)
            elif okp[idx]:
                u = (plus[idx] - phi_c[idx]) / step
            elif okm[idx]:
                u = (phi_c[idx] - minus[idx]) / step
            else:
                degenerate = True
                break
            jac[:, axis] = u
        if degenerate:
            continue
        r, c = divmod(idx, cols)
        values[r, c] = _cell_sigma(jac, t_int)
        valid[r, c] = True
    return FtleField(
        values=values,
        valid=valid,
        horizon=t_int,
        scheme=f"central h=({hr:g},{hc:g})",
        row_coords=np.array(sys.row_coords, dtype=float),
        col_coords=np.array(sys.col_coords, dtype=float),
    )


def compute_ftle_field(sys, t_int: int, h=None) -> FtleField:
    """FTLE field of a grid system or continuous sliced system.

    Grid systems use the forward-difference stencil with h = 1 cell;
    sliced systems use central differences with h defaulting to one
    analysis-grid spacing per axis.
    """
    if t_int < 1:
        raise ValueError("t_int must be >= 1")
    if is_grid_system(sys):
        if h not in (None, 1, 1.0):
            raise ValueError("grid-mode stencils use h = 1 cell")
        return _compute_grid_field(sys, t_int)
    if hasattr(sys, "node_points"):
        return _compute_sliced_field(sys, t_int, h)
    raise TypeError("sys must be a GridSystem or a sliced continuous system")
