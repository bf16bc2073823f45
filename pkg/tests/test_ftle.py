"""Jacobian stencils, Cauchy-Green tensors, and exponent fields."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftle_verify import (
    AffineEnv,
    AnalysisSlice,
    ContinuousSystem,
    FlowMapField,
    GridSystem,
    cauchy_green,
    compute_ftle_field,
    finite_difference_jacobian,
    ftle_value,
    make_scripted,
    max_eigenvalue_symmetric,
    slice_to_grid,
)
from ftle_verify.errors import DegenerateStencilError, FtleVerifyError
from ftle_verify.gridworld import GridWorld

from conftest import ToyGridSystem, identity_system


def toy_flow(height, width, fn, obstacles=frozenset(), horizon=1):
    """FlowMapField built directly from a cell map (no stepping)."""
    images = np.full((height, width, 2), -1, dtype=np.int64)
    valid = np.zeros((height, width), dtype=bool)
    count = 0
    for r in range(height):
        for c in range(width):
            if (r, c) in obstacles:
                continue
            images[r, c] = fn((r, c))
            valid[r, c] = True
            count += 1
    return FlowMapField(horizon, images, valid, count * horizon)


# --------------------------------------------------------------------------
# finite_difference_jacobian

def test_jacobian_translation_is_identity():
    flow = toy_flow(4, 4, lambda c: (c[0] + 1, c[1] + 2))
    for cell in [(0, 0), (1, 2), (2, 1)]:
        assert np.array_equal(finite_difference_jacobian(flow, cell), np.eye(2))


def test_jacobian_linear_flow():
    flow = toy_flow(4, 6, lambda c: (2 * c[0], c[1]))
    jac = finite_difference_jacobian(flow, (1, 1))
    assert np.array_equal(jac, np.diag([2.0, 1.0]))


def test_jacobian_constant_flow_is_zero():
    flow = toy_flow(4, 4, lambda c: (2, 2))
    assert np.array_equal(finite_difference_jacobian(flow, (1, 1)), np.zeros((2, 2)))


def test_jacobian_backward_fallback_at_border():
    flow = toy_flow(4, 4, lambda c: (c[0] + 1, c[1] + 2))
    # last row and column have no forward neighbors; the negated backward
    # difference must reproduce the same identity Jacobian
    assert np.array_equal(finite_difference_jacobian(flow, (3, 3)), np.eye(2))


def test_jacobian_degenerate_stencil():
    flow = toy_flow(1, 3, lambda c: c)  # no row neighbors at all
    with pytest.raises(DegenerateStencilError):
        finite_difference_jacobian(flow, (0, 1))


# --------------------------------------------------------------------------
# cauchy_green

def test_cauchy_green_identity():
    assert np.array_equal(cauchy_green(np.eye(2)), np.eye(2))


def test_cauchy_green_rotation_carries_no_stretch():
    rot90 = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.array_equal(cauchy_green(rot90), np.eye(2))


def test_cauchy_green_diagonal():
    assert np.array_equal(cauchy_green(np.diag([2.0, 1.0])), np.diag([4.0, 1.0]))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_cauchy_green_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    jac = rng.normal(size=(2, 2))
    angle = rng.uniform(0, 2 * np.pi)
    q = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    c1 = cauchy_green(jac)
    c2 = cauchy_green(q @ jac)
    assert np.allclose(c1, c2, atol=1e-12)


def test_cauchy_green_output_exactly_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(200):
        c = cauchy_green(rng.normal(size=(2, 2)) * 10.0**rng.integers(-3, 4))
        assert np.max(np.abs(c - c.T)) <= 1e-12


# --------------------------------------------------------------------------
# max_eigenvalue_symmetric

def test_max_eigenvalue_examples():
    assert max_eigenvalue_symmetric(np.diag([4.0, 1.0])) == 4.0
    assert max_eigenvalue_symmetric(np.eye(2)) == 1.0


def test_max_eigenvalue_offdiagonal():
    # characteristic polynomial of [[2,1],[1,2]] is l^2 - 4l + 3, roots {1, 3}
    roots = np.roots([1.0, -4.0, 3.0])
    assert max_eigenvalue_symmetric(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(
        max(roots), abs=1e-12
    )


def test_max_eigenvalue_rejects_asymmetry():
    with pytest.raises(FtleVerifyError):
        max_eigenvalue_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_max_eigenvalue_matches_generic_solver(seed):
    rng = np.random.default_rng(seed)
    jac = rng.normal(size=(2, 2)) * 10.0 ** rng.integers(-2, 3)
    c = cauchy_green(jac)
    closed_form = max_eigenvalue_symmetric(c)
    generic = float(np.linalg.eigvalsh(c)[-1])
    assert abs(closed_form - generic) <= 1e-12 * max(1.0, abs(generic))


def test_max_eigenvalue_three_by_three():
    c = np.diag([1.0, 5.0, 2.0])
    assert max_eigenvalue_symmetric(c) == 5.0


# --------------------------------------------------------------------------
# ftle_value

def test_ftle_value_unit_stretch_is_zero():
    for t in (1, 5, 100):
        assert ftle_value(1.0, t) == 0.0


def test_ftle_value_zero_guard():
    assert ftle_value(0.0, 10) == 0.0
    assert ftle_value(-1e-13, 10) == 0.0  # floating-point PSD violation


def test_ftle_value_algebra():
    assert ftle_value(np.exp(4.0), 2) == pytest.approx(1.0, rel=1e-12)


def test_ftle_value_rejects_bad_horizon():
    with pytest.raises(ValueError):
        ftle_value(1.0, 0)


# --------------------------------------------------------------------------
# compute_ftle_field

def test_field_identity_policy_all_zero():
    sys = identity_system(6, 6)
    field = compute_ftle_field(sys, 13)
    assert field.valid.all()
    assert np.array_equal(field.values, np.zeros((6, 6)))


def test_field_doubling_map_interior():
    # x -> 2x mod W along columns; exact doubling wherever the stencil
    # does not cross the modulus
    width, height = 16, 6
    sys = ToyGridSystem(height, width, lambda c: (c[0], (2 * c[1]) % width))
    field = compute_ftle_field(sys, 1)
    interior = [
        (r, c)
        for r in range(height - 1)
        for c in range(width // 2 - 1)
    ]
    for cell in interior:
        assert field.values[cell] == pytest.approx(np.log(2.0), rel=1e-12)


def test_field_goal_basin_nonpositive():
    # 5x5 goal-absorbing world: brute-force flow map shows every stencil
    # collapses onto the goal, so lambda_max <= 1 everywhere
    world = GridWorld(5, 5, frozenset(), (2, 2))
    policy = make_scripted("shortest_path", world)
    sys = GridSystem(world, policy)
    t = world.diameter() + 1
    finals = {cell: None for cell in world.free_cells()}
    for cell in finals:
        s = cell
        for _ in range(t):
            s = world.transition(s, policy(s))
        finals[cell] = s
    assert set(finals.values()) == {world.goal}
    field = compute_ftle_field(sys, t)
    assert (field.values[field.valid] <= 0.0).all()


def test_field_isometries_exactly_zero():
    # exact-binary lattice and exact-arithmetic maps: translation and a
    # 90-degree rotation must give sigma == 0.0 exactly in the interior
    for matrix, offset in [
        (np.eye(2), (0.5, -0.25)),
        (np.array([[0.0, -1.0], [1.0, 0.0]]), (0.0, 0.0)),
    ]:
        env = AffineEnv(matrix, offset)
        sys = ContinuousSystem(env, make_scripted("constant_force", env, force=0.0))
        spec = AnalysisSlice((0, 1), (0.0, 0.0), (9, 9), bounds=((-1, 1), (-1, 1)))
        field = compute_ftle_field(slice_to_grid(sys, spec), 3)
        assert (field.values == 0.0).all()


def test_field_affine_matches_analytic():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    t = 5
    env = AffineEnv(a)
    sys = ContinuousSystem(env, make_scripted("constant_force", env, force=0.0))
    spec = AnalysisSlice((0, 1), (0.0, 0.0), (20, 20), bounds=((-1, 1), (-1, 1)))
    field = compute_ftle_field(slice_to_grid(sys, spec), t)
    expected = np.log(np.linalg.svd(np.linalg.matrix_power(a, t), compute_uv=False)[0]) / t
    assert np.max(np.abs(field.values - expected)) <= 1e-9 * abs(expected)


def test_field_mask_bookkeeping():
    # obstacles isolate the center cell and starve the corners: the masked
    # set must equal obstacles plus degenerate stencils, recomputed here
    # from the grid geometry alone
    obstacles = {(0, 1), (1, 0), (1, 2), (2, 1)}
    sys = identity_system(3, 3, obstacles)
    field = compute_ftle_field(sys, 2)
    expected_masked = set(obstacles)
    for cell in sys.valid_cells():
        for axes in ((1, 0), (0, 1)):
            fwd = (cell[0] + axes[0], cell[1] + axes[1])
            bwd = (cell[0] - axes[0], cell[1] - axes[1])
            if not (sys.is_valid(fwd) or sys.is_valid(bwd)):
                expected_masked.add(cell)
                break
    actual_masked = {
        (r, c) for r in range(3) for c in range(3) if not field.valid[r, c]
    }
    assert actual_masked == expected_masked
    assert (field.values[~field.valid] == 0.0).all()


def test_field_symmetry_assertion_on_real_layout(wall_system):
    from ftle_verify import compute_flow_map_field

    flow = compute_flow_map_field(wall_system, 6)
    for cell in wall_system.valid_cells():
        try:
            jac = finite_difference_jacobian(flow, cell)
        except DegenerateStencilError:
            continue
        c = cauchy_green(jac)
        assert np.max(np.abs(c - c.T)) <= 1e-12
        assert np.linalg.eigvalsh(c)[0] >= -1e-12


def test_field_grid_mode_rejects_custom_h():
    sys = identity_system(4, 4)
    with pytest.raises(ValueError):
        compute_ftle_field(sys, 2, h=0.5)
