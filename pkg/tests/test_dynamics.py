"""Closed-loop stepping, iteration, and flow-map construction."""

import numpy as np
import pytest

from ftle_verify import (
    AffineEnv,
    ConstantPolicy,
    ContinuousSystem,
    GridSystem,
    build_simple_wall,
    compute_flow_map_field,
    iterate,
    make_scripted,
    step,
)
from ftle_verify.errors import InvalidStateError
from ftle_verify.gridworld import ACTIONS, GridWorld

from conftest import identity_system, rollout


def open_grid(height=5, width=5, goal=(4, 4)):
    return GridWorld(width, height, frozenset(), goal)


def test_step_moves_right():
    world = open_grid()
    sys = GridSystem(world, ConstantPolicy(3))  # right
    assert step(sys, (2, 3)) == (2, 4)


def test_step_border_clamps_everywhere():
    # brute-force enumeration: every cell, every action, against the raw
    # clamping rule applied independently of GridWorld.transition
    world = open_grid(goal=(2, 2))
    for r in range(world.height):
        for c in range(world.width):
            if (r, c) == world.goal:
                continue
            for a, (dr, dc) in enumerate(ACTIONS):
                target = (r + dr, c + dc)
                in_bounds = 0 <= target[0] < world.height and 0 <= target[1] < world.width
                expected = target if in_bounds else (r, c)
                assert world.transition((r, c), a) == expected


def test_step_identity_environment():
    sys = identity_system()
    assert step(sys, (1, 2)) == (1, 2)


def test_step_rejects_invalid_states(simple_wall):
    sys = GridSystem(simple_wall, ConstantPolicy(0))
    with pytest.raises(InvalidStateError):
        sys.step((3, 5))  # wall cell
    with pytest.raises(InvalidStateError):
        sys.step((-1, 0))


def test_iterate_identity():
    sys = identity_system()
    assert iterate(sys, (2, 2), 100) == (2, 2)


def test_iterate_shift_map():
    # 1-D shift embedded in unbounded 2-D: x -> x + 1
    env = AffineEnv(np.eye(2), offset=(1.0, 0.0))
    sys = ContinuousSystem(env, make_scripted("constant_force", env, force=0.0))
    final = iterate(sys, np.array([0.0, 0.0]), 5)
    assert np.allclose(final, [5.0, 0.0])


def test_iterate_rejects_zero_steps():
    with pytest.raises(ValueError):
        iterate(identity_system(), (0, 0), 0)


def test_iterate_reaches_absorbing_goal(simple_wall):
    # rollout oracle applied over every free cell
    policy = make_scripted("shortest_path", simple_wall)
    sys = GridSystem(simple_wall, policy)
    k = simple_wall.diameter()
    for start in simple_wall.free_cells():
        assert iterate(sys, start, k) == simple_wall.goal
        assert rollout(simple_wall, policy, start, k) == simple_wall.goal


def test_iterate_semigroup(simple_wall):
    policy = make_scripted("greedy", simple_wall)
    sys = GridSystem(simple_wall, policy)
    for start in [(0, 0), (7, 3), (11, 11), (5, 0)]:
        assert iterate(sys, start, 9) == iterate(sys, iterate(sys, start, 4), 5)


def test_flow_map_identity_work_accounting():
    sys = identity_system(3, 3)
    flow = compute_flow_map_field(sys, 10)
    assert flow.transition_calls == 9 * 10
    for cell in sys.valid_cells():
        assert tuple(flow.image_of(cell)) == cell


def test_flow_map_goal_absorbing(simple_wall):
    sys = GridSystem(simple_wall, make_scripted("shortest_path", simple_wall))
    flow = compute_flow_map_field(sys, simple_wall.diameter())
    for cell in simple_wall.free_cells():
        assert tuple(flow.image_of(cell)) == simple_wall.goal


def test_flow_map_skips_obstacles():
    obstacles = {(1, 1)}
    sys = identity_system(3, 3, obstacles)
    flow = compute_flow_map_field(sys, 4)
    assert not flow.has((1, 1))
    with pytest.raises(InvalidStateError):
        flow.image_of((1, 1))
    assert flow.transition_calls == 8 * 4


def test_flow_map_semigroup(simple_wall):
    policy = make_scripted("greedy", simple_wall)
    t = 4
    flow2t = compute_flow_map_field(GridSystem(simple_wall, policy), 2 * t)
    flowt = compute_flow_map_field(GridSystem(simple_wall, policy), t)
    sys = GridSystem(simple_wall, policy)
    for cell in simple_wall.free_cells():
        mid = tuple(flowt.image_of(cell))
        assert tuple(flow2t.image_of(cell)) == iterate(sys, mid, t)


def test_flow_map_deterministic(simple_wall):
    policy = make_scripted("shortest_path", simple_wall)
    a = compute_flow_map_field(GridSystem(simple_wall, policy), 7)
    b = compute_flow_map_field(GridSystem(simple_wall, policy), 7)
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.valid, b.valid)


def test_work_accounting_default_layout():
    world = build_simple_wall()
    sys = GridSystem(world, make_scripted("shortest_path", world))
    flow = compute_flow_map_field(sys, 30)
    assert flow.transition_calls == len(world.free_cells()) * 30
