"""Grid-world benchmark environments.

States are integer cells (row, col). Movement follows the usual
grid-world conventions: an action that would leave the grid or enter an
obstacle leaves the state unchanged, and the goal cell is absorbing.
Three benchmark layouts are provided: a simple wall, scattered blocks,
and a U-shaped trap whose cavity opens away from the goal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources

from .errors import InvalidStateError, LayoutError

Cell = tuple[int, int]

# Action deltas indexed 0..3; the index order doubles as the
# deterministic tie-break order used by scripted policies.
ACTIONS: tuple[Cell, ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))
ACTION_NAMES: tuple[str, ...] = ("up", "down", "left", "right")
N_ACTIONS = len(ACTIONS)


@dataclass(frozen=True)
class RewardSpec:
    """Reward shaping for tabular training: per-step cost, bump cost, goal payoff."""

    step_penalty: float = -1.0
    obstacle_penalty: float = -4.0
    goal_reward: float = 50.0


@dataclass(frozen=True)
class GridWorld:
    width: int
    height: int
    obstacles: frozenset[Cell]
    goal: Cell
    rewards: RewardSpec = field(default_factory=RewardSpec)
    name: str = "grid"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise LayoutError("grid dimensions must be positive")
        for cell in self.obstacles:
            if not self.in_bounds(cell):
                raise LayoutError(f"obstacle {cell} outside {self.height}x{self.width} grid")
        if not self.in_bounds(self.goal):
            raise LayoutError(f"goal {self.goal} outside grid")
        if self.goal in self.obstacles:
            raise LayoutError("goal cell cannot be an obstacle")
        if len(self.obstacles) >= self.width * self.height:
            raise LayoutError("no free cells")

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.obstacles

    def free_cells(self) -> list[Cell]:
        return [
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if (r, c) not in self.obstacles
        ]

    def transition(self, cell: Cell, action: int) -> Cell:
        """One environment step. Goal absorbs; blocked moves keep the state."""
        if not self.is_free(cell):
            raise InvalidStateError(f"state {cell} is not a free cell")
        if cell == self.goal:
            return cell
        dr, dc = ACTIONS[action]
        target = (cell[0] + dr, cell[1] + dc)
        if not self.is_free(target):
            return cell
        return target

    def reward(self, cell: Cell, action: int, nxt: Cell) -> float:
        if nxt == self.goal:
            return self.rewards.goal_reward
        if nxt == cell:
            # bumped a border or obstacle
            return self.rewards.step_penalty + self.rewards.obstacle_penalty
        return self.rewards.step_penalty

    def distances_to_goal(self) -> dict[Cell, int]:
        """Breadth-first distances from the goal over free cells (4-adjacency)."""
        dist = {self.goal: 0}
        queue = deque([self.goal])
        while queue:
            cell = queue.popleft()
            for dr, dc in ACTIONS:
                nxt = (cell[0] + dr, cell[1] + dc)
                if self.is_free(nxt) and nxt not in dist:
                    dist[nxt] = dist[cell] + 1
                    queue.append(nxt)
        return dist

    def diameter(self) -> int:
        """Largest goal distance among reachable free cells."""
        dist = self.distances_to_goal()
        return max(dist.values()) if dist else 0


def _require_fully_reachable(world: GridWorld) -> GridWorld:
    dist = world.distances_to_goal()
    unreachable = [c for c in world.free_cells() if c not in dist]
    if unreachable:
        raise LayoutError(
            f"goal unreachable from {len(unreachable)} free cells "
            f"(first: {unreachable[0]}) in layout '{world.name}'"
        )
    return world


# --------------------------------------------------------------------------
# layout text format: '#' obstacle, '.' free, 'G' goal, 'S' suggested start

def parse_layout(text: str, name: str = "grid",
                 rewards: RewardSpec | None = None) -> tuple[GridWorld, Cell | None]:
    """Parse the text layout format. Returns (world, suggested start or None)."""
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise LayoutError("empty layout")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise LayoutError("ragged layout rows")
    obstacles = set()
    goal = None
    start = None
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch == "#":
                obstacles.add((r, c))
            elif ch == "G":
                if goal is not None:
                    raise LayoutError("multiple goal cells")
                goal = (r, c)
            elif ch == "S":
                start = (r, c)
            elif ch != ".":
                raise LayoutError(f"unknown layout character {ch!r} at {(r, c)}")
    if goal is None:
        raise LayoutError("layout has no goal cell")
    world = GridWorld(width, len(rows), frozenset(obstacles), goal,
                      rewards or RewardSpec(), name)
    return _require_fully_reachable(world), start


def format_layout(world: GridWorld, start: Cell | None = None) -> str:
    lines = []
    for r in range(world.height):
        chars = []
        for c in range(world.width):
            if (r, c) == world.goal:
                chars.append("G")
            elif (r, c) in world.obstacles:
                chars.append("#")
            elif start is not None and (r, c) == start:
                chars.append("S")
            else:
                chars.append(".")
        lines.append("".join(chars))
    return "\n".join(lines) + "\n"


def load_layout_file(path) -> tuple[GridWorld, Cell | None]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    import os

    name = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_layout(text, name=name)


def bundled_layout(name: str) -> tuple[GridWorld, Cell | None]:
    """Load one of the packaged default layouts by name."""
    ref = resources.files("ftle_verify").joinpath(f"layouts/{name}.txt")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise LayoutError(f"no bundled layout named '{name}'") from None
    return parse_layout(text, name=name)


# --------------------------------------------------------------------------
# benchmark builders

def build_simple_wall(width: int = 12, height: int = 12, wall_col: int = 5,
                      wall_top: int = 3, wall_len: int = 6,
                      goal: Cell = (5, 10),
                      rewards: RewardSpec | None = None) -> GridWorld:
    """Vertical wall segment between start region and goal.

    An empty wall (wall_len=0) yields an open grid. Raises LayoutError if
    the wall disconnects any free cell from the goal.
    """
    obstacles = frozenset((r, wall_col) for r in range(wall_top, wall_top + wall_len))
    world = GridWorld(width, height, obstacles, goal, rewards or RewardSpec(),
                      name="simple_wall")
    return _require_fully_reachable(world)


_DEFAULT_BLOCKS: tuple[Cell, ...] = (
    (1, 2), (2, 6), (3, 9), (5, 4), (6, 7), (8, 2), (9, 6), (10, 9),
)


def build_scattered_blocks(width: int = 12, height: int = 12,
                           blocks: list[Cell] | None = None,
                           count: int | None = None, seed: int = 0,
                           goal: Cell = (5, 10),
                           rewards: RewardSpec | None = None) -> GridWorld:
    """Isolated obstacle blocks; pass an explicit list or a seeded count."""
    if blocks is None:
        if count is None:
            blocks = list(_DEFAULT_BLOCKS)
        else:
            import numpy as np

            rng = np.random.default_rng(seed)
            candidates = [
                (r, c) for r in range(height) for c in range(width) if (r, c) != goal
            ]
            if count > len(candidates):
                raise LayoutError(f"cannot place {count} blocks on {height}x{width} grid")
            picks = rng.choice(len(candidates), size=count, replace=False)
            blocks = [candidates[i] for i in sorted(picks)]
    world = GridWorld(width, height, frozenset(blocks), goal,
                      rewards or RewardSpec(), name="scattered_blocks")
    return _require_fully_reachable(world)


def u_shape_cells(closed_col: int = 7, row_top: int = 2, row_bottom: int = 9,
                  arm_left_col: int = 3) -> frozenset[Cell]:
    """Obstacle cells of a U opening to the left: two arms plus a closed side."""
    cells = set()
    for r in range(row_top, row_bottom + 1):
        cells.add((r, closed_col))
    for c in range(arm_left_col, closed_col + 1):
        cells.add((row_top, c))
        cells.add((row_bottom, c))
    return frozenset(cells)


def build_u_shape_trap(width: int = 12, height: int = 12,
                       closed_col: int = 7, row_top: int = 2,
                       row_bottom: int = 9, arm_left_col: int = 3,
                       goal: Cell = (5, 10),
                       rewards: RewardSpec | None = None) -> GridWorld:
    """U-shaped cavity opening away from the goal, so greedy paths enter it.

    A degenerate one-cell spec (row_top == row_bottom, arm_left_col ==
    closed_col) reduces to a single scattered block.
    """
    if row_bottom < row_top or arm_left_col > closed_col:
        raise LayoutError("inverted U-shape spec")
    obstacles = u_shape_cells(closed_col, row_top, row_bottom, arm_left_col)
    world = GridWorld(width, height, obstacles, goal, rewards or RewardSpec(),
                      name="u_shape_trap")
    return _require_fully_reachable(world)


BUILDERS = {
    "simple_wall": build_simple_wall,
    "scattered_blocks": build_scattered_blocks,
    "u_shape_trap": build_u_shape_trap,
}
