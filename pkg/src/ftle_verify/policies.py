"""Policies to verify: scripted oracles, tabular Q-learning, MLP evaluation.

Scripted rules have known dynamical structure and serve as ground truth
for the metrics (the shortest-path rule funnels every start to the goal,
the trap-cycle rule plants a genuine terminal trap). The tabular trainer
reproduces the paper-style training-evolution experiments exactly and
reproducibly; the MLP evaluator scores externally trained weights from a
portable JSON format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeMismatchError
from .gridworld import ACTION_NAMES, ACTIONS, Cell, GridWorld, N_ACTIONS


def greedy_action(q_values: np.ndarray) -> int:
    """Argmax over action values; ties break to the lowest index."""
    return int(np.argmax(q_values))


# --------------------------------------------------------------------------
# tabular policies

class TabularPolicy:
    """Deterministic cell -> action lookup, optionally with its Q-table."""

    def __init__(self, actions: np.ndarray, q_table: np.ndarray | None = None,
                 name: str = "tabular"):
        self.actions = np.asarray(actions, dtype=np.int64)
        self.q_table = q_table
        self.name = name

    def __call__(self, cell: Cell) -> int:
        return int(self.actions[cell[0], cell[1]])

    @classmethod
    def from_q_table(cls, q_table: np.ndarray, name: str = "tabular") -> "TabularPolicy":
        return cls(np.argmax(q_table, axis=2), np.array(q_table), name)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("row,col,action\n")
            height, width = self.actions.shape
            for r in range(height):
                for c in range(width):
                    fh.write(f"{r},{c},{self.actions[r, c]}\n")

    @classmethod
    def load(cls, path) -> "TabularPolicy":
        entries = {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "row,col,action":
                raise ConfigError(f"bad policy file header {header!r} in {path}")
            for line in fh:
                r, c, a = (int(x) for x in line.strip().split(","))
                entries[(r, c)] = a
        height = max(r for r, _ in entries) + 1
        width = max(c for _, c in entries) + 1
        actions = np.zeros((height, width), dtype=np.int64)
        for (r, c), a in entries.items():
            actions[r, c] = a
        return cls(actions, name="tabular")


@dataclass(frozen=True)
class QLearningConfig:
    gamma: float = 0.99
    learning_rate: float = 0.2
    episodes: int = 1200
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.995
    seed: int = 0
    max_steps: int = 200

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1]")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ConfigError("epsilon_decay must lie in (0, 1]")
        if self.epsilon_end > self.epsilon_start:
            raise ConfigError("epsilon schedule must be non-increasing")

    def epsilon(self, episode: int) -> float:
        return max(self.epsilon_end, self.epsilon_start * self.epsilon_decay**episode)


@dataclass
class TrainingRun:
    config: QLearningConfig
    checkpoints: dict[int, TabularPolicy] = field(default_factory=dict)
    q_table: np.ndarray | None = None


def train_tabular_q(world: GridWorld, cfg: QLearningConfig,
                    checkpoint_episodes=(0, 150, 750, 1200)) -> TrainingRun:
    """Tabular Q-learning with epsilon-greedy exploration and uniform starts.

    Greedy policies are snapshotted at the requested episode marks (mark
    e means "after e episodes", so mark 0 is the untrained constant
    policy from the zero-initialized table). Reproducible per seed.
    """
    rng = np.random.default_rng(cfg.seed)
    q = np.zeros((world.height, world.width, N_ACTIONS))
    free = world.free_cells()
    marks = sorted(set(int(e) for e in checkpoint_episodes))
    run = TrainingRun(cfg)

    def snapshot(episode: int):
        run.checkpoints[episode] = TabularPolicy.from_q_table(
            q, name=f"{world.name}-ep{episode}"
        )

    for episode in range(cfg.episodes + 1):
        if episode in marks:
            snapshot(episode)
        if episode == cfg.episodes:
            break
        eps = cfg.epsilon(episode)
        s = free[rng.integers(len(free))]
        for _ in range(cfg.max_steps):
            if s == world.goal:
                break
            if rng.random() < eps:
                a = int(rng.integers(N_ACTIONS))
            else:
                a = greedy_action(q[s[0], s[1]])
            nxt = world.transition(s, a)
            r = world.reward(s, a, nxt)
            if nxt == world.goal:
                target = r
            else:
                target = r + cfg.gamma * float(np.max(q[nxt[0], nxt[1]]))
            q[s[0], s[1], a] += cfg.learning_rate * (target - q[s[0], s[1], a])
            s = nxt
    run.q_table = q
    return run


# --------------------------------------------------------------------------
# feed-forward evaluator for externally trained weights

@dataclass
class MlpPolicyWeights:
    """Rectified-linear feed-forward net scoring discrete actions.

    `layer_sizes` runs input..output; `weights[i]` has shape
    (layer_sizes[i+1], layer_sizes[i]) and biases match the outputs.
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeMismatchError("layer count mismatch")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[i + 1], self.layer_sizes[i])
            if w.shape != expect:
                raise ShapeMismatchError(f"layer {i} weights {w.shape} != {expect}")
            if b.shape != (self.layer_sizes[i + 1],):
                raise ShapeMismatchError(f"layer {i} bias shape {b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeMismatchError(f"layer {i} has non-finite values")

    def save(self, path) -> None:
        data = {
            "layer_sizes": self.layer_sizes,
            "activation": "relu",
            "layers": [
                {"weights": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MlpPolicyWeights":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        sizes = [int(s) for s in data["layer_sizes"]]
        weights, biases = [], []
        for i, layer in enumerate(data["layers"]):
            w = np.asarray(layer["weights"], dtype=float)
            expect = (sizes[i + 1], sizes[i])
            if w.size != expect[0] * expect[1]:
                raise ShapeMismatchError(
                    f"layer {i}: {w.size} weights cannot fill {expect}"
                )
            weights.append(w.reshape(expect))  # row-major flat arrays
            biases.append(np.asarray(layer["bias"], dtype=float))
        return cls(sizes, weights, biases)


def evaluate_mlp(weights: MlpPolicyWeights, state) -> int:
    """Forward pass and greedy argmax (lowest index on ties)."""
    x = np.asarray(state, dtype=float).ravel()
    if x.shape[0] != weights.layer_sizes[0]:
        raise ShapeMismatchError(
            f"input dimension {x.shape[0]} != {weights.layer_sizes[0]}"
        )
    last = len(weights.weights) - 1
    for i, (w, b) in enumerate(zip(weights.weights, weights.biases)):
        x = w @ x + b
        if i != last:
            x = np.maximum(x, 0.0)
    return greedy_action(x)


class MlpPolicy:
    """Grid policy wrapper around an MLP scoring (row, col) inputs."""

    def __init__(self, weights: MlpPolicyWeights, name: str = "mlp"):
        self.weights = weights
        self.name = name

    def __call__(self, cell: Cell) -> int:
        return evaluate_mlp(self.weights, np.asarray(cell, dtype=float))


# --------------------------------------------------------------------------
# scripted oracles

class ShortestPathPolicy:
    """Moves along decreasing breadth-first distance to the goal.

    Ties break in the fixed action order up > down > left > right.
    """

    name = "shortest_path"

    def __init__(self, world: GridWorld):
        self.world = world
        self.dist = world.distances_to_goal()

    def __call__(self, cell: Cell) -> int:
        if cell == self.world.goal:
            return 0
        here = self.dist[cell]
        for a, (dr, dc) in enumerate(ACTIONS):
            nxt = (cell[0] + dr, cell[1] + dc)
            if self.world.is_free(nxt) and self.dist.get(nxt, here) < here:
                return a
        return 0  # unreachable cells never occur in validated layouts


class GreedyTowardGoalPolicy:
    """Picks the action whose intended target minimizes Manhattan distance
    to the goal, ignoring obstacles entirely. Deliberately deceivable."""

    name = "greedy"

    def __init__(self, world: GridWorld):
        self.world = world

    def __call__(self, cell: Cell) -> int:
        gr, gc = self.world.goal
        best_a, best_d = 0, None
        for a, (dr, dc) in enumerate(ACTIONS):
            tr, tc = cell[0] + dr, cell[1] + dc
            d = abs(tr - gr) + abs(tc - gc)
            if best_d is None or d < best_d:
                best_a, best_d = a, d
        return best_a


class TrapCyclePolicy:
    """Follows a fixed cell cycle; goal-seeking everywhere else."""

    name = "trap_cycle"

    def __init__(self, world: GridWorld, cycle: list[Cell]):
        if len(cycle) < 2:
            raise ConfigError("trap cycle needs at least two cells")
        self.world = world
        self.fallback = ShortestPathPolicy(world)
        self.next_action: dict[Cell, int] = {}
        for i, cell in enumerate(cycle):
            nxt = cycle[(i + 1) % len(cycle)]
            delta = (nxt[0] - cell[0], nxt[1] - cell[1])
            if delta not in ACTIONS:
                raise ConfigError(f"cycle cells {cell} -> {nxt} are not adjacent")
            if not (world.is_free(cell) and world.is_free(nxt)):
                raise ConfigError("cycle cells must be free")
            self.next_action[cell] = ACTIONS.index(delta)

    def __call__(self, cell: Cell) -> int:
        if cell in self.next_action:
            return self.next_action[cell]
        return self.fallback(cell)


class ConstantPolicy:
    """Always the same discrete action."""

    def __init__(self, action: int):
        if not 0 <= action < N_ACTIONS:
            raise ConfigError(f"action index {action} out of range")
        self.action = action
        self.name = f"constant_{ACTION_NAMES[action]}"

    def __call__(self, cell: Cell) -> int:
        return self.action


class EnergyPumpPolicy:
    """Continuous bang-bang controller: push along the current velocity.

    Zero velocity counts as positive, so the switching surface is the
    velocity-sign change.
    """

    name = "energy_pump"

    def __init__(self, magnitude: float, velocity_dim: int = 1):
        self.magnitude = float(magnitude)
        self.velocity_dim = velocity_dim

    def action_batch(self, states: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(states)[:, self.velocity_dim]
        return np.where(v >= 0.0, self.magnitude, -self.magnitude)

    def __call__(self, state) -> float:
        return float(self.action_batch(np.atleast_2d(state))[0])


class ConstantForcePolicy:
    """Continuous policy applying a fixed force."""

    def __init__(self, force: float):
        self.force = float(force)
        self.name = f"constant_force_{force:g}"

    def action_batch(self, states: np.ndarray) -> np.ndarray:
        return np.full(len(np.atleast_2d(states)), self.force)

    def __call__(self, state) -> float:
        return self.force


def make_scripted(rule: str, env, **kwargs):
    """Scripted policy factory; raises on unknown rule names."""
    if rule == "shortest_path":
        return ShortestPathPolicy(env)
    if rule == "greedy":
        return GreedyTowardGoalPolicy(env)
    if rule == "trap_cycle":
        return TrapCyclePolicy(env, kwargs["cycle"])
    if rule == "constant":
        action = kwargs["action"]
        if isinstance(action, str):
            if action not in ACTION_NAMES:
                raise ConfigError(f"unknown action name {action!r}")
            action = ACTION_NAMES.index(action)
        return ConstantPolicy(action)
    if rule == "energy_pump":
        return EnergyPumpPolicy(kwargs.get("magnitude", env.max_action))
    if rule == "constant_force":
        return ConstantForcePolicy(kwargs["force"])
    raise ConfigError(f"unknown scripted rule {rule!r}")
