"""Goalless RRT over game states with pluggable action samplers.

The tree grows by repeatedly sampling a random target pose, finding the
stored node closest to it, and expanding that node with one sampled action.
There is no goal and no cost function; the point is breadth of coverage.
Variants differ only in two places: what pre-populates the tree (nothing, a
human trajectory for HS-RRT, or a behavior-clone rollout for CA-RRT) and
which distribution actions are drawn from (uniform, fixed hand weights, or
the clone's smoothed prediction).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .clone import PolicyModel, Trajectory, predict, replay_states, trajectory_from_actions
from .statespace import CoverageCurve, CoverageTracker, ground_truth_cells, map_cell
from .templates import EnvInstance
from .world import GameState, N_ACTIONS, Wall, observe, step


class InstanceMismatch(Exception):
    """Seed trajectory belongs to a different environment instance."""


class ExpandFromDone(Exception):
    """A finished state was selected for expansion (caller bug)."""


# Fallback threshold for the smoothed clone prior: once alpha reaches this,
# sampling switches to the hand-crafted weights for good.
ALPHA_FALLBACK = 0.5

# Hand-crafted action weights for the weighted-RRT baseline, biased toward
# moving and toggling; configurable wherever a WeightedSampler is built.
DEFAULT_WEIGHTS = (0.14, 0.14, 0.34, 0.14, 0.04, 0.15, 0.01)


def alpha_at(iteration: int, alpha0: float, growth: float) -> float:
    """Smoothing factor after a number of iterations (affine schedule)."""
    return alpha0 + iteration * growth


def smoothed_prior(probs: np.ndarray, alpha: float) -> np.ndarray:
    """Additively smooth a 7-way distribution toward uniform.

    p'_i = (p_i + alpha) / (1 + 7*alpha).  alpha=0 is the identity; large
    alpha approaches uniform; the argmax never changes.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    p = np.asarray(probs, dtype=np.float64)
    return (p + alpha) / (1.0 + N_ACTIONS * alpha)


@dataclass(frozen=True)
class TargetConfig:
    x: int
    y: int
    dir: int


@dataclass(frozen=True)
class RrtNode:
    id: int
    state: GameState
    parent: Optional[int]
    action_in: Optional[int]
    iteration_added: int


@dataclass(frozen=True)
class ExplorerConfig:
    max_iterations: int = 20_000
    rotation_weight: float = 0.5
    rng_seed: int = 0
    rollout_cap: int = 200

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


class ActionSampler(Protocol):
    def probs(self, node: RrtNode, iteration: int) -> np.ndarray: ...


class UniformSampler:
    _probs = np.full(N_ACTIONS, 1.0 / N_ACTIONS)

    def probs(self, node: RrtNode, iteration: int) -> np.ndarray:
        return self._probs


class WeightedSampler:
    """Fixed distribution over the 7 actions; weights are normalized."""

    def __init__(self, weights=DEFAULT_WEIGHTS):
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (N_ACTIONS,) or np.any(w < 0):
            raise ValueError("need 7 non-negative weights")
        total = w.sum()
        if total <= 0:
            raise ValueError("weights must not all be zero")
        self.weights = w / total

    def probs(self, node: RrtNode, iteration: int) -> np.ndarray:
        return self.weights


class ClonePriorSampler:
    """Samples from the clone's smoothed action distribution.

    The raw prediction for a node is cached (a node can be expanded many
    times); smoothing is re-applied per iteration since alpha grows.  Once
    alpha crosses the fallback threshold the hand weights take over.
    """

    def __init__(
        self,
        policy: PolicyModel,
        alpha0: float = 0.1,
        growth: float = 1e-5,
        fallback: Optional[WeightedSampler] = None,
    ):
        self.policy = policy
        self.alpha0 = alpha0
        self.growth = growth
        self.fallback = fallback or WeightedSampler()
        self._cache: dict[int, np.ndarray] = {}

    def probs(self, node: RrtNode, iteration: int) -> np.ndarray:
        alpha = alpha_at(iteration, self.alpha0, self.growth)
        if alpha >= ALPHA_FALLBACK:
            return self.fallback.probs(node, iteration)
        raw = self._cache.get(node.id)
        if raw is None:
            raw = predict(self.policy, observe(node.state))
            self._cache[node.id] = raw
        return smoothed_prior(raw, alpha)


# ---------------------------------------------------------------------------
# Tree


# minimal rotation steps between two directions
_ROT_STEPS = np.array(
    [[min((a - b) % 4, (b - a) % 4) for b in range(4)] for a in range(4)],
    dtype=np.float64,
)


class RrtTree:
    """Exploration tree; keeps pose arrays for vectorized nearest lookups."""

    def __init__(self, instance: EnvInstance, tracker: Optional[CoverageTracker] = None):
        self.instance = instance
        self.tracker = tracker
        self.nodes: list[RrtNode] = []
        cap = 1024
        self._xs = np.zeros(cap, dtype=np.float64)
        self._ys = np.zeros(cap, dtype=np.float64)
        # rotation steps from each node's facing to every target direction,
        # plus +inf for finished nodes, precomputed so lookups stay cheap
        self._rot = np.zeros((4, cap), dtype=np.float64)
        self._penalty = np.zeros(cap, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.nodes)

    def _grow(self):
        cap = len(self._xs) * 2
        for name in ("_xs", "_ys", "_penalty"):
            old = getattr(self, name)
            new = np.zeros(cap, dtype=old.dtype)
            new[: len(old)] = old
            setattr(self, name, new)
        rot = np.zeros((4, cap), dtype=np.float64)
        rot[:, : self._rot.shape[1]] = self._rot
        self._rot = rot

    def add(
        self,
        state: GameState,
        parent: Optional[int],
        action_in: Optional[int],
        iteration: int,
    ) -> RrtNode:
        node = RrtNode(
            id=len(self.nodes),
            state=state,
            parent=parent,
            action_in=action_in,
            iteration_added=iteration,
        )
        if node.id >= len(self._xs):
            self._grow()
        agent = state.agent
        self._xs[node.id] = agent.x
        self._ys[node.id] = agent.y
        self._rot[:, node.id] = _ROT_STEPS[:, agent.dir]
        self._penalty[node.id] = np.inf if state.done else 0.0
        self.nodes.append(node)
        if self.tracker is not None:
            self.tracker.record(state, iteration)
        return node

    def nearest(
        self,
        target: TargetConfig,
        rng: np.random.Generator,
        rotation_weight: float = 0.5,
    ) -> int:
        """Node id minimizing |Δx| + |Δy| + w·(rotation steps) to the target.

        Finished nodes are excluded.  Ties are broken uniformly at random so
        nodes that share a pose but differ in hidden state (inventory, door
        states) all get expansion opportunities; a fixed tie-break would
        permanently starve every pose duplicate after the first.
        """
        n = len(self.nodes)
        if n == 0:
            raise ValueError("nearest on an empty tree")
        d = np.abs(self._xs[:n] - target.x)
        d += np.abs(self._ys[:n] - target.y)
        d += rotation_weight * self._rot[target.dir, :n]
        d += self._penalty[:n]
        best_id = int(np.argmin(d))
        best = d[best_id]
        if not np.isfinite(best):
            raise ValueError("all tree nodes are finished")
        candidates = np.flatnonzero(d == best)
        if len(candidates) == 1:
            return int(candidates[0])
        return int(candidates[rng.integers(len(candidates))])

    def replay_from_root(self, node_id: int) -> GameState:
        """Recompute a node's state by replaying its action chain."""
        chain: list[int] = []
        node = self.nodes[node_id]
        while node.parent is not None:
            chain.append(node.action_in)
            node = self.nodes[node.parent]
        state = node.state
        for action in reversed(chain):
            state, _ = step(state, action)
        return state


# ---------------------------------------------------------------------------
# Operations


_NONWALL_CACHE: dict[int, tuple[EnvInstance, list[tuple[int, int]]]] = {}


def _nonwall_cells(instance: EnvInstance) -> list[tuple[int, int]]:
    hit = _NONWALL_CACHE.get(id(instance))
    if hit is not None and hit[0] is instance:
        return hit[1]
    state = instance.initial_state
    cells = [
        (x, y)
        for y in range(state.height)
        for x in range(state.width)
        if not isinstance(state.grid[y][x], Wall)
    ]
    if len(_NONWALL_CACHE) > 4096:
        _NONWALL_CACHE.clear()
    _NONWALL_CACHE[id(instance)] = (instance, cells)
    return cells


def sample_target(rng: np.random.Generator, instance: EnvInstance) -> TargetConfig:
    """Uniform pose over all non-wall cells and the four directions."""
    cells = _nonwall_cells(instance)
    x, y = cells[int(rng.integers(len(cells)))]
    return TargetConfig(x=x, y=y, dir=int(rng.integers(4)))


def seed_from_trajectory(tree: RrtTree, traj: Trajectory) -> RrtTree:
    """Pre-populate the tree with every state of a recorded trajectory.

    The tree must already hold the instance's initial state as its root;
    trajectory states are chained off it with their producing actions.
    """
    if traj.template != tree.instance.name or traj.seed != tree.instance.seed:
        raise InstanceMismatch(
            f"trajectory is for {traj.template!r} seed {traj.seed}, "
            f"tree is for {tree.instance.name!r} seed {tree.instance.seed}"
        )
    if not tree.nodes:
        tree.add(tree.instance.initial_state, None, None, 0)
    prev = 0
    states = replay_states(traj)
    for action, state in zip(traj.actions, states[1:]):
        node = tree.add(state, prev, int(action), 0)
        prev = node.id
    return tree


def draw_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probs)
    r = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, r, side="right"), N_ACTIONS - 1))


def expand(
    tree: RrtTree,
    from_id: int,
    sampler: ActionSampler,
    iteration: int,
    rng: np.random.Generator,
) -> RrtNode:
    """Grow the tree by one node from ``from_id`` with a sampled action."""
    source = tree.nodes[from_id]
    if source.state.done:
        raise ExpandFromDone(f"node {from_id} is finished")
    probs = sampler.probs(source, iteration)
    action = draw_action(probs, rng)
    new_state, _ = step(source.state, action)
    return tree.add(new_state, from_id, action, iteration)


def ca_rollout(
    policy: PolicyModel,
    instance: EnvInstance,
    max_steps: int = 200,
    rng: Optional[np.random.Generator] = None,
    stochastic: bool = False,
) -> Trajectory:
    """Roll the clone out from the initial state to produce a seed trajectory.

    Greedy by default (argmax, lowest action id on ties) so each instance
    yields one reproducible trajectory; ``stochastic=True`` samples from the
    predicted distribution instead.  Stops at done, after ``max_steps``, or
    once the agent has sat on the same cell for the last 8 states.
    """
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    state = instance.initial_state
    actions: list[int] = []
    recent = deque([map_cell(state)], maxlen=8)
    while len(actions) < max_steps and not state.done:
        probs = predict(policy, observe(state))
        if stochastic:
            if rng is None:
                raise ValueError("stochastic rollout needs an rng")
            action = draw_action(probs, rng)
        else:
            action = int(np.argmax(probs))
        state, _ = step(state, action)
        actions.append(action)
        recent.append(map_cell(state))
        if len(recent) == 8 and len(set(recent)) == 1:
            break
    return trajectory_from_actions(instance, actions, author="clone")


def run(
    instance: EnvInstance,
    sampler: ActionSampler,
    seeds: Optional[Trajectory] = None,
    config: ExplorerConfig = ExplorerConfig(),
) -> tuple[RrtTree, CoverageCurve]:
    """Full exploration run; deterministic given instance, sampler and seed.

    Iteration 0 covers the root plus any seed trajectory; each of the
    ``max_iterations`` loop turns performs exactly one expansion.
    """
    total, _ = ground_truth_cells(instance)
    tracker = CoverageTracker(total)
    tree = RrtTree(instance, tracker=tracker)
    tree.add(instance.initial_state, None, None, 0)
    if seeds is not None:
        seed_from_trajectory(tree, seeds)
    rng = np.random.default_rng(config.rng_seed)
    for iteration in range(1, config.max_iterations + 1):
        target = sample_target(rng, instance)
        from_id = tree.nearest(target, rng, rotation_weight=config.rotation_weight)
        expand(tree, from_id, sampler, iteration, rng)
    return tree, tracker.curve(final_iteration=config.max_iterations)


def dump_tree_jsonl(tree: RrtTree) -> str:
    """One JSON object per node: id, parent, action, pose, iteration."""
    lines = []
    for node in tree.nodes:
        lines.append(
            json.dumps(
                {
                    "id": node.id,
                    "parent": node.parent,
                    "action_in": node.action_in,
                    "cell": [node.state.agent.x, node.state.agent.y],
                    "dir": node.state.agent.dir,
                    "iteration_added": node.iteration_added,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + "\n"
