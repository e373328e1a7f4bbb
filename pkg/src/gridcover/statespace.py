"""State identity, coverage accounting, and reachable-cell ground truth.

Coverage is counted over discrete map locations: a state "covers" the cell
the agent stands on.  ``ground_truth_cells`` computes the denominator for
saturation directly from an instance; ``brute_force_reachable`` is the
independent oracle that recomputes the same set by exhaustive search over
complete game states and exists purely to cross-check the fast computation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .templates import EnvInstance
from .world import (
    Ball,
    Door,
    Floor,
    GameState,
    Goal,
    HeavyBall,
    Key,
    MultiLockDoor,
    N_ACTIONS,
    Tile,
    Wall,
    step,
)

Cell = tuple[int, int]


class CapExceeded(Exception):
    """Exhaustive search grew past its state budget."""


# ---------------------------------------------------------------------------
# Canonical hashing

_COLOR_BYTE = {c: i for i, c in enumerate(("red", "green", "blue", "purple", "yellow", "grey"))}


def _tile_bytes(tile: Tile) -> bytes:
    if isinstance(tile, Floor):
        return b"."
    if isinstance(tile, Wall):
        return b"#"
    if isinstance(tile, Goal):
        return b"G"
    if isinstance(tile, HeavyBall):
        return b"O"
    if isinstance(tile, Door):
        return bytes((68, _COLOR_BYTE[tile.color], tile.open << 1 | tile.locked))
    if isinstance(tile, MultiLockDoor):
        req = ",".join(sorted(tile.required_keys)).encode()
        app = ",".join(sorted(tile.applied_keys)).encode()
        return (
            bytes((77, _COLOR_BYTE[tile.color], tile.open, len(req), len(app))) + req + app
        )
    if isinstance(tile, Key):
        kid = tile.key_id.encode()
        return bytes((75, _COLOR_BYTE[tile.color], len(kid))) + kid
    if isinstance(tile, Ball):
        return bytes((66, _COLOR_BYTE[tile.color]))
    raise TypeError(f"unknown tile {tile!r}")


# Grids are shared between successive states far more often than they change,
# so their serialized form is memoized by object identity.  Entries keep a
# reference to the grid alive so ids cannot be recycled underneath us.
_GRID_BYTES_CACHE: dict[int, tuple[object, bytes]] = {}
_GRID_CACHE_LIMIT = 1 << 18


def _grid_bytes(grid) -> bytes:
    key = id(grid)
    hit = _GRID_BYTES_CACHE.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    data = b"".join(_tile_bytes(tile) for row in grid for tile in row)
    if len(_GRID_BYTES_CACHE) >= _GRID_CACHE_LIMIT:
        _GRID_BYTES_CACHE.clear()
    _GRID_BYTES_CACHE[key] = (grid, data)
    return data


def canonical_config_bytes(state: GameState) -> bytes:
    """Canonical serialization of a state's configuration.

    Covers the grid, agent pose, inventory, and the done flag.  The step
    counter is deliberately excluded: two states that differ only in how
    many steps it took to reach them are the same configuration, which is
    what makes exhaustive configuration search finite.
    """
    agent = state.agent
    carried = b"-" if agent.carrying is None else _tile_bytes(agent.carrying)
    head = bytes((len(state.grid[0]), len(state.grid), agent.x, agent.y, agent.dir, state.done))
    return head + carried + b"|" + _grid_bytes(state.grid)


def config_hash(state: GameState) -> int:
    """64-bit digest of the canonical configuration serialization."""
    digest = hashlib.blake2b(canonical_config_bytes(state), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def config_hash_hex(state: GameState) -> str:
    return format(config_hash(state), "016x")


def map_cell(state: GameState) -> Cell:
    """Coverage projection: the agent's map location."""
    return (state.agent.x, state.agent.y)


# ---------------------------------------------------------------------------
# Ground-truth reachable cells


def _neighbors(cell: Cell) -> Iterable[Cell]:
    x, y = cell
    yield (x + 1, y)
    yield (x - 1, y)
    yield (x, y + 1)
    yield (x, y - 1)


def ground_truth_cells(instance: EnvInstance) -> tuple[int, frozenset[Cell]]:
    """All map cells the agent can ever occupy, and their count.

    Fixpoint over door passability: flood from the start treating closed
    unlocked doors as passable and locked/multi-lock doors as walls, then
    repeatedly mark a locked door passable once every key it needs can be
    fetched from inside the current region, and re-flood.  A key can be
    fetched once any cell next to it is reachable, and its own cell becomes
    occupiable after pickup.  HeavyBalls never become passable.
    """
    state = instance.initial_state
    width, height = state.width, state.height

    passable: set[Cell] = set()
    item_cells: dict[Cell, Tile] = {}
    locked_doors: dict[Cell, Tile] = {}
    for y in range(height):
        for x in range(width):
            tile = state.grid[y][x]
            if isinstance(tile, (Floor, Goal)):
                passable.add((x, y))
            elif isinstance(tile, Door):
                if tile.open or not tile.locked:
                    passable.add((x, y))
                else:
                    locked_doors[(x, y)] = tile
            elif isinstance(tile, MultiLockDoor):
                if tile.open:
                    passable.add((x, y))
                else:
                    locked_doors[(x, y)] = tile
            elif isinstance(tile, (Key, Ball)):
                item_cells[(x, y)] = tile

    obtained_key_ids: set[str] = set()
    obtained_key_colors: set[str] = set()
    start = map_cell(state)

    while True:
        region: set[Cell] = set()
        if start in passable:
            region.add(start)
            stack = [start]
            while stack:
                for nxt in _neighbors(stack.pop()):
                    if nxt in passable and nxt not in region:
                        region.add(nxt)
                        stack.append(nxt)

        changed = False
        for cell, tile in list(item_cells.items()):
            if any(n in region for n in _neighbors(cell)):
                del item_cells[cell]
                passable.add(cell)
                if isinstance(tile, Key):
                    obtained_key_ids.add(tile.key_id)
                    obtained_key_colors.add(tile.color)
                changed = True
        for cell, tile in list(locked_doors.items()):
            if isinstance(tile, MultiLockDoor):
                openable = tile.required_keys <= obtained_key_ids
            else:
                openable = tile.color in obtained_key_colors
            if openable:
                del locked_doors[cell]
                passable.add(cell)
                changed = True
        if not changed:
            return len(region), frozenset(region)


def brute_force_reachable(instance: EnvInstance, state_cap: int = 500_000) -> frozenset[Cell]:
    """Oracle: exhaustive search over complete game states.

    Expands all seven actions from every reachable configuration
    (deduplicated by :func:`config_hash`) and projects the visited states
    onto agent cells.  Raises :class:`CapExceeded` if more than ``state_cap``
    states get expanded, so this only runs on small instances.
    """
    init = instance.initial_state
    seen = {config_hash(init)}
    cells = {map_cell(init)}
    frontier = [init]
    expanded = 0
    while frontier:
        state = frontier.pop()
        if state.done:
            continue
        expanded += 1
        if expanded > state_cap:
            raise CapExceeded(f"more than {state_cap} states expanded")
        for action in range(N_ACTIONS):
            nxt, _ = step(state, action)
            h = config_hash(nxt)
            if h not in seen:
                seen.add(h)
                cells.add(map_cell(nxt))
                frontier.append(nxt)
    return frozenset(cells)


# ---------------------------------------------------------------------------
# Coverage tracking


@dataclass(frozen=True)
class CoverageCurve:
    """Cumulative novel-cell count indexed by search iteration.

    Stored as change points ``(iteration, count)``; the count holds until the
    next point.  ``final_iteration`` closes the curve.
    """

    points: tuple[tuple[int, int], ...]
    final_iteration: int

    @property
    def final_count(self) -> int:
        return self.points[-1][1] if self.points else 0

    def count_at(self, iteration: int) -> int:
        count = 0
        for it, c in self.points:
            if it > iteration:
                break
            count = c
        return count

    def densify(self, max_iteration: Optional[int] = None) -> np.ndarray:
        """Per-iteration counts from 0 to ``max_iteration`` inclusive."""
        last = self.final_iteration if max_iteration is None else max_iteration
        out = np.zeros(last + 1, dtype=np.int32)
        for it, c in self.points:
            if it <= last:
                out[it:] = c
        return out

    def to_csv(self) -> str:
        lines = ["iteration,count"]
        for it, c in self.points:
            lines.append(f"{it},{c}")
        if not self.points or self.points[-1][0] != self.final_iteration:
            lines.append(f"{self.final_iteration},{self.final_count}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "CoverageCurve":
        rows = [line for line in text.strip().splitlines() if line]
        if rows[0] != "iteration,count":
            raise ValueError("not a coverage curve CSV")
        parsed = [tuple(int(v) for v in line.split(",")) for line in rows[1:]]
        final_iteration = parsed[-1][0] if parsed else 0
        points = []
        for it, c in parsed:
            if not points or c != points[-1][1]:
                points.append((it, c))
        return cls(points=tuple(points), final_iteration=final_iteration)


class CoverageTracker:
    """Single-writer visited-cell set with per-iteration change points."""

    def __init__(self, ground_truth_total: int):
        if ground_truth_total <= 0:
            raise ValueError("ground truth total must be positive")
        self.ground_truth_total = ground_truth_total
        self.visited: set[Cell] = set()
        self._points: list[tuple[int, int]] = []
        self._last_iteration = -1

    @property
    def count(self) -> int:
        return len(self.visited)

    @property
    def saturated(self) -> bool:
        return self.count >= self.ground_truth_total

    def record(self, state: GameState, iteration: int) -> bool:
        """Record a visited state; True when its cell was new."""
        if iteration < self._last_iteration:
            raise ValueError("iterations must be recorded in order")
        self._last_iteration = iteration
        cell = map_cell(state)
        if cell in self.visited:
            return False
        self.visited.add(cell)
        if self.count > self.ground_truth_total:
            raise AssertionError(f"coverage exceeded ground truth at {cell}")
        if self._points and self._points[-1][0] == iteration:
            self._points[-1] = (iteration, self.count)
        else:
            self._points.append((iteration, self.count))
        return True

    def curve(self, final_iteration: Optional[int] = None) -> CoverageCurve:
        last = self._last_iteration if final_iteration is None else final_iteration
        return CoverageCurve(points=tuple(self._points), final_iteration=max(last, 0))
