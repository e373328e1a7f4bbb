"""Deterministic gridworld engine with minigrid-compatible mechanics.

The engine adds two objects on top of the usual walls/doors/keys/goal set:

- ``MultiLockDoor``: a door that opens only after every key in its required
  set has been applied.  Applying a key (toggle while carrying it) registers
  the key without taking it out of the agent's hands, so a single key can be
  applied to several locks under the one-item carry limit.  A further toggle
  once all keys are applied opens the door.
- ``HeavyBall``: an immovable obstacle.  It can never be picked up and never
  moves after instantiation.

All state is modelled with frozen dataclasses.  ``GameState`` is a value:
stepping a state returns a new one and can never mutate a stored snapshot,
which is what lets a search tree expand from any node it has kept around.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row; the grid
is indexed ``grid[y][x]``.  Directions: 0=east, 1=south, 2=west, 3=north.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Optional, Union

import numpy as np


class Action(IntEnum):
    LEFT = 0
    RIGHT = 1
    FORWARD = 2
    PICKUP = 3
    DROP = 4
    TOGGLE = 5
    DONE = 6


N_ACTIONS = 7

COLORS = ("red", "green", "blue", "purple", "yellow", "grey")

# (dx, dy) per direction id; y grows downward.
DIR_VECTORS = ((1, 0), (0, 1), (-1, 0), (0, -1))


class StepOutcome(IntEnum):
    MOVED = 0
    PICKED_UP = 1
    DROPPED = 2
    TOGGLED = 3
    KEY_APPLIED = 4
    BLOCKED = 5
    NO_OP = 6


class SteppedAfterDone(Exception):
    """Raised when stepping a state whose episode has already ended."""


# ---------------------------------------------------------------------------
# Tiles


@dataclass(frozen=True, slots=True)
class Floor:
    pass


@dataclass(frozen=True, slots=True)
class Wall:
    pass


@dataclass(frozen=True, slots=True)
class Goal:
    pass


@dataclass(frozen=True, slots=True)
class Door:
    color: str
    open: bool = False
    locked: bool = False


@dataclass(frozen=True, slots=True)
class MultiLockDoor:
    color: str
    required_keys: frozenset[str]
    applied_keys: frozenset[str] = frozenset()
    open: bool = False


@dataclass(frozen=True, slots=True)
class Key:
    color: str
    key_id: str


@dataclass(frozen=True, slots=True)
class Ball:
    color: str


@dataclass(frozen=True, slots=True)
class HeavyBall:
    pass


Tile = Union[Floor, Wall, Goal, Door, MultiLockDoor, Key, Ball, HeavyBall]
Item = Union[Key, Ball]

FLOOR = Floor()
WALL = Wall()
GOAL = Goal()
HEAVY_BALL = HeavyBall()


@dataclass(frozen=True, slots=True)
class AgentState:
    x: int
    y: int
    dir: int
    carrying: Optional[Item] = None

    @property
    def pos(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class GameState:
    grid: tuple[tuple[Tile, ...], ...]
    agent: AgentState
    step_count: int = 0
    done: bool = False

    @property
    def width(self) -> int:
        return len(self.grid[0])

    @property
    def height(self) -> int:
        return len(self.grid)

    def tile_at(self, x: int, y: int) -> Tile:
        """Tile at (x, y); out-of-bounds reads as a wall."""
        if 0 <= x < len(self.grid[0]) and 0 <= y < len(self.grid):
            return self.grid[y][x]
        return WALL


def is_walkable(tile: Tile) -> bool:
    """Whether the agent may occupy a cell holding this tile."""
    if isinstance(tile, (Floor, Goal)):
        return True
    if isinstance(tile, (Door, MultiLockDoor)):
        return tile.open
    return False


def see_through(tile: Tile) -> bool:
    """Whether sight passes this tile (walls and closed doors block it)."""
    if isinstance(tile, Wall):
        return False
    if isinstance(tile, (Door, MultiLockDoor)):
        return tile.open
    return True


def _with_tile(grid: tuple[tuple[Tile, ...], ...], x: int, y: int, tile: Tile):
    row = grid[y]
    new_row = row[:x] + (tile,) + row[x + 1 :]
    return grid[:y] + (new_row,) + grid[y + 1 :]


def step(state: GameState, action: int) -> tuple[GameState, StepOutcome]:
    """Apply one action, returning (new state, outcome).

    Pure: ``state`` is never modified.  Raises :class:`SteppedAfterDone`
    when the state is already done.
    """
    if state.done:
        raise SteppedAfterDone("cannot step a finished state")
    action = Action(action)
    agent = state.agent
    grid = state.grid
    steps = state.step_count + 1

    if action is Action.LEFT:
        agent = replace(agent, dir=(agent.dir - 1) % 4)
        return replace(state, agent=agent, step_count=steps), StepOutcome.MOVED

    if action is Action.RIGHT:
        agent = replace(agent, dir=(agent.dir + 1) % 4)
        return replace(state, agent=agent, step_count=steps), StepOutcome.MOVED

    if action is Action.DONE:
        return replace(state, step_count=steps, done=True), StepOutcome.NO_OP

    dx, dy = DIR_VECTORS[agent.dir]
    fx, fy = agent.x + dx, agent.y + dy
    front = state.tile_at(fx, fy)

    if action is Action.FORWARD:
        if is_walkable(front):
            agent = replace(agent, x=fx, y=fy)
            return replace(state, agent=agent, step_count=steps), StepOutcome.MOVED
        return replace(state, step_count=steps), StepOutcome.BLOCKED

    if action is Action.PICKUP:
        if agent.carrying is None and isinstance(front, (Key, Ball)):
            grid = _with_tile(grid, fx, fy, FLOOR)
            agent = replace(agent, carrying=front)
            return (
                replace(state, grid=grid, agent=agent, step_count=steps),
                StepOutcome.PICKED_UP,
            )
        return replace(state, step_count=steps), StepOutcome.NO_OP

    if action is Action.DROP:
        if agent.carrying is not None and isinstance(front, Floor):
            grid = _with_tile(grid, fx, fy, agent.carrying)
            agent = replace(agent, carrying=None)
            return (
                replace(state, grid=grid, agent=agent, step_count=steps),
                StepOutcome.DROPPED,
            )
        return replace(state, step_count=steps), StepOutcome.NO_OP

    # TOGGLE
    if isinstance(front, Door):
        if front.open:
            grid = _with_tile(grid, fx, fy, replace(front, open=False))
        elif not front.locked:
            grid = _with_tile(grid, fx, fy, replace(front, open=True))
        elif isinstance(agent.carrying, Key) and agent.carrying.color == front.color:
            # Unlocking keeps the key in hand.
            grid = _with_tile(grid, fx, fy, Door(front.color, open=True, locked=False))
        else:
            return replace(state, step_count=steps), StepOutcome.NO_OP
        return replace(state, grid=grid, step_count=steps), StepOutcome.TOGGLED

    if isinstance(front, MultiLockDoor):
        carrying = agent.carrying
        if (
            not front.open
            and isinstance(carrying, Key)
            and carrying.key_id in front.required_keys
            and carrying.key_id not in front.applied_keys
        ):
            applied = front.applied_keys | {carrying.key_id}
            grid = _with_tile(grid, fx, fy, replace(front, applied_keys=applied))
            return (
                replace(state, grid=grid, step_count=steps),
                StepOutcome.KEY_APPLIED,
            )
        if front.open:
            grid = _with_tile(grid, fx, fy, replace(front, open=False))
            return replace(state, grid=grid, step_count=steps), StepOutcome.TOGGLED
        if front.applied_keys == front.required_keys:
            grid = _with_tile(grid, fx, fy, replace(front, open=True))
            return replace(state, grid=grid, step_count=steps), StepOutcome.TOGGLED
        return replace(state, step_count=steps), StepOutcome.NO_OP

    return replace(state, step_count=steps), StepOutcome.NO_OP


# ---------------------------------------------------------------------------
# Egocentric observation

VIEW_SIZE = 7
AGENT_VIEW_POS = (6, 3)  # (row, col): bottom-center, facing row 0

OBJ_UNSEEN = 0
OBJ_FLOOR = 1
OBJ_WALL = 2
OBJ_DOOR = 3
OBJ_MULTILOCK_DOOR = 4
OBJ_KEY = 5
OBJ_BALL = 6
OBJ_HEAVY_BALL = 7
OBJ_GOAL = 8
N_OBJECT_CLASSES = 9

N_COLOR_CLASSES = 1 + len(COLORS)  # 0 = no color

STATUS_NONE = 0
STATUS_OPEN = 1
STATUS_CLOSED = 2
STATUS_LOCKED = 3
STATUS_MULTILOCK_BASE = 4  # closed multi-lock: base + number of applied keys
N_STATUS_CLASSES = 8

_COLOR_ID = {c: i + 1 for i, c in enumerate(COLORS)}


def tile_encoding(tile: Tile) -> tuple[int, int, int]:
    """(object class, color, door status) triple for one tile."""
    if isinstance(tile, Floor):
        return (OBJ_FLOOR, 0, STATUS_NONE)
    if isinstance(tile, Wall):
        return (OBJ_WALL, 0, STATUS_NONE)
    if isinstance(tile, Goal):
        return (OBJ_GOAL, 0, STATUS_NONE)
    if isinstance(tile, Door):
        if tile.open:
            status = STATUS_OPEN
        elif tile.locked:
            status = STATUS_LOCKED
        else:
            status = STATUS_CLOSED
        return (OBJ_DOOR, _COLOR_ID[tile.color], status)
    if isinstance(tile, MultiLockDoor):
        if tile.open:
            status = STATUS_OPEN
        else:
            applied = min(len(tile.applied_keys), N_STATUS_CLASSES - 1 - STATUS_MULTILOCK_BASE)
            status = STATUS_MULTILOCK_BASE + applied
        return (OBJ_MULTILOCK_DOOR, _COLOR_ID[tile.color], status)
    if isinstance(tile, Key):
        return (OBJ_KEY, _COLOR_ID[tile.color], STATUS_NONE)
    if isinstance(tile, Ball):
        return (OBJ_BALL, _COLOR_ID[tile.color], STATUS_NONE)
    if isinstance(tile, HeavyBall):
        return (OBJ_HEAVY_BALL, 0, STATUS_NONE)
    raise TypeError(f"unknown tile {tile!r}")


def _view_to_world(agent: AgentState, vx: int, vy: int) -> tuple[int, int]:
    forward = AGENT_VIEW_POS[0] - vy
    right = vx - AGENT_VIEW_POS[1]
    fx, fy = DIR_VECTORS[agent.dir]
    rx, ry = -fy, fx  # right hand = forward rotated 90° clockwise (y down)
    return (agent.x + forward * fx + right * rx, agent.y + forward * fy + right * ry)


def observe(state: GameState) -> np.ndarray:
    """Egocentric 7×7×3 view in front of the agent.

    The agent sits at the bottom-center cell facing up (row 0 is six cells
    ahead).  Each visible cell is encoded as (object class, color, door
    status); cells hidden behind walls or closed doors are all-zero
    ("unseen").  The agent's own cell shows the carried item if any, so the
    inventory is part of the observation.  Deterministic function of the
    state; the returned array is read-only.
    """
    agent = state.agent
    tiles: list[list[Tile]] = [[WALL] * VIEW_SIZE for _ in range(VIEW_SIZE)]
    for vy in range(VIEW_SIZE):
        for vx in range(VIEW_SIZE):
            wx, wy = _view_to_world(agent, vx, vy)
            tiles[vy][vx] = state.tile_at(wx, wy)

    # Visibility sweep: light spreads forward and sideways from the agent
    # cell, stopping at tiles sight cannot pass.
    mask = [[False] * VIEW_SIZE for _ in range(VIEW_SIZE)]
    ar, ac = AGENT_VIEW_POS
    mask[ar][ac] = True
    for vy in range(VIEW_SIZE - 1, -1, -1):
        for vx in range(VIEW_SIZE - 1):
            if mask[vy][vx] and see_through(tiles[vy][vx]):
                mask[vy][vx + 1] = True
                if vy > 0:
                    mask[vy - 1][vx + 1] = True
                    mask[vy - 1][vx] = True
        for vx in range(VIEW_SIZE - 1, 0, -1):
            if mask[vy][vx] and see_through(tiles[vy][vx]):
                mask[vy][vx - 1] = True
                if vy > 0:
                    mask[vy - 1][vx - 1] = True
                    mask[vy - 1][vx] = True

    obs = np.zeros((VIEW_SIZE, VIEW_SIZE, 3), dtype=np.uint8)
    for vy in range(VIEW_SIZE):
        for vx in range(VIEW_SIZE):
            if mask[vy][vx]:
                obs[vy, vx] = tile_encoding(tiles[vy][vx])
    if agent.carrying is not None:
        obs[ar, ac] = tile_encoding(agent.carrying)
    obs.flags.writeable = False
    return obs


# ---------------------------------------------------------------------------
# Full-grid symbolic render (wire format for the UI and tooling)

RENDER_SCHEMA_VERSION = 1


def _item_to_json(item: Optional[Item]):
    if item is None:
        return None
    if isinstance(item, Key):
        return {"kind": "key", "color": item.color, "key_id": item.key_id}
    return {"kind": "ball", "color": item.color}


def _item_from_json(data) -> Optional[Item]:
    if data is None:
        return None
    if data["kind"] == "key":
        return Key(data["color"], data["key_id"])
    return Ball(data["color"])


def _cell_to_json(x: int, y: int, tile: Tile) -> dict:
    cell: dict = {"x": x, "y": y}
    if isinstance(tile, Wall):
        cell["kind"] = "wall"
    elif isinstance(tile, Goal):
        cell["kind"] = "goal"
    elif isinstance(tile, HeavyBall):
        cell["kind"] = "heavy_ball"
    elif isinstance(tile, Door):
        cell.update(kind="door", color=tile.color, open=tile.open, locked=tile.locked)
    elif isinstance(tile, MultiLockDoor):
        cell.update(
            kind="multilock_door",
            color=tile.color,
            open=tile.open,
            required_keys=sorted(tile.required_keys),
            applied_keys=sorted(tile.applied_keys),
        )
    elif isinstance(tile, Key):
        cell.update(kind="key", color=tile.color, key_id=tile.key_id)
    elif isinstance(tile, Ball):
        cell.update(kind="ball", color=tile.color)
    else:
        raise TypeError(f"floor cells are implicit: {tile!r}")
    return cell


def render_grid(state: GameState) -> dict:
    """Full symbolic description of a state (floors implicit), JSON-ready.

    Cells are listed in row-major order so equal states always render to
    identical structures.
    """
    cells = []
    for y, row in enumerate(state.grid):
        for x, tile in enumerate(row):
            if not isinstance(tile, Floor):
                cells.append(_cell_to_json(x, y, tile))
    return {
        "schema_version": RENDER_SCHEMA_VERSION,
        "width": state.width,
        "height": state.height,
        "agent": {
            "x": state.agent.x,
            "y": state.agent.y,
            "dir": state.agent.dir,
            "carrying": _item_to_json(state.agent.carrying),
        },
        "step_count": state.step_count,
        "done": state.done,
        "cells": cells,
    }


def parse_grid_render(data: dict) -> GameState:
    """Inverse of :func:`render_grid`."""
    width, height = data["width"], data["height"]
    rows: list[list[Tile]] = [[FLOOR] * width for _ in range(height)]
    for cell in data["cells"]:
        kind = cell["kind"]
        if kind == "wall":
            tile: Tile = WALL
        elif kind == "goal":
            tile = GOAL
        elif kind == "heavy_ball":
            tile = HEAVY_BALL
        elif kind == "door":
            tile = Door(cell["color"], open=cell["open"], locked=cell["locked"])
        elif kind == "multilock_door":
            tile = MultiLockDoor(
                cell["color"],
                required_keys=frozenset(cell["required_keys"]),
                applied_keys=frozenset(cell["applied_keys"]),
                open=cell["open"],
            )
        elif kind == "key":
            tile = Key(cell["color"], cell["key_id"])
        elif kind == "ball":
            tile = Ball(cell["color"])
        else:
            raise ValueError(f"unknown cell kind {kind!r}")
        rows[cell["y"]][cell["x"]] = tile
    agent = AgentState(
        x=data["agent"]["x"],
        y=data["agent"]["y"],
        dir=data["agent"]["dir"],
        carrying=_item_from_json(data["agent"]["carrying"]),
    )
    return GameState(
        grid=tuple(tuple(r) for r in rows),
        agent=agent,
        step_count=data["step_count"],
        done=data["done"],
    )
