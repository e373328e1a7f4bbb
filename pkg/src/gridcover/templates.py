"""Environment templates, permutation, and the built-in catalog.

A template is a base layout plus permutable slots: where the agent may
start, which way it may face, where doors/keys may sit, and which colors
doors may take.  ``instantiate(template, seed)`` draws one concrete
environment from those slots; the same (template, seed) pair always yields
the identical instance.

The catalog holds five setups: DualHallway (two rooms joined by two doors
somewhere in the middle wall), its sideways variant (rotated 90° and one
cell narrower), two distractor variants (extra unlocked doors, then extra
immovable HeavyBall obstacles), and CascadingLockDoor (two MultiLockDoors in
sequence whose second lock needs both keys).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from typing import Optional

import numpy as np

from .world import (
    COLORS,
    FLOOR,
    GOAL,
    HEAVY_BALL,
    WALL,
    AgentState,
    Door,
    Floor,
    GameState,
    Key,
    MultiLockDoor,
    Tile,
)

TEMPLATE_SCHEMA_VERSION = 1

LAYOUT_LEGEND = {"#": "wall", ".": "floor", "G": "goal"}

Cell = tuple[int, int]


class InvalidTemplate(Exception):
    """Template is malformed or cannot be instantiated."""


class UnknownTemplate(KeyError):
    """No catalog template with that name."""


@dataclass(frozen=True)
class DoorSlot:
    """Candidate wall cells for a group of doors.

    ``requires`` is None for plain unlocked doors and a tuple of key ids for
    a MultiLockDoor.
    """

    cells: tuple[Cell, ...]
    count: int = 1
    requires: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class KeySlot:
    key_id: str
    cells: tuple[Cell, ...]


@dataclass(frozen=True)
class EnvTemplate:
    name: str
    width: int
    height: int
    layout: tuple[str, ...]
    agent_cells: tuple[Cell, ...]
    agent_dirs: tuple[int, ...]
    door_palette: tuple[str, ...]
    door_slots: tuple[DoorSlot, ...] = ()
    key_slots: tuple[KeySlot, ...] = ()
    distractor_cells: tuple[Cell, ...] = ()
    sideways: bool = False
    n_distractor_doors: int = 0
    n_heavy_balls: int = 0


@dataclass(frozen=True)
class EnvInstance:
    """One concrete permutation of a template; owns the initial snapshot."""

    template: EnvTemplate
    seed: int
    initial_state: GameState

    @property
    def name(self) -> str:
        return self.template.name


# ---------------------------------------------------------------------------
# Validation


def validate_template(template: EnvTemplate) -> None:
    t = template
    if len(t.layout) != t.height or any(len(row) != t.width for row in t.layout):
        raise InvalidTemplate(f"{t.name}: layout does not match {t.width}x{t.height}")
    for row in t.layout:
        bad = set(row) - set(LAYOUT_LEGEND)
        if bad:
            raise InvalidTemplate(f"{t.name}: unknown layout chars {sorted(bad)}")
    if not t.agent_cells:
        raise InvalidTemplate(f"{t.name}: empty agent start set")
    if not t.agent_dirs or any(d not in (0, 1, 2, 3) for d in t.agent_dirs):
        raise InvalidTemplate(f"{t.name}: bad agent orientation set")

    def char_at(cell: Cell) -> str:
        x, y = cell
        if not (0 <= x < t.width and 0 <= y < t.height):
            raise InvalidTemplate(f"{t.name}: cell {cell} out of bounds")
        return t.layout[y][x]

    for cell in t.agent_cells:
        if char_at(cell) != ".":
            raise InvalidTemplate(f"{t.name}: agent start {cell} is not floor")
    key_ids = [slot.key_id for slot in t.key_slots]
    if len(set(key_ids)) != len(key_ids):
        raise InvalidTemplate(f"{t.name}: duplicate key ids")
    for slot in t.key_slots:
        if not slot.cells:
            raise InvalidTemplate(f"{t.name}: key slot {slot.key_id} has no cells")
        for cell in slot.cells:
            if char_at(cell) != ".":
                raise InvalidTemplate(f"{t.name}: key cell {cell} is not floor")
    needs_doors = bool(t.door_slots) or t.n_distractor_doors > 0
    if needs_doors and not t.door_palette:
        raise InvalidTemplate(f"{t.name}: doors present but color palette empty")
    for slot in t.door_slots:
        if slot.count < 1 or slot.count > len(slot.cells):
            raise InvalidTemplate(f"{t.name}: door slot needs {slot.count} of {len(slot.cells)} cells")
        for cell in slot.cells:
            if char_at(cell) != "#":
                raise InvalidTemplate(f"{t.name}: door cell {cell} is not a wall")
        if slot.requires is not None:
            missing = set(slot.requires) - set(key_ids)
            if missing:
                raise InvalidTemplate(
                    f"{t.name}: multi-lock door requires keys {sorted(missing)} that no key provides"
                )
    if t.n_distractor_doors > 0:
        for cell in t.distractor_cells:
            if char_at(cell) != "#":
                raise InvalidTemplate(f"{t.name}: distractor cell {cell} is not a wall")


# ---------------------------------------------------------------------------
# Instantiation


def _choice(rng: np.random.Generator, seq: list, k: int = 1, replace_: bool = False) -> list:
    idx = rng.choice(len(seq), size=k, replace=replace_)
    return [seq[int(i)] for i in idx]


def _connected_majority(passable: set[Cell], start: Cell) -> bool:
    """True if ``start`` reaches at least half of ``passable`` by 4-adjacency."""
    if start not in passable:
        return False
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (x + dx, y + dy)
            if nxt in passable and nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return 2 * len(seen) >= len(passable)


def instantiate(template: EnvTemplate, seed: int) -> EnvInstance:
    """Draw one deterministic environment instance from a template."""
    validate_template(template)
    t = template
    rng = np.random.default_rng(seed)

    grid: list[list[Tile]] = []
    for row in t.layout:
        grid.append([{"#": WALL, ".": FLOOR, "G": GOAL}[ch] for ch in row])

    occupied: set[Cell] = set()

    # Doors first: cells per slot, colors per slot from the palette.
    door_cells: set[Cell] = set()
    for slot in t.door_slots:
        cells = _choice(rng, sorted(slot.cells), k=slot.count)
        colors = _choice(
            rng, list(t.door_palette), k=slot.count, replace_=slot.count > len(t.door_palette)
        )
        for cell, color in zip(cells, colors):
            x, y = cell
            if slot.requires is None:
                grid[y][x] = Door(color, open=False, locked=False)
            else:
                grid[y][x] = MultiLockDoor(color, required_keys=frozenset(slot.requires))
            door_cells.add(cell)

    # Keys, in declared slot order.
    for slot in t.key_slots:
        free = [c for c in sorted(slot.cells) if c not in occupied]
        if not free:
            raise InvalidTemplate(f"{t.name}: no free cell for key {slot.key_id}")
        (cell,) = _choice(rng, free)
        color = _choice(rng, list(t.door_palette or COLORS))[0]
        grid[cell[1]][cell[0]] = Key(color, slot.key_id)
        occupied.add(cell)

    # Agent pose.  Drawn before the variant extras so a variant instance
    # matches its base template's instance except for what the variant adds.
    agent_free = [c for c in sorted(t.agent_cells) if c not in occupied]
    if not agent_free:
        raise InvalidTemplate(f"{t.name}: no free agent start cell")
    (agent_cell,) = _choice(rng, agent_free)
    occupied.add(agent_cell)
    agent_dir = int(_choice(rng, sorted(t.agent_dirs))[0])

    # Distractor doors on the remaining candidate wall cells.
    if t.n_distractor_doors > 0:
        free_walls = [c for c in sorted(t.distractor_cells) if c not in door_cells]
        if len(free_walls) < t.n_distractor_doors:
            raise InvalidTemplate(f"{t.name}: not enough wall cells for distractor doors")
        cells = _choice(rng, free_walls, k=t.n_distractor_doors)
        for cell in cells:
            color = _choice(rng, list(t.door_palette))[0]
            grid[cell[1]][cell[0]] = Door(color, open=False, locked=False)
            door_cells.add(cell)

    # HeavyBalls last: each placement must keep the agent connected to the
    # majority of the remaining open cells, retrying and re-seeding as needed.
    if t.n_heavy_balls > 0:
        open_cells = {
            (x, y)
            for y in range(t.height)
            for x in range(t.width)
            if grid[y][x] is not WALL
        }
        for _restart in range(50):
            balls: list[Cell] = []
            ok = True
            for _ in range(t.n_heavy_balls):
                placed = False
                for _attempt in range(100):
                    candidates = [
                        c
                        for c in sorted(open_cells - occupied - set(balls))
                        if isinstance(grid[c[1]][c[0]], Floor)
                    ]
                    if not candidates:
                        break
                    (cell,) = _choice(rng, candidates)
                    passable = open_cells - set(balls) - {cell}
                    if _connected_majority(passable, agent_cell):
                        balls.append(cell)
                        placed = True
                        break
                if not placed:
                    ok = False
                    break
            if ok:
                for cell in balls:
                    grid[cell[1]][cell[0]] = HEAVY_BALL
                break
            rng = np.random.default_rng(int(rng.integers(2**63)))
        else:
            raise InvalidTemplate(f"{t.name}: could not place {t.n_heavy_balls} heavy balls")

    state = GameState(
        grid=tuple(tuple(row) for row in grid),
        agent=AgentState(x=agent_cell[0], y=agent_cell[1], dir=agent_dir),
    )
    return EnvInstance(template=t, seed=seed, initial_state=state)


# ---------------------------------------------------------------------------
# Built-in catalog


def _dual_hallway_layout() -> tuple[str, ...]:
    rows = ["#" * 21]
    for y in range(1, 12):
        row = list("#.........#.........#")
        if y == 6:
            row[19] = "G"
        rows.append("".join(row))
    rows.append("#" * 21)
    return tuple(rows)


def dual_hallway() -> EnvTemplate:
    wall_cells = tuple((10, y) for y in range(1, 12))
    return EnvTemplate(
        name="DualHallway",
        width=21,
        height=13,
        layout=_dual_hallway_layout(),
        agent_cells=tuple((x, y) for x in range(1, 10) for y in range(1, 12)),
        agent_dirs=(0, 1, 2, 3),
        door_palette=COLORS,
        door_slots=(DoorSlot(cells=wall_cells, count=2),),
        distractor_cells=wall_cells,
    )


def rotate_cw_narrow(template: EnvTemplate, name: str, removed_column: int) -> EnvTemplate:
    """Rotate a template clockwise by 90° and drop one grid column."""
    t = template
    new_w, new_h = t.height, t.width

    def rot(cell: Cell) -> Optional[Cell]:
        x, y = cell
        nx, ny = t.height - 1 - y, x
        if nx == removed_column:
            return None
        if nx > removed_column:
            nx -= 1
        return (nx, ny)

    layout_rows = []
    for ny in range(new_h):
        row = []
        for nx in range(new_w):
            if nx == removed_column:
                continue
            # invert rot: nx = H-1-y, ny = x
            oy = t.height - 1 - nx
            ox = ny
            row.append(t.layout[oy][ox])
        layout_rows.append("".join(row))

    def rot_cells(cells: tuple[Cell, ...]) -> tuple[Cell, ...]:
        out = []
        for c in cells:
            r = rot(c)
            if r is not None:
                out.append(r)
        return tuple(out)

    return replace(
        t,
        name=name,
        width=new_w - 1,
        height=new_h,
        layout=tuple(layout_rows),
        agent_cells=rot_cells(t.agent_cells),
        agent_dirs=tuple(sorted({(d + 1) % 4 for d in t.agent_dirs})),
        door_slots=tuple(
            replace(slot, cells=rot_cells(slot.cells)) for slot in t.door_slots
        ),
        key_slots=tuple(
            replace(slot, cells=rot_cells(slot.cells)) for slot in t.key_slots
        ),
        distractor_cells=rot_cells(t.distractor_cells),
        sideways=True,
    )


def sideways_dual_hallway() -> EnvTemplate:
    return rotate_cw_narrow(dual_hallway(), "SidewaysDualHallway", removed_column=11)


def dual_hallway_distractors() -> EnvTemplate:
    return replace(dual_hallway(), name="DualHallway+Distractors", n_distractor_doors=5)


def dual_hallway_distractors_obstacles() -> EnvTemplate:
    return replace(
        dual_hallway(),
        name="DualHallway+Distractors&Obstacles",
        n_distractor_doors=5,
        n_heavy_balls=5,
    )


def _cascading_layout() -> tuple[str, ...]:
    rows = ["#" * 13]
    for y in range(1, 6):
        row = list("#.....#...#.#")
        if y == 3:
            row[11] = "G"
        rows.append("".join(row))
    rows.append("#" * 13)
    return tuple(rows)


def cascading_lock_door() -> EnvTemplate:
    room1 = tuple((x, y) for x in range(1, 6) for y in range(1, 6))
    room2 = tuple((x, y) for x in range(7, 10) for y in range(1, 6))
    return EnvTemplate(
        name="CascadingLockDoor",
        width=13,
        height=7,
        layout=_cascading_layout(),
        agent_cells=room1,
        agent_dirs=(0, 1, 2, 3),
        door_palette=COLORS,
        door_slots=(
            DoorSlot(cells=tuple((6, y) for y in range(1, 6)), count=1, requires=("k1",)),
            DoorSlot(cells=tuple((10, y) for y in range(1, 6)), count=1, requires=("k1", "k2")),
        ),
        key_slots=(KeySlot("k1", room1), KeySlot("k2", room2)),
    )


_BUILTINS = (
    dual_hallway,
    sideways_dual_hallway,
    dual_hallway_distractors,
    dual_hallway_distractors_obstacles,
    cascading_lock_door,
)

TEMPLATE_FILES = {
    "DualHallway": "dual_hallway.json",
    "SidewaysDualHallway": "sideways_dual_hallway.json",
    "DualHallway+Distractors": "dual_hallway_distractors.json",
    "DualHallway+Distractors&Obstacles": "dual_hallway_distractors_obstacles.json",
    "CascadingLockDoor": "cascading_lock_door.json",
}


def catalog() -> list[EnvTemplate]:
    """The five built-in environment setups, in canonical order."""
    return [build() for build in _BUILTINS]


# Extra templates (custom files, test fixtures) resolvable by name so their
# trajectories can be replayed.
_REGISTRY: dict[str, EnvTemplate] = {}


def register_template(template: EnvTemplate) -> EnvTemplate:
    validate_template(template)
    _REGISTRY[template.name] = template
    return template


def get_template(name: str) -> EnvTemplate:
    for build in _BUILTINS:
        t = build()
        if t.name == name:
            return t
    if name in _REGISTRY:
        return _REGISTRY[name]
    raise UnknownTemplate(name)


# ---------------------------------------------------------------------------
# Template wire format


def template_to_json(template: EnvTemplate) -> dict:
    t = template
    return {
        "schema_version": TEMPLATE_SCHEMA_VERSION,
        "name": t.name,
        "width": t.width,
        "height": t.height,
        "legend": dict(LAYOUT_LEGEND),
        "layout": list(t.layout),
        "agent_cells": [list(c) for c in t.agent_cells],
        "agent_dirs": list(t.agent_dirs),
        "door_palette": list(t.door_palette),
        "door_slots": [
            {
                "cells": [list(c) for c in slot.cells],
                "count": slot.count,
                "requires": list(slot.requires) if slot.requires is not None else None,
            }
            for slot in t.door_slots
        ],
        "key_slots": [
            {"key_id": slot.key_id, "cells": [list(c) for c in slot.cells]}
            for slot in t.key_slots
        ],
        "distractor_cells": [list(c) for c in t.distractor_cells],
        "variant": {
            "sideways": t.sideways,
            "n_distractor_doors": t.n_distractor_doors,
            "n_heavy_balls": t.n_heavy_balls,
        },
    }


def template_from_json(data: dict) -> EnvTemplate:
    if data.get("schema_version") != TEMPLATE_SCHEMA_VERSION:
        raise InvalidTemplate(f"unsupported template schema {data.get('schema_version')!r}")
    if data.get("legend") != LAYOUT_LEGEND:
        raise InvalidTemplate("template legend does not match the engine legend")
    variant = data.get("variant", {})
    template = EnvTemplate(
        name=data["name"],
        width=data["width"],
        height=data["height"],
        layout=tuple(data["layout"]),
        agent_cells=tuple((x, y) for x, y in data["agent_cells"]),
        agent_dirs=tuple(data["agent_dirs"]),
        door_palette=tuple(data["door_palette"]),
        door_slots=tuple(
            DoorSlot(
                cells=tuple((x, y) for x, y in slot["cells"]),
                count=slot["count"],
                requires=tuple(slot["requires"]) if slot["requires"] is not None else None,
            )
            for slot in data["door_slots"]
        ),
        key_slots=tuple(
            KeySlot(key_id=slot["key_id"], cells=tuple((x, y) for x, y in slot["cells"]))
            for slot in data["key_slots"]
        ),
        distractor_cells=tuple((x, y) for x, y in data["distractor_cells"]),
        sideways=variant.get("sideways", False),
        n_distractor_doors=variant.get("n_distractor_doors", 0),
        n_heavy_balls=variant.get("n_heavy_balls", 0),
    )
    validate_template(template)
    return template


def load_template_file(path) -> EnvTemplate:
    with open(path, "r", encoding="utf-8") as fh:
        return template_from_json(json.load(fh))


def builtin_template_text(name: str) -> str:
    """Raw JSON shipped for a catalog template."""
    if name not in TEMPLATE_FILES:
        raise UnknownTemplate(name)
    return (
        resources.files("gridcover").joinpath("data/templates").joinpath(TEMPLATE_FILES[name])
    ).read_text(encoding="utf-8")
