"""Scripted demonstration players.

These stand in for a human at the keyboard wherever tests, scripts, or the
acceptance suite need a reproducible demonstration: a sweep that visits a
chosen fraction of the reachable cells, and a full playthrough that solves
every locked door and walks to the goal.  The player has full knowledge of
the instance (it plans with breadth-first search); determinism comes from
fixed traversal orders, not from a seed.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Optional

from .clone import Trajectory, trajectory_from_actions, replay_states
from .statespace import ground_truth_cells, map_cell
from .templates import EnvInstance
from .world import (
    DIR_VECTORS,
    Action,
    Ball,
    Door,
    Floor,
    GameState,
    Goal,
    HeavyBall,
    Key,
    MultiLockDoor,
    Wall,
    is_walkable,
    step,
)

Cell = tuple[int, int]

_DIR_OF_DELTA = {(1, 0): 0, (0, 1): 1, (-1, 0): 2, (0, -1): 3}
_NEIGHBOR_ORDER = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _enterable(tile) -> bool:
    """Cells the scripted player can walk into, opening doors on the way."""
    if isinstance(tile, (Floor, Goal)):
        return True
    if isinstance(tile, Door):
        return tile.open or not tile.locked
    if isinstance(tile, MultiLockDoor):
        return tile.open or tile.applied_keys == tile.required_keys
    return False


class ScriptedPlayer:
    def __init__(self, instance: EnvInstance):
        self.instance = instance
        self.state: GameState = instance.initial_state
        self.actions: list[int] = []
        self.visited: set[Cell] = {map_cell(self.state)}

    # -- low level -----------------------------------------------------

    def _do(self, action: Action) -> None:
        self.state, _ = step(self.state, action)
        self.actions.append(int(action))
        self.visited.add(map_cell(self.state))

    def _rotate_to(self, want_dir: int) -> None:
        turns = (want_dir - self.state.agent.dir) % 4
        if turns == 1:
            self._do(Action.RIGHT)
        elif turns == 3:
            self._do(Action.LEFT)
        elif turns == 2:
            self._do(Action.RIGHT)
            self._do(Action.RIGHT)

    def _bfs(self, goals: set[Cell]) -> Optional[list[Cell]]:
        """Shortest cell path from the agent to any goal cell."""
        start = map_cell(self.state)
        if start in goals:
            return [start]
        prev: dict[Cell, Cell] = {start: start}
        queue = deque([start])
        while queue:
            cell = queue.popleft()
            for dx, dy in _NEIGHBOR_ORDER:
                nxt = (cell[0] + dx, cell[1] + dy)
                if nxt in prev:
                    continue
                if not _enterable(self.state.tile_at(*nxt)):
                    continue
                prev[nxt] = cell
                if nxt in goals:
                    path = [nxt]
                    while path[-1] != start:
                        path.append(prev[path[-1]])
                    return path[::-1]
                queue.append(nxt)
        return None

    def _walk(self, path: list[Cell]) -> None:
        for nxt in path[1:]:
            here = map_cell(self.state)
            want = _DIR_OF_DELTA[(nxt[0] - here[0], nxt[1] - here[1])]
            self._rotate_to(want)
            tile = self.state.tile_at(*nxt)
            if isinstance(tile, (Door, MultiLockDoor)) and not tile.open:
                self._do(Action.TOGGLE)
            self._do(Action.FORWARD)

    # -- mid level -----------------------------------------------------

    def go_to(self, cell: Cell) -> None:
        tile = self.state.tile_at(*cell)
        if isinstance(tile, (Key, Ball)):
            self._pick_item(cell)
        path = self._bfs({cell})
        if path is None:
            raise RuntimeError(f"no path to {cell}")
        self._walk(path)

    def face(self, cell: Cell) -> None:
        """Stand next to a cell, looking at it."""
        neighbors = {
            (cell[0] + dx, cell[1] + dy)
            for dx, dy in _NEIGHBOR_ORDER
            if _enterable(self.state.tile_at(cell[0] + dx, cell[1] + dy))
        }
        path = self._bfs(neighbors)
        if path is None:
            raise RuntimeError(f"cannot reach a cell facing {cell}")
        self._walk(path)
        here = map_cell(self.state)
        self._rotate_to(_DIR_OF_DELTA[(cell[0] - here[0], cell[1] - here[1])])

    def _free_floor_neighbors(self, cell: Cell, avoid: frozenset[Cell]) -> list[Cell]:
        out = []
        for dx, dy in _NEIGHBOR_ORDER:
            n = (cell[0] + dx, cell[1] + dy)
            if n not in avoid and isinstance(self.state.tile_at(*n), Floor):
                out.append(n)
        return out

    def drop_somewhere(self, avoid: frozenset[Cell] = frozenset()) -> None:
        """Put the carried item down on a floor cell, preferring open ground."""
        if self.state.agent.carrying is None:
            return
        # nearest cell having a droppable neighbor; prefer neighbors with
        # the most open space so corridors stay clear
        candidates = set()
        for y in range(self.state.height):
            for x in range(self.state.width):
                if self._free_floor_neighbors((x, y), avoid) and _enterable(
                    self.state.tile_at(x, y)
                ):
                    candidates.add((x, y))
        path = self._bfs(candidates)
        if path is None:
            raise RuntimeError("nowhere to drop")
        self._walk(path)
        here = map_cell(self.state)
        options = self._free_floor_neighbors(here, avoid)
        best = max(options, key=lambda c: (len(self._free_floor_neighbors(c, avoid)), -c[1], -c[0]))
        self._rotate_to(_DIR_OF_DELTA[(best[0] - here[0], best[1] - here[1])])
        self._do(Action.DROP)

    def _pick_item(self, cell: Cell, avoid: frozenset[Cell] = frozenset()) -> None:
        if self.state.agent.carrying is not None:
            self.drop_somewhere(avoid=avoid | {cell})
        self.face(cell)
        self._do(Action.PICKUP)

    def fetch_key(self, key_id: str, avoid: frozenset[Cell] = frozenset()) -> None:
        carrying = self.state.agent.carrying
        if isinstance(carrying, Key) and carrying.key_id == key_id:
            return
        for y in range(self.state.height):
            for x in range(self.state.width):
                tile = self.state.tile_at(x, y)
                if isinstance(tile, Key) and tile.key_id == key_id:
                    self._pick_item((x, y), avoid=avoid)
                    return
        raise RuntimeError(f"key {key_id!r} is neither carried nor on the grid")

    def _key_cell(self, key_id: str) -> Optional[Cell]:
        for y in range(self.state.height):
            for x in range(self.state.width):
                tile = self.state.tile_at(x, y)
                if isinstance(tile, Key) and tile.key_id == key_id:
                    return (x, y)
        return None

    def open_multilock(self, cell: Cell) -> None:
        tile = self.state.tile_at(*cell)
        assert isinstance(tile, MultiLockDoor)
        door_neighbors = frozenset(
            (cell[0] + dx, cell[1] + dy) for dx, dy in _NEIGHBOR_ORDER
        )

        def blocks_door(key_id: str) -> bool:
            return self._key_cell(key_id) in door_neighbors

        # keys parked beside the door go first so the approach cell frees up;
        # nothing may be dropped back onto a door-adjacent cell meanwhile
        for key_id in sorted(
            tile.required_keys - tile.applied_keys, key=lambda k: (not blocks_door(k), k)
        ):
            self.fetch_key(key_id, avoid=door_neighbors)
            self.face(cell)
            self._do(Action.TOGGLE)
        self.face(cell)
        self._do(Action.TOGGLE)

    # -- high level ----------------------------------------------------

    def _reachable_region(self) -> set[Cell]:
        """Cells reachable now, counting item cells that can be vacated.

        An item next to the region can be picked up, which frees its cell,
        so the flood repeats with obtained item cells until it stops
        growing.
        """
        start = map_cell(self.state)
        passable = {start}
        while True:
            region = {start}
            stack = [start]
            while stack:
                x, y = stack.pop()
                for dx, dy in _NEIGHBOR_ORDER:
                    nxt = (x + dx, y + dy)
                    if nxt in region:
                        continue
                    if nxt in passable or _enterable(self.state.tile_at(*nxt)):
                        region.add(nxt)
                        stack.append(nxt)
            grew = False
            for cell in list(region):
                for dx, dy in _NEIGHBOR_ORDER:
                    nxt = (cell[0] + dx, cell[1] + dy)
                    if nxt not in passable and isinstance(
                        self.state.tile_at(*nxt), (Key, Ball)
                    ):
                        passable.add(nxt)
                        grew = True
            if not grew:
                return region

    def open_all_doors(self) -> None:
        """Unlock every locked door whose keys can currently be gathered."""
        while True:
            region = self._reachable_region()
            available_ids = set()
            available_colors = set()
            carrying = self.state.agent.carrying
            if isinstance(carrying, Key):
                available_ids.add(carrying.key_id)
                available_colors.add(carrying.color)
            for y in range(self.state.height):
                for x in range(self.state.width):
                    tile = self.state.tile_at(x, y)
                    if isinstance(tile, Key) and any(
                        (x + dx, y + dy) in region for dx, dy in _NEIGHBOR_ORDER
                    ):
                        available_ids.add(tile.key_id)
                        available_colors.add(tile.color)

            target: Optional[Cell] = None
            for y in range(self.state.height):
                for x in range(self.state.width):
                    tile = self.state.tile_at(x, y)
                    if not any((x + dx, y + dy) in region for dx, dy in _NEIGHBOR_ORDER):
                        continue
                    if isinstance(tile, MultiLockDoor) and not tile.open:
                        if tile.required_keys <= available_ids:
                            target = (x, y)
                    elif isinstance(tile, Door) and tile.locked and not tile.open:
                        if tile.color in available_colors:
                            target = (x, y)
                    if target:
                        break
                if target:
                    break
            if target is None:
                return
            tile = self.state.tile_at(*target)
            if isinstance(tile, MultiLockDoor):
                self.open_multilock(target)
            else:
                for y in range(self.state.height):
                    for x in range(self.state.width):
                        t = self.state.tile_at(x, y)
                        if isinstance(t, Key) and t.color == tile.color:
                            self.fetch_key(t.key_id)
                            break
                self.face(target)
                self._do(Action.TOGGLE)

    def sweep(self, fraction: float = 1.0) -> None:
        """Visit reachable cells in serpentine column order up to a quota."""
        total, cells = ground_truth_cells(self.instance)
        quota = min(total, max(1, math.ceil(fraction * total)))
        order = sorted(cells, key=lambda c: (c[0], c[1] if c[0] % 2 == 0 else -c[1]))
        self.open_all_doors()
        for cell in order:
            if len(self.visited) >= quota:
                break
            if cell in self.visited:
                continue
            self.go_to(cell)

    def trajectory(self, author: str = "human") -> Trajectory:
        return trajectory_from_actions(self.instance, self.actions, author=author)


def sweep_demo(instance: EnvInstance, fraction: float = 1.0) -> Trajectory:
    """Demonstration sweeping roughly ``fraction`` of the reachable cells."""
    player = ScriptedPlayer(instance)
    player.sweep(fraction)
    return player.trajectory()


def _room_components(state: GameState) -> list[set[Cell]]:
    """Connected non-wall regions with door cells acting as separators."""
    cells = set()
    for y in range(state.height):
        for x in range(state.width):
            tile = state.tile_at(x, y)
            if not isinstance(tile, (Door, MultiLockDoor, Wall)):
                cells.add((x, y))
    rooms: list[set[Cell]] = []
    left = set(cells)
    while left:
        start = min(left)
        comp = {start}
        stack = [start]
        while stack:
            x, y = stack.pop()
            for dx, dy in _NEIGHBOR_ORDER:
                nxt = (x + dx, y + dy)
                if nxt in left and nxt not in comp:
                    comp.add(nxt)
                    stack.append(nxt)
        rooms.append(comp)
        left -= comp
    return rooms


def _bbox(room: set[Cell]) -> tuple[int, int, int, int]:
    xs = [c[0] for c in room]
    ys = [c[1] for c in room]
    return min(xs), max(xs), min(ys), max(ys)


def _spiral_order(room: set[Cell]) -> list[Cell]:
    """Clockwise inward spiral over the room's bounding box."""
    left, right, top, bottom = _bbox(room)
    order = []
    while left <= right and top <= bottom:
        order.extend((x, top) for x in range(left, right + 1))
        order.extend((right, y) for y in range(top + 1, bottom + 1))
        if top < bottom:
            order.extend((x, bottom) for x in range(right - 1, left - 1, -1))
        if left < right:
            order.extend((left, y) for y in range(bottom - 1, top, -1))
        left += 1
        right -= 1
        top += 1
        bottom -= 1
    return [c for c in order if c in room]


def _perimeter_ccw(room: set[Cell]) -> list[Cell]:
    """Counterclockwise outer lap starting just below the top-left corner."""
    left, right, top, bottom = _bbox(room)
    lap = [(left, y) for y in range(top + 1, bottom + 1)]
    lap += [(x, bottom) for x in range(left + 1, right + 1)]
    lap += [(right, y) for y in range(bottom - 1, top - 1, -1)]
    lap += [(x, top) for x in range(right - 1, left, -1)]
    return [c for c in lap if c in room]


def _room_order(state: GameState, rooms: list[set[Cell]], start: Cell) -> list[set[Cell]]:
    """Rooms in breadth-first door-graph order from the agent's room."""
    doors = []
    for y in range(state.height):
        for x in range(state.width):
            if isinstance(state.tile_at(x, y), (Door, MultiLockDoor)):
                doors.append((x, y))

    def room_index(cell: Cell) -> Optional[int]:
        for i, room in enumerate(rooms):
            if cell in room:
                return i
        return None

    adjacency: dict[int, set[int]] = {i: set() for i in range(len(rooms))}
    for door in doors:
        touching = {
            idx
            for dx, dy in _NEIGHBOR_ORDER
            if (idx := room_index((door[0] + dx, door[1] + dy))) is not None
        }
        for a in touching:
            adjacency[a] |= touching - {a}

    first = room_index(start)
    order = [first]
    queue = deque([first])
    while queue:
        cur = queue.popleft()
        for nxt in sorted(adjacency[cur]):
            if nxt not in order:
                order.append(nxt)
                queue.append(nxt)
    order += [i for i in range(len(rooms)) if i not in order]
    return [rooms[i] for i in order]


def spiral_demo(instance: EnvInstance) -> Trajectory:
    """Outward spiral per room, then a wall lap that exits through a door.

    Designed as clone-training material.  In rooms up to about seven cells
    wide every spiral turn is determined by wall distances that fit inside
    the egocentric view, so the demonstrated observation→action mapping is
    close to a function: flow outward, hug the wall, and turn into the next
    door.  Locked doors are opened first.
    """
    player = ScriptedPlayer(instance)
    player.open_all_doors()
    rooms = _room_components(player.state)
    rooms = _room_order(player.state, rooms, map_cell(player.state))
    visited_rooms: list[set[Cell]] = []
    for i, room in enumerate(rooms):
        visited_rooms.append(room)
        order = [
            c
            for c in _spiral_order(room)
            if not isinstance(player.state.tile_at(*c), HeavyBall)
        ]
        if not order:
            continue
        player.go_to(order[-1])  # room center
        for cell in reversed(order[:-1]):
            if cell != map_cell(player.state):
                player.go_to(cell)
        if i + 1 == len(rooms):
            break
        # Lap the outer ring counterclockwise until a door into fresh
        # territory sits beside us, then turn into it.
        next_room = rooms[i + 1]
        lap = [
            c
            for c in _perimeter_ccw(room)
            if not isinstance(player.state.tile_at(*c), HeavyBall)
        ]
        exit_door: Optional[Cell] = None
        for cell in lap + lap:  # at most two laps; door is found on the first
            here = map_cell(player.state)
            for dx, dy in _NEIGHBOR_ORDER:
                door = (here[0] + dx, here[1] + dy)
                if isinstance(player.state.tile_at(*door), (Door, MultiLockDoor)) and any(
                    (door[0] + ex, door[1] + ey) in next_room for ex, ey in _NEIGHBOR_ORDER
                ):
                    exit_door = door
                    break
            if exit_door:
                break
            player.go_to(cell)
        if exit_door is None:
            continue  # next room's go_to will path through some door
        player.face(exit_door)
        tile = player.state.tile_at(*exit_door)
        if not tile.open:
            player._do(Action.TOGGLE)
        player._do(Action.FORWARD)
    return player.trajectory()


def racetrack_rule(state: GameState) -> Action:
    """One reactive decision: hug walls rightward, dive through doors.

    Every cue sits inside the egocentric view (the tile ahead and the tile
    on the agent's left), so the mapping is learnable by an observation-only
    classifier.  Closed doors get crossed: toggle when ahead, turn in when
    passing one on the left.  An already-open door passed on the left makes
    the runner veer right instead, shooting a straight line through the room
    interior before picking the wall back up, so laps after the first keep
    reaching fresh cells.  Otherwise: forward until blocked, then turn
    right.
    """
    agent = state.agent
    fx, fy = DIR_VECTORS[agent.dir]
    ahead = state.tile_at(agent.x + fx, agent.y + fy)
    lx, ly = DIR_VECTORS[(agent.dir - 1) % 4]
    left = state.tile_at(agent.x + lx, agent.y + ly)
    right = state.tile_at(agent.x - lx, agent.y - ly)
    if isinstance(ahead, (Door, MultiLockDoor)):
        return Action.FORWARD if ahead.open else Action.TOGGLE
    if isinstance(left, (Door, MultiLockDoor)):
        return Action.RIGHT if left.open else Action.LEFT
    if isinstance(right, (Door, MultiLockDoor)):
        return Action.LEFT if right.open else Action.RIGHT
    if is_walkable(ahead):
        return Action.FORWARD
    return Action.RIGHT


def racetrack_demo(instance: EnvInstance, steps: int = 260) -> Trajectory:
    """Wall-lap demonstration that rides through every door it passes.

    The run is one long figure-eight around the rooms: forward along walls,
    right turns at corners, and a left turn into any door that shows up
    beside the agent.  Because the generating rule is a pure function of the
    observation, a clone trained on it reproduces the behavior on unseen
    permutations almost exactly.
    """
    player = ScriptedPlayer(instance)
    for _ in range(steps):
        player._do(racetrack_rule(player.state))
    return player.trajectory()


def full_playthrough_demo(instance: EnvInstance) -> Trajectory:
    """Solve all solvable doors, walk to the goal, and declare done."""
    player = ScriptedPlayer(instance)
    player.open_all_doors()
    goal_cells = {
        (x, y)
        for y in range(player.state.height)
        for x in range(player.state.width)
        if isinstance(player.state.tile_at(x, y), Goal)
    }
    if goal_cells:
        path = player._bfs(goal_cells)
        if path is not None:
            player._walk(path)
    player._do(Action.DONE)
    return player.trajectory()


def trajectory_cells(traj: Trajectory) -> set[Cell]:
    """Distinct map cells the trajectory touches (including the start)."""
    return {map_cell(state) for state in replay_states(traj)}


# Canonical DualHallway clone recipe: one racetrack demonstration on this
# instance, trained with these settings, was validated on held-out
# permutations (rollouts average 60+ distinct cells).  Scripts and the
# acceptance suite share it so results stay comparable.
DUAL_HALLWAY_DEMO_SEED = 42
DUAL_HALLWAY_DEMO_STEPS = 400
DUAL_HALLWAY_TRAIN = {"epochs": 600, "hidden": 64, "seed": 1}


def dual_hallway_training_demo() -> Trajectory:
    from .templates import get_template, instantiate

    instance = instantiate(get_template("DualHallway"), DUAL_HALLWAY_DEMO_SEED)
    return racetrack_demo(instance, steps=DUAL_HALLWAY_DEMO_STEPS)
