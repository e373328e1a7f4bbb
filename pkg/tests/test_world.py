import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcover import templates as tpl
from gridcover.statespace import canonical_config_bytes
from gridcover.world import (
    Action,
    AgentState,
    Ball,
    Door,
    Floor,
    GameState,
    HeavyBall,
    Key,
    MultiLockDoor,
    StepOutcome,
    SteppedAfterDone,
    Wall,
    is_walkable,
    observe,
    parse_grid_render,
    render_grid,
    step,
)

from minienvs import small_cascading, small_dual_hallway


def grid_from_rows(rows, extras=None):
    lookup = {"#": Wall(), ".": Floor()}
    grid = [[lookup[ch] for ch in row] for row in rows]
    for (x, y), tile in (extras or {}).items():
        grid[y][x] = tile
    return tuple(tuple(row) for row in grid)


def make_state(rows, agent, extras=None):
    return GameState(grid=grid_from_rows(rows, extras), agent=agent)


ROOM = (
    "#####",
    "#...#",
    "#...#",
    "#...#",
    "#####",
)


def test_forward_into_wall_blocks():
    state = make_state(ROOM, AgentState(1, 1, dir=3))  # facing north wall
    after, outcome = step(state, Action.FORWARD)
    assert outcome is StepOutcome.BLOCKED
    assert after.agent.pos == (1, 1)
    assert after.step_count == 1


def test_turn_left_four_times_is_identity():
    state = make_state(ROOM, AgentState(2, 2, dir=0))
    current = state
    for _ in range(4):
        current, outcome = step(current, Action.LEFT)
        assert outcome is StepOutcome.MOVED
    assert current.agent.dir == state.agent.dir
    assert current.agent.pos == state.agent.pos


def test_multilock_apply_keeps_key_in_hand():
    key = Key("yellow", "k1")
    door = MultiLockDoor("grey", required_keys=frozenset({"k1", "k2"}))
    state = make_state(
        ROOM, AgentState(2, 2, dir=0, carrying=key), extras={(3, 2): door}
    )
    after, outcome = step(state, Action.TOGGLE)
    assert outcome is StepOutcome.KEY_APPLIED
    new_door = after.tile_at(3, 2)
    assert new_door.applied_keys == frozenset({"k1"})
    assert not new_door.open
    assert after.agent.carrying == key


def test_multilock_opens_on_toggle_after_all_keys_applied():
    key = Key("yellow", "k1")
    door = MultiLockDoor("grey", required_keys=frozenset({"k1"}))
    state = make_state(
        ROOM, AgentState(2, 2, dir=0, carrying=key), extras={(3, 2): door}
    )
    applied, outcome = step(state, Action.TOGGLE)
    assert outcome is StepOutcome.KEY_APPLIED
    assert not applied.tile_at(3, 2).open
    opened, outcome = step(applied, Action.TOGGLE)
    assert outcome is StepOutcome.TOGGLED
    assert opened.tile_at(3, 2).open


def test_pickup_heavy_ball_is_noop():
    state = make_state(ROOM, AgentState(2, 2, dir=0), extras={(3, 2): HeavyBall()})
    after, outcome = step(state, Action.PICKUP)
    assert outcome is StepOutcome.NO_OP
    assert after.agent.carrying is None
    assert isinstance(after.tile_at(3, 2), HeavyBall)


def test_pickup_while_carrying_is_noop():
    state = make_state(
        ROOM,
        AgentState(2, 2, dir=0, carrying=Key("red", "k9")),
        extras={(3, 2): Key("blue", "k1")},
    )
    after, outcome = step(state, Action.PICKUP)
    assert outcome is StepOutcome.NO_OP
    assert after.agent.carrying == Key("red", "k9")


def test_drop_places_item_on_free_facing_cell():
    state = make_state(ROOM, AgentState(2, 2, dir=0, carrying=Key("red", "k1")))
    after, outcome = step(state, Action.DROP)
    assert outcome is StepOutcome.DROPPED
    assert after.tile_at(3, 2) == Key("red", "k1")
    assert after.agent.carrying is None
    blocked, outcome = step(
        make_state(ROOM, AgentState(2, 2, dir=0, carrying=Key("red", "k1")),
                   extras={(3, 2): Key("blue", "k2")}),
        Action.DROP,
    )
    assert outcome is StepOutcome.NO_OP
    assert blocked.agent.carrying == Key("red", "k1")


def test_done_freezes_state():
    state = make_state(ROOM, AgentState(2, 2, dir=0))
    done, _ = step(state, Action.DONE)
    assert done.done
    with pytest.raises(SteppedAfterDone):
        step(done, Action.FORWARD)


def test_unlocked_door_toggles_open_and_closed():
    state = make_state(ROOM, AgentState(2, 2, dir=0), extras={(3, 2): Door("red")})
    opened, outcome = step(state, Action.TOGGLE)
    assert outcome is StepOutcome.TOGGLED
    assert opened.tile_at(3, 2).open
    closed, _ = step(opened, Action.TOGGLE)
    assert not closed.tile_at(3, 2).open


def test_locked_door_needs_matching_key():
    locked = Door("red", locked=True)
    no_key = make_state(ROOM, AgentState(2, 2, dir=0), extras={(3, 2): locked})
    after, outcome = step(no_key, Action.TOGGLE)
    assert outcome is StepOutcome.NO_OP
    with_key = make_state(
        ROOM,
        AgentState(2, 2, dir=0, carrying=Key("red", "k1")),
        extras={(3, 2): locked},
    )
    after, outcome = step(with_key, Action.TOGGLE)
    assert outcome is StepOutcome.TOGGLED
    assert after.tile_at(3, 2).open
    assert after.agent.carrying is not None  # key is kept


def test_snapshot_isolation():
    instance = tpl.instantiate(small_dual_hallway(), 3)
    state = instance.initial_state
    before = canonical_config_bytes(state)
    for action in (2, 0, 2, 5, 1, 2, 3):
        step(state, action)
    assert canonical_config_bytes(state) == before


def test_step_is_pure():
    instance = tpl.instantiate(small_cascading(), 1)
    state = instance.initial_state
    results = [step(state, a) for a in range(7)] + [step(state, a) for a in range(7)]
    for i in range(7):
        assert results[i][0] == results[i + 7][0]
        assert results[i][1] == results[i + 7][1]


# ---------------------------------------------------------------------------
# Observations


def test_observation_shape_and_determinism(dual_hallway_instance):
    state = dual_hallway_instance.initial_state
    first = observe(state)
    second = observe(state)
    assert first.shape == (7, 7, 3)
    assert first.dtype == np.uint8
    assert np.array_equal(first, second)


def test_observation_occlusion_behind_wall():
    # agent one cell away from a full wall line: everything beyond is unseen
    state = make_state(ROOM, AgentState(2, 2, dir=3))  # north wall at y=0
    obs = observe(state)
    # wall row is 2 ahead -> view row 4; rows 0..3 lie beyond it
    assert (obs[:4] == 0).all()
    assert (obs[4, 2:5, 0] != 0).any()


def test_observation_ignores_cells_behind_agent():
    base = make_state(ROOM, AgentState(2, 2, dir=3))
    other = make_state(ROOM, AgentState(2, 2, dir=3), extras={(2, 3): Key("red", "k")})
    assert np.array_equal(observe(base), observe(other))


def test_observation_shows_carried_item():
    empty = make_state(ROOM, AgentState(2, 2, dir=0))
    carrying = make_state(ROOM, AgentState(2, 2, dir=0, carrying=Key("red", "k")))
    a, b = observe(empty), observe(carrying)
    assert not np.array_equal(a, b)
    assert b[6, 3, 0] == 5  # key object class at the agent cell


# ---------------------------------------------------------------------------
# Render wire format


def test_render_round_trip(dual_hallway_instance):
    state = dual_hallway_instance.initial_state
    stepped, _ = step(state, Action.FORWARD)
    for s in (state, stepped):
        data = render_grid(s)
        assert parse_grid_render(data) == s


def test_render_deterministic(dual_hallway_instance):
    state = dual_hallway_instance.initial_state
    assert render_grid(state) == render_grid(state)


def test_render_includes_multilock_progress():
    instance = tpl.instantiate(small_cascading(), 5)
    data = render_grid(instance.initial_state)
    doors = [c for c in data["cells"] if c["kind"] == "multilock_door"]
    assert len(doors) == 2
    for door in doors:
        assert "applied_keys" in door and "required_keys" in door


# ---------------------------------------------------------------------------
# Property tests

ACTIONS = st.lists(st.integers(0, 6), min_size=1, max_size=40)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 10_000), actions=ACTIONS)
def test_engine_invariants_under_random_play(seed, actions):
    instance = tpl.instantiate(small_cascading(), seed % 50)
    state = instance.initial_state
    heavy_cells = {
        (x, y)
        for y in range(state.height)
        for x in range(state.width)
        if isinstance(state.grid[y][x], HeavyBall)
    }
    for action in actions:
        if state.done:
            break
        state, _ = step(state, action)
        assert is_walkable(state.tile_at(*state.agent.pos))
        carried = state.agent.carrying
        assert carried is None or isinstance(carried, (Key, Ball))
        now_heavy = {
            (x, y)
            for y in range(state.height)
            for x in range(state.width)
            if isinstance(state.grid[y][x], HeavyBall)
        }
        assert now_heavy == heavy_cells


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 1000), actions=ACTIONS)
def test_multilock_applied_keys_never_shrink(seed, actions):
    instance = tpl.instantiate(small_cascading(), seed % 20)
    state = instance.initial_state

    def applied_sets(s):
        return {
            (x, y): s.grid[y][x].applied_keys
            for y in range(s.height)
            for x in range(s.width)
            if isinstance(s.grid[y][x], MultiLockDoor)
        }

    prev = applied_sets(state)
    for action in actions:
        if state.done:
            break
        state, _ = step(state, action)
        now = applied_sets(state)
        for cell, keys in now.items():
            assert prev[cell] <= keys
        prev = now


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 1000))
def test_left_then_right_is_identity(seed):
    instance = tpl.instantiate(small_dual_hallway(), seed % 20)
    state = instance.initial_state
    left, _ = step(state, Action.LEFT)
    back, _ = step(left, Action.RIGHT)
    assert back.agent == state.agent
    assert back.grid == state.grid
