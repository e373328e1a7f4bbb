import numpy as np
import pytest

from gridcover import templates as tpl
from gridcover.statespace import (
    CapExceeded,
    CoverageCurve,
    CoverageTracker,
    brute_force_reachable,
    canonical_config_bytes,
    config_hash,
    ground_truth_cells,
    map_cell,
)
from gridcover.templates import DoorSlot, EnvTemplate, KeySlot
from gridcover.world import Action, AgentState, GameState, step

from minienvs import small_cascading, small_dual_hallway


def empty_room(side):
    rows = ["#" * (side + 2)]
    rows += ["#" + "." * side + "#" for _ in range(side)]
    rows.append("#" * (side + 2))
    return EnvTemplate(
        name=f"Empty{side}",
        width=side + 2,
        height=side + 2,
        layout=tuple(rows),
        agent_cells=((1, 1),),
        agent_dirs=(0,),
        door_palette=("red",),
    )


def test_equal_states_equal_hashes():
    a = tpl.instantiate(small_dual_hallway(), 3).initial_state
    b = tpl.instantiate(small_dual_hallway(), 3).initial_state
    assert a == b
    assert config_hash(a) == config_hash(b)


def test_direction_changes_hash():
    state = tpl.instantiate(small_dual_hallway(), 3).initial_state
    turned, _ = step(state, Action.LEFT)
    assert map_cell(turned) == map_cell(state)
    assert config_hash(turned) != config_hash(state)


def test_hash_ignores_step_count():
    state = tpl.instantiate(small_dual_hallway(), 3).initial_state
    left, _ = step(state, Action.LEFT)
    back, _ = step(left, Action.RIGHT)
    assert back.step_count == 2
    assert config_hash(back) == config_hash(state)


def test_random_walk_states_have_no_hash_collisions():
    """10k distinct configurations against the full-equality oracle.

    Runs in CascadingLockDoor: its movable keys give a configuration space
    far beyond 10k, unlike DualHallway whose doors-only state collapses to a
    few thousand distinct configurations.
    """
    instance = tpl.instantiate(tpl.get_template("CascadingLockDoor"), 11)
    rng = np.random.default_rng(0)
    state = instance.initial_state
    by_config = {}
    for _ in range(600_000):
        state, _ = step(state, int(rng.integers(0, 6)))
        by_config[canonical_config_bytes(state)] = config_hash(state)
        if len(by_config) >= 10_000:
            break
    assert len(by_config) >= 10_000
    hashes = set(by_config.values())
    assert len(hashes) == len(by_config)


def test_map_cell_is_agent_position():
    instance = tpl.instantiate(small_dual_hallway(), 3)
    state = instance.initial_state
    assert map_cell(state) == state.agent.pos
    # inventory does not matter
    a = GameState(state.grid, AgentState(2, 2, 0), 0, False)
    b = GameState(state.grid, AgentState(2, 2, 0, carrying=None), 5, False)
    assert map_cell(a) == map_cell(b)


def test_ground_truth_empty_room():
    instance = tpl.instantiate(empty_room(5), 0)
    count, cells = ground_truth_cells(instance)
    assert count == 25
    assert brute_force_reachable(instance) == cells


def test_ground_truth_key_behind_lock_stays_locked():
    layout = (
        "#######",
        "#..#..#",
        "#..#..#",
        "#######",
    )
    template = EnvTemplate(
        name="FarKey",
        width=7,
        height=4,
        layout=layout,
        agent_cells=((1, 1), (1, 2), (2, 1), (2, 2)),
        agent_dirs=(0,),
        door_palette=("red",),
        door_slots=(DoorSlot(cells=((3, 1), (3, 2)), count=1, requires=("k1",)),),
        key_slots=(KeySlot("k1", ((4, 1), (4, 2), (5, 1), (5, 2))),),
    )
    instance = tpl.instantiate(template, 1)
    count, cells = ground_truth_cells(instance)
    assert count == 4  # the first room only; the far key never unlocks the door
    assert cells == {(1, 1), (1, 2), (2, 1), (2, 2)}
    assert brute_force_reachable(instance) == cells


def test_ground_truth_matches_oracle_on_small_cascading():
    for seed in range(3):
        instance = tpl.instantiate(small_cascading(), seed)
        count, cells = ground_truth_cells(instance)
        oracle = brute_force_reachable(instance)
        assert cells == oracle
        assert count == len(oracle)


def test_brute_force_empty_3x3():
    instance = tpl.instantiate(empty_room(3), 0)
    assert len(brute_force_reachable(instance)) == 9


def test_brute_force_heavy_ball_split():
    layout = (
        "#####",
        "#...#",
        "#...#",
        "#...#",
        "#####",
    )
    template = EnvTemplate(
        name="Split",
        width=5,
        height=5,
        layout=layout,
        agent_cells=((1, 1),),
        agent_dirs=(0,),
        door_palette=("red",),
    )
    instance = tpl.instantiate(template, 0)
    grid = [list(row) for row in instance.initial_state.grid]
    from gridcover.world import HEAVY_BALL

    for y in (1, 2, 3):
        grid[y][2] = HEAVY_BALL
    state = GameState(tuple(tuple(r) for r in grid), instance.initial_state.agent)
    blocked = tpl.EnvInstance(template=template, seed=0, initial_state=state)
    assert brute_force_reachable(blocked) == {(1, 1), (1, 2), (1, 3)}


def test_brute_force_cap():
    instance = tpl.instantiate(small_cascading(), 0)
    with pytest.raises(CapExceeded):
        brute_force_reachable(instance, state_cap=10)


def test_tracker_set_semantics_and_monotonicity():
    instance = tpl.instantiate(small_dual_hallway(), 0)
    state = instance.initial_state
    tracker = CoverageTracker(ground_truth_total=10)
    assert tracker.record(state, 0) is True
    assert tracker.record(state, 1) is False
    assert tracker.count == 1
    with pytest.raises(ValueError):
        tracker.record(state, 0)  # iterations must not go backward


def test_tracker_saturation():
    instance = tpl.instantiate(empty_room(3), 0)
    total, cells = ground_truth_cells(instance)
    tracker = CoverageTracker(total)
    state = instance.initial_state
    grid = state.grid
    for i, (x, y) in enumerate(sorted(cells)):
        tracker.record(GameState(grid, AgentState(x, y, 0)), i)
    assert tracker.count == total
    assert tracker.saturated


def test_curve_csv_round_trip():
    curve = CoverageCurve(points=((0, 3), (5, 7), (9, 11)), final_iteration=20)
    text = curve.to_csv()
    assert text.splitlines()[0] == "iteration,count"
    parsed = CoverageCurve.from_csv(text)
    assert parsed.points == curve.points
    assert parsed.final_iteration == curve.final_iteration
    assert np.array_equal(parsed.densify(20), curve.densify(20))


def test_curve_count_at_and_densify():
    curve = CoverageCurve(points=((0, 1), (4, 6)), final_iteration=10)
    assert curve.count_at(0) == 1
    assert curve.count_at(3) == 1
    assert curve.count_at(4) == 6
    dense = curve.densify(10)
    assert dense[0] == 1 and dense[3] == 1 and dense[4] == 6 and dense[10] == 6
