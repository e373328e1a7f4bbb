import time

import pytest
from fastapi.testclient import TestClient

from gridcover.clone import TrainConfig, load_trajectory, replay_verify, train
from gridcover.service import create_app
from gridcover.statespace import CoverageCurve


@pytest.fixture()
def client(tmp_path):
    app = create_app(trajectory_dir=tmp_path / "trajectories", assets_dir=None)
    with TestClient(app) as c:
        c.trajectory_dir = tmp_path / "trajectories"
        yield c


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"
    assert body["schema_version"] == 1


def test_templates_listing(client):
    body = client.get("/templates").json()
    names = [t["name"] for t in body["templates"]]
    assert len(names) == 5
    assert "CascadingLockDoor" in names


def test_create_session_with_seed_is_reproducible(client):
    a = client.post("/sessions", json={"template": "DualHallway", "seed": 12}).json()
    b = client.post("/sessions", json={"template": "DualHallway", "seed": 12}).json()
    assert a["render"] == b["render"]
    assert a["session_id"] != b["session_id"]
    assert a["seed"] == 12


def test_create_session_unknown_template(client):
    response = client.post("/sessions", json={"template": "Mystery"})
    assert response.status_code == 404


def test_create_session_draws_seed_when_absent(client):
    body = client.post("/sessions", json={"template": "DualHallway"}).json()
    assert isinstance(body["seed"], int)


def test_submit_action_updates_state_and_counter(client):
    created = client.post("/sessions", json={"template": "DualHallway", "seed": 3}).json()
    sid = created["session_id"]
    # find a free direction by trying forward; blocked moves leave the agent
    before = created["render"]
    response = client.post(f"/sessions/{sid}/actions", json={"action": 2}).json()
    after = response["render"]
    assert after["step_count"] == before["step_count"] + 1
    if response["outcome"] == "blocked":
        assert after["agent"] == before["agent"]
        assert response["cells_visited"] == 1
    else:
        assert response["cells_visited"] == 2


def test_submit_invalid_action(client):
    sid = client.post("/sessions", json={"template": "DualHallway", "seed": 3}).json()[
        "session_id"
    ]
    response = client.post(f"/sessions/{sid}/actions", json={"action": 9})
    assert response.status_code == 400
    info = client.get(f"/sessions/{sid}").json()
    assert info["actions"] == []


def test_unknown_session(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/actions", json={"action": 1}).status_code == 404


def test_save_empty_session_rejected(client):
    sid = client.post("/sessions", json={"template": "DualHallway", "seed": 3}).json()[
        "session_id"
    ]
    response = client.post(f"/sessions/{sid}/save", json={"name": "empty"})
    assert response.status_code == 400


def test_saved_trajectory_passes_replay_verify_and_trains(client):
    sid = client.post("/sessions", json={"template": "DualHallway", "seed": 3}).json()[
        "session_id"
    ]
    for action in (0, 2, 2, 1, 2, 5, 2):
        client.post(f"/sessions/{sid}/actions", json={"action": action})
    saved = client.post(f"/sessions/{sid}/save", json={"name": "human1"})
    assert saved.status_code == 200
    traj = load_trajectory(client.trajectory_dir / "human1.json")
    assert replay_verify(traj)
    model = train([traj], TrainConfig(epochs=2, seed=0))
    assert model.meta["n_examples"] == 7
    # session is no longer live
    response = client.post(f"/sessions/{sid}/actions", json={"action": 2})
    assert response.status_code == 409
    listing = client.get("/trajectories").json()["trajectories"]
    assert [t["name"] for t in listing] == ["human1"]


def test_trajectory_download_and_delete(client):
    sid = client.post("/sessions", json={"template": "DualHallway", "seed": 3}).json()[
        "session_id"
    ]
    client.post(f"/sessions/{sid}/actions", json={"action": 2})
    client.post(f"/sessions/{sid}/save", json={"name": "keepme"})
    response = client.get("/trajectories/keepme")
    assert response.status_code == 200
    assert response.json()["template"] == "DualHallway"
    assert client.delete("/trajectories/keepme").status_code == 200
    assert client.get("/trajectories/keepme").status_code == 404
    assert client.get("/trajectories").json()["trajectories"] == []


def test_saved_files_survive_restart(client, tmp_path):
    sid = client.post("/sessions", json={"template": "DualHallway", "seed": 3}).json()[
        "session_id"
    ]
    client.post(f"/sessions/{sid}/actions", json={"action": 2})
    client.post(f"/sessions/{sid}/save", json={"name": "persist"})
    fresh = TestClient(create_app(trajectory_dir=client.trajectory_dir, assets_dir=None))
    names = [t["name"] for t in fresh.get("/trajectories").json()["trajectories"]]
    assert names == ["persist"]
    assert fresh.get(f"/sessions/{sid}").status_code == 404  # sessions are ephemeral


def wait_for_run(client, run_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = client.get(f"/runs/{run_id}").json()
        if body["status"] != "running":
            return body
        time.sleep(0.05)
    raise TimeoutError("run did not finish")


def test_run_lifecycle_and_prefix_property(client):
    started = client.post(
        "/runs",
        json={"template": "DualHallway", "method": "wrrt", "budget": 3000,
              "instance_seed": 4, "rng_seed": 9},
    ).json()
    run_id = started["run_id"]
    assert started["ground_truth_total"] > 0
    first = client.get(f"/runs/{run_id}").json()
    second = client.get(f"/runs/{run_id}").json()
    assert first["curve"] == second["curve"][: len(first["curve"])]
    assert first["tree_offset"] <= second["tree_offset"]
    final = wait_for_run(client, run_id)
    assert final["status"] == "finished"
    assert final["curve"][-1][1] <= final["ground_truth_total"]


def test_finished_run_curve_matches_direct_run(client):
    started = client.post(
        "/runs",
        json={"template": "DualHallway", "method": "rrt", "budget": 500,
              "instance_seed": 11, "rng_seed": 5},
    ).json()
    final = wait_for_run(client, started["run_id"])

    from gridcover import templates as tpl
    from gridcover.rrt import ExplorerConfig, UniformSampler, run

    instance = tpl.instantiate(tpl.get_template("DualHallway"), 11)
    _, curve = run(
        instance, UniformSampler(), None, ExplorerConfig(max_iterations=500, rng_seed=5)
    )
    assert [tuple(p) for p in final["curve"]] == list(curve.points)
    # and the export round-trips through the CSV wire format
    assert CoverageCurve.from_csv(curve.to_csv()).points == curve.points


def test_unknown_run(client):
    assert client.get("/runs/nothing").status_code == 404


def test_hsrrt_run_requires_known_trajectory(client):
    response = client.post(
        "/runs", json={"template": "DualHallway", "method": "hsrrt", "trajectory": "ghost"}
    )
    assert response.status_code == 404


def test_no_ui_mode_has_no_static_routes(client):
    assert client.get("/").status_code == 404
