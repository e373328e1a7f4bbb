import numpy as np
import pytest

from gridcover import templates as tpl
from gridcover.clone import (
    CorruptFile,
    EmptyDataset,
    FEATURE_DIM,
    PolicyModel,
    TrainConfig,
    Trajectory,
    VersionMismatch,
    encode,
    load_model,
    load_trajectory,
    loss_and_grads,
    predict,
    replay_verify,
    save_model,
    save_trajectory,
    train,
    training_accuracy,
    training_pairs,
    trajectory_from_actions,
)
from gridcover.world import N_ACTIONS, observe

from minienvs import small_dual_hallway


@pytest.fixture()
def small_instance():
    return tpl.instantiate(small_dual_hallway(), 4)


@pytest.fixture()
def short_trajectory(small_instance):
    return trajectory_from_actions(small_instance, [2, 0, 2, 1, 2, 5, 2, 2])


# ---------------------------------------------------------------------------
# Encoding


def test_encode_deterministic(small_instance):
    obs = observe(small_instance.initial_state)
    assert np.array_equal(encode(obs), encode(obs))


def test_encode_three_ones_per_cell(small_instance):
    obs = observe(small_instance.initial_state)
    vec = encode(obs)
    assert vec.shape == (FEATURE_DIM,)
    assert set(np.unique(vec)) <= {0.0, 1.0}
    per_cell = vec.reshape(49, -1).sum(axis=1)
    assert (per_cell == 3).all()


def test_encode_marks_unseen_class(small_instance):
    obs = observe(small_instance.initial_state)
    vec = encode(obs).reshape(49, -1)
    unseen_cells = [i for i in range(49) if (obs.reshape(49, 3)[i] == 0).all()]
    assert unseen_cells, "expected some occluded cells"
    for i in unseen_cells:
        assert vec[i][0] == 1.0  # object-class slot 0 = unseen


# ---------------------------------------------------------------------------
# Prediction


def test_zero_model_predicts_uniform(small_instance):
    model = PolicyModel.zeros()
    probs = predict(model, observe(small_instance.initial_state))
    assert np.allclose(probs, np.full(N_ACTIONS, 1.0 / N_ACTIONS))


def test_prediction_is_distribution_and_deterministic(short_trajectory, small_instance):
    model = train([short_trajectory], TrainConfig(epochs=5, seed=0))
    obs = observe(small_instance.initial_state)
    p1, p2 = predict(model, obs), predict(model, obs)
    assert np.array_equal(p1, p2)
    assert abs(p1.sum() - 1.0) < 1e-9
    assert (p1 > 0).all()


# ---------------------------------------------------------------------------
# Training


def test_single_pair_memorization(small_instance):
    traj = trajectory_from_actions(small_instance, [5])
    model = train([traj], TrainConfig(epochs=300, seed=0))
    probs = predict(model, observe(small_instance.initial_state))
    assert probs[5] > 0.9


def test_training_loss_decreases_monotonically_within_tolerance(short_trajectory):
    # small learning rate: the tolerance only absorbs minibatch noise
    model = train([short_trajectory], TrainConfig(epochs=40, learning_rate=0.02, seed=0))
    history = model.meta["loss_history"]
    for prev, nxt in zip(history, history[1:]):
        assert nxt <= prev + 0.05


def test_training_reaches_low_loss_on_demo(dual_hallway_demo, dual_hallway_clone):
    assert dual_hallway_clone.meta["final_loss"] <= 0.5


def test_training_accuracy_on_demo(dual_hallway_demo, dual_hallway_clone):
    assert training_accuracy(dual_hallway_clone, [dual_hallway_demo]) >= 0.8


def test_training_determinism(short_trajectory):
    config = TrainConfig(epochs=10, seed=3)
    a = train([short_trajectory], config)
    b = train([short_trajectory], config)
    for name in ("w1", "b1", "w2", "b2"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        training_pairs([])


def test_train_rejects_corrupt_trajectory(short_trajectory):
    bad = Trajectory(
        template=short_trajectory.template,
        seed=short_trajectory.seed,
        actions=short_trajectory.actions,
        digests=("0" * 16,) * len(short_trajectory.actions),
    )
    with pytest.raises(ValueError):
        train([bad], TrainConfig(epochs=1))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(dropout=1.0)


# ---------------------------------------------------------------------------
# Gradient check


def relative_error(a, b):
    denom = max(np.abs(a), np.abs(b), 1e-8)
    return abs(a - b) / denom


def finite_difference_check(model, x, y, h=1e-6, tol=1e-4, sample=None):
    _, grads = loss_and_grads(model, x, y)
    rng = np.random.default_rng(0)
    for name, grad in grads.items():
        param = getattr(model, name)
        flat_param = param.reshape(-1)
        flat_grad = grad.reshape(-1)
        indices = range(flat_param.size)
        if sample is not None and flat_param.size > sample:
            indices = rng.choice(flat_param.size, size=sample, replace=False)
        for i in indices:
            original = flat_param[i]
            flat_param[i] = original + h
            up, _ = loss_and_grads(model, x, y)
            flat_param[i] = original - h
            down, _ = loss_and_grads(model, x, y)
            flat_param[i] = original
            numeric = (up - down) / (2 * h)
            if abs(numeric) < 1e-10 and abs(flat_grad[i]) < 1e-10:
                continue
            assert relative_error(numeric, flat_grad[i]) < tol, (
                f"{name}[{i}]: analytic {flat_grad[i]}, numeric {numeric}"
            )


def test_gradients_match_finite_differences_every_parameter_small_model():
    rng = np.random.default_rng(1)
    model = PolicyModel.init_random(rng, input_dim=12, hidden=6)
    x = rng.random((10, 12))
    y = rng.integers(0, N_ACTIONS, size=10)
    finite_difference_check(model, x, y)


def test_gradients_match_on_real_observations(small_instance, short_trajectory):
    x, y = training_pairs([short_trajectory])
    rng = np.random.default_rng(2)
    model = PolicyModel.init_random(rng, input_dim=x.shape[1], hidden=16)
    finite_difference_check(model, x[:10], y[:10], sample=40)


# ---------------------------------------------------------------------------
# Persistence


def test_model_save_load_round_trip(tmp_path, short_trajectory, small_instance):
    model = train([short_trajectory], TrainConfig(epochs=5, seed=0))
    path = tmp_path / "model.gcpm"
    save_model(model, path)
    loaded = load_model(path)
    for name in ("w1", "b1", "w2", "b2"):
        assert np.array_equal(getattr(model, name), getattr(loaded, name))
    obs = observe(small_instance.initial_state)
    assert np.array_equal(predict(model, obs), predict(loaded, obs))


def test_model_files_are_byte_identical(tmp_path, short_trajectory):
    a = train([short_trajectory], TrainConfig(epochs=5, seed=0))
    b = train([short_trajectory], TrainConfig(epochs=5, seed=0))
    save_model(a, tmp_path / "a.gcpm")
    save_model(b, tmp_path / "b.gcpm")
    assert (tmp_path / "a.gcpm").read_bytes() == (tmp_path / "b.gcpm").read_bytes()


def test_truncated_model_file(tmp_path, short_trajectory):
    model = train([short_trajectory], TrainConfig(epochs=2, seed=0))
    path = tmp_path / "model.gcpm"
    save_model(model, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(CorruptFile):
        load_model(path)


def test_wrong_version_model_file(tmp_path, short_trajectory):
    model = train([short_trajectory], TrainConfig(epochs=2, seed=0))
    path = tmp_path / "model.gcpm"
    save_model(model, path)
    blob = bytearray(path.read_bytes())
    blob[4] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionMismatch):
        load_model(path)


def test_not_a_model_file(tmp_path):
    path = tmp_path / "nope.gcpm"
    path.write_bytes(b"hello world")
    with pytest.raises(CorruptFile):
        load_model(path)


# ---------------------------------------------------------------------------
# Trajectories


def test_trajectory_save_load_round_trip(tmp_path, dual_hallway_demo):
    path = tmp_path / "demo.json"
    save_trajectory(dual_hallway_demo, path)
    loaded = load_trajectory(path)
    assert loaded == dual_hallway_demo


def test_replay_verify_fresh_trajectory(dual_hallway_demo):
    assert replay_verify(dual_hallway_demo)


def test_replay_verify_detects_altered_action(dual_hallway_demo):
    actions = list(dual_hallway_demo.actions)
    actions[len(actions) // 2] = (actions[len(actions) // 2] + 1) % 6
    bad = Trajectory(
        template=dual_hallway_demo.template,
        seed=dual_hallway_demo.seed,
        actions=tuple(actions),
        digests=dual_hallway_demo.digests,
    )
    assert not replay_verify(bad)


def test_replay_verify_detects_environment_drift(dual_hallway_demo):
    """A trajectory recorded on one instance fails against another."""
    drifted = Trajectory(
        template=dual_hallway_demo.template,
        seed=dual_hallway_demo.seed + 1,
        actions=dual_hallway_demo.actions,
        digests=dual_hallway_demo.digests,
    )
    assert not replay_verify(drifted)


def test_load_trajectory_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(CorruptFile):
        load_trajectory(path)
