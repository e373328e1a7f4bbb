"""Behavior cloning: trajectories, the action classifier, and its training.

Trajectories store only (template, seed, actions, per-step state digests);
observations are recomputed by replaying the actions through the engine, so
a stored file is both small and self-verifying.  The classifier is a small
feed-forward network over one-hot-encoded egocentric observations, written
directly in numpy: one hidden rectifier layer, a 7-way softmax output, and
plain stochastic gradient descent with dropout.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Optional

import numpy as np

from . import templates as tpl
from .statespace import config_hash_hex
from .world import (
    N_ACTIONS,
    N_COLOR_CLASSES,
    N_OBJECT_CLASSES,
    N_STATUS_CLASSES,
    VIEW_SIZE,
    GameState,
    observe,
    step,
)

TRAJECTORY_SCHEMA_VERSION = 1
MODEL_FORMAT_VERSION = 1
_MODEL_MAGIC = b"GCPM"

PER_CELL_FEATURES = N_OBJECT_CLASSES + N_COLOR_CLASSES + N_STATUS_CLASSES
FEATURE_DIM = VIEW_SIZE * VIEW_SIZE * PER_CELL_FEATURES

ENCODING_LEGEND = {
    "view_size": VIEW_SIZE,
    "n_object_classes": N_OBJECT_CLASSES,
    "n_color_classes": N_COLOR_CLASSES,
    "n_status_classes": N_STATUS_CLASSES,
}


class EmptyDataset(Exception):
    pass


class CorruptFile(Exception):
    pass


class VersionMismatch(Exception):
    pass


# ---------------------------------------------------------------------------
# Trajectories


@dataclass(frozen=True)
class Trajectory:
    """A recorded playthrough, replayable from (template, seed, actions)."""

    template: str
    seed: int
    actions: tuple[int, ...]
    digests: tuple[str, ...]
    author: str = "human"
    created: Optional[str] = None

    def __len__(self) -> int:
        return len(self.actions)


def trajectory_from_actions(
    instance: tpl.EnvInstance, actions: Iterable[int], author: str = "human"
) -> Trajectory:
    """Build a trajectory by stepping the actions, recording state digests."""
    state = instance.initial_state
    acts: list[int] = []
    digests: list[str] = []
    for action in actions:
        state, _ = step(state, action)
        acts.append(int(action))
        digests.append(config_hash_hex(state))
    return Trajectory(
        template=instance.name,
        seed=instance.seed,
        actions=tuple(acts),
        digests=tuple(digests),
        author=author,
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def save_trajectory(traj: Trajectory, path) -> None:
    data = {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "template": traj.template,
        "seed": traj.seed,
        "actions": list(traj.actions),
        "digests": list(traj.digests),
        "author": traj.author,
        "created": traj.created,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_trajectory(path) -> Trajectory:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if data.get("schema_version") != TRAJECTORY_SCHEMA_VERSION:
        raise VersionMismatch(f"{path}: schema {data.get('schema_version')!r}")
    try:
        return Trajectory(
            template=data["template"],
            seed=int(data["seed"]),
            actions=tuple(int(a) for a in data["actions"]),
            digests=tuple(data["digests"]),
            author=data.get("author", "human"),
            created=data.get("created"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc


def replay_states(traj: Trajectory) -> list[GameState]:
    """States visited by the trajectory, starting at the initial state.

    Raises :class:`templates.UnknownTemplate` if the template is not in the
    catalog.
    """
    instance = tpl.instantiate(tpl.get_template(traj.template), traj.seed)
    states = [instance.initial_state]
    for action in traj.actions:
        states.append(step(states[-1], action)[0])
    return states


def replay_verify(traj: Trajectory) -> bool:
    """Re-run the trajectory and check every recorded state digest."""
    instance = tpl.instantiate(tpl.get_template(traj.template), traj.seed)
    state = instance.initial_state
    if len(traj.digests) != len(traj.actions):
        return False
    for action, digest in zip(traj.actions, traj.digests):
        try:
            state, _ = step(state, action)
        except Exception:
            return False
        if config_hash_hex(state) != digest:
            return False
    return True


def iter_steps(traj: Trajectory) -> Iterator[tuple[np.ndarray, int, str]]:
    """(observation, action, resulting digest) triples, recomputed by replay."""
    states = replay_states(traj)
    for state, action, digest in zip(states, traj.actions, traj.digests):
        yield observe(state), action, digest


# ---------------------------------------------------------------------------
# Observation encoding


def encode(obs: np.ndarray) -> np.ndarray:
    """Flatten an observation into per-cell one-hot features.

    Each cell contributes one-hot object class ⊕ color ⊕ door status, so
    every cell sets exactly three entries (unseen cells hit the dedicated
    index-0 classes).
    """
    cells = VIEW_SIZE * VIEW_SIZE
    flat = np.zeros(FEATURE_DIM, dtype=np.float64)
    base = np.arange(cells) * PER_CELL_FEATURES
    obj = obs[:, :, 0].ravel().astype(np.int64)
    col = obs[:, :, 1].ravel().astype(np.int64)
    st = obs[:, :, 2].ravel().astype(np.int64)
    flat[base + obj] = 1.0
    flat[base + N_OBJECT_CLASSES + col] = 1.0
    flat[base + N_OBJECT_CLASSES + N_COLOR_CLASSES + st] = 1.0
    return flat


def training_pairs(dataset: Iterable[Trajectory]) -> tuple[np.ndarray, np.ndarray]:
    """Stack (features, action) pairs from trajectories, verifying each one."""
    xs: list[np.ndarray] = []
    ys: list[int] = []
    for traj in dataset:
        if not replay_verify(traj):
            raise ValueError(f"trajectory for {traj.template!r} failed replay verification")
        states = replay_states(traj)
        for state, action in zip(states, traj.actions):
            xs.append(encode(observe(state)))
            ys.append(int(action))
    if not xs:
        raise EmptyDataset("no (observation, action) pairs in dataset")
    return np.stack(xs), np.asarray(ys, dtype=np.int64)


# ---------------------------------------------------------------------------
# Model


@dataclass
class PolicyModel:
    """Feed-forward action classifier: input → hidden (ReLU) → 7 softmax."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @classmethod
    def zeros(cls, input_dim: int = FEATURE_DIM, hidden: int = 64) -> "PolicyModel":
        return cls(
            w1=np.zeros((input_dim, hidden)),
            b1=np.zeros(hidden),
            w2=np.zeros((hidden, N_ACTIONS)),
            b2=np.zeros(N_ACTIONS),
        )

    @classmethod
    def init_random(
        cls, rng: np.random.Generator, input_dim: int = FEATURE_DIM, hidden: int = 64
    ) -> "PolicyModel":
        return cls(
            w1=rng.normal(0.0, np.sqrt(2.0 / input_dim), size=(input_dim, hidden)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, np.sqrt(2.0 / hidden), size=(hidden, N_ACTIONS)),
            b2=np.zeros(N_ACTIONS),
        )

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def predict_features(self, features: np.ndarray) -> np.ndarray:
        return softmax(self.logits(features[None, :]))[0]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def predict(model: PolicyModel, obs: np.ndarray) -> np.ndarray:
    """Action probability distribution for one observation (no dropout)."""
    return model.predict_features(encode(obs))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    dropout: float = 0.10
    hidden: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must lie in [0, 1)")


def loss_and_grads(
    model: PolicyModel,
    x: np.ndarray,
    y: np.ndarray,
    dropout_mask: Optional[np.ndarray] = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and its analytic gradients.

    ``dropout_mask`` (already scaled by 1/keep) multiplies the hidden
    activations; pass None for a clean forward pass.
    """
    n = x.shape[0]
    z1 = x @ model.w1 + model.b1
    h = np.maximum(z1, 0.0)
    if dropout_mask is not None:
        h = h * dropout_mask
    logits = h @ model.w2 + model.b2
    probs = softmax(logits)
    loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grads = {
        "w2": h.T @ dlogits,
        "b2": dlogits.sum(axis=0),
    }
    dh = dlogits @ model.w2.T
    if dropout_mask is not None:
        dh = dh * dropout_mask
    dz1 = dh * (z1 > 0.0)
    grads["w1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


def dataset_loss(model: PolicyModel, x: np.ndarray, y: np.ndarray) -> float:
    return loss_and_grads(model, x, y)[0]


def train(dataset: list[Trajectory], config: TrainConfig = TrainConfig()) -> PolicyModel:
    """Fit the classifier by SGD on cross-entropy; deterministic given seed."""
    x, y = training_pairs(dataset)
    rng = np.random.default_rng(config.seed)
    model = PolicyModel.init_random(rng, input_dim=x.shape[1], hidden=config.hidden)
    n = x.shape[0]
    keep = 1.0 - config.dropout
    history: list[float] = []
    for _epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            if config.dropout > 0.0:
                mask = (rng.random((xb.shape[0], config.hidden)) < keep) / keep
            else:
                mask = None
            _, grads = loss_and_grads(model, xb, yb, dropout_mask=mask)
            for name, g in grads.items():
                param = getattr(model, name)
                param -= config.learning_rate * g
        history.append(dataset_loss(model, x, y))
    model.meta = {
        "config": {
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "dropout": config.dropout,
            "hidden": config.hidden,
            "seed": config.seed,
        },
        "n_examples": int(n),
        "final_loss": history[-1] if history else None,
        "loss_history": history,
    }
    return model


def training_accuracy(model: PolicyModel, dataset: list[Trajectory]) -> float:
    """Fraction of demonstrated steps whose argmax prediction matches."""
    x, y = training_pairs(dataset)
    pred = np.argmax(model.logits(x), axis=1)
    return float(np.mean(pred == y))


# ---------------------------------------------------------------------------
# Model persistence


def save_model(model: PolicyModel, path) -> None:
    arrays = model.parameters()
    header = {
        "arrays": [[name, list(arrays[name].shape)] for name in ("w1", "b1", "w2", "b2")],
        "legend": ENCODING_LEGEND,
        "meta": model.meta,
        "n_actions": N_ACTIONS,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_FORMAT_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for name in ("w1", "b1", "w2", "b2"):
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())


def load_model(path) -> PolicyModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != _MODEL_MAGIC:
        raise CorruptFile(f"{path}: not a policy model file")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}")
    (header_len,) = struct.unpack("<I", blob[8:12])
    if len(blob) < 12 + header_len:
        raise CorruptFile(f"{path}: truncated header")
    try:
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: bad header") from exc
    offset = 12 + header_len
    arrays = {}
    for name, shape in header["arrays"]:
        size = int(np.prod(shape)) * 8
        chunk = blob[offset : offset + size]
        if len(chunk) < size:
            raise CorruptFile(f"{path}: truncated array {name}")
        arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += size
    if offset != len(blob):
        raise CorruptFile(f"{path}: trailing bytes")
    model = PolicyModel(**arrays)
    model.meta = header.get("meta", {})
    return model
