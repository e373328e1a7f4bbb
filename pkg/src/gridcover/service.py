"""HTTP service for live play sessions, trajectory storage, and run watching.

This is the channel through which a human demonstrates gameplay: the web UI
creates a session, posts one action per keystroke, and saves the recorded
trajectory in the same format the clone trainer consumes.  Exploration runs
can also be launched and polled, giving the UI a live coverage chart.

Sessions live in memory (24h TTL); saved trajectory files are the only
persistence and are written atomically.
"""

from __future__ import annotations

import os
import re
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import clone, templates as tpl
from .rrt import (
    ClonePriorSampler,
    RrtTree,
    UniformSampler,
    WeightedSampler,
    ca_rollout,
    dump_tree_jsonl,
    expand,
    sample_target,
    seed_from_trajectory,
)
from .statespace import CoverageTracker, ground_truth_cells, map_cell
from .world import N_ACTIONS, GameState, StepOutcome, render_grid, step

import numpy as np

SCHEMA_VERSION = 1
SESSION_TTL_SECONDS = 24 * 3600

_NAME_RE = re.compile(r"^[A-Za-z0-9._-]{1,64}$")


@dataclass
class Session:
    session_id: str
    instance: tpl.EnvInstance
    state: GameState
    actions: list[int] = field(default_factory=list)
    visited: set = field(default_factory=set)
    status: str = "live"
    created_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class Run:
    run_id: str
    template_name: str
    ground_truth_total: int
    status: str = "running"
    curve_points: list[tuple[int, int]] = field(default_factory=list)
    nodes_dumped: int = 0
    tree_text: str = ""
    error: Optional[str] = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _ok(payload: dict) -> JSONResponse:
    payload["schema_version"] = SCHEMA_VERSION
    return JSONResponse(payload)


def create_app(trajectory_dir: Path, assets_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="gridcover demo service")
    trajectory_dir = Path(trajectory_dir)
    trajectory_dir.mkdir(parents=True, exist_ok=True)
    sessions: dict[str, Session] = {}
    runs: dict[str, Run] = {}
    store_lock = threading.Lock()

    def purge_sessions() -> None:
        cutoff = time.time() - SESSION_TTL_SECONDS
        with store_lock:
            for sid in [s for s, v in sessions.items() if v.created_at < cutoff]:
                del sessions[sid]

    def get_session(session_id: str) -> Session:
        purge_sessions()
        with store_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/health")
    def health():
        return _ok({"status": "ok"})

    @app.get("/templates")
    def templates_index():
        return _ok(
            {
                "templates": [
                    {"name": t.name, "width": t.width, "height": t.height}
                    for t in tpl.catalog()
                ]
            }
        )

    @app.post("/sessions")
    def create_session(body: dict = Body(...)):
        name = body.get("template")
        try:
            template = tpl.get_template(name)
        except tpl.UnknownTemplate:
            raise HTTPException(status_code=404, detail=f"unknown template {name!r}")
        seed = body.get("seed")
        if seed is None:
            seed = int.from_bytes(os.urandom(6), "big")
        session = Session(
            session_id=uuid.uuid4().hex,
            instance=tpl.instantiate(template, int(seed)),
            state=None,  # set below
        )
        session.state = session.instance.initial_state
        session.visited = {map_cell(session.state)}
        with store_lock:
            sessions[session.session_id] = session
        return _ok(
            {
                "session_id": session.session_id,
                "template": template.name,
                "seed": session.instance.seed,
                "render": render_grid(session.state),
                "cells_visited": len(session.visited),
            }
        )

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return _ok(
                {
                    "session_id": session.session_id,
                    "template": session.instance.name,
                    "seed": session.instance.seed,
                    "status": session.status,
                    "actions": list(session.actions),
                    "render": render_grid(session.state),
                    "cells_visited": len(session.visited),
                    "visited_cells": sorted(session.visited),
                }
            )

    @app.post("/sessions/{session_id}/actions")
    def submit_action(session_id: str, body: dict = Body(...)):
        session = get_session(session_id)
        action = body.get("action")
        if not isinstance(action, int) or not (0 <= action < N_ACTIONS):
            raise HTTPException(status_code=400, detail="action must be an integer in [0,6]")
        with session.lock:
            if session.status != "live":
                raise HTTPException(status_code=409, detail="session is not live")
            if session.state.done:
                raise HTTPException(status_code=409, detail="episode is done")
            session.state, outcome = step(session.state, action)
            session.actions.append(action)
            session.visited.add(map_cell(session.state))
            return _ok(
                {
                    "render": render_grid(session.state),
                    "outcome": StepOutcome(outcome).name.lower(),
                    "cells_visited": len(session.visited),
                    "visited_cells": sorted(session.visited),
                }
            )

    @app.post("/sessions/{session_id}/save")
    def save_trajectory(session_id: str, body: dict = Body(...)):
        session = get_session(session_id)
        name = body.get("name", "")
        if not _NAME_RE.match(name or ""):
            raise HTTPException(status_code=400, detail="name must match [A-Za-z0-9._-]{1,64}")
        with session.lock:
            if not session.actions:
                raise HTTPException(status_code=400, detail="session has no actions")
            traj = clone.trajectory_from_actions(
                session.instance, session.actions, author="human"
            )
            path = trajectory_dir / f"{name}.json"
            fd, tmp = tempfile.mkstemp(dir=trajectory_dir, suffix=".tmp")
            os.close(fd)
            try:
                clone.save_trajectory(traj, tmp)
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
            session.status = "saved"
        return _ok({"name": name, "path": str(path), "steps": len(traj)})

    @app.get("/trajectories")
    def trajectories_index():
        items = []
        for path in sorted(trajectory_dir.glob("*.json")):
            try:
                traj = clone.load_trajectory(path)
            except (clone.CorruptFile, clone.VersionMismatch):
                continue
            items.append(
                {
                    "name": path.stem,
                    "template": traj.template,
                    "seed": traj.seed,
                    "steps": len(traj),
                    "author": traj.author,
                }
            )
        return _ok({"trajectories": items})

    @app.get("/trajectories/{name}")
    def trajectory_file(name: str):
        if not _NAME_RE.match(name):
            raise HTTPException(status_code=400, detail="bad name")
        path = trajectory_dir / f"{name}.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="unknown trajectory")
        return FileResponse(path, media_type="application/json")

    @app.delete("/trajectories/{name}")
    def delete_trajectory(name: str):
        if not _NAME_RE.match(name):
            raise HTTPException(status_code=400, detail="bad name")
        path = trajectory_dir / f"{name}.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="unknown trajectory")
        path.unlink()
        return _ok({"deleted": name})

    def run_explorer(run: Run, instance, sampler, seeds, budget: int, rng_seed: int):
        try:
            total, _ = ground_truth_cells(instance)
            tracker = CoverageTracker(total)
            tree = RrtTree(instance, tracker=tracker)
            tree.add(instance.initial_state, None, None, 0)
            if seeds is not None:
                seed_from_trajectory(tree, seeds)
            with run.lock:
                run.curve_points = list(tracker.curve().points)
                run.nodes_dumped = len(tree)
            rng = np.random.default_rng(rng_seed)
            for iteration in range(1, budget + 1):
                target = sample_target(rng, instance)
                expand(tree, tree.nearest(target, rng), sampler, iteration, rng)
                if iteration % 100 == 0 or iteration == budget:
                    with run.lock:
                        run.curve_points = list(tracker.curve(iteration).points)
                        run.nodes_dumped = len(tree)
            with run.lock:
                run.curve_points = list(tracker.curve(budget).points)
                run.nodes_dumped = len(tree)
                run.tree_text = dump_tree_jsonl(tree)
                run.status = "finished"
        except Exception as exc:  # surfaced through the API
            with run.lock:
                run.status = "failed"
                run.error = str(exc)

    @app.post("/runs")
    def start_run(body: dict = Body(...)):
        name = body.get("template")
        try:
            template = tpl.get_template(name)
        except tpl.UnknownTemplate:
            raise HTTPException(status_code=404, detail=f"unknown template {name!r}")
        method = body.get("method", "rrt")
        if method not in ("rrt", "wrrt", "hsrrt", "carrt"):
            raise HTTPException(status_code=400, detail=f"unknown method {method!r}")
        budget = int(body.get("budget", 2000))
        if not (0 < budget <= 200_000):
            raise HTTPException(status_code=400, detail="budget out of range")
        instance_seed = body.get("instance_seed")
        rng_seed = int(body.get("rng_seed", 0))
        seeds = None
        if method == "hsrrt":
            traj_name = body.get("trajectory")
            if not traj_name or not _NAME_RE.match(traj_name):
                raise HTTPException(status_code=400, detail="hsrrt needs a trajectory name")
            path = trajectory_dir / f"{traj_name}.json"
            if not path.exists():
                raise HTTPException(status_code=404, detail="unknown trajectory")
            seeds = clone.load_trajectory(path)
            if seeds.template != template.name:
                raise HTTPException(status_code=400, detail="trajectory template mismatch")
            instance_seed = seeds.seed
        if instance_seed is None:
            instance_seed = int.from_bytes(os.urandom(6), "big")
        instance = tpl.instantiate(template, int(instance_seed))

        weights = body.get("weights")
        fallback = WeightedSampler(tuple(weights)) if weights else WeightedSampler()
        if method == "wrrt":
            sampler = fallback
        elif method == "carrt":
            model_path = body.get("model")
            if not model_path or not Path(model_path).exists():
                raise HTTPException(status_code=400, detail="carrt needs a model path")
            model = clone.load_model(model_path)
            seeds = ca_rollout(model, instance, max_steps=int(body.get("rollout_cap", 200)))
            sampler = ClonePriorSampler(
                model,
                alpha0=float(body.get("alpha0", 0.1)),
                growth=float(body.get("growth", 1e-5)),
                fallback=fallback,
            )
        else:
            sampler = UniformSampler()

        total, _ = ground_truth_cells(instance)
        run = Run(
            run_id=uuid.uuid4().hex,
            template_name=template.name,
            ground_truth_total=total,
        )
        with store_lock:
            runs[run.run_id] = run
        thread = threading.Thread(
            target=run_explorer,
            args=(run, instance, sampler, seeds, budget, rng_seed),
            daemon=True,
        )
        thread.start()
        return _ok(
            {
                "run_id": run.run_id,
                "template": template.name,
                "instance_seed": int(instance_seed),
                "budget": budget,
                "ground_truth_total": total,
            }
        )

    @app.get("/runs/{run_id}")
    def run_status(run_id: str):
        with store_lock:
            run = runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail="unknown run")
        with run.lock:
            return _ok(
                {
                    "run_id": run.run_id,
                    "template": run.template_name,
                    "status": run.status,
                    "error": run.error,
                    "ground_truth_total": run.ground_truth_total,
                    "curve": [list(p) for p in run.curve_points],
                    "tree_offset": run.nodes_dumped,
                }
            )

    @app.get("/runs/{run_id}/tree")
    def run_tree(run_id: str):
        with store_lock:
            run = runs.get(run_id)
        if run is None:
            raise HTTPException(status_code=404, detail="unknown run")
        with run.lock:
            if run.status != "finished":
                raise HTTPException(status_code=409, detail="run not finished")
            return JSONResponse(content=run.tree_text, media_type="application/jsonl")

    if assets_dir is not None and Path(assets_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(assets_dir), html=True), name="ui")

    return app
