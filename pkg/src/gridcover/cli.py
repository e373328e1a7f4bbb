"""Command-line interface.

Subcommands mirror the research workflow: inspect ground truth, record
demonstrations through the web UI (``serve``), train a clone, run a single
exploration, or execute a full experiment manifest.

Exit codes: 0 success, 1 usage error (bad flags, unknown names), 2 runtime
error (corrupt files, failed validation, I/O).
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from dataclasses import replace
from pathlib import Path

from . import clone, harness, templates as tpl
from .rrt import (
    ClonePriorSampler,
    DEFAULT_WEIGHTS,
    ExplorerConfig,
    UniformSampler,
    WeightedSampler,
    ca_rollout,
    dump_tree_jsonl,
    run,
)
from .statespace import ground_truth_cells


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_weights(text: str) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != 7:
        raise UsageError("--weights needs exactly 7 comma-separated values")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"bad weight: {exc}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="gridcover", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground-truth", help="reachable-cell count for an instance")
    p.add_argument("--template", required=True)
    p.add_argument("--instance-seed", type=int, default=0)

    p = sub.add_parser("train", help="train a behavior clone from trajectories")
    p.add_argument("trajectories", nargs="+", help="trajectory JSON files")
    p.add_argument("--out", required=True, help="output model path")
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--dropout", type=float, default=0.10)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--train-seed", type=int, default=0)

    p = sub.add_parser("explore", help="run one exploration")
    p.add_argument("--template", required=True)
    p.add_argument("--method", required=True, choices=["rrt", "wrrt", "hsrrt", "carrt"])
    p.add_argument("--instance-seed", type=int, default=None)
    p.add_argument("--weights", type=str, default=None)
    p.add_argument("--alpha0", type=float, default=0.1)
    p.add_argument("--alpha-growth", type=float, default=1e-5)
    p.add_argument("--rollout-cap", type=int, default=200)
    p.add_argument("--trajectory", type=str, default=None)
    p.add_argument("--model", type=str, default=None)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("experiment", help="run an experiment manifest")
    p.add_argument("manifest")
    p.add_argument("--trials", type=int, default=None, help="override the manifest's trial count")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("serve", help="start the demo service and web UI")
    p.add_argument("--bind", type=str, default="127.0.0.1:8000")
    p.add_argument("--no-ui", action="store_true")
    p.add_argument("--assets", type=str, default="frontend/dist")
    p.add_argument("--data-dir", type=str, default="trajectories")
    return parser


def _resolve_template(name: str) -> tpl.EnvTemplate:
    """Catalog name first, then a template JSON file path."""
    try:
        return tpl.get_template(name)
    except tpl.UnknownTemplate:
        pass
    if Path(name).is_file():
        return tpl.register_template(tpl.load_template_file(name))
    raise UsageError(f"unknown template {name!r}")


def cmd_ground_truth(args) -> int:
    template = _resolve_template(args.template)
    instance = tpl.instantiate(template, args.instance_seed)
    count, cells = ground_truth_cells(instance)
    print(f"{template.name} seed={args.instance_seed}: {count} reachable cells")
    grid = [["#"] * template.width for _ in range(template.height)]
    for x, y in cells:
        grid[y][x] = "."
    for row in grid:
        print("".join(row))
    return 0


def cmd_train(args) -> int:
    trajectories = []
    for path in args.trajectories:
        traj = clone.load_trajectory(path)
        if not clone.replay_verify(traj):
            print(f"error: trajectory failed replay verification: {path}", file=sys.stderr)
            return 2
        trajectories.append(traj)
    config = clone.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        dropout=args.dropout,
        hidden=args.hidden,
        seed=args.train_seed,
    )
    model = clone.train(trajectories, config)
    clone.save_model(model, args.out)
    print(f"trained on {model.meta['n_examples']} pairs, final loss {model.meta['final_loss']:.4f}")
    print(f"model written to {args.out}")
    return 0


def _build_method(args) -> harness.MethodSpec:
    weights = _parse_weights(args.weights) if args.weights else DEFAULT_WEIGHTS
    kwargs = dict(
        kind=args.method,
        weights=weights,
        alpha0=args.alpha0,
        growth=args.alpha_growth,
        rollout_cap=args.rollout_cap,
    )
    if args.method == "hsrrt":
        if not args.trajectory:
            raise UsageError("hsrrt requires --trajectory")
        kwargs["trajectory"] = clone.load_trajectory(args.trajectory)
    if args.method == "carrt":
        if not args.model:
            raise UsageError("carrt requires --model")
        kwargs["model"] = clone.load_model(args.model)
    return harness.MethodSpec(**kwargs)


def cmd_explore(args) -> int:
    template = _resolve_template(args.template)
    method = _build_method(args)
    if method.kind == "hsrrt":
        if method.trajectory.template != template.name:
            print("error: trajectory template does not match", file=sys.stderr)
            return 2
        instance_seed = method.trajectory.seed
    else:
        instance_seed = (
            args.instance_seed
            if args.instance_seed is not None
            else harness.derive_seed(args.master_seed, "instance", 0)
        )
    instance = tpl.instantiate(template, instance_seed)

    seeds = None
    if method.kind == "hsrrt":
        seeds = method.trajectory
    elif method.kind == "carrt":
        seeds = ca_rollout(method.model, instance, max_steps=method.rollout_cap)

    if method.kind == "rrt":
        sampler = UniformSampler()
    elif method.kind == "wrrt":
        sampler = WeightedSampler(method.weights)
    elif method.kind == "hsrrt":
        sampler = UniformSampler()
    else:
        sampler = ClonePriorSampler(
            method.model,
            alpha0=method.alpha0,
            growth=method.growth,
            fallback=WeightedSampler(method.weights),
        )

    config = ExplorerConfig(
        max_iterations=args.budget,
        rng_seed=harness.derive_seed(args.master_seed, "rng", 0),
    )
    tree, curve = run(instance, sampler, seeds=seeds, config=config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.export_curve_csv(curve, out / "curve.csv")
    (out / "tree.jsonl").write_text(dump_tree_jsonl(tree), encoding="utf-8")
    total = tree.tracker.ground_truth_total
    summary = {
        "template": template.name,
        "method": method.name,
        "instance_seed": instance_seed,
        "budget": args.budget,
        "ground_truth_total": total,
        "final_coverage": curve.final_count,
        "saturation": harness.saturation_iteration(curve, total),
    }
    (out / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"coverage {curve.final_count}/{total}; results in {out}")
    return 0


def cmd_experiment(args) -> int:
    manifest = harness.load_manifest(args.manifest)
    if args.trials is not None:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        manifest = replace(manifest, trials=args.trials)
    base = Path(args.manifest).parent
    out = harness.run_manifest(manifest, base_dir=base, workers=args.workers)
    print(f"results in {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app

    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise UsageError("--bind must look like HOST:PORT")
    port = int(port_text)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError:
        print(f"error: cannot bind {args.bind}", file=sys.stderr)
        return 2
    finally:
        probe.close()
    assets = None if args.no_ui else Path(args.assets)
    app = create_app(trajectory_dir=Path(args.data_dir), assets_dir=assets)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


_COMMANDS = {
    "ground-truth": cmd_ground_truth,
    "train": cmd_train,
    "explore": cmd_explore,
    "experiment": cmd_experiment,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (
        clone.CorruptFile,
        clone.VersionMismatch,
        clone.EmptyDataset,
        harness.MissingModel,
        harness.TemplateMismatch,
        tpl.InvalidTemplate,
        tpl.UnknownTemplate,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
