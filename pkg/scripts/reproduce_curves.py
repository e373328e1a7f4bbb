#!/usr/bin/env python3
"""Run the full coverage-saturation evaluation across the catalog.

Runs the four explorers across the environment catalog, then writes
per-trial curves, 5/50/95 percentile bands, pairwise comparisons, and SVG
plots under results/.  Assumes scripts/prepare_assets.py has run (for the
clone model and the seed demonstrations).

With the defaults (20 trials x 20k iterations for the hallway setups) this
takes a few minutes; use --trials/--budget to scale it down.
"""

import argparse
import json
from pathlib import Path

from gridcover.harness import Manifest, run_manifest


def manifest(template, methods, trials, budget, seed, out):
    return Manifest(
        template_name=template,
        trials=trials,
        max_iterations=budget,
        master_seed=seed,
        methods=tuple(methods),
        out_dir=out,
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--assets", default="assets")
    parser.add_argument("--out", default="results")
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--budget", type=int, default=20_000)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    assets = Path(args.assets)
    model = str(assets / "clone.gcpm")
    human = str(assets / "dualhallway_human.json")
    playthrough = str(assets / "cascading_playthrough.json")
    for required in (model, human, playthrough):
        if not Path(required).exists():
            raise SystemExit(f"missing {required}; run scripts/prepare_assets.py first")

    studies = [
        manifest(
            "DualHallway",
            [
                {"kind": "rrt"},
                {"kind": "wrrt"},
                {"kind": "hsrrt", "trajectory": human},
                {"kind": "carrt", "model": model, "alpha0": 0.1, "growth": 1e-5},
            ],
            args.trials,
            args.budget,
            11,
            f"{args.out}/dualhallway",
        ),
        manifest(
            "SidewaysDualHallway",
            [
                {"kind": "wrrt"},
                {"kind": "carrt", "model": model, "alpha0": 0.1, "growth": 1e-5},
            ],
            args.trials,
            args.budget,
            12,
            f"{args.out}/sideways",
        ),
        manifest(
            "DualHallway+Distractors",
            [
                {"kind": "wrrt"},
                {"kind": "carrt", "model": model, "alpha0": 0.1, "growth": 1e-5},
            ],
            args.trials,
            args.budget,
            13,
            f"{args.out}/distractors",
        ),
        manifest(
            "DualHallway+Distractors&Obstacles",
            [
                {"kind": "wrrt"},
                {"kind": "carrt", "model": model, "alpha0": 0.1, "growth": 1e-5},
            ],
            args.trials,
            args.budget,
            14,
            f"{args.out}/obstacles",
        ),
        manifest(
            "CascadingLockDoor",
            [
                {"kind": "rrt"},
                {"kind": "wrrt"},
                {"kind": "hsrrt", "trajectory": playthrough},
                {"kind": "carrt", "model": model, "alpha0": 0.1, "growth": 1e-3},
            ],
            args.trials,
            args.budget,
            15,
            f"{args.out}/cascading",
        ),
    ]
    for entry in studies:
        print(f"running {entry.template_name} ({args.trials} trials, {args.budget} iterations)")
        out = run_manifest(entry, base_dir=".", workers=args.workers)
        summary = json.loads((out / "comparison.json").read_text())
        for m in summary["methods"]:
            print(
                f"  {m['name']}: saturation rate {m['saturation_rate']:.0%}, "
                f"median {m['median_saturation']}"
            )
    print(f"curves, bands and plots under {args.out}/")


if __name__ == "__main__":
    main()
