#!/usr/bin/env python3
"""Produce the reusable evaluation inputs: demonstrations and the trained clone.

Writes into assets/ (override with --out):
  dualhallway_demo.json        racetrack demonstration used to train the clone
  dualhallway_human.json       full sweep on one DualHallway instance (HS-RRT seed)
  cascading_playthrough.json   scripted full playthrough of CascadingLockDoor
  clone.gcpm                   behavior clone trained on the racetrack demo
"""

import argparse
from pathlib import Path

from gridcover import templates as tpl
from gridcover.clone import TrainConfig, save_model, save_trajectory, train, training_accuracy
from gridcover.scripted import (
    DUAL_HALLWAY_TRAIN,
    dual_hallway_training_demo,
    full_playthrough_demo,
    sweep_demo,
    trajectory_cells,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="assets")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    demo = dual_hallway_training_demo()
    save_trajectory(demo, out / "dualhallway_demo.json")
    print(f"training demo: {len(demo)} actions, {len(trajectory_cells(demo))} cells")

    human = sweep_demo(tpl.instantiate(tpl.get_template("DualHallway"), 7), 0.65)
    save_trajectory(human, out / "dualhallway_human.json")
    print(f"HS-RRT demo: {len(human)} actions, {len(trajectory_cells(human))} cells")

    playthrough = full_playthrough_demo(
        tpl.instantiate(tpl.get_template("CascadingLockDoor"), 7)
    )
    save_trajectory(playthrough, out / "cascading_playthrough.json")
    print(f"cascading playthrough: {len(playthrough)} actions")

    model = train([demo], TrainConfig(**DUAL_HALLWAY_TRAIN))
    save_model(model, out / "clone.gcpm")
    print(
        f"clone: final loss {model.meta['final_loss']:.4f}, "
        f"training accuracy {training_accuracy(model, [demo]):.3f}"
    )
    print(f"assets written to {out}/")


if __name__ == "__main__":
    main()
