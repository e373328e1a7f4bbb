import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridcover import templates as tpl
from gridcover.clone import TrainConfig, train
from gridcover.scripted import (
    DUAL_HALLWAY_TRAIN,
    dual_hallway_training_demo,
)

import minienvs

for build in minienvs.ALL_SMALL:
    tpl.register_template(build())


@pytest.fixture(scope="session")
def dual_hallway_demo():
    return dual_hallway_training_demo()


@pytest.fixture(scope="session")
def dual_hallway_clone(dual_hallway_demo):
    """The canonical DualHallway clone used by CA-RRT tests."""
    return train([dual_hallway_demo], TrainConfig(**DUAL_HALLWAY_TRAIN))


@pytest.fixture(scope="session")
def dual_hallway_instance():
    return tpl.instantiate(tpl.get_template("DualHallway"), 7)
