import json
from pathlib import Path

import numpy as np
import pytest

from dawnik.model import load_robot_model

DATA = Path(__file__).parent.parent / "src" / "dawnik" / "data"


@pytest.fixture(scope="session")
def s6():
    return load_robot_model(DATA / "models" / "s6.json")


@pytest.fixture(scope="session")
def s7():
    return load_robot_model(DATA / "models" / "s7.json")


@pytest.fixture(scope="session")
def planar2():
    return load_robot_model(DATA / "models" / "planar2.json")


@pytest.fixture(scope="session")
def data_dir():
    return DATA


def minimal_description(**overrides) -> str:
    """A two-link (one joint) arm description, tweakable per test."""
    doc = {
        "name": "mini",
        "joints": [
            {
                "name": "j1",
                "kind": "revolute",
                "axis": [0, 0, 1],
                "origin": {"xyz": [0.5, 0.0, 0.0], "rpy": [0, 0, 0]},
                "limits": {"pos": [-3.0, 3.0], "vel": 2.0, "acc": 10.0},
            }
        ],
        "links": [
            {"name": "base", "parent_joint": None,
             "collision": [{"type": "sphere", "dims": [0.05],
                            "pose": {"xyz": [0, 0, 0]}}]},
            {"name": "l1", "parent_joint": "j1",
             "collision": [{"type": "sphere", "dims": [0.05],
                            "pose": {"xyz": [0, 0, 0]}}]},
        ],
        "end_effector": "l1",
        "never_collide": [],
    }
    doc.update(overrides)
    return json.dumps(doc)


def random_q(model, rng, margin: float = 0.3) -> np.ndarray:
    """Random configuration comfortably inside the joint limits."""
    lo = model.q_lower + margin
    hi = model.q_upper - margin
    return rng.uniform(lo, hi)
