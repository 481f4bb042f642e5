"""
conftest.py - Shared fixtures.

``tiny_world`` is a hand-built 7x7 household whose distances are easy to
count on paper::

    #######
    #S...F#     S  robot start (1, 1)
    #.....#     F  fridge_0 (1, 5)
    #C....#     C  countertop_1 (3, 1)
    #.....#     B  bed_2 (5, 5)
    #....B#
    #######

All tests treat it as read-only; mutate a ``BeliefState`` instead.
"""

from pathlib import Path

import pytest

from src.models import BeliefState, Container, GridMap, WorldModel, WorldObject
from src.repositories.world_repository import load_world_config
from src.services.estimator_service import Estimator

FIXTURES = Path(__file__).parent / "fixtures"
PDDL_FIXTURES = FIXTURES / "pddl"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def pddl_dir() -> Path:
    return PDDL_FIXTURES


@pytest.fixture
def tiny_grid() -> GridMap:
    """Open 5x5 interior surrounded by walls."""
    return GridMap(cells=("#######",) + ("#.....#",) * 5 + ("#######",))


@pytest.fixture
def tiny_world(tiny_grid) -> WorldModel:
    """Three containers, three objects, robot at (1, 1).

    Distances (steps):
        start -> countertop_1  2      countertop_1 -> fridge_0  6
        start -> fridge_0      4      countertop_1 -> bed_2     6
        start -> bed_2         8      bed_2 -> fridge_0         4
    """
    return WorldModel(
        grid=tiny_grid,
        containers=(
            Container(id="fridge_0", type_name="fridge", room_type="kitchen", pose=(1, 5)),
            Container(id="countertop_1", type_name="countertop", room_type="kitchen", pose=(3, 1)),
            Container(id="bed_2", type_name="bed", room_type="bedroom", pose=(5, 5)),
        ),
        objects=(
            WorldObject(id="mug_0", type_name="mug", true_container="countertop_1"),
            WorldObject(id="egg_1", type_name="egg", true_container="fridge_0"),
            WorldObject(id="book_2", type_name="book", true_container="bed_2"),
        ),
        seed=7,
        robot_start=(1, 1),
    )


@pytest.fixture
def start_belief(tiny_world) -> BeliefState:
    return BeliefState.initial(tiny_world)


@pytest.fixture
def tiny_config():
    """The two-room catalog in ``fixtures/tiny_world.toml``."""
    return load_world_config(FIXTURES / "tiny_world.toml")


@pytest.fixture
def uniform_est() -> Estimator:
    return Estimator.uniform_estimator()
