"""
Domain Models for the Find-Action Planning Toolkit

This module defines the core domain entities (data model classes):
- GridMap: occupancy grid the robot moves on (unit cost per 4-connected step)
- Container: a searchable location (countertop, fridge, bed, ...)
- WorldObject: an interactable item hidden in exactly one container
- WorldModel: ground truth of one generated household
- WorldConfig: the catalog and layout ranges worlds are generated from
- Observation: what one search action reveals
- BeliefState: what the robot currently knows

Relationship Model:
  WorldModel (1) --> (*) Container (1) <-- (*) WorldObject
  WorldModel (1) --> (1) GridMap
  BeliefState references Container / WorldObject ids only

Everything except ``BeliefState`` is immutable after construction, so worlds
can be shared read-only between parallel trial runners.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional

import numpy as np

from src.exceptions import ConfigurationError

Cell = tuple[int, int]
"""A grid cell as ``(row, col)``."""

START_LOCATION = "start"
"""Location token for the robot's start pose; every other location is a container id."""

FREE = "."
BLOCKED = "#"


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GridMap:
    """
    Occupancy grid with one string per row (``.`` free, ``#`` blocked).

    Attributes:
        cells (tuple[str, ...]): Row-major free/blocked flags
        cell_size (float): Distance of one 4-connected step (1.0)

    The row-string representation keeps the grid hashable, which lets the
    world service cache distance fields per ``(grid, source)``.
    """

    cells: tuple[str, ...]
    cell_size: float = 1.0

    @property
    def height(self) -> int:
        return len(self.cells)

    @property
    def width(self) -> int:
        return len(self.cells[0]) if self.cells else 0

    @cached_property
    def free_mask(self) -> np.ndarray:
        """Boolean ``(height, width)`` array, True where the cell is free."""
        return np.array([[ch == FREE for ch in row] for row in self.cells], dtype=bool)

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and self.cells[cell[0]][cell[1]] == FREE

    def free_cells(self) -> list[Cell]:
        return [(int(r), int(c)) for r, c in zip(*np.nonzero(self.free_mask))]


# ---------------------------------------------------------------------------
# Ground-truth world
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Container:
    """
    A searchable location.

    Attributes:
        id (str): Unique token within a world (e.g. "countertop_3")
        type_name (str): Container type (e.g. "countertop")
        room_type (str): Type of the room it stands in (e.g. "kitchen")
        pose (Cell): Free grid cell the robot stands on to search it
    """

    id: str
    type_name: str
    room_type: str
    pose: Cell


@dataclass(frozen=True)
class WorldObject:
    """An interactable item; ``true_container`` is its hidden location."""

    id: str
    type_name: str
    true_container: str


@dataclass(frozen=True)
class WorldModel:
    """
    Ground truth of one household.

    Attributes:
        grid (GridMap): Occupancy grid
        containers (tuple[Container, ...]): All containers, ids unique
        objects (tuple[WorldObject, ...]): All objects, each in one container
        seed (int): Generator seed
        robot_start (Cell): Where the robot starts; PDDL location ``start``
        generator_config (WorldConfig | None): Catalog the world came from
            (None for worlds loaded from file)
    """

    grid: GridMap
    containers: tuple[Container, ...]
    objects: tuple[WorldObject, ...]
    seed: int
    robot_start: Cell
    generator_config: Optional["WorldConfig"] = field(default=None, compare=False)

    @cached_property
    def _containers_by_id(self) -> dict[str, Container]:
        return {c.id: c for c in self.containers}

    @cached_property
    def _objects_by_id(self) -> dict[str, WorldObject]:
        return {o.id: o for o in self.objects}

    @cached_property
    def _contents(self) -> dict[str, frozenset[str]]:
        contents: dict[str, set[str]] = {c.id: set() for c in self.containers}
        for obj in self.objects:
            contents.setdefault(obj.true_container, set()).add(obj.id)
        return {cid: frozenset(ids) for cid, ids in contents.items()}

    def container(self, container_id: str) -> Container:
        return self._containers_by_id[container_id]

    def has_container(self, container_id: str) -> bool:
        return container_id in self._containers_by_id

    def object(self, object_id: str) -> WorldObject:
        return self._objects_by_id[object_id]

    def objects_in(self, container_id: str) -> frozenset[str]:
        """Ground-truth ids of the objects placed in ``container_id``."""
        return self._contents.get(container_id, frozenset())

    def objects_of_type(self, type_name: str) -> list[WorldObject]:
        return [o for o in self.objects if o.type_name == type_name]

    def location_pose(self, location: str) -> Cell:
        """Grid cell of a location token (container id or ``start``)."""
        if location == START_LOCATION:
            return self.robot_start
        return self.container(location).pose


# ---------------------------------------------------------------------------
# Generator configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PlacementWeight:
    """Relative weight of putting an object type in (container type, room type)."""

    container_type: str
    room_type: str
    weight: float


@dataclass(frozen=True)
class ObjectSpec:
    """One catalog entry: ``count`` instances of ``type_name`` per world."""

    type_name: str
    placements: tuple[PlacementWeight, ...]
    count: int = 1


@dataclass(frozen=True)
class WorldConfig:
    """
    Everything ``generate_world`` needs besides the seed.

    Attributes:
        width, height (int): Grid dimensions in cells
        room_count (tuple[int, int]): Inclusive range of rooms per world
        containers_per_room (tuple[int, int]): Inclusive range per room
        room_types (Mapping[str, tuple[str, ...]]): Room type -> container
            types that may appear in it
        objects (tuple[ObjectSpec, ...]): Object catalog with placement weights
        required_room_types (tuple[str, ...]): Room types every world contains
        name (str): Catalog label
    """

    width: int
    height: int
    room_count: tuple[int, int]
    containers_per_room: tuple[int, int]
    room_types: Mapping[str, tuple[str, ...]]
    objects: tuple[ObjectSpec, ...]
    required_room_types: tuple[str, ...] = ()
    name: str = "default"

    @cached_property
    def weight_table(self) -> dict[tuple[str, str, str], float]:
        """``(object_type, container_type, room_type) -> weight``."""
        table: dict[tuple[str, str, str], float] = {}
        for spec in self.objects:
            for p in spec.placements:
                key = (spec.type_name, p.container_type, p.room_type)
                table[key] = table.get(key, 0.0) + p.weight
        return table

    def weight(self, object_type: str, container_type: str, room_type: str) -> float:
        return self.weight_table.get((object_type, container_type, room_type), 0.0)

    def validate(self) -> None:
        """Raise ``ConfigurationError`` if any invariant is violated."""
        lo, hi = self.room_count
        if lo < 1 or hi < lo:
            raise ConfigurationError(f"room_count must satisfy 1 <= min <= max, got {self.room_count}")
        clo, chi = self.containers_per_room
        if clo < 1 or chi < clo:
            raise ConfigurationError(
                f"containers_per_room must satisfy 1 <= min <= max, got {self.containers_per_room}"
            )
        if not self.room_types:
            raise ConfigurationError("room_types is empty")
        for room, ctypes in self.room_types.items():
            if not ctypes:
                raise ConfigurationError(f"room type {room!r} lists no container types")
        for room in self.required_room_types:
            if room not in self.room_types:
                raise ConfigurationError(f"required room type {room!r} is not declared")
        if len(self.required_room_types) > lo:
            raise ConfigurationError("more required room types than the minimum room count")
        if not self.objects:
            raise ConfigurationError("object catalog is empty")
        for spec in self.objects:
            if spec.count < 1:
                raise ConfigurationError(f"object {spec.type_name!r} has count {spec.count}")
            if any(p.weight < 0 for p in spec.placements):
                raise ConfigurationError(f"object {spec.type_name!r} has a negative placement weight")
            if not any(p.weight > 0 for p in spec.placements):
                raise ConfigurationError(f"object {spec.type_name!r} has no positive placement weight")
        if self.width < 5 or self.height < 5:
            raise ConfigurationError(f"grid {self.width}x{self.height} is too small")


# ---------------------------------------------------------------------------
# Observations and belief
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Observation:
    """
    Result of searching one container.

    ``revealed_objects`` is exactly the ground-truth content of the container.
    ``noop`` marks a repeated search of an already searched container; such
    an observation reveals nothing and costs nothing.
    """

    searched_container: str
    revealed_objects: frozenset[str]
    noop: bool = False


@dataclass
class BeliefState:
    """
    The robot's knowledge during a trial.

    Attributes:
        robot_pose (Cell): Current grid cell
        robot_location (str): Location token matching ``robot_pose``
        known_objects (dict[str, str]): Object id -> location it is known at
        searched (set[str]): Container ids already searched
        holding (str | None): Object in the gripper
        placed_overrides (dict[str, str]): Objects the robot moved, -> where
        facts (set[tuple[str, ...]]): Object-state atoms established by
            executed operators, e.g. ``("peeled", "potato_4")``

    Invariant: ``holding`` never appears in ``known_objects``.
    """

    robot_pose: Cell
    robot_location: str = START_LOCATION
    known_objects: dict[str, str] = field(default_factory=dict)
    searched: set[str] = field(default_factory=set)
    holding: Optional[str] = None
    placed_overrides: dict[str, str] = field(default_factory=dict)
    facts: set[tuple[str, ...]] = field(default_factory=set)

    @classmethod
    def initial(cls, world: WorldModel) -> "BeliefState":
        """Robot at ``start`` with an empty hand and nothing searched."""
        return cls(robot_pose=world.robot_start, robot_location=START_LOCATION)

    def copy(self) -> "BeliefState":
        return copy.deepcopy(self)

    def unsearched(self, containers: tuple[Container, ...] | list[Container]) -> list[Container]:
        return [c for c in containers if c.id not in self.searched]

    def is_located(self, object_id: str) -> bool:
        """True if the robot knows where the object is or is holding it."""
        return object_id == self.holding or object_id in self.known_objects

    def move_to(self, location: str, pose: Cell) -> None:
        self.robot_location = location
        self.robot_pose = pose

    def record_observation(self, observation: Observation) -> None:
        """Mark the container searched and learn what it revealed."""
        self.searched.add(observation.searched_container)
        for object_id in sorted(observation.revealed_objects):
            if object_id == self.holding or object_id in self.placed_overrides:
                continue
            self.known_objects.setdefault(object_id, observation.searched_container)

    def pick(self, object_id: str) -> None:
        self.known_objects.pop(object_id, None)
        self.holding = object_id

    def place(self, object_id: str, location: str) -> None:
        self.holding = None
        self.known_objects[object_id] = location
        self.placed_overrides[object_id] = location
