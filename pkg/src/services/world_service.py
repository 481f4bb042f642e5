"""
world_service.py - Procedural household generation and ground-truth semantics.

Responsibilities:
    ``generate_world``    seeded world from a ``WorldConfig``
    ``path_cost``         4-connected shortest-path distance on the grid
    ``search_container``  what a search action reveals

Layout model:
    Rooms are rectangular blocks tiled row-major on the grid, separated by
    one-cell walls.  Every room gets a door into its left neighbour (same block
    row) and its upper neighbour, so the free cells always form one connected
    component.  Containers sit on distinct interior cells of their room.

All randomness flows through one ``numpy.random.Generator`` seeded with the
world seed, so ``(seed, config)`` fully determines the world.
"""

import math
from collections import deque
from functools import lru_cache
from typing import Optional

import numpy as np
from loguru import logger

from src.exceptions import ConfigurationError, InternalError, PreconditionError, UnreachableError
from src.models import (
    BLOCKED,
    FREE,
    BeliefState,
    Cell,
    Container,
    GridMap,
    Observation,
    WorldConfig,
    WorldModel,
    WorldObject,
)

MAX_LAYOUT_ATTEMPTS = 50
_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------
def generate_world(seed: int, config: WorldConfig) -> WorldModel:
    """
    Generate a household from ``seed`` and ``config``.

    A layout whose containers cannot host some catalog object (no positive
    placement weight matches any container) is resampled from the same
    generator stream, so generation stays deterministic.

    Args:
        seed:   Non-negative integer, at most 64 bits.
        config: Generator catalog; validated first.

    Returns:
        An immutable ``WorldModel``.

    Raises:
        ConfigurationError: invalid config, or no placeable layout found.
    """
    config.validate()
    if seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {seed}")
    rng = np.random.default_rng(seed)

    for attempt in range(MAX_LAYOUT_ATTEMPTS):
        grid, interiors, room_types = _sample_layout(rng, config)
        containers = _sample_containers(rng, config, interiors, room_types)
        objects = _place_objects(rng, config, containers)
        if objects is None:
            logger.debug(f"seed {seed}: layout {attempt} cannot host the catalog, resampling")
            continue
        all_interior = [cell for room in interiors for cell in room]
        start = all_interior[int(rng.integers(len(all_interior)))]
        return WorldModel(
            grid=grid,
            containers=tuple(containers),
            objects=tuple(objects),
            seed=seed,
            robot_start=start,
            generator_config=config,
        )

    raise ConfigurationError(
        f"no layout out of {MAX_LAYOUT_ATTEMPTS} could place every object of catalog {config.name!r}"
    )


def _sample_layout(
    rng: np.random.Generator, config: WorldConfig
) -> tuple[GridMap, list[list[Cell]], list[str]]:
    lo, hi = config.room_count
    n_rooms = int(rng.integers(lo, hi + 1))
    cols = math.ceil(math.sqrt(n_rooms))
    rows = math.ceil(n_rooms / cols)
    block_w = (config.width - 1) // cols
    block_h = (config.height - 1) // rows
    if block_w < 4 or block_h < 4:
        raise ConfigurationError(
            f"grid {config.width}x{config.height} is too small for {n_rooms} rooms"
        )
    if (block_w - 1) * (block_h - 1) < config.containers_per_room[1]:
        raise ConfigurationError("rooms are too small for the maximum containers per room")

    free = np.zeros((config.height, config.width), dtype=bool)
    interiors: list[list[Cell]] = []
    for i in range(n_rooms):
        r, c = divmod(i, cols)
        top, left = r * block_h + 1, c * block_w + 1
        bottom, right = (r + 1) * block_h - 1, (c + 1) * block_w - 1
        free[top : bottom + 1, left : right + 1] = True
        interiors.append([(y, x) for y in range(top, bottom + 1) for x in range(left, right + 1)])
        # Doors into the left and upper neighbours keep the rooms connected.
        if c > 0:
            free[int(rng.integers(top, bottom + 1)), c * block_w] = True
        if r > 0:
            free[r * block_h, int(rng.integers(left, right + 1))] = True

    grid = GridMap(cells=tuple("".join(FREE if f else BLOCKED for f in row) for row in free))
    if not is_connected(grid):
        raise InternalError("generated grid is not connected")

    names = sorted(config.room_types)
    room_types = list(config.required_room_types)
    while len(room_types) < n_rooms:
        room_types.append(names[int(rng.integers(len(names)))])
    return grid, interiors, room_types


def _sample_containers(
    rng: np.random.Generator,
    config: WorldConfig,
    interiors: list[list[Cell]],
    room_types: list[str],
) -> list[Container]:
    clo, chi = config.containers_per_room
    containers: list[Container] = []
    for interior, room_type in zip(interiors, room_types):
        ctypes = config.room_types[room_type]
        k = min(int(rng.integers(clo, chi + 1)), len(ctypes))
        chosen = rng.choice(len(ctypes), size=k, replace=False)
        poses = rng.choice(len(interior), size=k, replace=False)
        for type_idx, pose_idx in zip(chosen, poses):
            type_name = ctypes[int(type_idx)]
            containers.append(
                Container(
                    id=f"{type_name}_{len(containers)}",
                    type_name=type_name,
                    room_type=room_type,
                    pose=interior[int(pose_idx)],
                )
            )
    return containers


def _place_objects(
    rng: np.random.Generator, config: WorldConfig, containers: list[Container]
) -> Optional[list[WorldObject]]:
    objects: list[WorldObject] = []
    for spec in config.objects:
        weights = np.array(
            [config.weight(spec.type_name, c.type_name, c.room_type) for c in containers],
            dtype=float,
        )
        total = weights.sum()
        if total <= 0.0:
            return None
        for _ in range(spec.count):
            idx = int(rng.choice(len(containers), p=weights / total))
            objects.append(
                WorldObject(
                    id=f"{spec.type_name}_{len(objects)}",
                    type_name=spec.type_name,
                    true_container=containers[idx].id,
                )
            )
    return objects


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------
@lru_cache(maxsize=8192)
def distance_field(grid: GridMap, source: Cell) -> np.ndarray:
    """
    Breadth-first distances (in steps) from ``source`` to every cell.

    Unreachable and blocked cells hold -1.  On a unit-cost 4-connected grid
    this is exactly the distance A* with a Manhattan heuristic returns, but
    one flood fill answers every query from the same source.

    The returned array is read-only and cached per ``(grid, source)``.
    """
    mask = grid.free_mask
    dist = np.full(mask.shape, -1, dtype=np.int64)
    if not grid.is_free(source):
        dist.flags.writeable = False
        return dist
    dist[source] = 0
    queue = deque([source])
    height, width = mask.shape
    while queue:
        r, c = queue.popleft()
        d = dist[r, c] + 1
        for dr, dc in _STEPS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < height and 0 <= nc < width and mask[nr, nc] and dist[nr, nc] < 0:
                dist[nr, nc] = d
                queue.append((nr, nc))
    dist.flags.writeable = False
    return dist


def path_cost(grid: GridMap, a: Cell, b: Cell) -> float:
    """
    Length of the shortest 4-connected path from ``a`` to ``b``.

    Symmetric, zero on the diagonal, and a metric on every connected grid.

    Raises:
        PreconditionError: ``a`` or ``b`` is blocked or off the grid.
        UnreachableError:  the cells lie in different components.
    """
    a = (int(a[0]), int(a[1]))
    b = (int(b[0]), int(b[1]))
    if not grid.is_free(a) or not grid.is_free(b):
        raise PreconditionError(f"path_cost needs free cells, got {a} -> {b}")
    if a == b:
        return 0.0
    steps = int(distance_field(grid, a)[b])
    if steps < 0:
        raise UnreachableError(f"no path from {a} to {b}")
    return steps * grid.cell_size


def is_connected(grid: GridMap) -> bool:
    """True if the free cells form a single 4-connected component."""
    free = grid.free_cells()
    if not free:
        return True
    reached = distance_field(grid, free[0])
    return int((reached >= 0).sum()) == len(free)


# ---------------------------------------------------------------------------
# Ground-truth interaction
# ---------------------------------------------------------------------------
def search_container(world: WorldModel, belief: BeliefState, container_id: str) -> Observation:
    """
    Reveal the ground-truth contents of ``container_id``.

    The belief is not modified; callers pass the observation to
    ``BeliefState.record_observation``.  Searching an already searched
    container is a no-op that reveals nothing.

    Raises:
        PreconditionError: unknown container, or the robot is not at its pose.
    """
    if not world.has_container(container_id):
        raise PreconditionError(f"unknown container {container_id!r}")
    container = world.container(container_id)
    if tuple(belief.robot_pose) != container.pose:
        raise PreconditionError(
            f"robot at {belief.robot_pose} cannot search {container_id} at {container.pose}"
        )
    if container_id in belief.searched:
        logger.warning(f"{container_id} was already searched; search is a no-op")
        return Observation(searched_container=container_id, revealed_objects=frozenset(), noop=True)
    return Observation(searched_container=container_id, revealed_objects=world.objects_in(container_id))
