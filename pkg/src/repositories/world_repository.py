"""
world_repository.py - File access for world catalogs and generated worlds.

Two formats live here:

    Catalog (TOML)   ``load_world_config`` turns the declarative catalog
                     (grid size, room/container ranges, room types, object
                     placement weights) into a ``WorldConfig``.
    World (text)     ``format_world`` / ``parse_world`` read and write the
                     line-oriented world format documented in
                     ``docs/data_design.md``.  Output is deterministic, so two
                     worlds generated from the same seed serialize to the
                     same bytes.

Nothing here generates or interprets worlds; see ``world_service``.
"""

import sys
from pathlib import Path
from typing import Any, Iterator

from loguru import logger

from src.exceptions import ConfigurationError, WorldFormatError
from src.models import (
    BLOCKED,
    FREE,
    Container,
    GridMap,
    ObjectSpec,
    PlacementWeight,
    WorldConfig,
    WorldModel,
    WorldObject,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

WORLD_HEADER = "# lios world v1"
WORLD_SUFFIX = ".world"


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------
def load_world_config(path: Path | str) -> WorldConfig:
    """Read and validate a TOML world catalog.

    Raises:
        ConfigurationError: unreadable file, missing keys or invalid values.
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"world config {path} does not exist") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"world config {path} is not valid TOML: {exc}") from exc
    config = world_config_from_dict(raw, default_name=path.stem)
    logger.debug(f"loaded world config {config.name!r} from {path}")
    return config


def world_config_from_dict(raw: dict[str, Any], default_name: str = "default") -> WorldConfig:
    """Build a ``WorldConfig`` from the parsed TOML mapping."""
    try:
        objects = tuple(
            ObjectSpec(
                type_name=str(entry["type"]),
                count=int(entry.get("count", 1)),
                placements=tuple(
                    PlacementWeight(
                        container_type=str(p["container"]),
                        room_type=str(p["room"]),
                        weight=float(p["weight"]),
                    )
                    for p in entry.get("placements", [])
                ),
            )
            for entry in raw.get("objects", [])
        )
        config = WorldConfig(
            name=str(raw.get("name", default_name)),
            width=int(raw["width"]),
            height=int(raw["height"]),
            room_count=_int_pair(raw["room_count"], "room_count"),
            containers_per_room=_int_pair(raw["containers_per_room"], "containers_per_room"),
            room_types={str(k): tuple(str(c) for c in v) for k, v in raw["room_types"].items()},
            objects=objects,
            required_room_types=tuple(str(r) for r in raw.get("required_room_types", [])),
        )
    except KeyError as exc:
        raise ConfigurationError(f"world config is missing key {exc.args[0]!r}") from exc
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigurationError(f"world config has an invalid value: {exc}") from exc
    config.validate()
    return config


def _int_pair(value: Any, key: str) -> tuple[int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigurationError(f"{key} must be a [min, max] pair")
    return int(value[0]), int(value[1])


# ---------------------------------------------------------------------------
# World files
# ---------------------------------------------------------------------------
def format_world(world: WorldModel) -> str:
    """Serialize ``world`` in the line-oriented world format."""
    lines = [
        WORLD_HEADER,
        f"seed {world.seed}",
        f"size {world.grid.width} {world.grid.height}",
        f"start {world.robot_start[0]} {world.robot_start[1]}",
        "grid",
        *world.grid.cells,
        f"containers {len(world.containers)}",
        *(f"{c.id} {c.type_name} {c.room_type} {c.pose[0]} {c.pose[1]}" for c in world.containers),
        f"objects {len(world.objects)}",
        *(f"{o.id} {o.type_name} {o.true_container}" for o in world.objects),
        "end",
    ]
    return "\n".join(lines) + "\n"


class _Lines:
    """Numbered line cursor; skips blank lines."""

    def __init__(self, text: str):
        self._items: Iterator[tuple[int, str]] = (
            (n, line.strip()) for n, line in enumerate(text.splitlines(), start=1) if line.strip()
        )
        self.number = 0

    def next(self, expected: str) -> str:
        try:
            self.number, line = next(self._items)
        except StopIteration:
            raise WorldFormatError(f"unexpected end of file, expected {expected}", self.number + 1)
        return line

    def keyword(self, keyword: str, arity: int) -> list[str]:
        fields = self.next(keyword).split()
        if fields[0] != keyword or len(fields) != arity + 1:
            raise WorldFormatError(f"expected '{keyword}' with {arity} value(s)", self.number)
        return fields[1:]

    def ints(self, fields: list[str]) -> list[int]:
        try:
            return [int(f) for f in fields]
        except ValueError:
            raise WorldFormatError(f"expected integers, got {' '.join(fields)!r}", self.number)


def parse_world(text: str) -> WorldModel:
    """Parse the world format.

    Raises:
        WorldFormatError: malformed text, or a world that violates its
            invariants (container off a free cell, dangling object, ...).
    """
    lines = _Lines(text)
    if lines.next("header") != WORLD_HEADER:
        raise WorldFormatError(f"first line must be {WORLD_HEADER!r}", lines.number)
    (seed,) = lines.ints(lines.keyword("seed", 1))
    width, height = lines.ints(lines.keyword("size", 2))
    start_r, start_c = lines.ints(lines.keyword("start", 2))
    lines.keyword("grid", 0)

    rows = []
    for _ in range(height):
        row = lines.next("grid row")
        if len(row) != width or set(row) - {FREE, BLOCKED}:
            raise WorldFormatError(f"grid row must be {width} cells of '.' or '#'", lines.number)
        rows.append(row)
    grid = GridMap(cells=tuple(rows))
    if not grid.is_free((start_r, start_c)):
        raise WorldFormatError("robot start is not a free cell")

    (n_containers,) = lines.ints(lines.keyword("containers", 1))
    containers = []
    for _ in range(n_containers):
        fields = lines.next("container row").split()
        if len(fields) != 5:
            raise WorldFormatError("container row needs: id type room row col", lines.number)
        r, c = lines.ints(fields[3:])
        if not grid.is_free((r, c)):
            raise WorldFormatError(f"container {fields[0]} is not on a free cell", lines.number)
        containers.append(Container(id=fields[0], type_name=fields[1], room_type=fields[2], pose=(r, c)))
    ids = [c.id for c in containers]
    if len(set(ids)) != len(ids):
        raise WorldFormatError("container ids are not unique")

    (n_objects,) = lines.ints(lines.keyword("objects", 1))
    objects = []
    for _ in range(n_objects):
        fields = lines.next("object row").split()
        if len(fields) != 3:
            raise WorldFormatError("object row needs: id type container", lines.number)
        if fields[2] not in ids:
            raise WorldFormatError(f"object {fields[0]} is in unknown container {fields[2]}", lines.number)
        objects.append(WorldObject(id=fields[0], type_name=fields[1], true_container=fields[2]))
    if len({o.id for o in objects}) != len(objects):
        raise WorldFormatError("object ids are not unique")
    lines.keyword("end", 0)

    return WorldModel(
        grid=grid,
        containers=tuple(containers),
        objects=tuple(objects),
        seed=seed,
        robot_start=(start_r, start_c),
    )


def save_world(world: WorldModel, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_world(world), encoding="utf-8")
    return path


def load_world(path: Path | str) -> WorldModel:
    return parse_world(Path(path).read_text(encoding="utf-8"))


def load_worlds(directory: Path | str) -> list[WorldModel]:
    """Load every ``*.world`` file of ``directory`` in file-name order."""
    paths = sorted(Path(directory).glob(f"*{WORLD_SUFFIX}"))
    logger.info(f"loading {len(paths)} worlds from {directory}")
    return [load_world(p) for p in paths]


def world_file_name(seed: int) -> str:
    return f"world_{seed:06d}{WORLD_SUFFIX}"
