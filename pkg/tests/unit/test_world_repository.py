"""
test_world_repository.py - World catalogs (TOML) and world files (text).
"""

import pytest

from src.exceptions import ConfigurationError, WorldFormatError
from src.repositories.world_repository import (
    format_world,
    load_world,
    load_world_config,
    load_worlds,
    parse_world,
    save_world,
    world_config_from_dict,
    world_file_name,
)
from src.services.world_service import generate_world


class TestLoadWorldConfig:
    def test_reads_fixture_catalog(self, tiny_config):
        assert tiny_config.name == "tiny"
        assert tiny_config.room_count == (2, 2)
        assert tiny_config.required_room_types == ("kitchen",)
        assert tiny_config.room_types["bedroom"] == ("bed", "dresser")
        assert tiny_config.weight("mug", "countertop", "kitchen") == 3.0
        assert tiny_config.weight("mug", "bed", "bedroom") == 0.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="does not exist"):
            load_world_config(tmp_path / "nope.toml")

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("width = = 3\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="not valid TOML"):
            load_world_config(path)

    def test_missing_key(self):
        with pytest.raises(ConfigurationError, match="width"):
            world_config_from_dict({"height": 9})

    def test_bad_range(self):
        raw = {
            "width": 20,
            "height": 20,
            "room_count": [1, 2, 3],
            "containers_per_room": [1, 1],
            "room_types": {"kitchen": ["fridge"]},
            "objects": [{"type": "egg", "placements": [{"container": "fridge", "room": "kitchen", "weight": 1}]}],
        }
        with pytest.raises(ConfigurationError, match="room_count"):
            world_config_from_dict(raw)


class TestWorldFiles:
    def test_format_header_and_sections(self, tiny_world):
        text = format_world(tiny_world)
        lines = text.splitlines()

        assert lines[0] == "# lios world v1"
        assert lines[1] == "seed 7"
        assert lines[2] == "size 7 7"
        assert lines[3] == "start 1 1"
        assert "countertop_1 countertop kitchen 3 1" in lines
        assert "mug_0 mug countertop_1" in lines
        assert lines[-1] == "end"

    def test_parse_restores_world(self, tiny_world):
        assert parse_world(format_world(tiny_world)) == tiny_world

    def test_generated_world_serialization_is_stable(self, tiny_config):
        world = generate_world(5, tiny_config)
        assert format_world(parse_world(format_world(world))) == format_world(world)

    def test_save_and_load_directory(self, tmp_path, tiny_config):
        for seed in (2, 0, 1):
            save_world(generate_world(seed, tiny_config), tmp_path / world_file_name(seed))
        (tmp_path / "notes.txt").write_text("ignored", encoding="utf-8")

        worlds = load_worlds(tmp_path)

        assert [w.seed for w in worlds] == [0, 1, 2]
        assert load_world(tmp_path / world_file_name(1)) == worlds[1]

    def test_world_file_name(self):
        assert world_file_name(42) == "world_000042.world"

    def test_bad_header(self, tiny_world):
        text = format_world(tiny_world).replace("# lios world v1", "# something else")
        with pytest.raises(WorldFormatError) as exc_info:
            parse_world(text)
        assert exc_info.value.line == 1

    def test_container_on_wall(self, tiny_world):
        text = format_world(tiny_world).replace("fridge_0 fridge kitchen 1 5", "fridge_0 fridge kitchen 0 5")
        with pytest.raises(WorldFormatError, match="free cell"):
            parse_world(text)

    def test_dangling_object(self, tiny_world):
        text = format_world(tiny_world).replace("egg_1 egg fridge_0", "egg_1 egg oven_9")
        with pytest.raises(WorldFormatError, match="unknown container"):
            parse_world(text)

    def test_truncated_file(self, tiny_world):
        text = "\n".join(format_world(tiny_world).splitlines()[:-2])
        with pytest.raises(WorldFormatError, match="unexpected end"):
            parse_world(text)

    def test_ragged_grid_row(self, tiny_world):
        text = format_world(tiny_world).replace("#.....#", "#....#", 1)
        with pytest.raises(WorldFormatError) as exc_info:
            parse_world(text)
        assert exc_info.value.line == 7
