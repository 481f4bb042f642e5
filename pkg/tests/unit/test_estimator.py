"""
test_estimator.py - Training, querying and persisting the P_found estimator.
"""

import pytest
from scipy.stats import spearmanr

from src.config import DEFAULT_WORLD_CONFIG
from src.exceptions import EstimatorParseError, EstimatorValidationError, TrainingError
from src.models import Container, GridMap, ObjectSpec, PlacementWeight, WorldConfig, WorldModel, WorldObject
from src.repositories.estimator_repository import (
    format_estimator,
    load_estimator,
    parse_estimator,
    save_estimator,
)
from src.repositories.world_repository import load_world_config
from src.services.estimator_service import Estimator, train
from src.services.world_service import generate_world


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def _world(seed: int, mug_on_countertop: bool) -> WorldModel:
    """One countertop and one fridge; the mug is on the countertop or in the fridge."""
    containers = (
        Container("countertop_0", "countertop", "kitchen", (0, 0)),
        Container("fridge_1", "fridge", "kitchen", (0, 2)),
    )
    home = "countertop_0" if mug_on_countertop else "fridge_1"
    return WorldModel(
        grid=GridMap(cells=("...",)),
        containers=containers,
        objects=(WorldObject("mug_0", "mug", home),),
        seed=seed,
        robot_start=(0, 1),
    )


@pytest.fixture
def corpus():
    """Ten worlds, the mug on the countertop in three of them."""
    return [_world(seed, seed < 3) for seed in range(10)]


# ---------------------------------------------------------------------------
# train / p_found
# ---------------------------------------------------------------------------
class TestTrain:
    def test_laplace_smoothed_frequency(self, corpus):
        est = train(corpus, alpha=1.0)

        assert est.counts[("mug", "countertop", "kitchen")] == (3, 10)
        assert est.p_found("mug", "countertop", "kitchen") == pytest.approx(4 / 12)
        assert est.p_found("mug", "fridge", "kitchen") == pytest.approx(8 / 12)

    def test_unseen_triple_is_one_half(self, corpus):
        est = train(corpus)
        assert est.p_found("mug", "bed", "bedroom") == 0.5
        assert est.p_found("kettle", "countertop", "kitchen") == 0.5

    def test_vocabularies_are_sorted(self, corpus):
        est = train(corpus)
        assert est.object_types == ("mug",)
        assert est.container_types == ("countertop", "fridge")
        assert est.room_types == ("kitchen",)

    def test_more_positives_never_lower_probability(self):
        est = Estimator()
        previous = est.p_found("mug", "shelf", "kitchen")
        for _ in range(5):
            est.add_example("mug", "shelf", "kitchen", found=True)
            current = est.p_found("mug", "shelf", "kitchen")
            assert current >= previous
            previous = current

    def test_negatives_never_raise_probability(self):
        est = Estimator()
        est.add_example("mug", "shelf", "kitchen", found=True)
        previous = est.p_found("mug", "shelf", "kitchen")
        for _ in range(5):
            est.add_example("mug", "shelf", "kitchen", found=False)
            current = est.p_found("mug", "shelf", "kitchen")
            assert current <= previous
            previous = current
        assert previous < 0.5

    def test_values_stay_inside_unit_interval(self, tiny_config):
        est = train(generate_world(seed, tiny_config) for seed in range(20))
        for positives, total in est.counts.values():
            assert 0 <= positives <= total
        for (obj, container, room) in est.counts:
            assert 0.0 < est.p_found(obj, container, room) < 1.0

    def test_empty_corpus(self):
        with pytest.raises(TrainingError):
            train([])

    def test_uniform_estimator(self):
        est = Estimator.uniform_estimator()
        assert est.p_found("mug", "countertop", "kitchen") == 0.5

    @pytest.mark.parametrize("counts, alpha", [({("a", "b", "c"): (3, 2)}, 1.0), ({}, 0.0)])
    def test_invalid_tables_rejected(self, counts, alpha):
        with pytest.raises(EstimatorValidationError):
            Estimator(counts=counts, alpha=alpha)


# ---------------------------------------------------------------------------
# Estimator files
# ---------------------------------------------------------------------------
class TestEstimatorFiles:
    def test_save_and_load(self, tmp_path, corpus):
        est = train(corpus, alpha=0.5)

        loaded = load_estimator(save_estimator(est, tmp_path / "est.txt"))

        assert loaded.counts == est.counts
        assert loaded.alpha == 0.5
        assert loaded.container_types == est.container_types
        assert loaded.p_found("mug", "countertop", "kitchen") == est.p_found("mug", "countertop", "kitchen")

    def test_format_layout(self, corpus):
        lines = format_estimator(train(corpus)).splitlines()
        assert lines[0] == "# lios estimator v1"
        assert lines[6] == "table 2"
        assert lines[7] == "mug countertop kitchen 3 10"
        assert lines[-1] == "end"

    def test_truncated_file_reports_line(self, corpus):
        text = "\n".join(format_estimator(train(corpus)).splitlines()[:8])

        with pytest.raises(EstimatorParseError) as exc_info:
            parse_estimator(text)

        assert exc_info.value.line == 9

    def test_bad_header(self):
        with pytest.raises(EstimatorParseError) as exc_info:
            parse_estimator("hello\n")
        assert exc_info.value.line == 1

    def test_non_integer_count(self, corpus):
        text = format_estimator(train(corpus)).replace("3 10", "3 ten")
        with pytest.raises(EstimatorParseError) as exc_info:
            parse_estimator(text)
        assert exc_info.value.line == 8

    def test_inconsistent_counts_rejected(self, corpus):
        text = format_estimator(train(corpus)).replace("3 10", "11 10")
        with pytest.raises(EstimatorValidationError):
            parse_estimator(text)


# ---------------------------------------------------------------------------
# Agreement with the generator
# ---------------------------------------------------------------------------
@pytest.mark.slow
class TestTrainedFrequencies:
    def test_three_to_one_placement_converges(self):
        config = WorldConfig(
            name="one-kitchen",
            width=7,
            height=7,
            room_count=(1, 1),
            containers_per_room=(2, 2),
            room_types={"kitchen": ("fridge", "countertop")},
            objects=(
                ObjectSpec(
                    "mug",
                    (PlacementWeight("countertop", "kitchen", 3.0), PlacementWeight("fridge", "kitchen", 1.0)),
                ),
            ),
        )
        est = train(generate_world(seed, config) for seed in range(500))

        assert est.counts[("mug", "countertop", "kitchen")][1] == 500
        assert est.p_found("mug", "countertop", "kitchen") == pytest.approx(0.75, abs=0.06)
        assert est.p_found("mug", "fridge", "kitchen") == pytest.approx(0.25, abs=0.06)

    def test_held_out_finds_rank_with_probability(self):
        config = load_world_config(DEFAULT_WORLD_CONFIG)
        est = train(generate_world(seed, config) for seed in range(200))

        probabilities, hits = [], []
        for seed in range(10_000, 10_100):
            world = generate_world(seed, config)
            for obj in world.objects:
                for container in world.containers:
                    probabilities.append(est.p_found(obj.type_name, container.type_name, container.room_type))
                    hits.append(container.id == obj.true_container)

        rho, p_value = spearmanr(probabilities, hits)

        assert rho > 0
        assert p_value < 0.05
