"""
test_task_service.py - Scenario construction and PDDL emission.
"""

from dataclasses import replace

import pytest

from src.config import DEFAULT_WORLD_CONFIG
from src.exceptions import EmissionError, ScenarioInfeasibleError
from src.models import BeliefState
from src.pddl import ground, parse_domain, parse_problem, plan
from src.repositories.world_repository import load_world_config
from src.schemas import FindCostTable, ScenarioName, ScenarioSpec
from src.services.lios_service import CostModel
from src.services.task_service import (
    BASE_OPERATORS,
    SCENARIO_LIMITS,
    belief_atoms,
    build_scenario,
    domain_name,
    emit_pddl,
    goal_satisfied,
    missing_objects,
    planning_locations,
    required_find_entries,
)
from src.services.world_service import generate_world


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------
@pytest.fixture
def egg_scenario():
    """Bring the egg to the fridge or the bed; the mug is also relevant."""
    return ScenarioSpec(
        name=ScenarioName.DELIVER3,
        goal=(("obj-at", "egg_1", "bed_2"),),
        operators=BASE_OPERATORS,
        t_max=10.0,
        r_fail=400.0,
        relevant_objects=("egg_1", "mug_0"),
        goal_locations=("bed_2", "fridge_0"),
    )


@pytest.fixture
def mug_known(tiny_world):
    belief = BeliefState.initial(tiny_world)
    belief.known_objects["mug_0"] = "countertop_1"
    belief.searched.add("countertop_1")
    return belief


@pytest.fixture(scope="module")
def default_world():
    return generate_world(3, load_world_config(DEFAULT_WORLD_CONFIG))


def _ground(domain_text: str, problem_text: str):
    domain = parse_domain(domain_text)
    return ground(domain, parse_problem(problem_text, domain))


# ---------------------------------------------------------------------------
# build_scenario
# ---------------------------------------------------------------------------
class TestBuildScenario:
    def test_limits_table(self):
        assert SCENARIO_LIMITS[ScenarioName.DELIVER3] == (120.0, 400.0)
        assert SCENARIO_LIMITS[ScenarioName.BREAKFAST] == (120.0, 400.0)
        assert SCENARIO_LIMITS[ScenarioName.COFFEE] == (240.0, 450.0)
        assert SCENARIO_LIMITS[ScenarioName.BREAKFAST_COFFEE] == (240.0, 450.0)
        assert SCENARIO_LIMITS[ScenarioName.ANY_OF_THREE] == (120.0, 100.0)

    def test_deliver3(self, tiny_world):
        scenario = build_scenario("Deliver3", tiny_world, seed=1)

        objects = [g[1] for g in scenario.goal]
        targets = [g[2] for g in scenario.goal]
        assert all(g[0] == "obj-at" for g in scenario.goal)
        assert sorted(objects) == ["book_2", "egg_1", "mug_0"]
        assert len(set(targets)) == 3
        assert scenario.goal_locations == tuple(sorted(targets))
        assert scenario.relevant_objects == ("book_2", "egg_1", "mug_0")
        assert (scenario.t_max, scenario.r_fail) == (120.0, 400.0)
        assert scenario.operators == BASE_OPERATORS

    def test_same_seed_same_scenario(self, default_world):
        for name in ScenarioName:
            assert build_scenario(name, default_world, 5) == build_scenario(name, default_world, 5)

    def test_seeds_vary_choices(self, default_world):
        goals = {build_scenario(ScenarioName.DELIVER3, default_world, seed).goal for seed in range(10)}
        assert len(goals) > 1

    def test_any_of_three(self, tiny_world):
        scenario = build_scenario(ScenarioName.ANY_OF_THREE, tiny_world, seed=0)

        assert scenario.goal == (("retrieved",),)
        assert sorted(scenario.options) == ["book_2", "egg_1", "mug_0"]
        assert scenario.goal_locations == ("start",)
        assert "retrieve" in scenario.operators
        assert scenario.r_fail == 100.0

    def test_coffee_uses_serving_spot(self, default_world):
        scenario = build_scenario(ScenarioName.COFFEE, default_world, seed=0)

        assert scenario.goal == (("coffee-served",),)
        assert scenario.goal_locations == (scenario.serving_spot,)
        assert default_world.has_container(scenario.serving_spot)
        types = {default_world.object(o).type_name for o in scenario.relevant_objects}
        assert {"coffee_grinds", "water_bottle", "mug"} <= types

    def test_breakfast_coffee_has_both_goals(self, default_world):
        scenario = build_scenario(ScenarioName.BREAKFAST_COFFEE, default_world, seed=0)
        assert scenario.goal == (("breakfast-served",), ("coffee-served",))
        assert {"peel", "make-coffee", "serve-toast"} <= scenario.operators

    @pytest.mark.parametrize("name", [ScenarioName.COFFEE, ScenarioName.BREAKFAST])
    def test_missing_types_are_infeasible(self, tiny_world, name):
        with pytest.raises(ScenarioInfeasibleError):
            build_scenario(name, tiny_world, seed=0)

    def test_too_few_objects(self, tiny_world):
        world = replace(tiny_world, objects=tiny_world.objects[:2])
        with pytest.raises(ScenarioInfeasibleError):
            build_scenario(ScenarioName.DELIVER3, world, seed=0)


# ---------------------------------------------------------------------------
# Belief -> atoms
# ---------------------------------------------------------------------------
class TestBeliefAtoms:
    def test_missing_objects(self, mug_known, egg_scenario):
        assert missing_objects(mug_known, egg_scenario) == ["egg_1"]

    def test_required_find_entries(self, mug_known, egg_scenario):
        assert required_find_entries(mug_known, egg_scenario) == [
            ("egg_1", "start", "bed_2"),
            ("egg_1", "start", "fridge_0"),
        ]

    def test_atoms(self, mug_known, egg_scenario):
        assert belief_atoms(mug_known, egg_scenario) == {
            ("rob-at", "start"),
            ("hand-is-free",),
            ("obj-at", "mug_0", "countertop_1"),
        }

    def test_irrelevant_objects_are_left_out(self, mug_known, egg_scenario):
        mug_known.known_objects["book_2"] = "bed_2"
        assert ("obj-at", "book_2", "bed_2") not in belief_atoms(mug_known, egg_scenario)

    def test_holding_replaces_free_hand(self, mug_known, egg_scenario):
        mug_known.pick("mug_0")
        atoms = belief_atoms(mug_known, egg_scenario)
        assert ("holding", "mug_0") in atoms
        assert ("hand-is-free",) not in atoms

    def test_goal_satisfied(self, mug_known, egg_scenario):
        assert not goal_satisfied(mug_known, egg_scenario)
        mug_known.known_objects["egg_1"] = "bed_2"
        assert goal_satisfied(mug_known, egg_scenario)

    def test_planning_locations(self, mug_known, egg_scenario):
        assert planning_locations(mug_known, egg_scenario) == ["bed_2", "countertop_1", "fridge_0", "start"]

    def test_domain_name(self, egg_scenario):
        assert domain_name(egg_scenario) == "household-deliver3"


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------
class TestEmitPddl:
    def test_find_groundings_carry_table_costs(self, tiny_world, mug_known, egg_scenario):
        table = FindCostTable()
        table.set("egg_1", "start", "bed_2", 20.0)
        table.set("egg_1", "start", "fridge_0", 30.0)

        domain_text, problem_text = emit_pddl(tiny_world, mug_known, egg_scenario, table)
        task = _ground(domain_text, problem_text)

        finds = {a.name: a.cost for a in task.actions if a.name.startswith("find ")}
        assert finds == {"find egg_1 start bed_2": 20.0, "find egg_1 start fridge_0": 30.0}
        assert "(= (find-cost egg_1 start bed_2) 20)" in problem_text

    def test_move_costs_are_grid_distances(self, tiny_world, mug_known, egg_scenario):
        table = FindCostTable({("egg_1", "start", "bed_2"): 1.0, ("egg_1", "start", "fridge_0"): 1.0})
        task = _ground(*emit_pddl(tiny_world, mug_known, egg_scenario, table))

        assert task.action("move start countertop_1").cost == 2.0
        assert task.action("move countertop_1 bed_2").cost == 6.0

    def test_operator_costs_follow_cost_model(self, tiny_world, mug_known, egg_scenario):
        table = FindCostTable({("egg_1", "start", "bed_2"): 1.0, ("egg_1", "start", "fridge_0"): 1.0})
        costs = CostModel(r_pick=7.0, r_place=3.0)
        task = _ground(*emit_pddl(tiny_world, mug_known, egg_scenario, table, costs))

        assert task.action("pick mug_0 countertop_1").cost == 7.0
        assert task.action("place mug_0 bed_2").cost == 3.0

    def test_no_find_when_everything_is_located(self, tiny_world, mug_known, egg_scenario):
        mug_known.known_objects["egg_1"] = "fridge_0"
        domain_text, problem_text = emit_pddl(tiny_world, mug_known, egg_scenario, FindCostTable())
        assert "(:action find" not in domain_text
        assert "find-cost egg_1" not in problem_text

    def test_missing_entry(self, tiny_world, mug_known, egg_scenario):
        table = FindCostTable()
        table.set("egg_1", "start", "bed_2", 20.0)
        with pytest.raises(EmissionError, match="fridge_0"):
            emit_pddl(tiny_world, mug_known, egg_scenario, table)

    def test_plan_uses_cheaper_find(self, tiny_world, mug_known, egg_scenario):
        table = FindCostTable()
        table.set("egg_1", "start", "bed_2", 20.0)
        table.set("egg_1", "start", "fridge_0", 30.0)
        result = plan(_ground(*emit_pddl(tiny_world, mug_known, egg_scenario, table)))
        assert result.actions == ("find egg_1 start bed_2", "place egg_1 bed_2")
        assert result.cost == 25.0

    @pytest.mark.parametrize("name", list(ScenarioName))
    def test_every_scenario_emits_parseable_pddl(self, default_world, name):
        scenario = build_scenario(name, default_world, seed=2)
        belief = BeliefState.initial(default_world)
        table = FindCostTable()
        for key in required_find_entries(belief, scenario):
            table.set(*key, 10.0)

        task = _ground(*emit_pddl(default_world, belief, scenario, table))

        assert any(a.name.startswith("find ") for a in task.actions)
        assert not task.is_goal(task.init)

    def test_coffee_plan_finds_every_ingredient(self, default_world):
        scenario = build_scenario(ScenarioName.COFFEE, default_world, seed=0)
        belief = BeliefState.initial(default_world)
        table = FindCostTable()
        for key in required_find_entries(belief, scenario):
            table.set(*key, 10.0)

        result = plan(_ground(*emit_pddl(default_world, belief, scenario, table)), timeout=60.0)

        finds = [a for a in result.actions if a.startswith("find ")]
        assert len(finds) >= 4
        assert result.actions[-1].startswith("serve-coffee")
