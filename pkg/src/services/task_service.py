"""
task_service.py - Benchmark scenarios and their PDDL encoding.

``build_scenario`` instantiates one of the five scenarios against a world
(which objects, which target locations, where to serve).  ``emit_pddl``
compiles the scenario plus the current belief into a domain / problem pair
for the planner, adding a ``find`` action for every goal-relevant object the
robot has not located yet.

Encoding notes:
    * Types: ``location`` (``start`` and container ids) and ``item``.
    * ``find`` has exactly the effects of a deterministic single-object
      search: robot leaves ``?start``, arrives at ``?target``, hand no longer
      free, holding ``?obj``.  Its extra preconditions (``missing``,
      ``find-from``, ``find-to``) are static and restrict grounding to the
      robot's current location and the scenario's goal locations.
    * Disjunctive recipes compile to several serve operators sharing one
      goal predicate; Any-of-Three compiles to one ``retrieve`` operator over
      the three options.  Serve and retrieve operators cost nothing.
    * Objects not yet seen are assumed to satisfy later preconditions; the
      executive replans when that turns out wrong.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from loguru import logger

from src.exceptions import EmissionError, ScenarioInfeasibleError
from src.models import START_LOCATION, BeliefState, WorldModel
from src.pddl.ast import (
    Atom,
    FunctionAssignment,
    FunctionTerm,
    PddlProblem,
    TypedName,
)
from src.pddl.printer import format_number, problem_to_text
from src.schemas import FindCostTable, ScenarioName, ScenarioSpec
from src.services.lios_service import CostModel
from src.services.world_service import path_cost

# (t_max seconds, r_fail)
SCENARIO_LIMITS: dict[ScenarioName, tuple[float, float]] = {
    ScenarioName.DELIVER3: (120.0, 400.0),
    ScenarioName.BREAKFAST: (120.0, 400.0),
    ScenarioName.COFFEE: (240.0, 450.0),
    ScenarioName.BREAKFAST_COFFEE: (240.0, 450.0),
    ScenarioName.ANY_OF_THREE: (120.0, 100.0),
}

_SCENARIO_INDEX = {name: i for i, name in enumerate(ScenarioName)}

ROLE_TYPES: dict[str, tuple[str, ...]] = {
    "is-egg": ("egg",),
    "is-bowl": ("bowl",),
    "is-plate": ("plate",),
    "peelable": ("potato", "tomato", "apple"),
    "is-knife": ("knife",),
    "is-bread": ("bread",),
    "is-toaster": ("toaster",),
    "boil-vessel": ("pot", "kettle"),
    "coffee-vessel": ("pot", "kettle", "coffee_machine"),
    "is-grinds": ("coffee_grinds",),
    "is-water": ("water_bottle",),
    "is-mug": ("mug",),
}

BREAKFAST_TYPES = ("egg", "bowl", "plate", "potato", "tomato", "apple", "knife", "bread", "toaster", "pot", "kettle")
COFFEE_TYPES = ("coffee_grinds", "water_bottle", "mug", "pot", "kettle", "coffee_machine")

# Each recipe is a list of alternatives per ingredient slot.
BREAKFAST_RECIPES = (
    (("egg",), ("bowl",), ("pot", "kettle")),
    (("potato", "tomato", "apple"), ("knife",), ("plate",)),
    (("bread",), ("toaster",), ("plate",)),
)
COFFEE_RECIPE = (("coffee_grinds",), ("water_bottle",), ("mug",), ("pot", "kettle", "coffee_machine"))

STATE_PREDICATES = ("peeled", "toasted", "boiled", "filled", "has-coffee")
GOAL_PREDICATES = ("breakfast-served", "coffee-served", "retrieved")

BASE_OPERATORS = frozenset({"move", "pick", "place", "find"})
BREAKFAST_OPERATORS = frozenset({"peel", "toast", "boil", "serve-egg", "serve-peeled", "serve-toast"})
COFFEE_OPERATORS = frozenset({"pour-water", "make-coffee", "serve-coffee"})

# Operators whose only effect on the belief is to add one fact.
FACT_OPERATORS: dict[str, tuple[str, int]] = {
    "peel": ("peeled", 0),
    "toast": ("toasted", 0),
    "boil": ("boiled", 0),
    "pour-water": ("filled", 1),
    "make-coffee": ("has-coffee", 2),
}
GOAL_OPERATORS: dict[str, str] = {
    "serve-egg": "breakfast-served",
    "serve-peeled": "breakfast-served",
    "serve-toast": "breakfast-served",
    "serve-coffee": "coffee-served",
    "retrieve": "retrieved",
}

_OPERATOR_TEMPLATES: dict[str, str] = {
    "move": """
  (:action move
    :parameters (?from - location ?to - location)
    :precondition (rob-at ?from)
    :effect (and (not (rob-at ?from)) (rob-at ?to)
                 (increase (total-cost) (distance ?from ?to))))""",
    "pick": """
  (:action pick
    :parameters (?obj - item ?loc - location)
    :precondition (and (rob-at ?loc) (obj-at ?obj ?loc) (hand-is-free))
    :effect (and (not (obj-at ?obj ?loc)) (not (hand-is-free)) (holding ?obj)
                 (increase (total-cost) {r_pick})))""",
    "place": """
  (:action place
    :parameters (?obj - item ?loc - location)
    :precondition (and (rob-at ?loc) (holding ?obj))
    :effect (and (obj-at ?obj ?loc) (hand-is-free) (not (holding ?obj))
                 (increase (total-cost) {r_place})))""",
    "find": """
  (:action find
    :parameters (?obj - item ?start - location ?target - location)
    :precondition (and (rob-at ?start) (hand-is-free)
                       (missing ?obj) (find-from ?start) (find-to ?obj ?target))
    :effect (and (not (rob-at ?start)) (rob-at ?target)
                 (not (hand-is-free)) (holding ?obj)
                 (increase (total-cost) (find-cost ?obj ?start ?target))))""",
    "peel": """
  (:action peel
    :parameters (?obj - item ?tool - item ?loc - location)
    :precondition (and (peelable ?obj) (is-knife ?tool) (rob-at ?loc) (hand-is-free)
                       (obj-at ?obj ?loc) (obj-at ?tool ?loc) (not (peeled ?obj)))
    :effect (and (peeled ?obj) (increase (total-cost) {fixed})))""",
    "toast": """
  (:action toast
    :parameters (?obj - item ?tool - item ?loc - location)
    :precondition (and (is-bread ?obj) (is-toaster ?tool) (rob-at ?loc) (hand-is-free)
                       (obj-at ?obj ?loc) (obj-at ?tool ?loc) (not (toasted ?obj)))
    :effect (and (toasted ?obj) (increase (total-cost) {fixed})))""",
    "boil": """
  (:action boil
    :parameters (?obj - item ?vessel - item ?loc - location)
    :precondition (and (is-egg ?obj) (boil-vessel ?vessel) (rob-at ?loc) (hand-is-free)
                       (obj-at ?obj ?loc) (obj-at ?vessel ?loc) (not (boiled ?obj)))
    :effect (and (boiled ?obj) (increase (total-cost) {fixed})))""",
    "pour-water": """
  (:action pour-water
    :parameters (?water - item ?vessel - item ?loc - location)
    :precondition (and (is-water ?water) (coffee-vessel ?vessel) (rob-at ?loc)
                       (holding ?water) (obj-at ?vessel ?loc) (not (filled ?vessel)))
    :effect (and (filled ?vessel) (increase (total-cost) {fixed})))""",
    "make-coffee": """
  (:action make-coffee
    :parameters (?grinds - item ?vessel - item ?mug - item ?loc - location)
    :precondition (and (is-grinds ?grinds) (coffee-vessel ?vessel) (is-mug ?mug)
                       (filled ?vessel) (rob-at ?loc) (hand-is-free)
                       (obj-at ?grinds ?loc) (obj-at ?vessel ?loc) (obj-at ?mug ?loc))
    :effect (and (has-coffee ?mug) (increase (total-cost) {fixed})))""",
    "serve-egg": """
  (:action serve-egg
    :parameters (?obj - item ?dish - item ?loc - location)
    :precondition (and (is-egg ?obj) (boiled ?obj) (is-bowl ?dish) (serving-spot ?loc)
                       (obj-at ?obj ?loc) (obj-at ?dish ?loc))
    :effect (breakfast-served))""",
    "serve-peeled": """
  (:action serve-peeled
    :parameters (?obj - item ?dish - item ?loc - location)
    :precondition (and (peelable ?obj) (peeled ?obj) (is-plate ?dish) (serving-spot ?loc)
                       (obj-at ?obj ?loc) (obj-at ?dish ?loc))
    :effect (breakfast-served))""",
    "serve-toast": """
  (:action serve-toast
    :parameters (?obj - item ?dish - item ?loc - location)
    :precondition (and (is-bread ?obj) (toasted ?obj) (is-plate ?dish) (serving-spot ?loc)
                       (obj-at ?obj ?loc) (obj-at ?dish ?loc))
    :effect (breakfast-served))""",
    "serve-coffee": """
  (:action serve-coffee
    :parameters (?mug - item ?loc - location)
    :precondition (and (is-mug ?mug) (has-coffee ?mug) (serving-spot ?loc) (obj-at ?mug ?loc))
    :effect (coffee-served))""",
    "retrieve": """
  (:action retrieve
    :parameters (?obj - item ?loc - location)
    :precondition (and (retrieval-option ?obj) (start-location ?loc) (obj-at ?obj ?loc))
    :effect (retrieved))""",
}

# Emission order of the operators in the domain text.
_OPERATOR_ORDER = tuple(_OPERATOR_TEMPLATES)

_PREDICATES = """
  (:predicates
    (rob-at ?loc - location)
    (hand-is-free)
    (holding ?obj - item)
    (obj-at ?obj - item ?loc - location)
    (missing ?obj - item)
    (find-from ?loc - location)
    (find-to ?obj - item ?loc - location)
    (serving-spot ?loc - location)
    (start-location ?loc - location)
    (retrieval-option ?obj - item)
{roles}
{states}
    (breakfast-served)
    (coffee-served)
    (retrieved))"""

_FUNCTIONS = """
  (:functions
    (total-cost) - number
    (distance ?from - location ?to - location) - number
    (find-cost ?obj - item ?start - location ?target - location) - number)"""


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------
def _present_types(world: WorldModel) -> set[str]:
    return {o.type_name for o in world.objects}


def _recipe_possible(recipe, present: set[str]) -> bool:
    return all(any(t in present for t in slot) for slot in recipe)


def build_scenario(name: ScenarioName | str, world: WorldModel, seed: int) -> ScenarioSpec:
    """
    Instantiate scenario ``name`` against ``world``.

    Random choices (objects, targets, serving spot) come from a generator
    seeded with ``(seed, scenario index)``, so scenarios sharing a seed stay
    independent of each other and of the world generator.

    Raises:
        ScenarioInfeasibleError: the world lacks the object types the scenario
            needs (or holds fewer than three objects / containers).
    """
    name = ScenarioName(name)
    rng = np.random.default_rng([seed, _SCENARIO_INDEX[name]])
    t_max, r_fail = SCENARIO_LIMITS[name]
    present = _present_types(world)
    containers = sorted(c.id for c in world.containers)

    if name in (ScenarioName.DELIVER3, ScenarioName.ANY_OF_THREE):
        if len(world.objects) < 3:
            raise ScenarioInfeasibleError(f"{name.value} needs at least three objects")
        chosen = tuple(world.objects[int(i)].id for i in rng.choice(len(world.objects), 3, replace=False))
        if name is ScenarioName.DELIVER3:
            if len(containers) < 3:
                raise ScenarioInfeasibleError("Deliver3 needs at least three containers")
            targets = tuple(containers[int(i)] for i in rng.choice(len(containers), 3, replace=False))
            return ScenarioSpec(
                name=name,
                goal=tuple(("obj-at", obj, loc) for obj, loc in zip(chosen, targets)),
                operators=BASE_OPERATORS,
                t_max=t_max,
                r_fail=r_fail,
                relevant_objects=tuple(sorted(chosen)),
                goal_locations=tuple(sorted(set(targets))),
            )
        return ScenarioSpec(
            name=name,
            goal=(("retrieved",),),
            operators=BASE_OPERATORS | {"retrieve"},
            t_max=t_max,
            r_fail=r_fail,
            relevant_objects=tuple(sorted(chosen)),
            goal_locations=(START_LOCATION,),
            options=chosen,
        )

    wants_breakfast = name in (ScenarioName.BREAKFAST, ScenarioName.BREAKFAST_COFFEE)
    wants_coffee = name in (ScenarioName.COFFEE, ScenarioName.BREAKFAST_COFFEE)
    if wants_breakfast and not any(_recipe_possible(r, present) for r in BREAKFAST_RECIPES):
        raise ScenarioInfeasibleError("world lacks the object types for every breakfast recipe")
    if wants_coffee and not _recipe_possible(COFFEE_RECIPE, present):
        raise ScenarioInfeasibleError("world lacks the object types for coffee")

    types: set[str] = set()
    operators = set(BASE_OPERATORS)
    goal: list[tuple[str, ...]] = []
    if wants_breakfast:
        types.update(BREAKFAST_TYPES)
        operators |= BREAKFAST_OPERATORS
        goal.append(("breakfast-served",))
    if wants_coffee:
        types.update(COFFEE_TYPES)
        operators |= COFFEE_OPERATORS
        goal.append(("coffee-served",))
    serving = containers[int(rng.integers(len(containers)))]
    relevant = tuple(sorted(o.id for o in world.objects if o.type_name in types))
    return ScenarioSpec(
        name=name,
        goal=tuple(goal),
        operators=frozenset(operators),
        t_max=t_max,
        r_fail=r_fail,
        relevant_objects=relevant,
        goal_locations=(serving,),
        serving_spot=serving,
    )


# ---------------------------------------------------------------------------
# Belief -> atoms
# ---------------------------------------------------------------------------
def missing_objects(belief: BeliefState, scenario: ScenarioSpec) -> list[str]:
    """Goal-relevant objects the robot has neither seen nor picked."""
    return [o for o in scenario.relevant_objects if not belief.is_located(o)]


def required_find_entries(belief: BeliefState, scenario: ScenarioSpec) -> list[tuple[str, str, str]]:
    """``(object, start, target)`` keys the next emission needs a cost for."""
    return [
        (obj, belief.robot_location, target)
        for obj in missing_objects(belief, scenario)
        for target in scenario.goal_locations
    ]


def belief_atoms(belief: BeliefState, scenario: ScenarioSpec) -> set[tuple[str, ...]]:
    """Fluent atoms that hold in ``belief`` (restricted to relevant objects)."""
    relevant = set(scenario.relevant_objects)
    atoms: set[tuple[str, ...]] = {("rob-at", belief.robot_location)}
    if belief.holding is None:
        atoms.add(("hand-is-free",))
    else:
        atoms.add(("holding", belief.holding))
    for obj, loc in belief.known_objects.items():
        if obj in relevant:
            atoms.add(("obj-at", obj, loc))
    atoms.update(fact for fact in belief.facts if all(arg in relevant for arg in fact[1:]))
    return atoms


def goal_satisfied(belief: BeliefState, scenario: ScenarioSpec) -> bool:
    atoms = belief_atoms(belief, scenario)
    return all(tuple(g) in atoms for g in scenario.goal)


def planning_locations(belief: BeliefState, scenario: ScenarioSpec) -> list[str]:
    """Locations the emitted problem declares."""
    locations = {START_LOCATION, belief.robot_location, *scenario.goal_locations}
    locations.update(loc for obj, loc in belief.known_objects.items() if obj in scenario.relevant_objects)
    return sorted(locations)


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------
def domain_name(scenario: ScenarioSpec) -> str:
    return f"household-{scenario.name.value.lower()}"


def emit_domain(scenario: ScenarioSpec, costs: CostModel, with_find: bool) -> str:
    operators = [
        op for op in _OPERATOR_ORDER if op in scenario.operators and (op != "find" or with_find)
    ]
    roles = "\n".join(f"    ({role} ?obj - item)" for role in ROLE_TYPES)
    states = "\n".join(f"    ({pred} ?obj - item)" for pred in STATE_PREDICATES)
    body = "".join(
        _OPERATOR_TEMPLATES[op].format(
            r_pick=format_number(costs.r_pick),
            r_place=format_number(costs.r_place),
            fixed=format_number(costs.fixed_op_cost),
        )
        for op in operators
    )
    return (
        f"(define (domain {domain_name(scenario)})\n"
        "  (:requirements :strips :typing :negative-preconditions :action-costs)\n"
        "  (:types location item)"
        + _PREDICATES.format(roles=roles, states=states)
        + _FUNCTIONS
        + body
        + ")\n"
    )


def emit_problem(
    world: WorldModel,
    belief: BeliefState,
    scenario: ScenarioSpec,
    find_costs: FindCostTable,
) -> str:
    """
    Problem text encoding ``belief`` for ``scenario``.

    Raises:
        EmissionError: a needed ``find-cost`` entry is absent from ``find_costs``.
    """
    locations = planning_locations(belief, scenario)
    items = list(scenario.relevant_objects)
    missing = missing_objects(belief, scenario)

    init: list[Atom] = [Atom(pred, args) for pred, *args in sorted(belief_atoms(belief, scenario))]
    init.extend(Atom("missing", (obj,)) for obj in missing)
    if missing:
        init.append(Atom("find-from", (belief.robot_location,)))
        init.extend(Atom("find-to", (obj, t)) for obj in missing for t in scenario.goal_locations)
    for role, role_types in ROLE_TYPES.items():
        init.extend(Atom(role, (obj,)) for obj in items if world.object(obj).type_name in role_types)
    if scenario.serving_spot:
        init.append(Atom("serving-spot", (scenario.serving_spot,)))
    if scenario.options:
        init.append(Atom("start-location", (START_LOCATION,)))
        init.extend(Atom("retrieval-option", (obj,)) for obj in scenario.options)

    values = [FunctionAssignment(FunctionTerm("total-cost"), 0.0)]
    for a in locations:
        for b in locations:
            d = path_cost(world.grid, world.location_pose(a), world.location_pose(b))
            values.append(FunctionAssignment(FunctionTerm("distance", (a, b)), d))
    for key in required_find_entries(belief, scenario):
        if key not in find_costs:
            raise EmissionError(f"no find cost for (find-cost {' '.join(key)})")
        values.append(FunctionAssignment(FunctionTerm("find-cost", key), find_costs.get(*key)))

    problem = PddlProblem(
        name=f"{domain_name(scenario)}-{world.seed}",
        domain_name=domain_name(scenario),
        objects=tuple(TypedName(loc, "location") for loc in locations)
        + tuple(TypedName(obj, "item") for obj in items),
        init=tuple(init),
        init_values=tuple(values),
        goal=tuple(Atom(g[0], tuple(g[1:])) for g in scenario.goal),
        metric="minimize total-cost",
    )
    return problem_to_text(problem)


def emit_pddl(
    world: WorldModel,
    belief: BeliefState,
    scenario: ScenarioSpec,
    find_costs: FindCostTable,
    costs: Optional[CostModel] = None,
) -> tuple[str, str]:
    """Domain and problem text for the current belief."""
    costs = costs or CostModel()
    with_find = bool(missing_objects(belief, scenario))
    domain = emit_domain(scenario, costs, with_find)
    problem = emit_problem(world, belief, scenario, find_costs)
    logger.debug(
        f"emitted {scenario.name.value}: {len(planning_locations(belief, scenario))} locations, "
        f"{len(missing_objects(belief, scenario))} missing objects"
    )
    return domain, problem


