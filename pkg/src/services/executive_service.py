"""
executive_service.py - Plan, execute, observe, replan.

One trial is a single-threaded loop:

    1. stop with success if the goal holds in the belief
    2. price every ``find`` grounding the next problem needs (per strategy)
    3. emit PDDL, parse, ground, plan within the scenario's ``t_max``
    4. execute the plan against ground truth until a ``find`` completes or a
       precondition fails, then go back to 1

A planner timeout or an unsolvable task ends the trial as a failure whose
cost is the scenario's ``r_fail`` (replacing whatever was spent so far).

``execute_find`` runs one search policy closed-loop: move, search, and
either pick the object and carry it to the target or continue with the next
container, recomputing the policy over the remaining containers if its
candidate subset runs dry.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

from loguru import logger

from src.exceptions import InternalError, LiosError, PlanTimeoutError, PreconditionError, UnsolvableError
from src.models import START_LOCATION, BeliefState, Cell, WorldModel
from src.pddl import DEFAULT_WEIGHT, GroundTask, ground, parse_domain, parse_problem, plan
from src.schemas import (
    FindCostMode,
    FindCostTable,
    FindOutcome,
    FindPolicy,
    ScenarioName,
    ScenarioSpec,
    SearchPolicy,
    Strategy,
    TraceStep,
    TrialRecord,
)
from src.services.estimator_service import Estimator
from src.services.lios_service import (
    DEFAULT_MAX_CANDIDATES,
    CostModel,
    greedy_find_policy,
    optimal_find_policy,
    optimistic_cost,
    pessimistic_cost,
)
from src.services.task_service import (
    FACT_OPERATORS,
    GOAL_OPERATORS,
    belief_atoms,
    build_scenario,
    emit_pddl,
    goal_satisfied,
    required_find_entries,
)
from src.services.world_service import path_cost, search_container

DEFAULT_MAX_REPLANS = 200
COST_TOLERANCE = 1e-6

PolicyKey = tuple[SearchPolicy, str, Cell, Cell, frozenset]


def location_at(world: WorldModel, cell: Cell) -> str:
    """Location token whose pose is ``cell`` (``start`` wins ties)."""
    if tuple(cell) == tuple(world.robot_start):
        return START_LOCATION
    for container in world.containers:
        if container.pose == tuple(cell):
            return container.id
    raise PreconditionError(f"no location at cell {cell}")


# ---------------------------------------------------------------------------
# Search execution
# ---------------------------------------------------------------------------
def execute_find(
    world: WorldModel,
    belief: BeliefState,
    policy: FindPolicy,
    costs: CostModel,
    est: Optional[Estimator] = None,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> FindOutcome:
    """
    Run ``policy`` until ``policy.object_id`` is found, picked, and carried
    to ``policy.q_to``.

    The input belief is not modified; the outcome carries an updated copy in
    which the robot holds the object at the target location.

    Raises:
        PreconditionError: the object is already located or held.
        InternalError: every container searched without finding the object,
            which the world's partition invariant rules out.
    """
    target = policy.object_id
    if belief.is_located(target):
        raise PreconditionError(f"{target} is already located; nothing to find")
    if belief.holding is not None:
        raise PreconditionError(f"cannot find {target} while holding {belief.holding}")
    belief = belief.copy()
    to_location = policy.to_location or location_at(world, policy.q_to)
    steps: list[TraceStep] = []
    total = 0.0
    recomputations = 0
    sequence = list(policy.sequence)

    while True:
        for container_id in sequence:
            if container_id in belief.searched:
                continue
            container = world.container(container_id)
            d = path_cost(world.grid, belief.robot_pose, container.pose)
            steps.append(TraceStep("move", (belief.robot_location, container_id), d))
            belief.move_to(container_id, container.pose)
            observation = search_container(world, belief, container_id)
            steps.append(TraceStep("search", (container_id,), costs.r_search))
            belief.record_observation(observation)
            total += d + costs.r_search
            if target not in observation.revealed_objects:
                continue

            belief.pick(target)
            steps.append(TraceStep("pick", (target, container_id), costs.r_pick))
            d = path_cost(world.grid, container.pose, policy.q_to)
            steps.append(TraceStep("move", (container_id, to_location), d))
            belief.move_to(to_location, policy.q_to)
            total += costs.r_pick + d
            logger.info(
                f"found {target} in {container_id} after {sum(s.action == 'search' for s in steps)} "
                f"search(es), cost {total:g}"
            )
            return FindOutcome(
                object_id=target,
                container_id=container_id,
                cost=total,
                belief=belief,
                steps=steps,
                recomputations=recomputations,
            )

        if not belief.unsearched(world.containers):
            raise InternalError(f"searched every container without finding {target}")
        recomputations += 1
        logger.debug(f"candidate subset for {target} exhausted, recomputing policy")
        if policy.search_policy is SearchPolicy.LIOS and est is not None:
            policy = optimal_find_policy(
                world, belief, policy.object_type, belief.robot_pose, policy.q_to, est, costs,
                max_candidates, object_id=target, to_location=to_location,
            )
        else:
            policy = greedy_find_policy(
                world, belief, policy.object_type, belief.robot_pose, policy.q_to, costs,
                object_id=target, to_location=to_location,
            )
        sequence = list(policy.sequence)


# ---------------------------------------------------------------------------
# Trial loop
# ---------------------------------------------------------------------------
@dataclass
class _Trial:
    """Mutable per-trial state; never shared between trials."""

    world: WorldModel
    seed: int
    scenario: ScenarioSpec
    strategy: Strategy
    est: Estimator
    costs: CostModel
    max_candidates: int
    belief: BeliefState
    cost: float = 0.0
    trace: list[TraceStep] = field(default_factory=list)
    replans: int = 0
    planner_time: float = 0.0
    policies: dict[PolicyKey, FindPolicy] = field(default_factory=dict)

    def policy(self, kind: SearchPolicy, object_id: str, start: str, target: str) -> FindPolicy:
        """Search policy for ``object_id`` from ``start`` to ``target``, cached per belief."""
        obj = self.world.object(object_id)
        q_from = self.world.location_pose(start)
        q_to = self.world.location_pose(target)
        key = (kind, obj.type_name, q_from, q_to, frozenset(self.belief.searched))
        cached = self.policies.get(key)
        if cached is None:
            if kind is SearchPolicy.LIOS:
                cached = optimal_find_policy(
                    self.world, self.belief, obj.type_name, q_from, q_to, self.est, self.costs,
                    self.max_candidates,
                )
            else:
                cached = greedy_find_policy(self.world, self.belief, obj.type_name, q_from, q_to, self.costs)
            self.policies[key] = cached
        return replace(cached, object_id=object_id, to_location=target)

    def find_costs(self) -> FindCostTable:
        table = FindCostTable()
        mode = self.strategy.find_cost
        for obj, start, target in required_find_entries(self.belief, self.scenario):
            if mode is FindCostMode.MODEL:
                value = self.policy(SearchPolicy.LIOS, obj, start, target).expected_cost
            else:
                bound = optimistic_cost if mode is FindCostMode.OPTIMISTIC else pessimistic_cost
                value = bound(
                    self.world, self.belief, self.world.object(obj).type_name,
                    self.world.location_pose(start), self.world.location_pose(target), self.costs,
                )
            table.set(obj, start, target, value)
        return table

    def record(self, success: bool, reason: str = "") -> TrialRecord:
        return TrialRecord(
            scenario=self.scenario.name,
            strategy=self.strategy,
            seed=self.seed,
            cost=self.cost if success else self.scenario.r_fail,
            success=success,
            containers_searched=sum(1 for s in self.trace if s.action == "search"),
            trace=tuple(self.trace),
            replans=self.replans,
            failure_reason=reason,
            planner_wall_time=self.planner_time,
        )


def run_trial(
    world: WorldModel,
    scenario: ScenarioSpec | ScenarioName | str,
    strategy: Strategy | str,
    est: Estimator,
    costs: Optional[CostModel] = None,
    seed: Optional[int] = None,
    weight: float = DEFAULT_WEIGHT,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    max_replans: int = DEFAULT_MAX_REPLANS,
    t_max: Optional[float] = None,
    belief: Optional[BeliefState] = None,
) -> TrialRecord:
    """
    Complete one scenario in ``world`` with ``strategy``.

    Args:
        world:          Ground truth.
        scenario:       A built ``ScenarioSpec`` or a scenario name, built
                        with ``seed`` (default: the world seed).
        strategy:       One of the five strategies.
        est:            P_found estimator (used by the LIOS policies).
        costs:          Action costs.
        weight:         Planner weight.
        max_candidates: LIOS subset size.
        max_replans:    Guard on plan/execute rounds.
        t_max:          Per-call planner budget; defaults to the scenario's.
        belief:         Starting belief; defaults to nothing known at start.

    Returns:
        A ``TrialRecord``; failures are folded into it, never raised.
    """
    costs = costs or CostModel()
    strategy = Strategy(strategy)
    seed = world.seed if seed is None else seed
    if not isinstance(scenario, ScenarioSpec):
        scenario = build_scenario(ScenarioName(scenario), world, seed)
    budget = scenario.t_max if t_max is None else t_max
    trial = _Trial(
        world=world,
        seed=seed,
        scenario=scenario,
        strategy=strategy,
        est=est,
        costs=costs,
        max_candidates=max_candidates,
        belief=belief.copy() if belief is not None else BeliefState.initial(world),
    )
    logger.info(f"trial {scenario.name.value}/{strategy.value} on world {world.seed}")

    try:
        while trial.replans < max_replans:
            if goal_satisfied(trial.belief, scenario):
                logger.info(f"goal reached, cost {trial.cost:g}, {trial.replans} plan(s)")
                return trial.record(success=True)

            domain_text, problem_text = emit_pddl(world, trial.belief, scenario, trial.find_costs(), costs)
            domain = parse_domain(domain_text)
            task = ground(domain, parse_problem(problem_text, domain))
            trial.replans += 1
            started = time.perf_counter()
            try:
                result = plan(task, weight=weight, timeout=budget)
            finally:
                trial.planner_time += time.perf_counter() - started
            if not result.actions:
                raise InternalError("planner returned an empty plan for an unsatisfied goal")
            _execute_plan(trial, task, result.actions)
    except PlanTimeoutError as exc:
        logger.warning(f"planner timeout: {exc}")
        return trial.record(success=False, reason="timeout")
    except UnsolvableError as exc:
        logger.warning(f"unsolvable: {exc}")
        return trial.record(success=False, reason="unsolvable")
    except LiosError as exc:
        logger.error(f"trial failed: {exc}")
        return trial.record(success=False, reason=f"error: {exc}")

    return trial.record(success=False, reason="replan limit")


def _execute_plan(trial: _Trial, task: GroundTask, actions: tuple[str, ...]) -> None:
    """Execute until a ``find`` completes, a precondition fails, or the plan ends."""
    for name in actions:
        action = task.action(name)
        state = task.encode(belief_atoms(trial.belief, trial.scenario))
        if action is None or not action.applicable(state):
            logger.warning(f"precondition of ({name}) no longer holds; replanning")
            return
        op, *args = name.split()
        try:
            if op == "find":
                _execute_find_action(trial, *args)
                return
            _execute_known_operator(trial, op, args)
        except PreconditionError as exc:
            logger.warning(f"({name}) failed against ground truth: {exc}; replanning")
            return


def _execute_find_action(trial: _Trial, object_id: str, start: str, target: str) -> None:
    policy = trial.policy(trial.strategy.search_policy, object_id, start, target)
    outcome = execute_find(
        trial.world, trial.belief, policy, trial.costs, trial.est, trial.max_candidates
    )
    trial.belief = outcome.belief
    trial.cost += outcome.cost
    trial.trace.extend(outcome.steps)


def _true_location(world: WorldModel, belief: BeliefState, object_id: str) -> str:
    return belief.placed_overrides.get(object_id, world.object(object_id).true_container)


def _execute_known_operator(trial: _Trial, op: str, args: list[str]) -> None:
    world, belief, costs = trial.world, trial.belief, trial.costs
    if op == "move":
        source, dest = args
        pose = world.location_pose(dest)
        cost = path_cost(world.grid, belief.robot_pose, pose)
        belief.move_to(dest, pose)
    elif op == "pick":
        obj, loc = args
        if _true_location(world, belief, obj) != loc:
            belief.known_objects.pop(obj, None)
            raise PreconditionError(f"{obj} is not at {loc}")
        belief.pick(obj)
        cost = costs.r_pick
    elif op == "place":
        obj, loc = args
        belief.place(obj, loc)
        cost = costs.r_place
    elif op in FACT_OPERATORS:
        predicate, index = FACT_OPERATORS[op]
        belief.facts.add((predicate, args[index]))
        cost = costs.fixed_op_cost
    elif op in GOAL_OPERATORS:
        belief.facts.add((GOAL_OPERATORS[op],))
        cost = 0.0
    else:
        raise InternalError(f"no executor for operator {op}")
    trial.trace.append(TraceStep(op, tuple(args), cost))
    trial.cost += cost


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------
def replay_trace(world: WorldModel, trace: tuple[TraceStep, ...] | list[TraceStep], costs: Optional[CostModel] = None) -> float:
    """
    Re-execute a primitive trace against ground truth and return its cost.

    Checks that the robot stands where each step needs it, that picked
    objects really are where they are picked from, that tool operators have
    their objects at hand, and that every recorded step cost matches.

    Raises:
        PreconditionError: the first step that does not replay.
    """
    costs = costs or CostModel()
    location = START_LOCATION
    pose = world.robot_start
    holding: Optional[str] = None
    positions = {o.id: o.true_container for o in world.objects}
    total = 0.0

    for i, step in enumerate(trace):
        args = step.args
        if step.action == "move":
            source, dest = args
            if source != location:
                raise PreconditionError(f"step {i}: move from {source} but robot is at {location}")
            dest_pose = world.location_pose(dest)
            expected = path_cost(world.grid, pose, dest_pose)
            location, pose = dest, dest_pose
        elif step.action == "search":
            (container_id,) = args
            if location != container_id:
                raise PreconditionError(f"step {i}: search {container_id} from {location}")
            expected = costs.r_search
        elif step.action == "pick":
            obj, loc = args
            if loc != location or positions.get(obj) != loc or holding is not None:
                raise PreconditionError(f"step {i}: cannot pick {obj} at {loc}")
            holding = obj
            positions[obj] = ""
            expected = costs.r_pick
        elif step.action == "place":
            obj, loc = args
            if holding != obj or loc != location:
                raise PreconditionError(f"step {i}: cannot place {obj} at {loc}")
            holding = None
            positions[obj] = loc
            expected = costs.r_place
        elif step.action in FACT_OPERATORS or step.action in GOAL_OPERATORS:
            *objects, loc = args
            if loc != location and step.action in FACT_OPERATORS:
                raise PreconditionError(f"step {i}: {step.action} at {loc} but robot is at {location}")
            for obj in objects:
                if positions.get(obj) != loc and holding != obj:
                    raise PreconditionError(f"step {i}: {obj} is not at {loc}")
            expected = costs.fixed_op_cost if step.action in FACT_OPERATORS else 0.0
        else:
            raise PreconditionError(f"step {i}: unknown action {step.action}")
        if abs(expected - step.cost) > COST_TOLERANCE:
            raise PreconditionError(f"step {i}: recorded cost {step.cost} but replay gives {expected}")
        total += expected
    return total
