"""
schemas.py - Data Transfer Objects (DTOs) using Python dataclasses.

DTOs carry results between layers: search policies from the LIOS service to
the executive, trial records from the executive to the bench and the
repositories, scenario specs from the task service to everybody.  They are
plain data with JSON helpers; the rules that produce them live in
``src/services``.

Enums:
    Strategy         the five planning strategies (find cost x search policy)
    FindCostMode     how a ``find`` action is priced for the planner
    SearchPolicy     how a ``find`` action is executed
    ScenarioName     the five benchmark scenarios
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

Cell = tuple[int, int]


# ---------------------------------------------------------------------------
# Strategy matrix
# ---------------------------------------------------------------------------
class FindCostMode(Enum):
    """Cost the planner assigns to ``find``.

    Values:
        OPTIMISTIC:   nearest unsearched container is assumed to hold the object
        PESSIMISTIC:  optimistic cost plus a large penalty
        MODEL:        expected cost of the optimized LIOS policy
    """

    OPTIMISTIC = "Optimistic"
    PESSIMISTIC = "Pessimistic"
    MODEL = "Model"


class SearchPolicy(Enum):
    """How a ``find`` action is carried out once selected."""

    GREEDY = "Greedy"
    LIOS = "LIOS"


class Strategy(Enum):
    """One row of the strategy table."""

    OPT_GREEDY = "OptGreedy"
    PES_GREEDY = "PesGreedy"
    OPT_LIOS = "OptLIOS"
    PES_LIOS = "PesLIOS"
    MODEL_LIOS = "ModelLIOS"

    @property
    def find_cost(self) -> FindCostMode:
        return _STRATEGY_MATRIX[self][0]

    @property
    def search_policy(self) -> SearchPolicy:
        return _STRATEGY_MATRIX[self][1]


_STRATEGY_MATRIX = {
    Strategy.OPT_GREEDY: (FindCostMode.OPTIMISTIC, SearchPolicy.GREEDY),
    Strategy.PES_GREEDY: (FindCostMode.PESSIMISTIC, SearchPolicy.GREEDY),
    Strategy.OPT_LIOS: (FindCostMode.OPTIMISTIC, SearchPolicy.LIOS),
    Strategy.PES_LIOS: (FindCostMode.PESSIMISTIC, SearchPolicy.LIOS),
    Strategy.MODEL_LIOS: (FindCostMode.MODEL, SearchPolicy.LIOS),
}


class ScenarioName(Enum):
    """Benchmark task scenarios."""

    DELIVER3 = "Deliver3"
    BREAKFAST = "Breakfast"
    COFFEE = "Coffee"
    BREAKFAST_COFFEE = "BreakfastCoffee"
    ANY_OF_THREE = "AnyOfThree"


# ---------------------------------------------------------------------------
# Search policies
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FindPolicy:
    """
    An ordered container sequence for finding one object.

    Attributes:
        object_id:      The object being sought (e.g. 'mug_3').
        object_type:    Its type, the key the estimator is queried with.
        sequence:       Container ids in visiting order.
        step_probs:     Probability of success at each step given that all
                        earlier steps failed; the last entry is 1.
        q_from, q_to:   Start cell and the cell the object is carried to.
        expected_cost:  Probability-weighted cost of the sequence.
        search_policy:  Greedy or LIOS; decides how the policy is recomputed
                        when its sequence is exhausted.
        to_location:    Location token of ``q_to`` when it is known.
    """

    object_id: str
    object_type: str
    sequence: tuple[str, ...]
    step_probs: tuple[float, ...]
    q_from: Cell
    q_to: Cell
    expected_cost: float
    search_policy: SearchPolicy
    to_location: Optional[str] = None


@dataclass(frozen=True)
class TraceStep:
    """One primitive action the robot executed, with the cost it incurred.

    ``action`` is one of move, search, pick, place or a known-space operator
    name; ``args`` are location / object tokens.
    """

    action: str
    args: tuple[str, ...]
    cost: float

    def to_json(self) -> dict[str, Any]:
        return {"action": self.action, "args": list(self.args), "cost": self.cost}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "TraceStep":
        return cls(action=data["action"], args=tuple(data["args"]), cost=float(data["cost"]))


@dataclass
class FindOutcome:
    """What executing one ``find`` produced.

    Attributes:
        object_id:      The object now held.
        container_id:   Where it was found.
        cost:           Accrued move + search + pick + move cost.
        belief:         Updated copy of the belief (the input is untouched).
        steps:          Primitive trace of the search.
        recomputations: How many times the policy had to be rebuilt because
                        its candidate subset was exhausted.
    """

    object_id: str
    container_id: str
    cost: float
    belief: Any
    steps: list[TraceStep] = field(default_factory=list)
    recomputations: int = 0


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ScenarioSpec:
    """
    A task instance built against one world.

    Attributes:
        name:              Scenario identifier.
        goal:              Positive goal atoms, e.g. ``("obj-at", "mug_3", "bed_1")``.
        operators:         Operator schemas the emitted domain contains.
        t_max:             Planner time budget per call, seconds.
        r_fail:            Cost charged for a failed trial.
        relevant_objects:  Objects the plan may need (goal-relevant objects).
        goal_locations:    Locations ``find`` may deliver to.
        options:           Any-of-Three candidates (empty otherwise).
        serving_spot:      Where breakfast / coffee is served, if anywhere.
    """

    name: ScenarioName
    goal: tuple[tuple[str, ...], ...]
    operators: frozenset[str]
    t_max: float
    r_fail: float
    relevant_objects: tuple[str, ...]
    goal_locations: tuple[str, ...]
    options: tuple[str, ...] = ()
    serving_spot: Optional[str] = None


@dataclass
class FindCostTable:
    """Planner-facing costs of every emitted ``find`` grounding.

    Keys are ``(object_id, start_location, target_location)``.
    """

    entries: dict[tuple[str, str, str], float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: tuple[str, str, str]) -> bool:
        return key in self.entries

    def set(self, object_id: str, start: str, target: str, cost: float) -> None:
        self.entries[(object_id, start, target)] = float(cost)

    def get(self, object_id: str, start: str, target: str) -> float:
        return self.entries[(object_id, start, target)]


# ---------------------------------------------------------------------------
# Trial results
# ---------------------------------------------------------------------------
@dataclass
class TrialRecord:
    """
    Outcome of one (scenario, strategy, seed) trial.

    Attributes:
        scenario, strategy, seed:  Trial key.
        cost:                 Accrued cost on success, ``r_fail`` on failure.
        success:              Whether the goal was reached.
        containers_searched:  Number of search actions executed.
        trace:                Primitive actions executed, in order.
        replans:              Number of planner invocations.
        failure_reason:       Empty on success.
        planner_wall_time:    Seconds spent in the planner; not part of
                              equality so records compare equal across runs.
    """

    scenario: ScenarioName
    strategy: Strategy
    seed: int
    cost: float
    success: bool
    containers_searched: int
    trace: tuple[TraceStep, ...] = ()
    replans: int = 0
    failure_reason: str = ""
    planner_wall_time: float = field(default=0.0, compare=False)

    def to_json(self, with_timing: bool = False) -> dict[str, Any]:
        data: dict[str, Any] = {
            "scenario": self.scenario.value,
            "strategy": self.strategy.value,
            "seed": self.seed,
            "cost": self.cost,
            "success": self.success,
            "containers_searched": self.containers_searched,
            "replans": self.replans,
            "failure_reason": self.failure_reason,
            "trace": [step.to_json() for step in self.trace],
        }
        if with_timing:
            data["planner_wall_time"] = self.planner_wall_time
        return data

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "TrialRecord":
        return cls(
            scenario=ScenarioName(data["scenario"]),
            strategy=Strategy(data["strategy"]),
            seed=int(data["seed"]),
            cost=float(data["cost"]),
            success=bool(data["success"]),
            containers_searched=int(data["containers_searched"]),
            trace=tuple(TraceStep.from_json(s) for s in data.get("trace", [])),
            replans=int(data.get("replans", 0)),
            failure_reason=data.get("failure_reason", ""),
            planner_wall_time=float(data.get("planner_wall_time", 0.0)),
        )


@dataclass(frozen=True)
class SearchTrialResult:
    """One object-search-only trial: Greedy and LIOS cost on the same world."""

    trial: int
    seed: int
    target_object: str
    target_type: str
    greedy_cost: float
    lios_cost: float
