"""
Forward state-space planner over a ``GroundTask``.

Search:
    Weighted A* with ``f = g + weight * h``.  Open-list entries are ordered by
    ``(f, h, action name, insertion counter)``, so equal-``f`` nodes closer to
    the goal come first and remaining ties break by the name of the action
    that generated the node.  Identical inputs always yield the identical plan.

Heuristic:
    FF-style relaxed plan.  Cheapest additive supporters are computed with a
    generalized Dijkstra over the delete relaxation (h_add), then a relaxed
    plan is extracted backwards from the goal; its summed action cost is the
    estimate.  Inadmissible, which is why plans are only bounded, not optimal.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from loguru import logger

from src.exceptions import ConfigurationError, PlanTimeoutError, PlanValidationError, UnsolvableError
from src.pddl.grounding import GroundTask

DEFAULT_WEIGHT = 2.0
TIMEOUT_CHECK_INTERVAL = 256


@dataclass(frozen=True)
class Plan:
    """Ordered ground action names and their summed cost."""

    actions: tuple[str, ...]
    cost: float
    expansions: int = 0

    def __len__(self) -> int:
        return len(self.actions)

    def to_text(self) -> str:
        lines = [f"({name})" for name in self.actions]
        lines.append(f"; cost = {self.cost:g}")
        return "\n".join(lines) + "\n"


class RelaxedPlanHeuristic:
    """Relaxed-plan cost with per-task precomputed action/atom indexes."""

    def __init__(self, task: GroundTask):
        self.task = task
        n_atoms = len(task.atoms)
        self.pre = [_bits(a.pre_pos) for a in task.actions]
        self.add = [_bits(a.add) for a in task.actions]
        self.cost = [a.cost for a in task.actions]
        self.consumers: list[list[int]] = [[] for _ in range(n_atoms)]
        for i, pre in enumerate(self.pre):
            for atom in pre:
                self.consumers[atom].append(i)
        self.goal = _bits(task.goal_pos)
        self._cache: dict[int, float] = {}

    def __call__(self, state: int) -> float:
        cached = self._cache.get(state)
        if cached is None:
            cached = self._compute(state)
            self._cache[state] = cached
        return cached

    def _compute(self, state: int) -> float:
        goal_open = [g for g in self.goal if not state >> g & 1]
        if not goal_open:
            return 0.0
        inf = math.inf
        atom_cost = [inf] * len(self.task.atoms)
        supporter: list[int] = [-1] * len(self.task.atoms)
        waiting = [len(p) for p in self.pre]
        action_cost = [0.0] * len(self.pre)
        heap: list[tuple[float, int]] = []
        for atom in _bits(state):
            atom_cost[atom] = 0.0
            heap.append((0.0, atom))

        def fire(i: int) -> None:
            c = action_cost[i] + self.cost[i]
            for atom in self.add[i]:
                if c < atom_cost[atom]:
                    atom_cost[atom] = c
                    supporter[atom] = i
                    heapq.heappush(heap, (c, atom))

        for i, pre in enumerate(self.pre):
            if not pre:
                fire(i)
        heapq.heapify(heap)

        remaining = len(goal_open)
        done = [False] * len(self.task.atoms)
        goal_set = set(goal_open)
        while heap and remaining:
            c, atom = heapq.heappop(heap)
            if done[atom] or c > atom_cost[atom]:
                continue
            done[atom] = True
            if atom in goal_set:
                remaining -= 1
            for i in self.consumers[atom]:
                waiting[i] -= 1
                action_cost[i] += c
                if waiting[i] == 0:
                    fire(i)
        if remaining:
            return inf

        # Extract the relaxed plan backwards from the open goals.
        chosen: set[int] = set()
        stack = list(goal_open)
        seen: set[int] = set()
        while stack:
            atom = stack.pop()
            if atom in seen or state >> atom & 1:
                continue
            seen.add(atom)
            i = supporter[atom]
            if i not in chosen:
                chosen.add(i)
                stack.extend(self.pre[i])
        return sum(self.cost[i] for i in chosen)


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def plan(task: GroundTask, weight: float = DEFAULT_WEIGHT, timeout: Optional[float] = None) -> Plan:
    """
    Weighted A* from ``task.init`` to the goal.

    Args:
        task:    Grounded task.
        weight:  ``w >= 1`` in ``f = g + w * h``.
        timeout: Wall-clock budget in seconds, None for unlimited.

    Returns:
        A ``Plan`` whose execution from the initial state reaches the goal.

    Raises:
        UnsolvableError:  the reachable state space holds no goal state.
        PlanTimeoutError: the budget ran out first.
        ConfigurationError: ``weight < 1``.
    """
    if weight < 1.0:
        raise ConfigurationError(f"weight must be >= 1, got {weight}")
    started = time.perf_counter()
    if task.is_goal(task.init):
        return Plan(actions=(), cost=0.0)

    h = RelaxedPlanHeuristic(task)
    h0 = h(task.init)
    if math.isinf(h0):
        raise UnsolvableError("goal is unreachable even in the delete relaxation")

    counter = 0
    open_list: list[tuple[float, float, str, int, int]] = [(weight * h0, h0, "", counter, task.init)]
    best_g = {task.init: 0.0}
    parent: dict[int, tuple[int, str, float]] = {}
    expansions = 0

    while open_list:
        f, h_value, _, _, state = heapq.heappop(open_list)
        g = best_g[state]
        if f > g + weight * h_value + 1e-9:
            continue  # stale entry
        if task.is_goal(state):
            actions = _trace_back(parent, state)
            logger.debug(f"plan found: {len(actions)} steps, cost {g:g}, {expansions} expansions")
            return Plan(actions=tuple(actions), cost=g, expansions=expansions)

        expansions += 1
        if timeout is not None and expansions % TIMEOUT_CHECK_INTERVAL == 0:
            if time.perf_counter() - started > timeout:
                raise PlanTimeoutError(f"no plan within {timeout:g} s ({expansions} expansions)")

        for action, succ in task.successors(state):
            new_g = g + action.cost
            if new_g < best_g.get(succ, math.inf) - 1e-12:
                h_succ = h(succ)
                if math.isinf(h_succ):
                    continue
                best_g[succ] = new_g
                parent[succ] = (state, action.name, action.cost)
                counter += 1
                heapq.heappush(open_list, (new_g + weight * h_succ, h_succ, action.name, counter, succ))

    raise UnsolvableError(f"search space exhausted after {expansions} expansions")


def _trace_back(parent: dict[int, tuple[int, str, float]], state: int) -> list[str]:
    actions = []
    while state in parent:
        state, name, _ = parent[state]
        actions.append(name)
    actions.reverse()
    return actions


def validate(plan_actions: Sequence[str] | Plan, task: GroundTask) -> float:
    """
    Execute a plan from ``task.init`` and return its accumulated cost.

    Raises:
        PlanValidationError: unknown action, a violated precondition (``step``
            is the 0-based index of the offending action), or a final state
            that misses the goal (``step`` is the plan length).
    """
    names = plan_actions.actions if isinstance(plan_actions, Plan) else tuple(plan_actions)
    state = task.init
    total = 0.0
    for step, name in enumerate(names):
        action = task.action(name)
        if action is None:
            raise PlanValidationError(f"step {step}: unknown action ({name})", step)
        if not action.applicable(state):
            missing = task.mask_atoms(action.pre_pos & ~state)
            violated = task.mask_atoms(action.pre_neg & state)
            detail = missing[0] if missing else ("not", *violated[0])
            raise PlanValidationError(
                f"step {step}: ({name}) precondition ({' '.join(detail)}) does not hold", step
            )
        state = action.apply(state)
        total += action.cost
    if not task.is_goal(state):
        raise PlanValidationError("plan does not reach the goal", len(names))
    return total
