"""
lios_service.py - Expected cost of search sequences and search-policy selection.

A search policy for one object starts at ``q_from``, visits containers in a
fixed order until the object turns up, picks it, and carries it to ``q_to``.
Its expected cost satisfies the recursion

    Q(q_t, [a, rest]) = R_move(q_t, q(a)) + R_search
                        + P(a) * (R_pick + R_move(q(a), q_to))
                        + (1 - P(a)) * Q(q(a), rest)

where ``P(a)`` is the probability of success at ``a`` given that every
earlier container came up empty.  The last step always has ``P = 1``, which
is what lets the planner treat ``find`` as deterministic.

Policies provided:
    optimal_find_policy   exact subset DP over the K most likely containers
    greedy_find_policy    nearest-neighbour chain, probabilities ignored

and the planner-facing bounds ``optimistic_cost`` / ``pessimistic_cost``.

All functions are pure; distances come from ``world_service.path_cost``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from src.exceptions import ConfigurationError, PolicyError, SearchExhaustedError
from src.models import BeliefState, Cell, Container, GridMap, WorldModel
from src.schemas import FindPolicy, SearchPolicy
from src.services.estimator_service import Estimator
from src.services.world_service import path_cost

DistanceFn = Callable[[Cell, Cell], float]

DEFAULT_MAX_CANDIDATES = 8
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CostModel:
    """
    Action costs shared by the planner and the search policies.

    Attributes:
        r_search (float): Cost of one search action (0 in simulation)
        r_pick (float): Cost of picking the found object
        r_place (float): Cost of placing an object
        fixed_op_cost (float): Cost of every other known-space operator
        pessimistic_penalty (float): Added to the optimistic find cost by the
            pessimistic strategies

    Moving costs ``path_cost`` between the two cells.
    """

    r_search: float = 0.0
    r_pick: float = 5.0
    r_place: float = 5.0
    fixed_op_cost: float = 5.0
    pessimistic_penalty: float = 100.0

    def __post_init__(self) -> None:
        for name in ("r_search", "r_pick", "r_place", "fixed_op_cost", "pessimistic_penalty"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")


def grid_distance(grid: GridMap) -> DistanceFn:
    """``R_move`` on ``grid``."""
    return partial(path_cost, grid)


# ---------------------------------------------------------------------------
# Expected cost
# ---------------------------------------------------------------------------
def evaluate_policy(
    poses: Sequence[Cell],
    step_probs: Sequence[float],
    q_from: Cell,
    q_to: Cell,
    costs: CostModel,
    distance: DistanceFn,
) -> float:
    """
    Expected cost of visiting ``poses`` in order.

    Args:
        poses:      Container cells in visiting order.
        step_probs: Conditional success probability per step; the last is 1.
        q_from:     Where the search starts.
        q_to:       Where the found object is carried.
        costs:      Action costs.
        distance:   ``R_move`` between two cells (see ``grid_distance``).

    Raises:
        PolicyError: empty sequence, length mismatch, or probabilities outside
            (0, 1] / a final probability other than 1.

    Time Complexity: O(n) distance lookups.
    """
    _check_step_probs(poses, step_probs)
    tail = 0.0
    for k in range(len(poses) - 1, -1, -1):
        prev = q_from if k == 0 else poses[k - 1]
        p = float(step_probs[k])
        found = costs.r_pick + distance(poses[k], q_to)
        tail = distance(prev, poses[k]) + costs.r_search + p * found + (1.0 - p) * tail
    return tail


def _check_step_probs(poses: Sequence[Cell], step_probs: Sequence[float]) -> None:
    if len(poses) == 0:
        raise PolicyError("a search sequence needs at least one container")
    if len(poses) != len(step_probs):
        raise PolicyError(f"{len(poses)} containers but {len(step_probs)} step probabilities")
    if any(not 0.0 < p <= 1.0 + TIE_TOLERANCE for p in step_probs):
        raise PolicyError("step probabilities must lie in (0, 1]")
    if abs(step_probs[-1] - 1.0) > TIE_TOLERANCE:
        raise PolicyError("the final step probability must be 1")


def conditional_step_probs(marginals: Sequence[float]) -> list[float]:
    """
    Turn per-container marginals into conditional per-step probabilities.

    The marginals are normalized over the sequence (the object is assumed to
    be somewhere in it), then step ``k`` succeeds with
    ``m_k / (1 - sum(m_j for j < k))``.  The final step is exactly 1.

    >>> conditional_step_probs([0.6, 0.3, 0.1])
    [0.6, 0.75, 1.0]

    Raises:
        PolicyError: empty input, a negative marginal, or all zeros.
    """
    m = np.asarray(marginals, dtype=float)
    if m.size == 0:
        raise PolicyError("no marginals to normalize")
    if (m < 0).any():
        raise PolicyError("marginals must be non-negative")
    total = m.sum()
    if total <= 0.0:
        raise PolicyError("cannot normalize all-zero marginals")
    m = m / total
    probs = []
    remaining = 1.0
    for k, mk in enumerate(m):
        if k == len(m) - 1 or remaining <= TIE_TOLERANCE:
            probs.append(1.0)
        else:
            probs.append(min(1.0, float(mk / remaining)))
        remaining -= mk
    return [round(p, 15) for p in probs]


def rollout_cost(
    poses: Sequence[Cell],
    found_index: int,
    q_from: Cell,
    q_to: Cell,
    costs: CostModel,
    distance: DistanceFn,
) -> float:
    """Realized cost when the object turns out to be at ``poses[found_index]``."""
    cost = 0.0
    prev = q_from
    for pose in poses[: found_index + 1]:
        cost += distance(prev, pose) + costs.r_search
        prev = pose
    return cost + costs.r_pick + distance(prev, q_to)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------
def _unsearched(world: WorldModel, belief: BeliefState) -> list[Container]:
    candidates = belief.unsearched(world.containers)
    if not candidates:
        raise SearchExhaustedError("every container has already been searched")
    return candidates


def candidate_subset(
    world: WorldModel,
    belief: BeliefState,
    object_type: str,
    est: Estimator,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> tuple[list[Container], np.ndarray]:
    """
    The ``max_candidates`` unsearched containers most likely to hold the object.

    Returns the subset ordered by container id together with the
    subset-normalized marginals in the same order.
    """
    unsearched = _unsearched(world, belief)
    scored = sorted(
        ((est.p_found(object_type, c.type_name, c.room_type), c) for c in unsearched),
        key=lambda pc: (-pc[0], pc[1].id),
    )[: max(1, max_candidates)]
    scored.sort(key=lambda pc: pc[1].id)
    marginals = np.array([p for p, _ in scored], dtype=float)
    return [c for _, c in scored], marginals / marginals.sum()


def optimal_find_policy(
    world: WorldModel,
    belief: BeliefState,
    object_type: str,
    q_from: Cell,
    q_to: Cell,
    est: Estimator,
    costs: CostModel,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    object_id: str = "",
    to_location: Optional[str] = None,
) -> FindPolicy:
    """
    The ordering of the candidate subset with minimum expected cost.

    Unrolling the recursion, the pick-and-carry term contributes
    ``sum_j m_j * (R_pick + R_move(c_j, q_to))`` whatever the order, so only
    the travel term ``sum_k reach_k * (R_move(prev, c_k) + R_search)`` has to
    be minimized, with ``reach_k`` the probability that step ``k`` happens.
    That is a Held-Karp style DP over ``(visited set, last container)``:

        V[S][i] = min_{j not in S} reach(S) * (d(i, j) + R_search) + V[S | j][j]

    filled for masks in descending order, with ``V[full][*] = 0``.  Among
    equal-cost orderings the one that is lexicographically smallest by
    container id is returned.

    Raises:
        SearchExhaustedError: no unsearched container.

    Time Complexity: O(2^K * K^2) with K <= ``max_candidates``.
    """
    candidates, m = candidate_subset(world, belief, object_type, est, max_candidates)
    distance = grid_distance(world.grid)
    poses = [c.pose for c in candidates]
    n = len(poses)

    d_from = np.array([distance(q_from, p) for p in poses])
    between = np.array([[distance(a, b) for b in poses] for a in poses])
    full = (1 << n) - 1
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
    reach = np.clip(1.0 - bits @ m, 0.0, 1.0)

    value = np.zeros((1 << n, n))
    for mask in range(full - 1, 0, -1):
        open_j = bits[mask] == 0
        nxt = np.array([value[mask | (1 << j), j] if open_j[j] else np.inf for j in range(n)])
        step = reach[mask] * (between + costs.r_search) + nxt[None, :]
        step[:, ~open_j] = np.inf
        value[mask] = step.min(axis=1)

    # Forward reconstruction, smallest id among (near-)ties.
    order: list[int] = []
    mask, current_row = 0, reach[0] * (d_from + costs.r_search)
    while True:
        nxt = np.array([value[mask | (1 << j), j] if not bits[mask][j] else np.inf for j in range(n)])
        totals = current_row + nxt
        totals[bits[mask] == 1] = np.inf
        best = totals.min()
        j = int(np.flatnonzero(totals <= best + TIE_TOLERANCE)[0])
        order.append(j)
        mask |= 1 << j
        if mask == full:
            break
        current_row = reach[mask] * (between[j] + costs.r_search)

    sequence = [candidates[j] for j in order]
    step_probs = conditional_step_probs([m[j] for j in order])
    seq_poses = [c.pose for c in sequence]
    return FindPolicy(
        object_id=object_id,
        object_type=object_type,
        sequence=tuple(c.id for c in sequence),
        step_probs=tuple(step_probs),
        q_from=q_from,
        q_to=q_to,
        expected_cost=evaluate_policy(seq_poses, step_probs, q_from, q_to, costs, distance),
        search_policy=SearchPolicy.LIOS,
        to_location=to_location,
    )


def nearest_neighbour_chain(
    containers: Sequence[Container], q_from: Cell, distance: DistanceFn
) -> list[Container]:
    """Repeatedly visit the closest remaining container; ties by id."""
    remaining = sorted(containers, key=lambda c: c.id)
    chain: list[Container] = []
    position = q_from
    while remaining:
        nearest = min(remaining, key=lambda c: (distance(position, c.pose), c.id))
        chain.append(nearest)
        remaining.remove(nearest)
        position = nearest.pose
    return chain


def greedy_find_policy(
    world: WorldModel,
    belief: BeliefState,
    object_type: str,
    q_from: Cell,
    q_to: Optional[Cell] = None,
    costs: Optional[CostModel] = None,
    object_id: str = "",
    to_location: Optional[str] = None,
) -> FindPolicy:
    """
    Nearest-neighbour chain over every unsearched container.

    Probabilities are not consulted; ``step_probs`` and ``expected_cost``
    assume the object is equally likely in each container.  ``q_to``
    defaults to ``q_from``.

    Raises:
        SearchExhaustedError: no unsearched container.
    """
    q_to = q_from if q_to is None else q_to
    costs = costs or CostModel()
    distance = grid_distance(world.grid)
    chain = nearest_neighbour_chain(_unsearched(world, belief), q_from, distance)
    step_probs = conditional_step_probs([1.0] * len(chain))
    poses = [c.pose for c in chain]
    return FindPolicy(
        object_id=object_id,
        object_type=object_type,
        sequence=tuple(c.id for c in chain),
        step_probs=tuple(step_probs),
        q_from=q_from,
        q_to=q_to,
        expected_cost=evaluate_policy(poses, step_probs, q_from, q_to, costs, distance),
        search_policy=SearchPolicy.GREEDY,
        to_location=to_location,
    )


# ---------------------------------------------------------------------------
# Planner-facing find costs
# ---------------------------------------------------------------------------
def optimistic_cost(
    world: WorldModel,
    belief: BeliefState,
    object_type: str,
    q_from: Cell,
    q_to: Cell,
    costs: CostModel,
) -> float:
    """Cost if the object were certainly in the best unsearched container.

    ``object_type`` is accepted for symmetry with the model cost; the bound
    does not depend on it.
    """
    distance = grid_distance(world.grid)
    return min(
        distance(q_from, c.pose) + costs.r_search + costs.r_pick + distance(c.pose, q_to)
        for c in _unsearched(world, belief)
    )


def pessimistic_cost(
    world: WorldModel,
    belief: BeliefState,
    object_type: str,
    q_from: Cell,
    q_to: Cell,
    costs: CostModel,
) -> float:
    return optimistic_cost(world, belief, object_type, q_from, q_to, costs) + costs.pessimistic_penalty
