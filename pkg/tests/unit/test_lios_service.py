"""
test_lios_service.py - Expected-cost evaluation and search-policy selection.

The optimal policy is checked against brute-force enumeration of every
ordering on small random instances, and its expected cost against sampled
roll-outs of the same policy.
"""

import itertools

import numpy as np
import pytest

from src.exceptions import ConfigurationError, PolicyError, SearchExhaustedError
from src.models import BeliefState, Container, GridMap, WorldModel, WorldObject
from src.schemas import SearchPolicy
from src.services.estimator_service import Estimator
from src.services.lios_service import (
    CostModel,
    candidate_subset,
    conditional_step_probs,
    evaluate_policy,
    grid_distance,
    greedy_find_policy,
    nearest_neighbour_chain,
    optimal_find_policy,
    optimistic_cost,
    pessimistic_cost,
    rollout_cost,
)

S, A, B, T = (0, 0), (0, 1), (0, 2), (0, 3)

# Symmetric hand-picked distances between four abstract cells.
_TABLE = {
    frozenset({S, A}): 2.0,
    frozenset({S, B}): 5.0,
    frozenset({A, T}): 3.0,
    frozenset({A, B}): 4.0,
    frozenset({B, T}): 1.0,
    frozenset({S, T}): 6.0,
}


def table_distance(a, b):
    return 0.0 if a == b else _TABLE[frozenset({a, b})]


def _marginals(step_probs):
    """Unconditional probability that the object is found at each step."""
    out, remaining = [], 1.0
    for p in step_probs:
        out.append(remaining * p)
        remaining *= 1.0 - p
    return np.array(out)


def _random_instance(rng):
    """Open 6x6 grid, up to five containers with distinct types, random counts."""
    grid = GridMap(cells=("......",) * 6)
    free = grid.free_cells()
    n = int(rng.integers(1, 6))
    picks = rng.choice(len(free), size=n + 2, replace=False)
    containers = tuple(
        Container(id=f"t{i}_{i}", type_name=f"t{i}", room_type="kitchen", pose=free[int(picks[i])])
        for i in range(n)
    )
    world = WorldModel(
        grid=grid,
        containers=containers,
        objects=(WorldObject("mug_0", "mug", containers[0].id),),
        seed=0,
        robot_start=free[int(picks[n])],
    )
    counts = {}
    for i in range(n):
        total = int(rng.integers(0, 20))
        counts[("mug", f"t{i}", "kitchen")] = (int(rng.integers(0, total + 1)), total)
    return world, Estimator(counts=counts), free[int(picks[n + 1])]


# ---------------------------------------------------------------------------
# evaluate_policy / conditional_step_probs / rollout_cost
# ---------------------------------------------------------------------------
class TestEvaluatePolicy:
    def test_single_container(self):
        assert evaluate_policy([A], [1.0], S, T, CostModel(), table_distance) == 10.0

    def test_two_containers(self):
        # 2 + 0.5 * (5 + 3) + 0.5 * (4 + 5 + 1)
        assert evaluate_policy([A, B], [0.5, 1.0], S, T, CostModel(), table_distance) == 11.0

    def test_search_cost_is_paid_per_visit(self):
        costs = CostModel(r_search=2.0)
        # the second search happens with probability 0.5
        assert evaluate_policy([A, B], [0.5, 1.0], S, T, costs, table_distance) == 14.0

    def test_zero_cost_model(self):
        costs = CostModel(r_pick=0.0, r_place=0.0, fixed_op_cost=0.0)
        assert evaluate_policy([A, B], [0.3, 1.0], S, S, costs, lambda a, b: 0.0) == 0.0

    def test_matches_weighted_rollouts(self):
        probs = [0.2, 0.5, 1.0]
        poses = [A, B, T]
        expected = sum(
            m * rollout_cost(poses, k, S, S, CostModel(), table_distance)
            for k, m in enumerate(_marginals(probs))
        )
        assert evaluate_policy(poses, probs, S, S, CostModel(), table_distance) == pytest.approx(expected)

    @pytest.mark.parametrize(
        "poses, probs",
        [
            ([], []),
            ([A, B], [1.0]),
            ([A, B], [0.5, 0.9]),
            ([A, B], [0.0, 1.0]),
            ([A], [1.5]),
        ],
    )
    def test_invalid_input(self, poses, probs):
        with pytest.raises(PolicyError):
            evaluate_policy(poses, probs, S, T, CostModel(), table_distance)


class TestConditionalStepProbs:
    def test_equal_marginals(self):
        assert conditional_step_probs([1.0, 1.0]) == [0.5, 1.0]

    def test_unnormalized_marginals(self):
        assert conditional_step_probs([6.0, 3.0, 1.0]) == pytest.approx([0.6, 0.75, 1.0])

    def test_single(self):
        assert conditional_step_probs([0.2]) == [1.0]

    @pytest.mark.parametrize("marginals", [[], [0.0, 0.0], [0.5, -0.1]])
    def test_invalid(self, marginals):
        with pytest.raises(PolicyError):
            conditional_step_probs(marginals)


class TestRolloutCost:
    def test_found_first(self):
        assert rollout_cost([A, B], 0, S, T, CostModel(), table_distance) == 2 + 5 + 3

    def test_found_second(self):
        assert rollout_cost([A, B], 1, S, T, CostModel(), table_distance) == 2 + 4 + 5 + 1


def test_cost_model_rejects_negative_costs():
    with pytest.raises(ConfigurationError):
        CostModel(r_pick=-1.0)


# ---------------------------------------------------------------------------
# optimal_find_policy
# ---------------------------------------------------------------------------
class TestOptimalFindPolicy:
    @staticmethod
    def _check_against_brute_force(seed, n_instances):
        rng = np.random.default_rng(seed)
        costs = CostModel()
        for _ in range(n_instances):
            world, est, q_to = _random_instance(rng)
            belief = BeliefState.initial(world)
            distance = grid_distance(world.grid)

            policy = optimal_find_policy(world, belief, "mug", world.robot_start, q_to, est, costs)

            candidates, m = candidate_subset(world, belief, "mug", est)
            best = min(
                evaluate_policy(
                    [candidates[j].pose for j in order],
                    conditional_step_probs([m[j] for j in order]),
                    world.robot_start,
                    q_to,
                    costs,
                    distance,
                )
                for order in itertools.permutations(range(len(candidates)))
            )
            assert policy.expected_cost == pytest.approx(best, abs=1e-9)

    def test_matches_brute_force(self):
        self._check_against_brute_force(2024, 50)

    @pytest.mark.slow
    def test_matches_brute_force_on_many_instances(self):
        self._check_against_brute_force(4048, 500)

    @pytest.mark.slow
    def test_expected_cost_matches_sampled_rollouts(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 20:
            world, est, q_to = _random_instance(rng)
            if len(world.containers) < 3:
                continue
            policy = optimal_find_policy(
                world, BeliefState.initial(world), "mug", world.robot_start, q_to, est, CostModel()
            )
            distance = grid_distance(world.grid)
            poses = [world.container(cid).pose for cid in policy.sequence]
            rollouts = np.array(
                [rollout_cost(poses, k, policy.q_from, q_to, CostModel(), distance) for k in range(len(poses))]
            )

            found_at = rng.choice(len(poses), size=100_000, p=_marginals(policy.step_probs))

            assert rollouts[found_at].mean() == pytest.approx(policy.expected_cost, rel=0.02)
            checked += 1

    def test_never_worse_than_nearest_neighbour_order(self):
        rng = np.random.default_rng(99)
        costs = CostModel()
        for _ in range(50):
            world, est, q_to = _random_instance(rng)
            belief = BeliefState.initial(world)
            distance = grid_distance(world.grid)
            candidates, m = candidate_subset(world, belief, "mug", est)
            chain = nearest_neighbour_chain(candidates, world.robot_start, distance)
            index = {c.id: j for j, c in enumerate(candidates)}
            chain_cost = evaluate_policy(
                [c.pose for c in chain],
                conditional_step_probs([m[index[c.id]] for c in chain]),
                world.robot_start,
                q_to,
                costs,
                distance,
            )

            policy = optimal_find_policy(world, belief, "mug", world.robot_start, q_to, est, costs)

            assert policy.expected_cost <= chain_cost + 1e-9

    def test_optimistic_bound_is_below_expected_cost(self):
        rng = np.random.default_rng(5)
        costs = CostModel()
        for _ in range(50):
            world, est, q_to = _random_instance(rng)
            belief = BeliefState.initial(world)
            policy = optimal_find_policy(world, belief, "mug", world.robot_start, q_to, est, costs)
            assert optimistic_cost(world, belief, "mug", world.robot_start, q_to, costs) <= policy.expected_cost + 1e-9

    def test_ties_prefer_smallest_id(self):
        world = WorldModel(
            grid=GridMap(cells=(".....",)),
            containers=(
                Container("b_box", "box", "kitchen", (0, 4)),
                Container("a_box", "box", "kitchen", (0, 0)),
            ),
            objects=(WorldObject("mug_0", "mug", "b_box"),),
            seed=0,
            robot_start=(0, 2),
        )
        policy = optimal_find_policy(
            world, BeliefState.initial(world), "mug", (0, 2), (0, 2), Estimator.uniform_estimator(), CostModel()
        )
        assert policy.sequence == ("a_box", "b_box")

    def test_policy_fields(self, tiny_world, start_belief, uniform_est):
        policy = optimal_find_policy(
            tiny_world, start_belief, "mug", (1, 1), (1, 1), uniform_est, CostModel(), object_id="mug_0",
            to_location="start",
        )
        assert sorted(policy.sequence) == ["bed_2", "countertop_1", "fridge_0"]
        assert policy.step_probs[-1] == 1.0
        assert policy.search_policy is SearchPolicy.LIOS
        assert policy.object_id == "mug_0"
        assert policy.to_location == "start"

    def test_searched_containers_are_skipped(self, tiny_world, start_belief, uniform_est):
        start_belief.searched.add("countertop_1")
        policy = optimal_find_policy(tiny_world, start_belief, "mug", (1, 1), (1, 1), uniform_est, CostModel())
        assert "countertop_1" not in policy.sequence

    def test_candidate_limit(self, tiny_world, start_belief, uniform_est):
        policy = optimal_find_policy(
            tiny_world, start_belief, "mug", (1, 1), (1, 1), uniform_est, CostModel(), max_candidates=2
        )
        assert set(policy.sequence) == {"bed_2", "countertop_1"}

    def test_candidates_are_the_most_likely(self, tiny_world, start_belief):
        est = Estimator(counts={("mug", "fridge", "kitchen"): (9, 10), ("mug", "bed", "bedroom"): (0, 10)})
        candidates, m = candidate_subset(tiny_world, start_belief, "mug", est, max_candidates=1)
        assert [c.id for c in candidates] == ["fridge_0"]
        assert m.tolist() == [1.0]

    def test_exhausted(self, tiny_world, start_belief, uniform_est):
        start_belief.searched.update({"fridge_0", "countertop_1", "bed_2"})
        with pytest.raises(SearchExhaustedError):
            optimal_find_policy(tiny_world, start_belief, "mug", (1, 1), (1, 1), uniform_est, CostModel())


# ---------------------------------------------------------------------------
# greedy_find_policy and the planner bounds
# ---------------------------------------------------------------------------
class TestGreedyFindPolicy:
    def test_nearest_neighbour_order(self, tiny_world, start_belief):
        policy = greedy_find_policy(tiny_world, start_belief, "mug", (1, 1))
        # countertop is 2 away; from there bed and fridge are both 6, bed wins on id
        assert policy.sequence == ("countertop_1", "bed_2", "fridge_0")
        assert policy.step_probs == pytest.approx((1 / 3, 0.5, 1.0))
        assert policy.search_policy is SearchPolicy.GREEDY
        assert policy.q_to == (1, 1)

    def test_exhausted(self, tiny_world, start_belief):
        start_belief.searched.update({"fridge_0", "countertop_1", "bed_2"})
        with pytest.raises(SearchExhaustedError):
            greedy_find_policy(tiny_world, start_belief, "mug", (1, 1))


class TestFindCostBounds:
    def test_optimistic(self, tiny_world, start_belief):
        # start -> countertop_1 -> start: 2 + 0 + 5 + 2
        assert optimistic_cost(tiny_world, start_belief, "mug", (1, 1), (1, 1), CostModel()) == 9.0

    def test_optimistic_toward_target(self, tiny_world, start_belief):
        # fridge_0 as the first stop and the destination: 4 + 0 + 5 + 0
        assert optimistic_cost(tiny_world, start_belief, "mug", (1, 1), (1, 5), CostModel()) == 9.0

    def test_pessimistic_adds_penalty(self, tiny_world, start_belief):
        costs = CostModel(pessimistic_penalty=100.0)
        assert pessimistic_cost(tiny_world, start_belief, "mug", (1, 1), (1, 1), costs) == 109.0

    def test_exhausted(self, tiny_world, start_belief):
        start_belief.searched.update({"fridge_0", "countertop_1", "bed_2"})
        with pytest.raises(SearchExhaustedError):
            optimistic_cost(tiny_world, start_belief, "mug", (1, 1), (1, 1), CostModel())
