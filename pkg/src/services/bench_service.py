"""
bench_service.py - Seeded batch experiments.

Two experiments:

    object_search_eval   Greedy vs LIOS on the same worlds, single object,
                         return to the start pose (``q_to = q_from``).
    run_batch            The (scenario x strategy x seed) grid of full trials,
                         aggregated into the strategy table.

Aggregation uses pandas DataFrames so the CLI can write CSVs directly.
Nothing here touches the filesystem; the trial repository does.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from scipy.stats import binomtest

from src.exceptions import ScenarioInfeasibleError
from src.models import START_LOCATION, BeliefState, WorldConfig
from src.pddl import DEFAULT_WEIGHT
from src.schemas import ScenarioName, SearchTrialResult, Strategy, TrialRecord
from src.services.estimator_service import Estimator
from src.services.executive_service import DEFAULT_MAX_REPLANS, execute_find, run_trial
from src.services.lios_service import (
    DEFAULT_MAX_CANDIDATES,
    CostModel,
    greedy_find_policy,
    optimal_find_policy,
)
from src.services.world_service import generate_world

DEFAULT_SEARCH_TRIALS = 200
DEFAULT_BATCH_TRIALS = 100

# Stream id mixed into the target-object draw so it never shares a generator
# state with world generation.
_TARGET_STREAM = 7

SEARCH_COLUMNS = ["trial", "seed", "target_object", "target_type", "greedy_cost", "lios_cost"]
SUMMARY_COLUMNS = ["scenario", "strategy", "find_cost", "search_policy", "trials", "mean_cost", "success_rate"]


# ---------------------------------------------------------------------------
# Object-search evaluation
# ---------------------------------------------------------------------------
def object_search_trial(
    trial: int,
    seed: int,
    est: Estimator,
    costs: CostModel,
    config: WorldConfig,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> SearchTrialResult:
    """Both search policies on one fresh world, same random target."""
    world = generate_world(seed, config)
    rng = np.random.default_rng([seed, _TARGET_STREAM])
    target = world.objects[int(rng.integers(len(world.objects)))]
    belief = BeliefState.initial(world)
    home = world.robot_start

    greedy = greedy_find_policy(
        world, belief, target.type_name, home, home, costs,
        object_id=target.id, to_location=START_LOCATION,
    )
    lios = optimal_find_policy(
        world, belief, target.type_name, home, home, est, costs, max_candidates,
        object_id=target.id, to_location=START_LOCATION,
    )
    return SearchTrialResult(
        trial=trial,
        seed=seed,
        target_object=target.id,
        target_type=target.type_name,
        greedy_cost=execute_find(world, belief, greedy, costs).cost,
        lios_cost=execute_find(world, belief, lios, costs, est, max_candidates).cost,
    )


def object_search_eval(
    config: WorldConfig,
    n_trials: int = DEFAULT_SEARCH_TRIALS,
    seeds: Optional[Sequence[int]] = None,
    est: Optional[Estimator] = None,
    costs: Optional[CostModel] = None,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> pd.DataFrame:
    """
    Greedy vs LIOS costs over ``n_trials`` fresh worlds.

    Args:
        config:   World generator catalog.
        n_trials: Number of trials; ignored when ``seeds`` is given.
        seeds:    World seeds, one per trial (default ``0 .. n_trials-1``).
        est:      Trained estimator (uniform if omitted).

    Returns:
        DataFrame with ``SEARCH_COLUMNS``, one row per trial, in seed order.
    """
    est = est or Estimator.uniform_estimator()
    costs = costs or CostModel()
    seeds = list(range(n_trials)) if seeds is None else list(seeds)
    rows = [
        asdict(object_search_trial(i, seed, est, costs, config, max_candidates))
        for i, seed in enumerate(seeds)
    ]
    logger.info(f"object search evaluation: {len(rows)} trial(s)")
    return pd.DataFrame(rows, columns=SEARCH_COLUMNS)


def summarize_search(results: pd.DataFrame) -> dict[str, float]:
    """
    Mean costs, relative improvement of LIOS over Greedy, and a one-sided
    sign test of "LIOS is cheaper".

    Ties are dropped from the sign test.  With no untied trials the p-value
    is 1.
    """
    n = len(results)
    if n == 0:
        return {"trials": 0, "greedy_mean": 0.0, "lios_mean": 0.0, "improvement": 0.0,
                "wins": 0, "losses": 0, "ties": 0, "p_value": 1.0}
    greedy_mean = float(results["greedy_cost"].mean())
    lios_mean = float(results["lios_cost"].mean())
    diff = results["greedy_cost"] - results["lios_cost"]
    wins = int((diff > 0).sum())
    losses = int((diff < 0).sum())
    decided = wins + losses
    p_value = binomtest(wins, decided, 0.5, alternative="greater").pvalue if decided else 1.0
    return {
        "trials": n,
        "greedy_mean": greedy_mean,
        "lios_mean": lios_mean,
        "improvement": 1.0 - lios_mean / greedy_mean if greedy_mean > 0 else 0.0,
        "wins": wins,
        "losses": losses,
        "ties": n - decided,
        "p_value": float(p_value),
    }


# ---------------------------------------------------------------------------
# Strategy table
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class _TrialJob:
    scenario: ScenarioName
    strategy: Strategy
    seed: int
    est: Estimator
    costs: CostModel
    config: WorldConfig
    weight: float
    max_candidates: int
    max_replans: int
    t_max: Optional[float]


def _run_job(job: _TrialJob) -> Optional[TrialRecord]:
    world = generate_world(job.seed, job.config)
    try:
        return run_trial(
            world, job.scenario, job.strategy, job.est, job.costs, job.seed,
            weight=job.weight, max_candidates=job.max_candidates,
            max_replans=job.max_replans, t_max=job.t_max,
        )
    except ScenarioInfeasibleError as exc:
        logger.warning(f"skipping {job.scenario.value} on seed {job.seed}: {exc}")
        return None


def run_batch(
    scenarios: Iterable[ScenarioName | str],
    strategies: Iterable[Strategy | str],
    seeds: Sequence[int],
    est: Estimator,
    config: WorldConfig,
    costs: Optional[CostModel] = None,
    parallelism: int = 1,
    weight: float = DEFAULT_WEIGHT,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    max_replans: int = DEFAULT_MAX_REPLANS,
    t_max: Optional[float] = None,
) -> list[TrialRecord]:
    """
    Run every (scenario, strategy, seed) trial.

    Trials are independent; with ``parallelism > 1`` they run in a process
    pool.  Records come back ordered by (scenario, strategy, seed) in the
    order the arguments list them, whatever the completion order.  Seeds
    whose world cannot host a scenario are skipped with a warning.
    """
    costs = costs or CostModel()
    jobs = [
        _TrialJob(ScenarioName(sc), Strategy(st), int(seed), est, costs, config,
                  weight, max_candidates, max_replans, t_max)
        for sc, st, seed in product(list(scenarios), list(strategies), list(seeds))
    ]
    logger.info(f"batch: {len(jobs)} trial(s), parallelism {parallelism}")
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]
    return [r for r in results if r is not None]


def summarize_trials(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """
    Mean cost (failures at ``r_fail``) and success rate per (scenario, strategy).

    Returns:
        DataFrame with ``SUMMARY_COLUMNS``; empty when ``records`` is.
    """
    if not records:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    frame = pd.DataFrame(
        {
            "scenario": [r.scenario.value for r in records],
            "strategy": [r.strategy.value for r in records],
            "cost": [r.cost for r in records],
            "success": [r.success for r in records],
        }
    )
    grouped = (
        frame.groupby(["scenario", "strategy"], sort=False)
        .agg(trials=("cost", "size"), mean_cost=("cost", "mean"), success_rate=("success", "mean"))
        .reset_index()
    )
    grouped["find_cost"] = [Strategy(s).find_cost.value for s in grouped["strategy"]]
    grouped["search_policy"] = [Strategy(s).search_policy.value for s in grouped["strategy"]]
    return grouped[SUMMARY_COLUMNS]


def format_summary_table(summary: pd.DataFrame) -> str:
    """
    Aligned text table: one row per strategy, find-cost and search-policy
    columns, then ``<scenario> cost`` / ``<scenario> success`` per scenario.
    """
    head = ["Strategy", "Find cost", "Search"]
    if summary.empty:
        return "  ".join(head) + "\n"

    scenarios = [s.value for s in ScenarioName if s.value in set(summary["scenario"])]
    strategies = [s for s in Strategy if s.value in set(summary["strategy"])]
    indexed = summary.set_index(["strategy", "scenario"])
    rows = []
    for strategy in strategies:
        row = {"Strategy": strategy.value, "Find cost": strategy.find_cost.value, "Search": strategy.search_policy.value}
        for scenario in scenarios:
            key = (strategy.value, scenario)
            if key in indexed.index:
                cell = indexed.loc[key]
                row[f"{scenario} cost"] = f"{cell['mean_cost']:.2f}"
                row[f"{scenario} success"] = f"{cell['success_rate'] * 100:.0f}%"
            else:
                row[f"{scenario} cost"] = "-"
                row[f"{scenario} success"] = "-"
        rows.append(row)
    return pd.DataFrame(rows).to_string(index=False) + "\n"
