"""
cli.py - Command-line presentation layer.

Subcommands:
    gen-worlds   generate world files from a catalog and a seed range
    train        fit the P_found estimator on a directory of worlds
    plan         solve a PDDL domain/problem pair
    search-eval  Greedy vs LIOS object-search evaluation (CSV + summary)
    run-trial    one (scenario, strategy, seed) trial, printed as JSON
    bench        the scenario x strategy x seed grid (log, CSV, text table)

Exit codes:
    0  success
    1  domain error (any ``LiosError``), or a ``run-trial`` that failed
    2  usage error (argparse)
    3  ``plan``: goal unreachable
    4  ``plan``: planner timeout
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from loguru import logger

from src.config import configure_logging, get_settings
from src.exceptions import LiosError, PlanTimeoutError, UnsolvableError
from src.models.db import close_all_sessions, get_session, init_db
from src.pddl import ground, parse_domain, parse_problem, plan
from src.repositories.estimator_repository import load_estimator, save_estimator
from src.repositories.trial_repository import (
    RESULTS_LOG_NAME,
    SUMMARY_CSV_NAME,
    SUMMARY_TABLE_NAME,
    TrialRepository,
    load_seeds,
    write_csv,
    write_json,
    write_results_log,
    write_text,
)
from src.repositories.world_repository import (
    load_world,
    load_world_config,
    load_worlds,
    save_world,
    world_file_name,
)
from src.schemas import ScenarioName, Strategy
from src.services.bench_service import (
    DEFAULT_BATCH_TRIALS,
    DEFAULT_SEARCH_TRIALS,
    format_summary_table,
    object_search_eval,
    run_batch,
    summarize_search,
    summarize_trials,
)
from src.services.estimator_service import Estimator, train
from src.services.executive_service import run_trial
from src.services.world_service import generate_world

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_UNSOLVABLE = 3
EXIT_TIMEOUT = 4

SCENARIO_CHOICES = [s.value for s in ScenarioName]
STRATEGY_CHOICES = [s.value for s in Strategy]


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _weight(text: str) -> float:
    value = float(text)
    if value < 1.0:
        raise argparse.ArgumentTypeError(f"planner weight must be >= 1, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="lios", description="Task planning with expected-cost find actions"
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="loguru level (default from LIOS_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-worlds", help="generate world files")
    p.add_argument("--config", type=Path, default=settings.WORLD_CONFIG, help="world catalog TOML")
    p.add_argument("--count", type=_non_negative_int, required=True)
    p.add_argument("--seed", type=_non_negative_int, default=0, help="first seed")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("train", help="train the P_found estimator")
    p.add_argument("--worlds", type=Path, required=True, help="directory of .world files")
    p.add_argument("--out", type=Path, required=True, help="estimator file to write")
    p.add_argument("--alpha", type=float, default=1.0, help="Laplace smoothing strength")

    p = sub.add_parser("plan", help="solve a PDDL problem")
    p.add_argument("domain", type=Path)
    p.add_argument("problem", type=Path)
    p.add_argument("--weight", type=_weight, default=settings.PLANNER_WEIGHT)
    p.add_argument("--timeout", type=float, default=None, help="seconds (default: unlimited)")

    p = sub.add_parser("search-eval", help="Greedy vs LIOS object search")
    p.add_argument("--est", type=Path, help="estimator file (default: uniform)")
    p.add_argument("--config", type=Path, default=settings.WORLD_CONFIG)
    p.add_argument("--trials", type=_non_negative_int, default=DEFAULT_SEARCH_TRIALS)
    p.add_argument("--seed", type=_non_negative_int, default=0, help="first world seed")
    p.add_argument("--out", type=Path, required=True, help="CSV to write")
    p.add_argument("--max-candidates", type=_positive_int, default=settings.MAX_CANDIDATES)

    p = sub.add_parser("run-trial", help="run one trial and print its record")
    p.add_argument("--scenario", choices=SCENARIO_CHOICES, required=True)
    p.add_argument("--strategy", choices=STRATEGY_CHOICES, required=True)
    p.add_argument("--seed", type=_non_negative_int, required=True)
    p.add_argument("--est", type=Path, help="estimator file (default: uniform)")
    p.add_argument("--config", type=Path, default=settings.WORLD_CONFIG)
    p.add_argument("--world", type=Path, help="world file to use instead of generating one")
    p.add_argument("--weight", type=_weight, default=settings.PLANNER_WEIGHT)
    p.add_argument("--timeout", type=float, default=None, help="per-call planner budget override")
    p.add_argument("--max-candidates", type=_positive_int, default=settings.MAX_CANDIDATES,
                   help="containers the exact LIOS policy considers (default from LIOS_MAX_CANDIDATES)")
    p.add_argument("--with-timing", action="store_true", help="include planner wall time")

    p = sub.add_parser("bench", help="run the strategy table")
    p.add_argument("--scenarios", nargs="+", choices=SCENARIO_CHOICES, default=SCENARIO_CHOICES)
    p.add_argument("--strategies", nargs="+", choices=STRATEGY_CHOICES, default=STRATEGY_CHOICES)
    p.add_argument("--trials", type=_non_negative_int, default=DEFAULT_BATCH_TRIALS)
    p.add_argument("--seeds", type=Path, help="seed file; its first --trials seeds are used")
    p.add_argument("--seed", type=_non_negative_int, default=0, help="first seed when no seed file is given")
    p.add_argument("--est", type=Path, help="estimator file (default: uniform)")
    p.add_argument("--config", type=Path, default=settings.WORLD_CONFIG)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--weight", type=_weight, default=settings.PLANNER_WEIGHT)
    p.add_argument("--timeout", type=float, default=None, help="per-call planner budget override")
    p.add_argument("--max-candidates", type=_positive_int, default=settings.MAX_CANDIDATES,
                   help="containers the exact LIOS policy considers (default from LIOS_MAX_CANDIDATES)")
    p.add_argument("--db", nargs="?", const=settings.RESULTS_DB_URL, default=None,
                   help="also store records in a results database (default URL from LIOS_RESULTS_DB_URL)")
    p.add_argument("--with-timing", action="store_true", help="include planner wall time in the log")
    return parser


# ------------------------------------------------------------------
# Subcommand handlers
# ------------------------------------------------------------------
def _load_estimator(path: Optional[Path]) -> Estimator:
    if path is None:
        logger.warning("no --est given, using the uniform estimator")
        return Estimator.uniform_estimator()
    return load_estimator(path)


def cmd_gen_worlds(args: argparse.Namespace) -> int:
    config = load_world_config(args.config)
    for seed in range(args.seed, args.seed + args.count):
        save_world(generate_world(seed, config), args.out / world_file_name(seed))
    print(f"wrote {args.count} world(s) to {args.out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    est = train(load_worlds(args.worlds), alpha=args.alpha)
    save_estimator(est, args.out)
    print(f"wrote estimator with {len(est.counts)} triple(s) to {args.out}")
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    domain = parse_domain(args.domain.read_text(encoding="utf-8"))
    problem = parse_problem(args.problem.read_text(encoding="utf-8"), domain)
    task = ground(domain, problem)
    try:
        result = plan(task, weight=args.weight, timeout=args.timeout)
    except UnsolvableError as exc:
        print(f"unsolvable: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except PlanTimeoutError as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    sys.stdout.write(result.to_text())
    return EXIT_OK


def cmd_search_eval(args: argparse.Namespace) -> int:
    est = _load_estimator(args.est)
    seeds = range(args.seed, args.seed + args.trials)
    results = object_search_eval(
        load_world_config(args.config), seeds=seeds, est=est, max_candidates=args.max_candidates
    )
    summary = summarize_search(results)
    write_csv(results, args.out)
    write_json(summary, args.out.with_suffix(".summary.json"))
    print(
        f"trials {summary['trials']}: greedy {summary['greedy_mean']:.2f}, "
        f"LIOS {summary['lios_mean']:.2f}, improvement {summary['improvement'] * 100:.1f}%, "
        f"sign test p = {summary['p_value']:.3g}"
    )
    return EXIT_OK


def cmd_run_trial(args: argparse.Namespace) -> int:
    est = _load_estimator(args.est)
    world = load_world(args.world) if args.world else generate_world(args.seed, load_world_config(args.config))
    record = run_trial(
        world, args.scenario, args.strategy, est, seed=args.seed,
        weight=args.weight, t_max=args.timeout, max_candidates=args.max_candidates,
        max_replans=get_settings().MAX_REPLANS,
    )
    print(json.dumps(record.to_json(args.with_timing), indent=2))
    return EXIT_OK if record.success else EXIT_DOMAIN_ERROR


def cmd_bench(args: argparse.Namespace) -> int:
    est = _load_estimator(args.est)
    if args.seeds:
        seeds = load_seeds(args.seeds)[: args.trials]
    else:
        seeds = list(range(args.seed, args.seed + args.trials))
    records = run_batch(
        args.scenarios, args.strategies, seeds, est, load_world_config(args.config),
        parallelism=args.parallelism, weight=args.weight, t_max=args.timeout,
        max_candidates=args.max_candidates, max_replans=get_settings().MAX_REPLANS,
    )
    summary = summarize_trials(records)
    table = format_summary_table(summary)
    write_results_log(records, args.out / RESULTS_LOG_NAME, with_timing=args.with_timing)
    write_csv(summary, args.out / SUMMARY_CSV_NAME)
    write_text(table, args.out / SUMMARY_TABLE_NAME)
    if args.db:
        init_db(args.db)
        with get_session(args.db) as session:
            TrialRepository(session).add_records(records)
        logger.info(f"stored {len(records)} record(s) in {args.db}")
    sys.stdout.write(table)
    return EXIT_OK


COMMANDS = {
    "gen-worlds": cmd_gen_worlds,
    "train": cmd_train,
    "plan": cmd_plan,
    "search-eval": cmd_search_eval,
    "run-trial": cmd_run_trial,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the subcommand, return its exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except LiosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    finally:
        close_all_sessions()
