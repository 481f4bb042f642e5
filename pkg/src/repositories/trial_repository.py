"""
trial_repository.py - Persistence of trial results.

Two stores:

    JSONL results log   one ``TrialRecord`` JSON object per line, in batch
                        order; byte-identical for identical seed lists
                        (planner wall time is only written on request)
    results database    ``TrialRepository`` over the SQLAlchemy models in
                        ``src/models/orm_models.py``

Plus the small files around a batch: the seed list it reads and the CSV /
text summaries it writes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

import pandas as pd
from sqlalchemy import Integer, cast, func, select
from sqlalchemy.orm import Session

from src.exceptions import ConfigurationError
from src.models.orm_models import TraceStepORM, TrialRecordORM
from src.schemas import ScenarioName, Strategy, TraceStep, TrialRecord

RESULTS_LOG_NAME = "results.jsonl"
SUMMARY_CSV_NAME = "summary.csv"
SUMMARY_TABLE_NAME = "summary.txt"


class TrialRepository:
    """Stores and aggregates trial records in the results database.

    Usage::

        repo = TrialRepository(session)
        repo.add_records(records)
        rows = repo.summarize()

    Args:
        session: An active SQLAlchemy ``Session`` from ``db.get_session()``.
    """

    def __init__(self, session: Session):
        self._session = session

    def add_records(self, records: Iterable[TrialRecord]) -> int:
        """Insert ``records`` (with their traces) and commit; returns the count."""
        count = 0
        for record in records:
            row = TrialRecordORM(
                scenario=record.scenario.value,
                strategy=record.strategy.value,
                seed=record.seed,
                cost=record.cost,
                success=record.success,
                containers_searched=record.containers_searched,
                replans=record.replans,
                failure_reason=record.failure_reason,
                planner_wall_time=record.planner_wall_time,
            )
            row.steps = [
                TraceStepORM(position=i, action=step.action, args=" ".join(step.args), cost=step.cost)
                for i, step in enumerate(record.trace)
            ]
            self._session.add(row)
            count += 1
        self._session.commit()
        return count

    def get_records(
        self, scenario: Optional[ScenarioName | str] = None, strategy: Optional[Strategy | str] = None
    ) -> list[TrialRecord]:
        """Stored records, optionally filtered, in insertion order."""
        query = select(TrialRecordORM).order_by(TrialRecordORM.id)
        if scenario is not None:
            query = query.where(TrialRecordORM.scenario == ScenarioName(scenario).value)
        if strategy is not None:
            query = query.where(TrialRecordORM.strategy == Strategy(strategy).value)
        return [_to_record(row) for row in self._session.scalars(query)]

    def summarize(self) -> list[dict]:
        """
        Per (scenario, strategy): trial count, mean cost and success rate,
        aggregated in SQL.  Rows are sorted by scenario then strategy name.
        """
        query = (
            select(
                TrialRecordORM.scenario,
                TrialRecordORM.strategy,
                func.count(TrialRecordORM.id),
                func.avg(TrialRecordORM.cost),
                func.avg(cast(TrialRecordORM.success, Integer)),
            )
            .group_by(TrialRecordORM.scenario, TrialRecordORM.strategy)
            .order_by(TrialRecordORM.scenario, TrialRecordORM.strategy)
        )
        return [
            {
                "scenario": scenario,
                "strategy": strategy,
                "trials": int(trials),
                "mean_cost": float(mean_cost),
                "success_rate": float(success_rate),
            }
            for scenario, strategy, trials, mean_cost, success_rate in self._session.execute(query)
        ]


def _to_record(row: TrialRecordORM) -> TrialRecord:
    return TrialRecord(
        scenario=ScenarioName(row.scenario),
        strategy=Strategy(row.strategy),
        seed=row.seed,
        cost=row.cost,
        success=row.success,
        containers_searched=row.containers_searched,
        trace=tuple(
            TraceStep(step.action, tuple(step.args.split()) if step.args else (), step.cost)
            for step in row.steps
        ),
        replans=row.replans,
        failure_reason=row.failure_reason,
        planner_wall_time=row.planner_wall_time,
    )


# ---------------------------------------------------------------------------
# JSONL results log
# ---------------------------------------------------------------------------
def format_results_log(records: Iterable[TrialRecord], with_timing: bool = False) -> str:
    return "".join(json.dumps(r.to_json(with_timing), separators=(",", ":")) + "\n" for r in records)


def write_results_log(
    records: Sequence[TrialRecord], path: Path | str, with_timing: bool = False, append: bool = False
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a" if append else "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_results_log(records, with_timing))
    return path


def read_results_log(path: Path | str) -> list[TrialRecord]:
    """Records of a JSONL log; blank lines are skipped."""
    records = []
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(TrialRecord.from_json(json.loads(line)))
        except (ValueError, KeyError) as exc:
            raise ConfigurationError(f"{path}:{number}: bad results line: {exc}") from exc
    return records


# ---------------------------------------------------------------------------
# Seeds and summaries
# ---------------------------------------------------------------------------
def load_seeds(path: Path | str) -> list[int]:
    """
    One non-negative integer per line; ``#`` starts a comment.

    Raises:
        ConfigurationError: a line that is not a non-negative integer.
    """
    seeds = []
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not line.isdigit():
            raise ConfigurationError(f"{path}:{number}: expected a non-negative integer seed, got {line!r}")
        seeds.append(int(line))
    return seeds


def write_csv(frame: pd.DataFrame, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_text(text: str, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def write_json(data: dict, path: Path | str) -> Path:
    return write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", path)
