"""
SQLAlchemy ORM Models for the Results Database

``bench --db URL`` stores every trial of a batch here so runs can be queried
and aggregated with SQL instead of re-reading JSONL logs.

Separation from Domain Models:
  - ``src/schemas.py`` holds the ``TrialRecord`` DTO the executive produces
  - This module holds its relational shape
  - ``TrialRepository`` translates between them

Database Schema:
  - trials: one row per (scenario, strategy, seed) trial
  - trace_steps: the primitive actions of a trial, in execution order
"""

from sqlalchemy import Boolean, CheckConstraint, Column, Float, ForeignKey, Index, Integer, String
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


class TrialRecordORM(Base):
    """
    SQLAlchemy ORM model for the 'trials' table.

    Attributes:
        id (int): Surrogate primary key
        scenario (str): Scenario name, e.g. "Deliver3"
        strategy (str): Strategy name, e.g. "ModelLIOS"
        seed (int): World / scenario seed
        cost (float): Accrued cost, or r_fail for failures
        success (bool): Whether the goal was reached
        containers_searched (int): Number of search actions
        replans (int): Planner invocations
        failure_reason (str): Empty on success
        planner_wall_time (float): Seconds spent planning

    Relationships:
        steps: One-to-many with TraceStepORM, ordered by position

    Database Constraints:
        - CHECK cost >= 0 and containers_searched >= 0
        - Index on (scenario, strategy) for the summary query
    """

    __tablename__ = "trials"

    id = Column(Integer, primary_key=True)
    scenario = Column(String(32), nullable=False)
    strategy = Column(String(32), nullable=False)
    seed = Column(Integer, nullable=False)
    cost = Column(Float, nullable=False)
    success = Column(Boolean, nullable=False)
    containers_searched = Column(Integer, nullable=False, default=0)
    replans = Column(Integer, nullable=False, default=0)
    failure_reason = Column(String(200), nullable=False, default="")
    planner_wall_time = Column(Float, nullable=False, default=0.0)

    __table_args__ = (
        CheckConstraint("cost >= 0", name="check_cost_non_negative"),
        CheckConstraint("containers_searched >= 0", name="check_searched_non_negative"),
        Index("ix_trials_scenario_strategy", "scenario", "strategy"),
    )

    steps = relationship(
        "TraceStepORM",
        back_populates="trial",
        cascade="all, delete-orphan",
        order_by="TraceStepORM.position",
    )

    def __repr__(self):
        return (
            f"<TrialRecordORM(id={self.id}, scenario={self.scenario}, strategy={self.strategy}, "
            f"seed={self.seed}, cost={self.cost}, success={self.success})>"
        )


class TraceStepORM(Base):
    """
    One executed primitive action.

    ``args`` holds the location / object tokens joined by single spaces
    (tokens never contain whitespace).
    """

    __tablename__ = "trace_steps"

    id = Column(Integer, primary_key=True)
    trial_id = Column(Integer, ForeignKey("trials.id", ondelete="CASCADE"), nullable=False)
    position = Column(Integer, nullable=False)
    action = Column(String(32), nullable=False)
    args = Column(String(200), nullable=False, default="")
    cost = Column(Float, nullable=False)

    trial = relationship("TrialRecordORM", back_populates="steps")

    def __repr__(self):
        return f"<TraceStepORM(trial_id={self.trial_id}, position={self.position}, action={self.action})>"
