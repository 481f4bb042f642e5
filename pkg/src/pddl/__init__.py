"""
PDDL subset toolchain: parse -> ground -> plan -> validate.

Supported requirements: ``:strips :typing :negative-preconditions
:action-costs``.  The grammar is documented in ``docs/pddl_subset.md``.
"""

from src.pddl.ast import PddlDomain, PddlProblem
from src.pddl.grounding import GroundAction, GroundTask, ground
from src.pddl.parser import parse_domain, parse_problem
from src.pddl.planner import DEFAULT_WEIGHT, Plan, plan, validate
from src.pddl.printer import domain_to_text, problem_to_text

__all__ = [
    "DEFAULT_WEIGHT",
    "GroundAction",
    "GroundTask",
    "PddlDomain",
    "PddlProblem",
    "Plan",
    "domain_to_text",
    "ground",
    "parse_domain",
    "parse_problem",
    "plan",
    "problem_to_text",
    "validate",
]
