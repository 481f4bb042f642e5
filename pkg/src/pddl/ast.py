"""
AST of the supported PDDL subset.

Conjunctions are stored flattened: an action precondition, an effect or a
goal is a tuple of literals, however the source nested its ``and`` forms.
Nodes carry no source positions, so two parses of equivalent text compare
equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

OBJECT_TYPE = "object"
NUMBER_TYPE = "number"
TOTAL_COST = "total-cost"


@dataclass(frozen=True)
class TypedName:
    """``name - type_name``; variables keep their leading ``?``."""

    name: str
    type_name: str = OBJECT_TYPE


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def ground(self, binding: dict[str, str]) -> tuple[str, ...]:
        return (self.predicate, *(binding.get(a, a) for a in self.args))


@dataclass(frozen=True)
class Not:
    atom: Atom


Literal = Union[Atom, Not]


@dataclass(frozen=True)
class FunctionTerm:
    name: str
    args: tuple[str, ...] = ()

    def ground(self, binding: dict[str, str]) -> tuple[str, ...]:
        return (self.name, *(binding.get(a, a) for a in self.args))


@dataclass(frozen=True)
class Increase:
    """``(increase (total-cost) amount)`` with a constant or a function term."""

    target: FunctionTerm
    amount: Union[float, FunctionTerm]


Effect = Union[Atom, Not, Increase]


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    parameters: tuple[TypedName, ...] = ()


@dataclass(frozen=True)
class FunctionSchema:
    name: str
    parameters: tuple[TypedName, ...] = ()


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple[TypedName, ...]
    precondition: tuple[Literal, ...]
    effect: tuple[Effect, ...]

    @property
    def cost_terms(self) -> tuple[Increase, ...]:
        return tuple(e for e in self.effect if isinstance(e, Increase))


@dataclass(frozen=True)
class PddlDomain:
    name: str
    requirements: tuple[str, ...] = ()
    types: tuple[TypedName, ...] = ()
    constants: tuple[TypedName, ...] = ()
    predicates: tuple[PredicateSchema, ...] = ()
    functions: tuple[FunctionSchema, ...] = ()
    actions: tuple[ActionSchema, ...] = ()

    def predicate(self, name: str) -> Optional[PredicateSchema]:
        return next((p for p in self.predicates if p.name == name), None)

    def function(self, name: str) -> Optional[FunctionSchema]:
        return next((f for f in self.functions if f.name == name), None)

    def action(self, name: str) -> Optional[ActionSchema]:
        return next((a for a in self.actions if a.name == name), None)

    @property
    def type_parents(self) -> dict[str, str]:
        parents = {OBJECT_TYPE: ""}
        for t in self.types:
            parents[t.name] = t.type_name
        return parents

    def is_subtype(self, child: str, ancestor: str) -> bool:
        parents = self.type_parents
        seen: set[str] = set()
        while child and child not in seen:
            if child == ancestor:
                return True
            seen.add(child)
            child = parents.get(child, "")
        return False


@dataclass(frozen=True)
class FunctionAssignment:
    """``(= (find-cost mug start bed) 37)`` in the problem init."""

    term: FunctionTerm
    value: float


@dataclass(frozen=True)
class PddlProblem:
    name: str
    domain_name: str
    objects: tuple[TypedName, ...] = ()
    init: tuple[Atom, ...] = ()
    init_values: tuple[FunctionAssignment, ...] = ()
    goal: tuple[Literal, ...] = ()
    metric: Optional[str] = None
    requirements: tuple[str, ...] = field(default=())
