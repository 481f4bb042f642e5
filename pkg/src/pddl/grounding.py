"""
Grounding: ``(PddlDomain, PddlProblem) -> GroundTask``.

Action schemas are instantiated only for bindings that are reachable in the
delete relaxation:

    1. Predicates no action adds or deletes are *static*; their truth is
       fixed by the init.
    2. Starting from the init atoms, every schema is joined against the
       currently reachable atoms (static preconditions first, so a binding
       that fails one is dropped before anything else is looked at); add
       effects of the new ground actions become reachable.
    3. Repeat until no new atom appears.

Function terms in cost effects are resolved against the init assignments
once the binding survived, so an unresolved term is reported only for
actions that could actually fire.

States are Python ints used as bitsets over the indexed atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from loguru import logger

from src.exceptions import GroundingError
from src.pddl.ast import (
    Atom,
    FunctionTerm,
    Increase,
    Not,
    PddlDomain,
    PddlProblem,
)

GroundAtom = tuple[str, ...]


@dataclass(frozen=True)
class GroundAction:
    """A propositional action; ``pre_pos``/``pre_neg``/``add``/``delete`` are bitmasks."""

    name: str
    pre_pos: int
    pre_neg: int
    add: int
    delete: int
    cost: float

    def applicable(self, state: int) -> bool:
        return state & self.pre_pos == self.pre_pos and not state & self.pre_neg

    def apply(self, state: int) -> int:
        return (state & ~self.delete) | self.add

    @property
    def text(self) -> str:
        return f"({self.name})"


@dataclass
class GroundTask:
    """
    Grounded planning task.

    Attributes:
        atoms: Indexed ground atoms; bit ``i`` of a state is ``atoms[i]``
        actions: Ground actions sorted by name
        init: Initial state
        goal_pos, goal_neg: Goal bitmasks
    """

    atoms: tuple[GroundAtom, ...]
    actions: tuple[GroundAction, ...]
    init: int
    goal_pos: int
    goal_neg: int
    _by_name: dict[str, GroundAction] = field(default_factory=dict, repr=False)
    _index: dict[GroundAtom, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._by_name = {a.name: a for a in self.actions}
        self._index = {atom: i for i, atom in enumerate(self.atoms)}

    def action(self, name: str) -> Optional[GroundAction]:
        return self._by_name.get(" ".join(name.strip("() ").lower().split()))

    def index_of(self, atom: GroundAtom) -> Optional[int]:
        return self._index.get(atom)

    def is_goal(self, state: int) -> bool:
        return state & self.goal_pos == self.goal_pos and not state & self.goal_neg

    def successors(self, state: int) -> Iterator[tuple[GroundAction, int]]:
        for action in self.actions:
            if action.applicable(state):
                yield action, action.apply(state)

    def decode(self, state: int) -> set[GroundAtom]:
        return {atom for i, atom in enumerate(self.atoms) if state >> i & 1}

    def encode(self, atoms) -> int:
        state = 0
        for atom in atoms:
            i = self.index_of(tuple(atom))
            if i is not None:
                state |= 1 << i
        return state

    def mask_atoms(self, mask: int) -> list[GroundAtom]:
        return [atom for i, atom in enumerate(self.atoms) if mask >> i & 1]


@dataclass(frozen=True)
class _Candidate:
    name: str
    pre_pos: tuple[GroundAtom, ...]
    pre_neg: tuple[GroundAtom, ...]
    add: tuple[GroundAtom, ...]
    delete: tuple[GroundAtom, ...]
    cost: float


def _fluent_predicates(domain: PddlDomain) -> set[str]:
    fluents = set()
    for action in domain.actions:
        for eff in action.effect:
            if isinstance(eff, Atom):
                fluents.add(eff.predicate)
            elif isinstance(eff, Not):
                fluents.add(eff.atom.predicate)
    return fluents


def _objects_by_type(domain: PddlDomain, problem: PddlProblem) -> dict[str, list[str]]:
    typed = {c.name: c.type_name for c in domain.constants}
    typed.update({o.name: o.type_name for o in problem.objects})
    by_type: dict[str, list[str]] = {t: [] for t in domain.type_parents}
    for name, type_name in sorted(typed.items()):
        for t in by_type:
            if domain.is_subtype(type_name, t):
                by_type[t].append(name)
    return by_type


def _validate_goal(domain: PddlDomain, problem: PddlProblem, objects: set[str]) -> None:
    for lit in problem.goal:
        atom = lit.atom if isinstance(lit, Not) else lit
        schema = domain.predicate(atom.predicate)
        if schema is None:
            raise GroundingError(f"goal uses undeclared predicate {atom.predicate!r}")
        if len(schema.parameters) != len(atom.args):
            raise GroundingError(f"goal atom ({atom.predicate} ...) has the wrong arity")
        unknown = [a for a in atom.args if a not in objects]
        if unknown:
            raise GroundingError(f"goal mentions undeclared object(s) {', '.join(unknown)}")


def ground(domain: PddlDomain, problem: PddlProblem) -> GroundTask:
    """
    Ground ``problem`` against ``domain``.

    Raises:
        GroundingError: goal atoms that do not fit the domain, an unresolved
            cost function term, or a negative / non-finite action cost.
    """
    by_type = _objects_by_type(domain, problem)
    all_objects = set(by_type.get("object", []))
    _validate_goal(domain, problem, all_objects)

    fluents = _fluent_predicates(domain)
    init_atoms = {a.ground({}) for a in problem.init}
    static = {a for a in init_atoms if a[0] not in fluents}
    values = {v.term.ground({}): v.value for v in problem.init_values}

    reachable: set[GroundAtom] = set(init_atoms)
    by_predicate: dict[str, set[GroundAtom]] = {}
    for atom in reachable:
        by_predicate.setdefault(atom[0], set()).add(atom)

    candidates: dict[str, _Candidate] = {}
    changed = True
    passes = 0
    while changed:
        changed = False
        passes += 1
        for schema in domain.actions:
            for binding in _bindings(schema, domain, by_type, by_predicate, fluents, static):
                name = " ".join((schema.name, *(binding[p.name] for p in schema.parameters)))
                if name in candidates:
                    continue
                candidate = _instantiate(schema, binding, name, values, fluents, static)
                if candidate is None:
                    continue
                candidates[name] = candidate
                for atom in candidate.add:
                    if atom not in reachable:
                        reachable.add(atom)
                        by_predicate.setdefault(atom[0], set()).add(atom)
                        changed = True

    goal_pos = [lit.ground({}) for lit in problem.goal if isinstance(lit, Atom)]
    goal_neg = [lit.atom.ground({}) for lit in problem.goal if isinstance(lit, Not)]
    goal_atoms = set(goal_pos) | set(goal_neg)
    indexed = sorted({a for a in reachable if a[0] in fluents} | goal_atoms)
    index = {atom: i for i, atom in enumerate(indexed)}

    def mask(atoms) -> int:
        bits = 0
        for atom in atoms:
            if atom in index:
                bits |= 1 << index[atom]
        return bits

    actions = tuple(
        GroundAction(
            name=c.name,
            pre_pos=mask(a for a in c.pre_pos if a[0] in fluents),
            pre_neg=mask(a for a in c.pre_neg if a[0] in fluents),
            add=mask(c.add),
            delete=mask(c.delete),
            cost=c.cost,
        )
        for c in sorted(candidates.values(), key=lambda c: c.name)
    )
    task = GroundTask(
        atoms=tuple(indexed),
        actions=actions,
        init=mask(init_atoms),
        goal_pos=mask(goal_pos),
        goal_neg=mask(goal_neg),
    )
    logger.debug(
        f"grounded {problem.name}: {len(actions)} actions, {len(indexed)} atoms, {passes} passes"
    )
    return task


def _bindings(schema, domain, by_type, by_predicate, fluents, static) -> Iterator[dict[str, str]]:
    """Bindings whose positive preconditions are all reachable."""
    positives = [lit for lit in schema.precondition if isinstance(lit, Atom)]
    # Static atoms first, then atoms with more arguments (more selective joins).
    positives.sort(key=lambda a: (a.predicate in fluents, -len(a.args)))
    param_types = {p.name: p.type_name for p in schema.parameters}
    domains = {p: set(by_type.get(t, ())) for p, t in param_types.items()}

    def extend(i: int, binding: dict[str, str]) -> Iterator[dict[str, str]]:
        if i == len(positives):
            free = [p.name for p in schema.parameters if p.name not in binding]
            yield from _enumerate_free(free, binding, by_type, param_types)
            return
        atom = positives[i]
        facts = by_predicate.get(atom.predicate, ())
        for fact in sorted(facts):
            if len(fact) - 1 != len(atom.args):
                continue
            new = dict(binding)
            ok = True
            for arg, value in zip(atom.args, fact[1:]):
                if arg.startswith("?"):
                    bound = new.get(arg)
                    if bound is None:
                        if value not in domains.get(arg, ()):
                            ok = False
                            break
                        new[arg] = value
                    elif bound != value:
                        ok = False
                        break
                elif arg != value:
                    ok = False
                    break
            if ok:
                yield from extend(i + 1, new)

    yield from extend(0, {})


def _enumerate_free(free, binding, by_type, param_types) -> Iterator[dict[str, str]]:
    if not free:
        yield binding
        return
    head, rest = free[0], free[1:]
    for value in by_type.get(param_types[head], ()):
        yield from _enumerate_free(rest, {**binding, head: value}, by_type, param_types)


def _instantiate(schema, binding, name, values, fluents, static) -> Optional[_Candidate]:
    pre_pos, pre_neg = [], []
    for lit in schema.precondition:
        if isinstance(lit, Not):
            atom = lit.atom.ground(binding)
            if atom[0] not in fluents:
                if atom in static:
                    return None
                continue
            pre_neg.append(atom)
        else:
            pre_pos.append(lit.ground(binding))

    add, delete = [], []
    cost = 0.0
    for eff in schema.effect:
        if isinstance(eff, Increase):
            cost += _resolve(eff, binding, values, name)
        elif isinstance(eff, Not):
            delete.append(eff.atom.ground(binding))
        else:
            add.append(eff.ground(binding))
    return _Candidate(name, tuple(pre_pos), tuple(pre_neg), tuple(add), tuple(delete), cost)


def _resolve(eff: Increase, binding: dict[str, str], values: dict, name: str) -> float:
    if isinstance(eff.amount, FunctionTerm):
        term = eff.amount.ground(binding)
        if term not in values:
            raise GroundingError(f"no init value for ({' '.join(term)}) needed by ({name})")
        amount = values[term]
    else:
        amount = float(eff.amount)
    if not math.isfinite(amount) or amount < 0:
        raise GroundingError(f"action ({name}) has invalid cost {amount}")
    return amount
