"""AST -> PDDL text.  ``parse_domain(domain_to_text(d)) == d`` for every parsed ``d``."""

from __future__ import annotations

from typing import Iterable, Union

from src.pddl.ast import (
    NUMBER_TYPE,
    ActionSchema,
    Atom,
    FunctionTerm,
    Increase,
    Not,
    PddlDomain,
    PddlProblem,
    TypedName,
)


def format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def _typed(names: Iterable[TypedName]) -> str:
    return " ".join(f"{n.name} - {n.type_name}" for n in names)


def _atom(atom: Atom) -> str:
    return "(" + " ".join((atom.predicate, *atom.args)) + ")"


def _term(term: FunctionTerm) -> str:
    return "(" + " ".join((term.name, *term.args)) + ")"


def _literal(lit: Union[Atom, Not, Increase]) -> str:
    if isinstance(lit, Not):
        return f"(not {_atom(lit.atom)})"
    if isinstance(lit, Increase):
        amount = lit.amount if isinstance(lit.amount, FunctionTerm) else None
        text = _term(amount) if amount is not None else format_number(lit.amount)  # type: ignore[arg-type]
        return f"(increase {_term(lit.target)} {text})"
    return _atom(lit)


def _conjunction(literals, indent: str) -> str:
    if not literals:
        return "()"
    body = f"\n{indent}  ".join(_literal(lit) for lit in literals)
    return f"(and\n{indent}  {body})"


def _action(action: ActionSchema) -> str:
    return (
        f"  (:action {action.name}\n"
        f"    :parameters ({_typed(action.parameters)})\n"
        f"    :precondition {_conjunction(action.precondition, '    ')}\n"
        f"    :effect {_conjunction(action.effect, '    ')})"
    )


def domain_to_text(domain: PddlDomain) -> str:
    parts = [f"(define (domain {domain.name})"]
    if domain.requirements:
        parts.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        parts.append(f"  (:types {_typed(domain.types)})")
    if domain.constants:
        parts.append(f"  (:constants {_typed(domain.constants)})")
    if domain.predicates:
        preds = "\n    ".join(
            "(" + " ".join([p.name, _typed(p.parameters)]).strip() + ")" for p in domain.predicates
        )
        parts.append(f"  (:predicates\n    {preds})")
    if domain.functions:
        funcs = "\n    ".join(
            "(" + " ".join([f.name, _typed(f.parameters)]).strip() + f") - {NUMBER_TYPE}" for f in domain.functions
        )
        parts.append(f"  (:functions\n    {funcs})")
    parts.extend(_action(a) for a in domain.actions)
    return "\n".join(parts) + ")\n"


def problem_to_text(problem: PddlProblem) -> str:
    parts = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    if problem.requirements:
        parts.append(f"  (:requirements {' '.join(problem.requirements)})")
    if problem.objects:
        parts.append(f"  (:objects {_typed(problem.objects)})")
    init = [_atom(a) for a in problem.init]
    init += [f"(= {_term(v.term)} {format_number(v.value)})" for v in problem.init_values]
    parts.append("  (:init\n    " + "\n    ".join(init) + ")" if init else "  (:init)")
    parts.append(f"  (:goal {_conjunction(problem.goal, '  ')})")
    if problem.metric:
        direction, function = problem.metric.split()
        parts.append(f"  (:metric {direction} ({function}))")
    return "\n".join(parts) + ")\n"
