"""
PDDL front end: text -> ``PddlDomain`` / ``PddlProblem``.

Parsing happens in two passes.  pyparsing turns the text into nested
``SList`` / ``Token`` nodes that remember their line and column (``;``
comments ignored, everything lower-cased); the builders below then walk
those nodes, check them against the supported subset and the domain's
declarations, and produce the frozen AST of ``src.pddl.ast``.

Errors:
    PddlSyntaxError              unbalanced parentheses, misplaced sections
    UnsupportedRequirementError  requirement flags or constructs outside
                                 ``:strips :typing :negative-preconditions
                                 :action-costs``
    PddlTypeError                undeclared predicate / function / object,
                                 arity mismatch, incompatible types
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import pyparsing as pp

from src.exceptions import PddlSyntaxError, PddlTypeError, UnsupportedRequirementError
from src.pddl.ast import (
    NUMBER_TYPE,
    OBJECT_TYPE,
    TOTAL_COST,
    ActionSchema,
    Atom,
    Effect,
    FunctionAssignment,
    FunctionSchema,
    FunctionTerm,
    Increase,
    Literal,
    Not,
    PddlDomain,
    PddlProblem,
    PredicateSchema,
    TypedName,
)

SUPPORTED_REQUIREMENTS = (":strips", ":typing", ":negative-preconditions", ":action-costs")


# ---------------------------------------------------------------------------
# S-expressions
# ---------------------------------------------------------------------------
@dataclass
class Token:
    text: str
    line: int
    col: int


@dataclass
class SList:
    items: list[Union["SList", Token]]
    line: int
    col: int

    def head(self) -> Optional[str]:
        return self.items[0].text if self.items and isinstance(self.items[0], Token) else None


Node = Union[SList, Token]


def _build_grammar() -> pp.ParserElement:
    token = pp.Regex(r"[^()\s;]+")
    token.set_parse_action(lambda s, loc, t: Token(t[0].lower(), pp.lineno(loc, s), pp.col(loc, s)))
    nested = pp.Forward()
    nested <<= (pp.Literal("(") + pp.Group(pp.ZeroOrMore(token | nested)) + pp.Suppress(")")).set_parse_action(
        lambda s, loc, t: SList(list(t[1]), pp.lineno(loc, s), pp.col(loc, s))
    )
    document = nested + pp.StringEnd()
    document.ignore(";" + pp.rest_of_line)
    return document


_GRAMMAR = _build_grammar()


def parse_sexpr(text: str) -> SList:
    """Parse one top-level s-expression."""
    try:
        result = _GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise PddlSyntaxError(f"malformed s-expression: {exc.msg}", exc.lineno, exc.col) from exc
    return result[0]


def _syntax(node: Node, message: str) -> PddlSyntaxError:
    return PddlSyntaxError(message, node.line, node.col)


def _expect_list(node: Node, what: str) -> SList:
    if not isinstance(node, SList):
        raise _syntax(node, f"expected {what}, got '{node.text}'")
    return node


def _expect_token(node: Node, what: str) -> str:
    if not isinstance(node, Token):
        raise _syntax(node, f"expected {what}, got a list")
    return node.text


def _typed_list(items: list[Node], variables: bool) -> tuple[TypedName, ...]:
    """``a b - t c`` -> (a:t, b:t, c:object)."""
    names: list[TypedName] = []
    pending: list[Token] = []
    i = 0
    while i < len(items):
        text = _expect_token(items[i], "a name")
        if text == "-":
            if i + 1 >= len(items) or not pending:
                raise _syntax(items[i], "dangling '-' in typed list")
            type_name = _expect_token(items[i + 1], "a type name")
            names.extend(TypedName(t.text, type_name) for t in pending)
            pending = []
            i += 2
            continue
        if variables != text.startswith("?"):
            kind = "a variable" if variables else "a name"
            raise _syntax(items[i], f"expected {kind}, got '{text}'")
        pending.append(items[i])  # type: ignore[arg-type]
        i += 1
    names.extend(TypedName(t.text, OBJECT_TYPE) for t in pending)
    return tuple(names)


def _define_header(root: SList, kind: str) -> tuple[str, list[Node]]:
    if root.head() != "define" or len(root.items) < 2:
        raise _syntax(root, "expected (define ...)")
    header = _expect_list(root.items[1], f"({kind} NAME)")
    if header.head() != kind or len(header.items) != 2:
        raise _syntax(header, f"expected ({kind} NAME)")
    return _expect_token(header.items[1], "a name"), root.items[2:]


def _requirements(section: SList) -> tuple[str, ...]:
    flags = tuple(_expect_token(item, "a requirement flag") for item in section.items[1:])
    for item, flag in zip(section.items[1:], flags):
        if flag not in SUPPORTED_REQUIREMENTS:
            raise UnsupportedRequirementError(
                f"requirement {flag} is not supported (line {item.line}); "
                f"supported: {' '.join(SUPPORTED_REQUIREMENTS)}"
            )
    return flags


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------
class _DomainBuilder:
    def __init__(self, name: str):
        self.domain = PddlDomain(name=name)
        self.requirements: tuple[str, ...] = ()
        self.types: tuple[TypedName, ...] = ()
        self.constants: tuple[TypedName, ...] = ()
        self.predicates: tuple[PredicateSchema, ...] = ()
        self.functions: tuple[FunctionSchema, ...] = ()
        self.actions: list[ActionSchema] = []

    def snapshot(self) -> PddlDomain:
        return PddlDomain(
            name=self.domain.name,
            requirements=self.requirements,
            types=self.types,
            constants=self.constants,
            predicates=self.predicates,
            functions=self.functions,
            actions=tuple(self.actions),
        )

    def add_section(self, section: SList) -> None:
        head = section.head()
        if head == ":requirements":
            self.requirements = _requirements(section)
        elif head == ":types":
            self.types = _typed_list(section.items[1:], variables=False)
        elif head == ":constants":
            self.constants = _typed_list(section.items[1:], variables=False)
        elif head == ":predicates":
            self.predicates = tuple(self._skeleton(item, PredicateSchema) for item in section.items[1:])
        elif head == ":functions":
            self.functions = self._functions(section.items[1:])
        elif head == ":action":
            self.actions.append(self._action(section))
        elif head in (":derived", ":durative-action", ":process", ":event"):
            raise UnsupportedRequirementError(f"{head} is not supported (line {section.line})")
        else:
            raise _syntax(section, f"unknown domain section {head!r}")

    @staticmethod
    def _skeleton(node: Node, cls):
        skel = _expect_list(node, "a (name ?param ...) skeleton")
        if not skel.items:
            raise _syntax(skel, "empty skeleton")
        name = _expect_token(skel.items[0], "a name")
        return cls(name, _typed_list(skel.items[1:], variables=True))

    def _functions(self, items: list[Node]) -> tuple[FunctionSchema, ...]:
        functions = []
        i = 0
        while i < len(items):
            if isinstance(items[i], Token) and items[i].text == "-":
                if i + 1 >= len(items) or _expect_token(items[i + 1], "number") != NUMBER_TYPE:
                    raise _syntax(items[i], "only numeric functions ('- number') are supported")
                i += 2
                continue
            functions.append(self._skeleton(items[i], FunctionSchema))
            i += 1
        return tuple(functions)

    def _action(self, section: SList) -> ActionSchema:
        if len(section.items) < 2:
            raise _syntax(section, "action without a name")
        name = _expect_token(section.items[1], "an action name")
        fields: dict[str, Node] = {}
        rest = section.items[2:]
        if len(rest) % 2:
            raise _syntax(section, f"action {name}: keywords and values must alternate")
        for key_node, value in zip(rest[::2], rest[1::2]):
            key = _expect_token(key_node, "an action keyword")
            if key not in (":parameters", ":precondition", ":effect"):
                raise _syntax(key_node, f"action {name}: unknown keyword {key}")
            fields[key] = value

        parameters: tuple[TypedName, ...] = ()
        if ":parameters" in fields:
            parameters = _typed_list(_expect_list(fields[":parameters"], "a parameter list").items, variables=True)
        scope = {p.name: p.type_name for p in parameters}
        domain = self.snapshot()
        checker = _Checker(domain, scope, {c.name: c.type_name for c in self.constants})
        for p in parameters:
            checker.check_type_declared(p.type_name, section)

        precondition: tuple[Literal, ...] = ()
        if ":precondition" in fields:
            precondition = tuple(_literals(fields[":precondition"], checker, "precondition"))
        effect: tuple[Effect, ...] = ()
        if ":effect" in fields:
            effect = tuple(_effects(fields[":effect"], checker))
        return ActionSchema(name=name, parameters=parameters, precondition=precondition, effect=effect)


class _Checker:
    """Declaration, arity and type checks for atoms and function terms."""

    def __init__(self, domain: PddlDomain, variables: dict[str, str], objects: dict[str, str]):
        self.domain = domain
        self.variables = variables
        self.objects = objects

    def check_type_declared(self, type_name: str, node: Node) -> None:
        if type_name not in self.domain.type_parents:
            raise PddlTypeError(f"undeclared type {type_name!r} (line {node.line})")

    def _arg_type(self, arg: str, node: Node) -> str:
        if arg.startswith("?"):
            if arg not in self.variables:
                raise PddlTypeError(f"unbound variable {arg} (line {node.line})")
            return self.variables[arg]
        if arg not in self.objects:
            raise PddlTypeError(f"undeclared object {arg!r} (line {node.line})")
        return self.objects[arg]

    def _check_args(self, kind: str, name: str, params, args: tuple[str, ...], node: Node) -> None:
        if len(params) != len(args):
            raise PddlTypeError(
                f"{kind} {name} takes {len(params)} argument(s), got {len(args)} (line {node.line})"
            )
        for param, arg in zip(params, args):
            arg_type = self._arg_type(arg, node)
            if not (
                self.domain.is_subtype(arg_type, param.type_name)
                or self.domain.is_subtype(param.type_name, arg_type)
            ):
                raise PddlTypeError(
                    f"{kind} {name}: {arg} is a {arg_type}, expected {param.type_name} (line {node.line})"
                )

    def atom(self, node: SList) -> Atom:
        name = _expect_token(node.items[0], "a predicate name")
        args = tuple(_expect_token(item, "an argument") for item in node.items[1:])
        schema = self.domain.predicate(name)
        if schema is None:
            raise PddlTypeError(f"undeclared predicate {name!r} (line {node.line})")
        self._check_args("predicate", name, schema.parameters, args, node)
        return Atom(name, args)

    def function_term(self, node: SList) -> FunctionTerm:
        name = _expect_token(node.items[0], "a function name")
        args = tuple(_expect_token(item, "an argument") for item in node.items[1:])
        schema = self.domain.function(name)
        if schema is None:
            raise PddlTypeError(f"undeclared function {name!r} (line {node.line})")
        self._check_args("function", name, schema.parameters, args, node)
        return FunctionTerm(name, args)


_UNSUPPORTED_FORMS = {"or", "imply", "forall", "exists", "when", "=", "decrease", "assign", "scale-up", "scale-down"}


def _literals(node: Node, checker: _Checker, where: str) -> list[Literal]:
    form = _expect_list(node, f"a {where} formula")
    head = form.head()
    if head is None and not form.items:
        return []
    if head == "and":
        return [lit for item in form.items[1:] for lit in _literals(item, checker, where)]
    if head == "not":
        if len(form.items) != 2:
            raise _syntax(form, "(not ...) takes exactly one atom")
        inner = _expect_list(form.items[1], "an atom")
        if inner.head() in _UNSUPPORTED_FORMS or inner.head() in ("and", "not"):
            raise UnsupportedRequirementError(f"only atoms may be negated (line {inner.line})")
        return [Not(checker.atom(inner))]
    if head in _UNSUPPORTED_FORMS:
        raise UnsupportedRequirementError(f"'{head}' is outside the supported subset (line {form.line})")
    return [checker.atom(form)]


def _effects(node: Node, checker: _Checker) -> list[Effect]:
    form = _expect_list(node, "an effect")
    head = form.head()
    if head is None and not form.items:
        return []
    if head == "and":
        return [eff for item in form.items[1:] for eff in _effects(item, checker)]
    if head == "increase":
        if len(form.items) != 3:
            raise _syntax(form, "(increase (total-cost) amount) takes two arguments")
        target = checker.function_term(_expect_list(form.items[1], "a function term"))
        if target.name != TOTAL_COST:
            raise UnsupportedRequirementError(
                f"only (total-cost) may be increased, got {target.name} (line {form.line})"
            )
        amount_node = form.items[2]
        amount: Union[float, FunctionTerm]
        if isinstance(amount_node, Token):
            try:
                amount = float(amount_node.text)
            except ValueError:
                raise _syntax(amount_node, f"expected a number, got '{amount_node.text}'")
        else:
            amount = checker.function_term(amount_node)
        return [Increase(target, amount)]
    return list(_literals(form, checker, "effect"))


def parse_domain(text: str) -> PddlDomain:
    """Parse a domain in the supported subset."""
    root = parse_sexpr(text)
    name, sections = _define_header(root, "domain")
    builder = _DomainBuilder(name)
    for node in sections:
        builder.add_section(_expect_list(node, "a domain section"))
    domain = builder.snapshot()
    for t in domain.types:
        if t.type_name not in domain.type_parents:
            raise PddlTypeError(f"type {t.name} has undeclared parent {t.type_name}")
    return domain


# ---------------------------------------------------------------------------
# Problem
# ---------------------------------------------------------------------------
def parse_problem(text: str, domain: PddlDomain) -> PddlProblem:
    """Parse a problem and check it against ``domain``."""
    root = parse_sexpr(text)
    name, sections = _define_header(root, "problem")
    domain_name = ""
    requirements: tuple[str, ...] = ()
    objects: tuple[TypedName, ...] = ()
    init_nodes: list[Node] = []
    goal_node: Optional[Node] = None
    metric: Optional[str] = None

    for node in sections:
        section = _expect_list(node, "a problem section")
        head = section.head()
        if head == ":domain":
            domain_name = _expect_token(section.items[1], "a domain name") if len(section.items) == 2 else ""
            if not domain_name:
                raise _syntax(section, "expected (:domain NAME)")
        elif head == ":requirements":
            requirements = _requirements(section)
        elif head == ":objects":
            objects = _typed_list(section.items[1:], variables=False)
        elif head == ":init":
            init_nodes = section.items[1:]
        elif head == ":goal":
            if len(section.items) != 2:
                raise _syntax(section, "(:goal ...) takes exactly one formula")
            goal_node = section.items[1]
        elif head == ":metric":
            metric = _metric(section)
        else:
            raise _syntax(section, f"unknown problem section {head!r}")

    if domain_name != domain.name:
        raise PddlTypeError(f"problem {name} is for domain {domain_name!r}, not {domain.name!r}")
    known = {c.name: c.type_name for c in domain.constants}
    for obj in objects:
        if obj.type_name not in domain.type_parents:
            raise PddlTypeError(f"object {obj.name} has undeclared type {obj.type_name}")
        known[obj.name] = obj.type_name
    checker = _Checker(domain, {}, known)

    init: list[Atom] = []
    values: list[FunctionAssignment] = []
    for node in init_nodes:
        item = _expect_list(node, "an init atom")
        if item.head() == "=":
            if len(item.items) != 3 or not isinstance(item.items[2], Token):
                raise _syntax(item, "expected (= (function args) number)")
            term = checker.function_term(_expect_list(item.items[1], "a function term"))
            try:
                value = float(item.items[2].text)
            except ValueError:
                raise _syntax(item.items[2], f"expected a number, got '{item.items[2].text}'")
            values.append(FunctionAssignment(term, value))
        else:
            init.append(checker.atom(item))

    goal: tuple[Literal, ...] = ()
    if goal_node is not None:
        goal = tuple(_literals(goal_node, checker, "goal"))
    return PddlProblem(
        name=name,
        domain_name=domain_name,
        objects=objects,
        init=tuple(init),
        init_values=tuple(values),
        goal=goal,
        metric=metric,
        requirements=requirements,
    )


def _metric(section: SList) -> str:
    items = section.items[1:]
    if len(items) != 2 or _expect_token(items[0], "minimize") != "minimize":
        raise _syntax(section, "only (:metric minimize (total-cost)) is supported")
    term = _expect_list(items[1], "(total-cost)")
    if term.head() != TOTAL_COST or len(term.items) != 1:
        raise _syntax(term, "only (:metric minimize (total-cost)) is supported")
    return f"minimize {TOTAL_COST}"
