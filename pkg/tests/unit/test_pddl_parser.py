"""
test_pddl_parser.py - Reading and printing the supported PDDL subset.
"""

import pytest

from src.exceptions import PddlSyntaxError, PddlTypeError, UnsupportedRequirementError
from src.pddl import domain_to_text, parse_domain, parse_problem, problem_to_text
from src.pddl.ast import Atom, FunctionTerm, Increase, Not, TypedName
from src.pddl.printer import format_number


@pytest.fixture
def delivery_domain(pddl_dir):
    return parse_domain((pddl_dir / "delivery_domain.pddl").read_text(encoding="utf-8"))


def _problem(goal: str, init: str = "(rob-at kitchen) (hand-is-free) (obj-at mug kitchen)",
             objects: str = "kitchen bedroom - room mug book - item", domain: str = "delivery") -> str:
    return (
        f"(define (problem p) (:domain {domain})\n"
        f"  (:objects {objects})\n"
        f"  (:init {init})\n"
        f"  (:goal {goal}))\n"
    )


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------
class TestParseDomain:
    def test_find_action(self, pddl_dir):
        domain = parse_domain((pddl_dir / "find_domain.pddl").read_text(encoding="utf-8"))

        find = domain.action("find")
        assert domain.name == "find-only"
        assert [p.name for p in find.parameters] == ["?obj", "?start", "?target"]
        assert find.parameters[1] == TypedName("?start", "location")
        assert find.precondition == (Atom("rob-at", ("?start",)), Atom("hand-is-free"))
        assert Not(Atom("hand-is-free")) in find.effect
        assert find.cost_terms == (
            Increase(FunctionTerm("total-cost"), FunctionTerm("find-cost", ("?obj", "?start", "?target"))),
        )

    def test_requirements_and_types(self, delivery_domain):
        assert delivery_domain.requirements == (
            ":strips", ":typing", ":negative-preconditions", ":action-costs",
        )
        assert delivery_domain.is_subtype("room", "object")
        assert not delivery_domain.is_subtype("room", "item")

    def test_case_and_comments_are_ignored(self):
        text = "; header\n(DEFINE (DOMAIN Tiny) ; name\n (:PREDICATES (P)) (:action A :parameters () :precondition () :effect (P)))"
        domain = parse_domain(text)
        assert domain.name == "tiny"
        assert domain.action("a").effect == (Atom("p"),)

    def test_negative_precondition(self, delivery_domain):
        move = delivery_domain.action("move")
        assert Not(Atom("rob-at", ("?to",))) in move.precondition

    def test_print_then_parse(self, pddl_dir):
        for name in ("find_domain.pddl", "delivery_domain.pddl"):
            domain = parse_domain((pddl_dir / name).read_text(encoding="utf-8"))
            assert parse_domain(domain_to_text(domain)) == domain

    def test_unbalanced_parentheses(self):
        with pytest.raises(PddlSyntaxError) as exc_info:
            parse_domain("(define (domain d)\n  (:predicates (p)\n")
        assert exc_info.value.line >= 1

    def test_unknown_section_reports_line(self):
        with pytest.raises(PddlSyntaxError) as exc_info:
            parse_domain("(define (domain d)\n  (:predicates (p))\n  (:frobnicate))")
        assert exc_info.value.line == 3

    def test_unsupported_requirement(self, pddl_dir):
        with pytest.raises(UnsupportedRequirementError, match=":adl"):
            parse_domain((pddl_dir / "adl_domain.pddl").read_text(encoding="utf-8"))

    @pytest.mark.parametrize(
        "precondition",
        ["(or (p) (q))", "(forall (?x) (p))", "(not (and (p) (q)))"],
    )
    def test_unsupported_formulas(self, precondition):
        text = f"(define (domain d) (:predicates (p) (q)) (:action a :parameters () :precondition {precondition} :effect (p)))"
        with pytest.raises(UnsupportedRequirementError):
            parse_domain(text)

    def test_derived_predicates_rejected(self):
        with pytest.raises(UnsupportedRequirementError):
            parse_domain("(define (domain d) (:predicates (p)) (:derived (p) (p)))")

    def test_only_total_cost_may_increase(self):
        text = (
            "(define (domain d) (:predicates (p)) (:functions (total-cost) (fuel) - number)"
            " (:action a :parameters () :precondition () :effect (increase (fuel) 1)))"
        )
        with pytest.raises(UnsupportedRequirementError):
            parse_domain(text)

    def test_undeclared_predicate_in_action(self):
        text = "(define (domain d) (:predicates (p)) (:action a :parameters () :precondition (q) :effect (p)))"
        with pytest.raises(PddlTypeError, match="undeclared predicate"):
            parse_domain(text)

    def test_unbound_variable(self):
        text = "(define (domain d) (:predicates (p ?x)) (:action a :parameters () :precondition () :effect (p ?y)))"
        with pytest.raises(PddlTypeError, match="unbound"):
            parse_domain(text)


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------
class TestParseProblem:
    def test_delivery_problem(self, pddl_dir, delivery_domain):
        problem = parse_problem((pddl_dir / "delivery_problem.pddl").read_text(encoding="utf-8"), delivery_domain)

        assert problem.name == "deliver-mug"
        assert TypedName("mug", "item") in problem.objects
        assert Atom("obj-at", ("book", "kitchen")) in problem.init
        assert problem.init_values[0].term == FunctionTerm("total-cost")
        assert problem.goal == (Atom("obj-at", ("mug", "bedroom")),)
        assert problem.metric == "minimize total-cost"

    def test_print_then_parse(self, pddl_dir, delivery_domain):
        for name in ("delivery_problem.pddl", "delivery_both_problem.pddl", "satisfied_problem.pddl"):
            problem = parse_problem((pddl_dir / name).read_text(encoding="utf-8"), delivery_domain)
            assert parse_problem(problem_to_text(problem), delivery_domain) == problem

    def test_negative_goal(self, pddl_dir, delivery_domain):
        problem = parse_problem((pddl_dir / "satisfied_problem.pddl").read_text(encoding="utf-8"), delivery_domain)
        assert Not(Atom("holding", ("mug",))) in problem.goal

    def test_wrong_domain(self, delivery_domain):
        with pytest.raises(PddlTypeError, match="domain"):
            parse_problem(_problem("(holding mug)", domain="other"), delivery_domain)

    def test_arity_mismatch(self, delivery_domain):
        with pytest.raises(PddlTypeError, match="argument"):
            parse_problem(_problem("(obj-at mug)"), delivery_domain)

    def test_type_mismatch(self, delivery_domain):
        with pytest.raises(PddlTypeError, match="expected room"):
            parse_problem(_problem("(rob-at mug)"), delivery_domain)

    def test_undeclared_object(self, delivery_domain):
        with pytest.raises(PddlTypeError, match="undeclared object"):
            parse_problem(_problem("(holding kettle)"), delivery_domain)

    def test_undeclared_type(self, delivery_domain):
        with pytest.raises(PddlTypeError, match="undeclared type"):
            parse_problem(_problem("(holding mug)", objects="kitchen - room mug - gadget"), delivery_domain)

    def test_only_minimize_total_cost(self, delivery_domain):
        text = _problem("(holding mug)")[:-2] + " (:metric maximize (total-cost)))\n"
        with pytest.raises(PddlSyntaxError):
            parse_problem(text, delivery_domain)


@pytest.mark.parametrize("value, text", [(3.0, "3"), (0, "0"), (2.5, "2.5"), (37.25, "37.25")])
def test_format_number(value, text):
    assert format_number(value) == text
