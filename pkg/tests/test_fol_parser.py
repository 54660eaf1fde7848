from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adjudge.fol import (
    And,
    Atom,
    Exists,
    FormulaSyntaxError,
    Iff,
    Implies,
    Not,
    Or,
    Var,
    free_variables,
    parse_formula,
    pretty_print,
)
from generators import random_case

HEARSAY_RULE = (
    "IsStatement(s) & IsOutOfCourt(s) & exists a (HasAssertion(s, a) & "
    "IntroducedForLegalIssue(s, l) & ProvesTruthOfAssertion(s, l))"
)


def test_hearsay_rule_parses_to_and_chain_ending_in_exists():
    formula = parse_formula(HEARSAY_RULE)
    assert isinstance(formula, And)
    assert isinstance(formula.right, Exists)
    assert formula.right.var == "a"
    assert formula.left == And(Atom("IsStatement", (Var("s"),)), Atom("IsOutOfCourt", (Var("s"),)))
    assert free_variables(formula) == {"s", "l"}


def test_hearsay_rule_round_trips_verbatim():
    formula = parse_formula(HEARSAY_RULE)
    assert pretty_print(formula) == HEARSAY_RULE
    assert parse_formula(pretty_print(formula)) == formula


def test_single_atom():
    formula = parse_formula("P(s)")
    assert formula == Atom("P", (Var("s"),))
    assert free_variables(formula) == {"s"}


def test_de_morgan_parses_to_iff():
    formula = parse_formula("-(A(x) & B(x)) <-> (-A(x) | -B(x))")
    assert isinstance(formula, Iff)
    assert formula.left == Not(And(Atom("A", (Var("x"),)), Atom("B", (Var("x"),))))
    assert formula.right == Or(Not(Atom("A", (Var("x"),))), Not(Atom("B", (Var("x"),))))


def test_precedence_negation_tightest_iff_loosest():
    formula = parse_formula("-A(x) & B(x) | C(x) -> D(x) <-> E(x)")
    assert formula == Iff(
        Implies(Or(And(Not(Atom("A", (Var("x"),))), Atom("B", (Var("x"),))), Atom("C", (Var("x"),))),
                Atom("D", (Var("x"),))),
        Atom("E", (Var("x"),)),
    )


def test_binary_connectives_are_left_associative():
    a, b, c = (Atom(p, (Var("x"),)) for p in "ABC")
    assert parse_formula("A(x) & B(x) & C(x)") == And(And(a, b), c)
    assert parse_formula("A(x) -> B(x) -> C(x)") == Implies(Implies(a, b), c)
    assert parse_formula("A(x) | B(x) | C(x)") == Or(Or(a, b), c)


def test_parentheses_override_associativity():
    a, b, c = (Atom(p, (Var("x"),)) for p in "ABC")
    assert parse_formula("A(x) & (B(x) & C(x))") == And(a, And(b, c))


def test_quantifier_scope_is_its_immediate_operand():
    formula = parse_formula("exists a (H(a, b)) & H(a, c)")
    assert isinstance(formula, And)
    assert isinstance(formula.left, Exists)
    # The second H(a, c) is outside the quantifier, so its `a` is free.
    assert free_variables(formula) == {"a", "b", "c"}


def test_fully_bound_formula_has_no_free_variables():
    assert free_variables(parse_formula("exists a (H(a))")) == frozenset()


def test_universal_quantifier_and_nesting():
    formula = parse_formula("all x (P(x) -> exists y (Q(x, y)))")
    assert formula.var == "x"
    assert free_variables(formula) == frozenset()


def test_identifiers_are_case_sensitive():
    assert parse_formula("p(x)") != parse_formula("P(x)")


@pytest.mark.parametrize(
    "text",
    ["", "   ", "P()", "P(x", "(P(x) & Q(x)", "P(x))", "exists (P(x))",
     "P(x) &", "& P(x)", "P(x) Q(x)", "P(x,)", "exists a", "P(x) $"],
)
def test_malformed_inputs_raise_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_syntax_error_carries_position_and_expectations():
    with pytest.raises(FormulaSyntaxError) as excinfo:
        parse_formula("P(x) &\n& Q(x)")
    err = excinfo.value
    assert (err.line, err.column) == (2, 1)
    assert err.expected


def test_unbalanced_parentheses_are_called_out():
    with pytest.raises(FormulaSyntaxError, match="unbalanced parentheses"):
        parse_formula("P(x))")
    with pytest.raises(FormulaSyntaxError, match="unbalanced parentheses"):
        parse_formula("(P(x) & Q(x)")


def test_empty_argument_list_is_rejected():
    with pytest.raises(FormulaSyntaxError, match="empty argument list"):
        parse_formula("IsStatement()")


def test_keywords_cannot_be_predicate_names():
    with pytest.raises(FormulaSyntaxError):
        parse_formula("exists(x)")
    with pytest.raises(FormulaSyntaxError):
        parse_formula("all(x)")


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pretty_print_round_trip(seed):
    case = random_case(random.Random(seed))
    assert parse_formula(pretty_print(case.formula)) == case.formula
