"""First-order-logic formula AST: node types, free variables, pretty printing."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# Reserved words of the expression grammar; not usable as predicate or term names.
KEYWORDS = frozenset({"exists", "all"})


def _check_identifier(name: str, what: str) -> None:
    if not IDENTIFIER_RE.match(name) or name in KEYWORDS:
        raise ValueError(f"invalid {what} {name!r}")


@dataclass(frozen=True)
class Var:
    """A variable term reference, resolved through quantifier scope or an assignment."""

    name: str

    def __post_init__(self) -> None:
        _check_identifier(self.name, "variable name")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    """A constant term reference naming a domain entity directly.

    The textual grammar has no constant literal; constants arise only in
    programmatically built formulas (e.g. quantifier expansion in tests).
    """

    name: str

    def __post_init__(self) -> None:
        _check_identifier(self.name, "constant name")

    def __str__(self) -> str:
        return self.name


Term = Var | Const


class Formula:
    """Base class for formula nodes. All nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return pretty_print(self)


@dataclass(frozen=True)
class Atom(Formula):
    predicate: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        _check_identifier(self.predicate, "predicate name")
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError(f"predicate {self.predicate!r} applied to empty argument list")


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula

    def __post_init__(self) -> None:
        _check_identifier(self.var, "variable name")


@dataclass(frozen=True)
class ForAll(Formula):
    var: str
    body: Formula

    def __post_init__(self) -> None:
        _check_identifier(self.var, "variable name")


def free_variables(formula: Formula) -> frozenset[str]:
    """Return the names of variables with at least one free occurrence."""
    out: set[str] = set()
    _collect_free(formula, frozenset(), out)
    return frozenset(out)


def _collect_free(formula: Formula, bound: frozenset[str], out: set[str]) -> None:
    if isinstance(formula, Atom):
        for term in formula.args:
            if isinstance(term, Var) and term.name not in bound:
                out.add(term.name)
    elif isinstance(formula, Not):
        _collect_free(formula.operand, bound, out)
    elif isinstance(formula, (And, Or, Implies, Iff)):
        _collect_free(formula.left, bound, out)
        _collect_free(formula.right, bound, out)
    elif isinstance(formula, (Exists, ForAll)):
        _collect_free(formula.body, bound | {formula.var}, out)
    else:
        raise TypeError(f"not a formula node: {formula!r}")


# Binding strength, loosest first. Unary constructs and atoms bind tighter
# than every binary connective.
_PRECEDENCE: dict[type, int] = {Iff: 1, Implies: 2, Or: 3, And: 4}
_CONNECTIVE: dict[type, str] = {Iff: "<->", Implies: "->", Or: "|", And: "&"}
_UNARY_LEVEL = 5


def _precedence(formula: Formula) -> int:
    return _PRECEDENCE.get(type(formula), _UNARY_LEVEL)


def pretty_print(formula: Formula) -> str:
    """Render a formula in the expression grammar with minimal parentheses.

    Binary connectives are treated as left-associative, so re-parsing the
    output yields a structurally identical AST.
    """
    if isinstance(formula, Atom):
        return f"{formula.predicate}({', '.join(str(t) for t in formula.args)})"
    if isinstance(formula, Not):
        inner = pretty_print(formula.operand)
        if _precedence(formula.operand) < _UNARY_LEVEL:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(formula, (Exists, ForAll)):
        keyword = "exists" if isinstance(formula, Exists) else "all"
        return f"{keyword} {formula.var} ({pretty_print(formula.body)})"
    if isinstance(formula, (And, Or, Implies, Iff)):
        level = _PRECEDENCE[type(formula)]
        left = pretty_print(formula.left)
        if _precedence(formula.left) < level:
            left = f"({left})"
        right = pretty_print(formula.right)
        if _precedence(formula.right) <= level:
            right = f"({right})"
        return f"{left} {_CONNECTIVE[type(formula)]} {right}"
    raise TypeError(f"not a formula node: {formula!r}")
