"""Expression parsing and finite-model checking for first-order rules."""

from .model import (
    ArityMismatchError,
    Assignment,
    EvaluationError,
    LogicModel,
    ModelError,
    UnboundVariableError,
    evaluate,
)
from .parser import FormulaSyntaxError, parse_formula
from .syntax import (
    And,
    Atom,
    Const,
    Exists,
    ForAll,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Term,
    Var,
    free_variables,
    pretty_print,
)

__all__ = [
    "And",
    "ArityMismatchError",
    "Assignment",
    "Atom",
    "Const",
    "EvaluationError",
    "Exists",
    "ForAll",
    "Formula",
    "FormulaSyntaxError",
    "Iff",
    "Implies",
    "LogicModel",
    "ModelError",
    "Not",
    "Or",
    "Term",
    "UnboundVariableError",
    "Var",
    "evaluate",
    "free_variables",
    "parse_formula",
    "pretty_print",
]
