"""Finite closed-world models and formula evaluation against them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from adjudge.errors import AdjudgeError

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
    Var,
    free_variables,
)

# Maps each free variable of a formula to an entity in the model's domain.
Assignment = Mapping[str, str]


class EvaluationError(AdjudgeError):
    pass


class UnboundVariableError(EvaluationError):
    pass


class ArityMismatchError(EvaluationError):
    pass


class ModelError(AdjudgeError):
    pass


@dataclass(frozen=True)
class LogicModel:
    """A finite entity domain plus predicate extensions.

    Closed world: any tuple absent from a predicate's extension is false,
    and a predicate with no extension at all is false everywhere.
    """

    domain: frozenset[str]
    extensions: Mapping[str, frozenset[tuple[str, ...]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", frozenset(self.domain))
        normalized: dict[str, frozenset[tuple[str, ...]]] = {}
        for name, tuples in self.extensions.items():
            normalized[name] = frozenset(tuple(t) for t in tuples)
        object.__setattr__(self, "extensions", normalized)
        for name, tuples in self.extensions.items():
            arities = {len(t) for t in tuples}
            if len(arities) > 1:
                raise ModelError(f"predicate {name!r} has tuples of unequal arity: {sorted(arities)}")
            for entry in tuples:
                for entity in entry:
                    if entity not in self.domain:
                        raise ModelError(
                            f"entity {entity!r} in extension of {name!r} is not in the domain")

    def arity_of(self, predicate: str) -> int | None:
        """Arity implied by a non-empty extension, or None when unconstrained."""
        tuples = self.extensions.get(predicate)
        if not tuples:
            return None
        return len(next(iter(tuples)))

    def holds(self, predicate: str, args: tuple[str, ...]) -> bool:
        return args in self.extensions.get(predicate, frozenset())

    def to_json_dict(self) -> dict:
        """Canonical form: domain and tuples sorted lexicographically."""
        return {
            "domain": sorted(self.domain),
            "extensions": {
                name: [list(entry) for entry in sorted(self.extensions[name])]
                for name in sorted(self.extensions)
            },
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "LogicModel":
        try:
            domain = data["domain"]
            extensions = {
                name: [tuple(entry) for entry in tuples]
                for name, tuples in data["extensions"].items()
            }
        except (KeyError, TypeError, AttributeError) as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
        return cls(frozenset(domain), {k: frozenset(v) for k, v in extensions.items()})


def evaluate(formula: Formula, model: LogicModel, assignment: Assignment) -> bool:
    """Decide satisfaction of a formula in a finite model under an assignment.

    Quantifiers range over the whole domain. The assignment must cover
    exactly the formula's free variables and map into the domain.
    """
    free = free_variables(formula)
    missing = free - set(assignment)
    if missing:
        raise UnboundVariableError(f"unbound free variables: {', '.join(sorted(missing))}")
    extra = set(assignment) - free
    if extra:
        raise EvaluationError(
            f"assignment binds variables not free in the formula: {', '.join(sorted(extra))}")
    for var, entity in assignment.items():
        if entity not in model.domain:
            raise EvaluationError(f"assignment maps {var!r} to {entity!r}, not in the domain")
    return _eval(formula, model, dict(assignment))


def _eval(formula: Formula, model: LogicModel, env: dict[str, str]) -> bool:
    if isinstance(formula, Atom):
        return _eval_atom(formula, model, env)
    if isinstance(formula, Not):
        return not _eval(formula.operand, model, env)
    if isinstance(formula, And):
        return _eval(formula.left, model, env) and _eval(formula.right, model, env)
    if isinstance(formula, Or):
        return _eval(formula.left, model, env) or _eval(formula.right, model, env)
    if isinstance(formula, Implies):
        return (not _eval(formula.left, model, env)) or _eval(formula.right, model, env)
    if isinstance(formula, Iff):
        return _eval(formula.left, model, env) == _eval(formula.right, model, env)
    if isinstance(formula, Exists):
        return any(
            _eval(formula.body, model, {**env, formula.var: entity})
            for entity in sorted(model.domain)
        )
    if isinstance(formula, ForAll):
        return all(
            _eval(formula.body, model, {**env, formula.var: entity})
            for entity in sorted(model.domain)
        )
    raise TypeError(f"not a formula node: {formula!r}")


def _eval_atom(atom: Atom, model: LogicModel, env: dict[str, str]) -> bool:
    resolved = []
    for term in atom.args:
        if isinstance(term, Var):
            try:
                resolved.append(env[term.name])
            except KeyError:
                raise UnboundVariableError(f"unbound free variable {term.name!r}") from None
        elif isinstance(term, Const):
            if term.name not in model.domain:
                raise EvaluationError(f"constant {term.name!r} is not in the domain")
            resolved.append(term.name)
        else:
            raise TypeError(f"not a term: {term!r}")
    arity = model.arity_of(atom.predicate)
    if arity is not None and arity != len(resolved):
        raise ArityMismatchError(
            f"predicate {atom.predicate!r} applied to {len(resolved)} argument(s) "
            f"but its extension has arity {arity}")
    return model.holds(atom.predicate, tuple(resolved))
