"""Seeded random generators for formulas, models, and assignments."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from adjudge.fol import (
    And,
    Atom,
    Exists,
    ForAll,
    Formula,
    Iff,
    Implies,
    LogicModel,
    Not,
    Or,
    Var,
    free_variables,
)

PRED_POOL = ("P", "Q", "R")
VAR_POOL = ("x", "y", "z")


@dataclass
class Case:
    formula: Formula
    model: LogicModel
    assignment: dict[str, str]


def random_formula(
    rng: random.Random,
    depth: int,
    arities: dict[str, int],
    bound: tuple[str, ...] = (),
) -> Formula:
    """Generate a well-scoped formula of at most the given depth."""
    if depth <= 0:
        return _random_atom(rng, arities, bound)
    kind = rng.choice(("atom", "not", "and", "or", "implies", "iff", "exists", "all"))
    if kind == "atom":
        return _random_atom(rng, arities, bound)
    if kind == "not":
        return Not(random_formula(rng, depth - 1, arities, bound))
    if kind in ("and", "or", "implies", "iff"):
        node = {"and": And, "or": Or, "implies": Implies, "iff": Iff}[kind]
        return node(
            random_formula(rng, depth - 1, arities, bound),
            random_formula(rng, depth - 1, arities, bound),
        )
    var = rng.choice(VAR_POOL + ("u", "v"))
    node = Exists if kind == "exists" else ForAll
    return node(var, random_formula(rng, depth - 1, arities, bound + (var,)))


def _random_atom(rng: random.Random, arities: dict[str, int], bound: tuple[str, ...]) -> Atom:
    predicate = rng.choice(sorted(arities))
    candidates = tuple(bound) + VAR_POOL
    args = tuple(Var(rng.choice(candidates)) for _ in range(arities[predicate]))
    return Atom(predicate, args)


def random_case(rng: random.Random, max_depth: int = 4, max_domain: int = 3) -> Case:
    """Generate a (formula, model, assignment) triple for oracle comparison."""
    domain = tuple(f"e{i}" for i in range(1, rng.randint(1, max_domain) + 1))
    arities = {name: rng.randint(1, 2) for name in PRED_POOL[: rng.randint(1, len(PRED_POOL))]}
    formula = random_formula(rng, rng.randint(0, max_depth), arities)
    extensions = {}
    for name, arity in arities.items():
        all_tuples = list(itertools.product(domain, repeat=arity))
        extensions[name] = frozenset(t for t in all_tuples if rng.random() < 0.5)
    model = LogicModel(frozenset(domain), extensions)
    assignment = {var: rng.choice(domain) for var in sorted(free_variables(formula))}
    return Case(formula, model, assignment)
