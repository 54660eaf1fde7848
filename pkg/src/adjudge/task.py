"""Externalized task definitions: terms, predicates, complement pairs, and the rule."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping

from .errors import AdjudgeError
from .fol import Atom, Formula, FormulaSyntaxError, free_variables, parse_formula
from .fol.syntax import IDENTIFIER_RE, KEYWORDS


class TaskFileError(AdjudgeError):
    """The task file cannot be read at all (missing path, unreadable)."""


class TaskDocumentError(AdjudgeError):
    """The task file is readable but not a well-formed task document."""


class TaskValidationError(AdjudgeError):
    """The task document parsed but has error-severity validation findings."""

    def __init__(self, report: "ValidationReport"):
        super().__init__("task validation failed:\n" + report.render())
        self.report = report


@dataclass(frozen=True)
class TermDef:
    name: str
    description: str
    required: bool = True


@dataclass(frozen=True)
class PredicateDef:
    name: str
    arity: int
    arg_terms: tuple[str, ...]
    description: str
    complement_of: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "arg_terms", tuple(self.arg_terms))


@dataclass(frozen=True)
class TaskDefinition:
    task_name: str
    domain_description: str
    terms: tuple[TermDef, ...]
    predicates: tuple[PredicateDef, ...]
    task_predicate_name: str
    task_formula: str
    positive_label: str = "Yes"
    negative_label: str = "No"

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "predicates", tuple(self.predicates))

    def term_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.terms)

    def predicate_by_name(self) -> dict[str, PredicateDef]:
        return {p.name: p for p in self.predicates}

    def parsed_formula(self) -> Formula:
        return _parse_cached(self.task_formula)

    def binding_terms(self) -> frozenset[str]:
        """Term names bound to the formula's free variables at rule application."""
        return free_variables(self.parsed_formula())

    def complement_map(self) -> dict[str, str]:
        """Symmetric closure of the declared complement pairs."""
        pairs: dict[str, str] = {}
        for pred in self.predicates:
            if pred.complement_of:
                pairs[pred.name] = pred.complement_of
                pairs.setdefault(pred.complement_of, pred.name)
        return pairs

    def labels(self) -> tuple[str, str]:
        return (self.positive_label, self.negative_label)

    def to_json_dict(self) -> dict:
        doc: dict = {
            "task_name": self.task_name,
            "domain_description": self.domain_description,
            "terms": [
                {"name": t.name, "description": t.description, "required": t.required}
                for t in self.terms
            ],
            "predicates": [],
            "task_predicate_name": self.task_predicate_name,
            "task_formula": self.task_formula,
            "positive_label": self.positive_label,
            "negative_label": self.negative_label,
        }
        for pred in self.predicates:
            entry: dict = {
                "name": pred.name,
                "arity": pred.arity,
                "arg_terms": list(pred.arg_terms),
                "description": pred.description,
            }
            if pred.complement_of is not None:
                entry["complement_of"] = pred.complement_of
            doc["predicates"].append(entry)
        return doc


@lru_cache(maxsize=128)
def _parse_cached(text: str) -> Formula:
    return parse_formula(text)


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    code: str
    message: str
    location: str

    def render(self) -> str:
        return f"{self.severity.upper()} {self.code} at {self.location}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "warning")

    @property
    def ok(self) -> bool:
        return not self.errors

    def render(self) -> str:
        if not self.findings:
            return "no findings"
        return "\n".join(f.render() for f in self.findings)


def _natural_key(location: str) -> tuple:
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", location))


def _valid_identifier(name: str) -> bool:
    return bool(IDENTIFIER_RE.match(name)) and name not in KEYWORDS


def validate_task(defn: TaskDefinition) -> ValidationReport:
    """Check a task definition and return findings ordered by location."""
    findings: list[Finding] = []

    def error(code: str, message: str, location: str) -> None:
        findings.append(Finding("error", code, message, location))

    def warning(code: str, message: str, location: str) -> None:
        findings.append(Finding("warning", code, message, location))

    seen_terms: set[str] = set()
    for i, term in enumerate(defn.terms):
        loc = f"terms[{i}]"
        if not _valid_identifier(term.name):
            error("INVALID_IDENTIFIER", f"term name {term.name!r} is not a valid identifier", loc)
        if term.name in seen_terms:
            error("DUPLICATE_TERM", f"term {term.name!r} declared more than once", loc)
        seen_terms.add(term.name)

    declared = {p.name for p in defn.predicates}
    by_name = defn.predicate_by_name()
    seen_preds: set[str] = set()
    for i, pred in enumerate(defn.predicates):
        loc = f"predicates[{i}]"
        if not _valid_identifier(pred.name):
            error("INVALID_IDENTIFIER", f"predicate name {pred.name!r} is not a valid identifier", loc)
        if pred.name in seen_preds:
            error("DUPLICATE_PREDICATE", f"predicate {pred.name!r} declared more than once", loc)
        seen_preds.add(pred.name)
        if pred.arity < 1:
            error("INVALID_ARITY", f"predicate {pred.name!r} has non-positive arity {pred.arity}", loc)
        if pred.arity != len(pred.arg_terms):
            error("ARG_TERMS_MISMATCH",
                  f"predicate {pred.name!r} declares arity {pred.arity} but "
                  f"{len(pred.arg_terms)} arg_terms", loc)
        for arg_term in pred.arg_terms:
            if arg_term not in seen_terms:
                error("UNDECLARED_ARG_TERM",
                      f"predicate {pred.name!r} ranges over undeclared term {arg_term!r}", loc)
        if pred.complement_of is not None:
            loc_c = f"{loc}.complement_of"
            partner = by_name.get(pred.complement_of)
            if pred.complement_of == pred.name:
                error("COMPLEMENT_SELF", f"predicate {pred.name!r} cannot complement itself", loc_c)
            elif partner is None:
                error("COMPLEMENT_UNDECLARED",
                      f"complement {pred.complement_of!r} of {pred.name!r} is not declared", loc_c)
            else:
                if partner.arity != pred.arity:
                    error("COMPLEMENT_ARITY_MISMATCH",
                          f"{pred.name!r} (arity {pred.arity}) and its complement "
                          f"{partner.name!r} (arity {partner.arity}) differ in arity", loc_c)
                if partner.complement_of is not None and partner.complement_of != pred.name:
                    error("COMPLEMENT_ASYMMETRY",
                          f"{pred.name!r} names {partner.name!r} as complement but "
                          f"{partner.name!r} names {partner.complement_of!r}", loc_c)

    if not defn.positive_label or not defn.negative_label:
        error("LABEL_CONFLICT", "labels must be non-empty", "positive_label")
    elif defn.positive_label == defn.negative_label:
        error("LABEL_CONFLICT", f"labels must be distinct, both are {defn.positive_label!r}",
              "positive_label")

    if not _valid_identifier(defn.task_predicate_name):
        error("INVALID_IDENTIFIER",
              f"task predicate name {defn.task_predicate_name!r} is not a valid identifier",
              "task_predicate_name")

    formula: Formula | None = None
    try:
        formula = parse_formula(defn.task_formula)
    except FormulaSyntaxError as exc:
        error("FORMULA_SYNTAX", str(exc), "task_formula")

    used_predicates: set[str] = set()
    if formula is not None:
        for atom in _atoms(formula):
            used_predicates.add(atom.predicate)
            declared_pred = by_name.get(atom.predicate)
            if declared_pred is None:
                error("UNDECLARED_PREDICATE",
                      f"formula references undeclared predicate {atom.predicate!r}",
                      "task_formula")
            elif declared_pred.arity != len(atom.args):
                error("PREDICATE_ARITY_MISMATCH",
                      f"formula applies {atom.predicate!r} to {len(atom.args)} argument(s) "
                      f"but it is declared with arity {declared_pred.arity}", "task_formula")
        for var in sorted(free_variables(formula)):
            if var not in seen_terms:
                error("UNDECLARED_TERM",
                      f"free variable {var!r} of the formula is not a declared term",
                      "task_formula")
        complements = defn.complement_map()
        for i, pred in enumerate(defn.predicates):
            if pred.name in used_predicates:
                continue
            partner = complements.get(pred.name)
            if partner is not None and partner in used_predicates:
                continue
            warning("UNUSED_PREDICATE",
                    f"predicate {pred.name!r} is never used in the task formula "
                    "and is not a complement of one that is", f"predicates[{i}]")

    findings.sort(key=lambda f: (_natural_key(f.location), f.code, f.message))
    return ValidationReport(tuple(findings))


def _atoms(formula: Formula) -> Iterable[Atom]:
    stack = [formula]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            yield node
        elif hasattr(node, "operand"):
            stack.append(node.operand)
        elif hasattr(node, "left"):
            stack.extend((node.left, node.right))
        elif hasattr(node, "body"):
            stack.append(node.body)


def parse_task_document(data: object) -> TaskDefinition:
    """Build a TaskDefinition from a decoded JSON document (structure only)."""
    if not isinstance(data, dict):
        raise TaskDocumentError("task document must be a JSON object")
    known = {"task_name", "domain_description", "terms", "predicates",
             "task_predicate_name", "task_formula", "positive_label", "negative_label"}
    unknown = set(data) - known
    if unknown:
        raise TaskDocumentError(f"unknown task document keys: {', '.join(sorted(unknown))}")
    try:
        terms = tuple(
            TermDef(
                name=_req_str(entry, "name", f"terms[{i}]"),
                description=_req_str(entry, "description", f"terms[{i}]"),
                required=bool(entry.get("required", True)),
            )
            for i, entry in enumerate(_req_list(data, "terms"))
        )
        predicates = tuple(
            PredicateDef(
                name=_req_str(entry, "name", f"predicates[{i}]"),
                arity=_req_int(entry, "arity", f"predicates[{i}]"),
                arg_terms=tuple(_req_str_list(entry, "arg_terms", f"predicates[{i}]")),
                description=_req_str(entry, "description", f"predicates[{i}]"),
                complement_of=_opt_str(entry, "complement_of", f"predicates[{i}]"),
            )
            for i, entry in enumerate(_req_list(data, "predicates"))
        )
        return TaskDefinition(
            task_name=_req_str(data, "task_name", "document"),
            domain_description=_req_str(data, "domain_description", "document"),
            terms=terms,
            predicates=predicates,
            task_predicate_name=_req_str(data, "task_predicate_name", "document"),
            task_formula=_req_str(data, "task_formula", "document"),
            positive_label=str(data.get("positive_label", "Yes")),
            negative_label=str(data.get("negative_label", "No")),
        )
    except TaskDocumentError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise TaskDocumentError(f"malformed task document: {exc}") from exc


def _req_str(entry: Mapping, key: str, where: str) -> str:
    value = entry.get(key)
    if not isinstance(value, str):
        raise TaskDocumentError(f"{where}: field {key!r} must be a string")
    return value


def _opt_str(entry: Mapping, key: str, where: str) -> str | None:
    value = entry.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise TaskDocumentError(f"{where}: field {key!r} must be a string")
    return value


def _req_int(entry: Mapping, key: str, where: str) -> int:
    value = entry.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise TaskDocumentError(f"{where}: field {key!r} must be an integer")
    return value


def _req_list(data: Mapping, key: str) -> list:
    value = data.get(key)
    if not isinstance(value, list):
        raise TaskDocumentError(f"field {key!r} must be a list")
    return value


def _req_str_list(entry: Mapping, key: str, where: str) -> list[str]:
    value = entry.get(key)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise TaskDocumentError(f"{where}: field {key!r} must be a list of strings")
    return value


def load_task(path: str | Path) -> TaskDefinition:
    """Load, parse, and validate a task file; any error finding fails the load."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TaskFileError(f"cannot read task file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaskDocumentError(f"task file {path} is not valid JSON: {exc}") from exc
    defn = parse_task_document(data)
    report = validate_task(defn)
    if not report.ok:
        raise TaskValidationError(report)
    return defn


def write_task(defn: TaskDefinition, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(defn.to_json_dict(), indent=2, sort_keys=False) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Conflict:
    """A tuple asserted under both predicates of a complementary pair."""

    pair: tuple[str, str]
    args: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {"pair": list(self.pair), "args": list(self.args)}


def complementary_conflicts(
    assertions: Iterable[tuple[str, tuple[str, ...]]],
    defn: TaskDefinition,
) -> list[Conflict]:
    """Find argument tuples asserted under both a predicate and its complement.

    Accepts (predicate, args) pairs; every predicate must be declared in the
    task. Pair order and assertion order never affect the result.
    """
    declared = {p.name for p in defn.predicates}
    complements = defn.complement_map()
    asserted: set[tuple[str, tuple[str, ...]]] = set()
    for predicate, args in assertions:
        if predicate not in declared:
            raise AdjudgeError(f"assertion references undeclared predicate {predicate!r}")
        asserted.add((predicate, tuple(args)))
    conflicts = set()
    for predicate, args in asserted:
        partner = complements.get(predicate)
        if partner is not None and (partner, args) in asserted:
            conflicts.add(Conflict(tuple(sorted((predicate, partner))), args))
    return sorted(conflicts, key=lambda c: (c.pair, c.args))
