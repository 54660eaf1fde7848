"""Three-step extraction pipeline: term identification, predicate extraction,
and deterministic rule application against the resulting model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import AdjudgeError
from .fol import LogicModel, evaluate, free_variables
from .gateway import ChatMessage, ChatRequest, GatewayError, LlmGateway
from .prompts import PromptLibrary
from .task import Conflict, TaskDefinition, complementary_conflicts

CONFLICT_POLICIES = ("negative-label", "fail")


class PipelineError(AdjudgeError):
    def __init__(self, message: str, step: str | None = None):
        super().__init__(message if step is None else f"[{step}] {message}")
        self.step = step


class ComplementConflictError(PipelineError):
    """Raised under the 'fail' conflict policy when a pair is asserted both ways."""

    def __init__(self, conflicts: Sequence[Conflict]):
        rendered = "; ".join(
            f"{c.pair[0]}/{c.pair[1]} on ({', '.join(c.args)})" for c in conflicts)
        super().__init__(f"complementary predicates asserted together: {rendered}",
                         step="rule_application")
        self.conflicts = tuple(conflicts)


@dataclass(frozen=True)
class TermEntry:
    term: str
    entity_id: str
    text_span: str
    explanation: str

    def to_json_dict(self) -> dict:
        return {"term": self.term, "entity_id": self.entity_id,
                "text_span": self.text_span, "explanation": self.explanation}


@dataclass(frozen=True)
class TermIdentification:
    entries: tuple[TermEntry, ...]
    omissions: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "omissions", tuple(self.omissions))
        ids = [e.entity_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("entity identifiers must be unique within an example")

    def entity_for(self, term: str) -> str | None:
        """First identified entity for a term, in response order."""
        for entry in self.entries:
            if entry.term == term:
                return entry.entity_id
        return None

    def entity_ids(self) -> tuple[str, ...]:
        return tuple(e.entity_id for e in self.entries)

    def to_json_dict(self) -> dict:
        return {"entries": [e.to_json_dict() for e in self.entries],
                "omissions": list(self.omissions)}


@dataclass(frozen=True)
class PredicateAssertion:
    predicate: str
    args: tuple[str, ...]
    explanation: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))

    def to_json_dict(self) -> dict:
        return {"predicate": self.predicate, "args": list(self.args),
                "explanation": self.explanation}


@dataclass(frozen=True)
class PredicateExtraction:
    assertions: tuple[PredicateAssertion, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assertions", tuple(self.assertions))

    def as_pairs(self) -> list[tuple[str, tuple[str, ...]]]:
        return [(a.predicate, a.args) for a in self.assertions]

    def to_json_dict(self) -> dict:
        return {"assertions": [a.to_json_dict() for a in self.assertions]}


@dataclass(frozen=True)
class Verdict:
    satisfied: bool
    label: str
    model_used: LogicModel
    conflicts: tuple[Conflict, ...]
    fallback_applied: bool
    reason: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "label": self.label,
            "conflicts": [c.to_json_dict() for c in self.conflicts],
            "fallback_applied": self.fallback_applied,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class Exchange:
    """One recorded LLM interaction: the rendered prompt and the final reply."""

    step: str
    prompt: str
    raw_response: str
    repairs: int
    latency_s: float = 0.0

    def to_json_dict(self) -> dict:
        return {"step": self.step, "prompt": self.prompt,
                "raw_response": self.raw_response, "repairs": self.repairs}


def render_term_definitions(task: TaskDefinition) -> str:
    lines = []
    for term in task.terms:
        marker = " (required)" if term.required else ""
        lines.append(f"- {term.name}{marker}: {term.description}")
    return "\n".join(lines)


def render_predicate_definitions(task: TaskDefinition) -> str:
    lines = []
    for pred in task.predicates:
        signature = f"{pred.name}({', '.join(pred.arg_terms)})"
        suffix = f" [opposite of {pred.complement_of}]" if pred.complement_of else ""
        lines.append(f"- {signature}{suffix}: {pred.description}")
    return "\n".join(lines)


def render_identified_entities(terms: TermIdentification) -> str:
    lines = [
        f'- {entry.entity_id} (term {entry.term}): "{entry.text_span}"'
        for entry in terms.entries
    ]
    for omitted in terms.omissions:
        lines.append(f"- term {omitted}: not present in the scenario")
    return "\n".join(lines)


def term_identification_schema(task: TaskDefinition) -> dict:
    term_names = sorted(task.term_names())
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "entries": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "term": {"enum": term_names},
                        "text_span": {"type": "string"},
                        "explanation": {"type": "string"},
                    },
                    "required": ["term", "text_span", "explanation"],
                },
            },
            "omissions": {"type": "array", "items": {"enum": term_names}},
        },
        "required": ["entries", "omissions"],
    }


def _assertion_branch(predicate: str, arity: int, arg_values: list[str]) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "predicate": {"const": predicate},
            "args": {
                "type": "array",
                "items": {"enum": arg_values},
                "minItems": arity,
                "maxItems": arity,
            },
            "explanation": {"type": "string"},
        },
        "required": ["predicate", "args", "explanation"],
    }


def predicate_extraction_schema(task: TaskDefinition, terms: TermIdentification) -> dict:
    """Closed schema over declared predicates and identified entity ids.

    Per-predicate branches pin the exact arity, so an assertion can neither
    invent entities nor misapply a predicate.
    """
    entity_ids = sorted(terms.entity_ids())
    branches = [
        _assertion_branch(pred.name, pred.arity, entity_ids) for pred in task.predicates
    ]
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "assertions": {"type": "array", "items": {"oneOf": branches}},
        },
        "required": ["assertions"],
    }


def direct_answer_schema(task: TaskDefinition) -> dict:
    term_names = sorted(task.term_names())
    branches = [
        _assertion_branch(pred.name, pred.arity, term_names) for pred in task.predicates
    ]
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "label": {"enum": [task.positive_label, task.negative_label]},
            "assertions": {"type": "array", "items": {"oneOf": branches}},
        },
        "required": ["label", "assertions"],
    }


def build_term_request(
    task: TaskDefinition,
    text: str,
    prompts: PromptLibrary,
    model: str,
    strategy: str = "structured",
    max_output_tokens: int = 2048,
) -> ChatRequest:
    prompt = prompts.render(
        strategy, "term_identification",
        domain_description=task.domain_description,
        terms=render_term_definitions(task),
        text=text,
    )
    return ChatRequest(model=model, messages=(ChatMessage("user", prompt),),
                       temperature=0.0, max_output_tokens=max_output_tokens,
                       response_format="json")


def build_predicate_request(
    task: TaskDefinition,
    text: str,
    terms: TermIdentification,
    prompts: PromptLibrary,
    model: str,
    strategy: str = "structured",
    max_output_tokens: int = 2048,
) -> ChatRequest:
    prompt = prompts.render(
        strategy, "predicate_extraction",
        domain_description=task.domain_description,
        predicates=render_predicate_definitions(task),
        terms=render_identified_entities(terms),
        text=text,
    )
    return ChatRequest(model=model, messages=(ChatMessage("user", prompt),),
                       temperature=0.0, max_output_tokens=max_output_tokens,
                       response_format="json")


def identify_terms(
    task: TaskDefinition,
    text: str,
    llm: LlmGateway,
    prompts: PromptLibrary | None = None,
    strategy: str = "structured",
) -> tuple[TermIdentification, Exchange]:
    """Ask the model which declared terms appear in the text.

    Entity identifiers are generated here as <term><ordinal> (s1, l1, a1),
    never taken from the model.
    """
    if not text or not text.strip():
        raise PipelineError("input text is empty", step="term_identification")
    prompts = prompts or PromptLibrary()
    request = build_term_request(task, text, prompts, llm.model, strategy)
    try:
        completion = llm.complete_structured(request, term_identification_schema(task))
    except GatewayError as exc:
        raise PipelineError(str(exc), step="term_identification") from exc
    identification = terms_from_document(task, completion.document)
    exchange = Exchange("term_identification", request.messages[-1].content,
                        completion.raw_response, completion.repairs, completion.latency_s)
    return identification, exchange


def terms_from_document(task: TaskDefinition, document: dict) -> TermIdentification:
    """Turn a validated term-identification reply into entity entries.

    Entity identifiers are <term><ordinal> in reply order. Omissions are
    normalized to every declared term with no entry, whether the model listed
    it or simply skipped it; an entry wins over a listed omission.
    """
    counters: dict[str, int] = {}
    entries = []
    for item in document["entries"]:
        term = item["term"]
        counters[term] = counters.get(term, 0) + 1
        entries.append(TermEntry(
            term=term,
            entity_id=f"{term}{counters[term]}",
            text_span=item["text_span"],
            explanation=item["explanation"],
        ))
    present = {entry.term for entry in entries}
    omissions = tuple(term.name for term in task.terms if term.name not in present)
    return TermIdentification(tuple(entries), omissions)


def extract_predicates(
    task: TaskDefinition,
    text: str,
    terms: TermIdentification,
    llm: LlmGateway,
    prompts: PromptLibrary | None = None,
    strategy: str = "structured",
) -> tuple[PredicateExtraction, Exchange]:
    """Ask the model which declared predicates hold over the identified entities."""
    if not terms.entries:
        raise PipelineError("no identified terms to extract predicates for",
                            step="predicate_extraction")
    prompts = prompts or PromptLibrary()
    request = build_predicate_request(task, text, terms, prompts, llm.model, strategy)
    try:
        completion = llm.complete_structured(request, predicate_extraction_schema(task, terms))
    except GatewayError as exc:
        raise PipelineError(str(exc), step="predicate_extraction") from exc
    assertions = tuple(
        PredicateAssertion(item["predicate"], tuple(item["args"]), item["explanation"])
        for item in completion.document["assertions"]
    )
    exchange = Exchange("predicate_extraction", request.messages[-1].content,
                        completion.raw_response, completion.repairs, completion.latency_s)
    return PredicateExtraction(assertions), exchange


def build_model(terms: TermIdentification, predicates: PredicateExtraction) -> LogicModel:
    """Closed-world model: domain from identified entities, extensions from assertions."""
    domain = frozenset(terms.entity_ids())
    extensions: dict[str, set[tuple[str, ...]]] = {}
    for assertion in predicates.assertions:
        for entity in assertion.args:
            if entity not in domain:
                raise PipelineError(
                    f"assertion {assertion.predicate}({', '.join(assertion.args)}) "
                    f"references unknown entity {entity!r}", step="rule_application")
        extensions.setdefault(assertion.predicate, set()).add(assertion.args)
    return LogicModel(domain, {k: frozenset(v) for k, v in extensions.items()})


def apply_rule(
    task: TaskDefinition,
    terms: TermIdentification,
    predicates: PredicateExtraction,
    conflict_policy: str = "negative-label",
) -> Verdict:
    """Evaluate the task rule over the extraction output.

    Each free variable of the rule binds to the entity identified for the
    same-named term. A missing binding term means the rule cannot hold; a
    complementary conflict forces the negative label under the default policy.
    """
    if conflict_policy not in CONFLICT_POLICIES:
        raise ValueError(f"unknown conflict policy {conflict_policy!r}")
    formula = task.parsed_formula()
    model = build_model(terms, predicates)
    conflicts = tuple(complementary_conflicts(predicates.as_pairs(), task))

    binding: dict[str, str] = {}
    missing: list[str] = []
    for var in sorted(free_variables(formula)):
        entity = terms.entity_for(var)
        if entity is None:
            missing.append(var)
        else:
            binding[var] = entity
    if missing:
        return Verdict(
            satisfied=False,
            label=task.negative_label,
            model_used=model,
            conflicts=conflicts,
            fallback_applied=False,
            reason=f"no entity identified for term(s): {', '.join(missing)}",
        )
    if conflicts:
        if conflict_policy == "fail":
            raise ComplementConflictError(conflicts)
        rendered = "; ".join(f"{c.pair[0]}/{c.pair[1]} on ({', '.join(c.args)})"
                             for c in conflicts)
        return Verdict(
            satisfied=False,
            label=task.negative_label,
            model_used=model,
            conflicts=conflicts,
            fallback_applied=True,
            reason=f"complementary predicates asserted together: {rendered}",
        )
    satisfied = evaluate(formula, model, binding)
    return Verdict(
        satisfied=satisfied,
        label=task.positive_label if satisfied else task.negative_label,
        model_used=model,
        conflicts=conflicts,
        fallback_applied=False,
    )
