"""Strategy runners: the three-step pipeline, its single-call ablation, and
the few-shot and chain-of-thought baselines. Every runner returns a trace
recording each prompt, raw response, and intermediate structure."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .dataset import Example, normalize_label
from .fol import LogicModel
from .gateway import ChatMessage, ChatRequest, GatewayError, LlmGateway
from .pipeline import (
    Exchange,
    PipelineError,
    PredicateAssertion,
    PredicateExtraction,
    TermIdentification,
    Verdict,
    apply_rule,
    direct_answer_schema,
    extract_predicates,
    identify_terms,
    render_predicate_definitions,
    render_term_definitions,
)
from .prompts import PromptLibrary
from .task import TaskDefinition

STRATEGY_NAMES = ("structured", "structured-complementary", "sd-direct", "few-shot", "cot")

# Rationale scaffold for chain-of-thought exemplars without an authored one.
DEFAULT_RATIONALE = (
    "Check each element required by the rule, in order, against the facts of "
    "the scenario, then conclude."
)


@dataclass(frozen=True)
class Exemplar:
    text: str
    label: str
    rationale: str | None = None


@dataclass(frozen=True)
class ExtractionTrace:
    example_id: str
    strategy: str
    input_text: str
    exchanges: tuple[Exchange, ...]
    status: str  # "ok" | "failed"
    label: str | None = None
    terms: TermIdentification | None = None
    predicates: PredicateExtraction | None = None
    model: LogicModel | None = None
    verdict: Verdict | None = None
    error: dict | None = None

    @property
    def timing_ms(self) -> float:
        return sum(e.latency_s for e in self.exchanges) * 1000.0

    @property
    def prediction(self) -> str | None:
        return self.label if self.status == "ok" else None

    def to_json_dict(self) -> dict:
        # Structured runs record the full verdict object; baselines record
        # the raw label in the same slot.
        if self.verdict is not None:
            verdict_json: object = self.verdict.to_json_dict()
        else:
            verdict_json = self.label
        return {
            "example_id": self.example_id,
            "strategy": self.strategy,
            "input_text": self.input_text,
            "terms": self.terms.to_json_dict() if self.terms else None,
            "predicates": self.predicates.to_json_dict() if self.predicates else None,
            "model": self.model.to_json_dict() if self.model else None,
            "verdict": verdict_json,
            "exchanges": [e.to_json_dict() for e in self.exchanges],
            "status": self.status,
            "error": self.error,
            "timing_ms": self.timing_ms,
        }


def _failed_trace(example: Example, strategy: str, exchanges: Sequence[Exchange],
                  exc: PipelineError) -> ExtractionTrace:
    return ExtractionTrace(
        example_id=example.example_id,
        strategy=strategy,
        input_text=example.text,
        exchanges=tuple(exchanges),
        status="failed",
        error={"step": exc.step, "message": str(exc)},
    )


def run_structured(
    task: TaskDefinition,
    example: Example,
    llm: LlmGateway,
    prompts: PromptLibrary | None = None,
    strategy: str = "structured",
    conflict_policy: str = "negative-label",
) -> ExtractionTrace:
    """Run term identification, predicate extraction, and rule application.

    Predicate extraction is skipped (and the verdict is negative) when a term
    bound by the rule's free variables was not identified; the verdict reason
    flags the short-circuit.
    """
    prompts = prompts or PromptLibrary()
    exchanges: list[Exchange] = []
    try:
        terms, exchange = identify_terms(task, example.text, llm, prompts, strategy)
        exchanges.append(exchange)
        missing_binding = [t for t in sorted(task.binding_terms())
                           if terms.entity_for(t) is None]
        if not terms.entries or missing_binding:
            predicates = None
            verdict = apply_rule(task, terms, PredicateExtraction(()), conflict_policy)
        else:
            predicates, exchange = extract_predicates(
                task, example.text, terms, llm, prompts, strategy)
            exchanges.append(exchange)
            verdict = apply_rule(task, terms, predicates, conflict_policy)
    except PipelineError as exc:
        return _failed_trace(example, strategy, exchanges, exc)
    return ExtractionTrace(
        example_id=example.example_id,
        strategy=strategy,
        input_text=example.text,
        exchanges=tuple(exchanges),
        status="ok",
        label=verdict.label,
        terms=terms,
        predicates=predicates,
        model=verdict.model_used,
        verdict=verdict,
    )


def run_direct(
    task: TaskDefinition,
    example: Example,
    llm: LlmGateway,
    prompts: PromptLibrary | None = None,
) -> ExtractionTrace:
    """Single-call ablation: same definitions, no symbolic verification."""
    prompts = prompts or PromptLibrary()
    prompt = prompts.render(
        "sd-direct", "direct",
        domain_description=task.domain_description,
        terms=render_term_definitions(task),
        predicates=render_predicate_definitions(task),
        text=example.text,
        positive_label=task.positive_label,
        negative_label=task.negative_label,
    )
    request = ChatRequest(model=llm.model, messages=(ChatMessage("user", prompt),),
                          temperature=0.0, response_format="json")
    try:
        completion = llm.complete_structured(request, direct_answer_schema(task))
    except GatewayError as exc:
        return _failed_trace(example, "sd-direct", (),
                             PipelineError(str(exc), step="direct"))
    claims = PredicateExtraction(tuple(
        PredicateAssertion(item["predicate"], tuple(item["args"]), item["explanation"])
        for item in completion.document["assertions"]
    ))
    exchange = Exchange("direct", prompt, completion.raw_response,
                        completion.repairs, completion.latency_s)
    return ExtractionTrace(
        example_id=example.example_id,
        strategy="sd-direct",
        input_text=example.text,
        exchanges=(exchange,),
        status="ok",
        label=completion.document["label"],
        predicates=claims,
    )


def render_exemplars(exemplars: Sequence[Exemplar]) -> str:
    return "\n\n".join(f"Q: {e.text}\nA: {e.label}" for e in exemplars)


def render_cot_exemplars(exemplars: Sequence[Exemplar]) -> str:
    blocks = []
    for exemplar in exemplars:
        rationale = exemplar.rationale or DEFAULT_RATIONALE
        blocks.append(
            f"Q: {exemplar.text}\n"
            f"A: Let's think step by step. {rationale}\n"
            f"Answer: {exemplar.label}"
        )
    return "\n\n".join(blocks)


def few_shot_repair_instruction(labels: tuple[str, str]) -> str:
    return f'Reply with exactly "{labels[0]}" or "{labels[1]}" and nothing else.'


def cot_repair_instruction(labels: tuple[str, str]) -> str:
    return (f'End your reply with a final line of exactly "Answer: {labels[0]}" '
            f'or "Answer: {labels[1]}".')


def parse_answer_line(content: str, labels: tuple[str, str]) -> str | None:
    """Extract the label from the last line of the form 'Answer: <label>'."""
    answers = [
        line.strip()[len("answer:"):]
        for line in content.splitlines()
        if line.strip().lower().startswith("answer:")
    ]
    if not answers:
        return None
    return normalize_label(answers[-1], labels)


def _complete_with_label_repair(
    llm: LlmGateway,
    request: ChatRequest,
    parse,
    repair_instruction: str,
    step: str,
) -> tuple[str, Exchange]:
    response = llm.complete(request)
    latency = response.latency_s
    label = parse(response.content)
    repairs = 0
    final = response.content
    if label is None:
        repair_request = replace(
            request,
            messages=request.messages + (
                ChatMessage("assistant", response.content),
                ChatMessage("user", repair_instruction),
            ),
        )
        retry = llm.complete(repair_request)
        latency += retry.latency_s
        final = retry.content
        label = parse(retry.content)
        repairs = 1
        if label is None:
            raise PipelineError(
                f"could not parse a label after repair; last reply started: "
                f"{retry.content[:120]!r}", step=step)
    return label, Exchange(step, request.messages[-1].content, final, repairs, latency)


def run_few_shot(
    task: TaskDefinition,
    exemplars: Sequence[Exemplar],
    example: Example,
    llm: LlmGateway,
    prompts: PromptLibrary | None = None,
) -> ExtractionTrace:
    """Exemplar-only baseline; the reply must match a label exactly after trimming."""
    if not exemplars:
        raise ValueError("few-shot prompting requires at least one exemplar")
    prompts = prompts or PromptLibrary()
    prompt = prompts.render(
        "few-shot", "prompt",
        exemplars=render_exemplars(exemplars),
        text=example.text,
        positive_label=task.positive_label,
        negative_label=task.negative_label,
    )
    request = ChatRequest(model=llm.model, messages=(ChatMessage("user", prompt),),
                          temperature=0.0)
    labels = task.labels()
    try:
        label, exchange = _complete_with_label_repair(
            llm, request, lambda content: normalize_label(content, labels),
            few_shot_repair_instruction(labels), "few_shot")
    except GatewayError as exc:
        return _failed_trace(example, "few-shot", (), PipelineError(str(exc), step="few_shot"))
    except PipelineError as exc:
        return _failed_trace(example, "few-shot", (), exc)
    return ExtractionTrace(
        example_id=example.example_id,
        strategy="few-shot",
        input_text=example.text,
        exchanges=(exchange,),
        status="ok",
        label=label,
    )


def run_cot(
    task: TaskDefinition,
    exemplars: Sequence[Exemplar],
    example: Example,
    llm: LlmGateway,
    prompts: PromptLibrary | None = None,
) -> ExtractionTrace:
    """Step-by-step baseline; the label comes from the terminal 'Answer:' line."""
    if not exemplars:
        raise ValueError("chain-of-thought prompting requires at least one exemplar")
    prompts = prompts or PromptLibrary()
    prompt = prompts.render(
        "cot", "prompt",
        exemplars=render_cot_exemplars(exemplars),
        text=example.text,
        positive_label=task.positive_label,
        negative_label=task.negative_label,
    )
    request = ChatRequest(model=llm.model, messages=(ChatMessage("user", prompt),),
                          temperature=0.0)
    labels = task.labels()
    try:
        label, exchange = _complete_with_label_repair(
            llm, request, lambda content: parse_answer_line(content, labels),
            cot_repair_instruction(labels), "cot")
    except GatewayError as exc:
        return _failed_trace(example, "cot", (), PipelineError(str(exc), step="cot"))
    except PipelineError as exc:
        return _failed_trace(example, "cot", (), exc)
    return ExtractionTrace(
        example_id=example.example_id,
        strategy="cot",
        input_text=example.text,
        exchanges=(exchange,),
        status="ok",
        label=label,
    )


def check_strategy_task(strategy: str, task: TaskDefinition) -> None:
    if strategy not in STRATEGY_NAMES:
        raise PipelineError(
            f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGY_NAMES)}")
    if strategy == "structured-complementary" and not task.complement_map():
        raise PipelineError(
            "strategy 'structured-complementary' needs a task that declares "
            "complementary predicate pairs")


def run_strategy(
    strategy: str,
    task: TaskDefinition,
    example: Example,
    llm: LlmGateway,
    prompts: PromptLibrary | None = None,
    exemplars: Sequence[Exemplar] = (),
    conflict_policy: str = "negative-label",
) -> ExtractionTrace:
    check_strategy_task(strategy, task)
    if strategy in ("structured", "structured-complementary"):
        return run_structured(task, example, llm, prompts, strategy, conflict_policy)
    if strategy == "sd-direct":
        return run_direct(task, example, llm, prompts)
    if strategy == "few-shot":
        return run_few_shot(task, exemplars, example, llm, prompts)
    return run_cot(task, exemplars, example, llm, prompts)
