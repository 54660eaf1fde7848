from __future__ import annotations

import json
from pathlib import Path

import pytest

from adjudge.dataset import Example
from adjudge.gateway import (
    ChatMessage,
    ChatRequest,
    FixtureStore,
    LlmGateway,
    ProviderConfig,
    structured_repair_request,
)
from adjudge.pipeline import (
    TermIdentification,
    build_predicate_request,
    build_term_request,
    terms_from_document,
)
from adjudge.prompts import PromptLibrary
from adjudge.resources import builtin_task_path
from adjudge.strategies import render_cot_exemplars, render_exemplars
from adjudge.task import TaskDefinition, load_task

MARTIN_TEXT = (
    "On the issue of whether Martin punched James, the fact that Martin smiled "
    "and nodded when asked if he did so by an officer on the scene."
)

MARTIN_TERMS = [
    ("l", "the issue of whether Martin punched James",
     "The scenario frames this as the disputed question to be resolved."),
    ("s", "Martin smiled and nodded when asked if he did so by an officer on the scene",
     "Smiling and nodding in response to a direct question is conduct intended "
     "to communicate, so it can qualify as a statement."),
    ("a", "Martin punched James",
     "This is the factual claim that the nod conveys."),
]

MARTIN_ASSERTIONS = [
    ("IsStatement", ["s1"],
     "The nod and smile were an intentional response to a direct question, "
     "which makes them assertive conduct."),
    ("IsOutOfCourt", ["s1"],
     "The conduct happened at the scene in front of an officer, not during "
     "the trial."),
    ("HasAssertion", ["s1", "a1"],
     "By nodding, Martin conveyed the claim that he punched James."),
    ("IntroducedForLegalIssue", ["s1", "l1"],
     "The evidence is offered on the disputed question of whether Martin "
     "punched James."),
    ("ProvesTruthOfAssertion", ["s1", "l1"],
     "The nod is offered to show that the punch actually happened."),
]


class MockLlm:
    """Builds mock fixtures through the same request-construction code the
    pipeline uses, so digests always line up."""

    def __init__(self, tmp_path: Path, prompts: PromptLibrary | None = None,
                 name: str = "fixtures"):
        self.provider = ProviderConfig(
            id="mock", kind="mock", model="mock-model",
            endpoint=str(tmp_path / f"{name}.jsonl"))
        self.store = FixtureStore(self.provider.endpoint)
        self.prompts = prompts or PromptLibrary()
        self.store.path.touch()

    def gateway(self, cache_dir: Path | None = None) -> LlmGateway:
        return LlmGateway(self.provider, cache_dir=cache_dir)

    def record_request(self, request: ChatRequest, content: str) -> str:
        return self.store.record(self.provider.id, request, content)

    def record_terms(
        self,
        task: TaskDefinition,
        text: str,
        entries: list[tuple[str, str, str]],
        omissions: list[str] | None = None,
        strategy: str = "structured",
        content: str | None = None,
    ) -> TermIdentification:
        document = {
            "entries": [
                {"term": term, "text_span": span, "explanation": explanation}
                for term, span, explanation in entries
            ],
            "omissions": omissions or [],
        }
        request = build_term_request(task, text, self.prompts, self.provider.model, strategy)
        self.record_request(request, content if content is not None else json.dumps(document))
        return terms_from_document(task, document)

    def record_predicates(
        self,
        task: TaskDefinition,
        text: str,
        terms: TermIdentification,
        assertions: list[tuple[str, list[str], str]],
        strategy: str = "structured",
        content: str | None = None,
    ) -> None:
        document = {
            "assertions": [
                {"predicate": predicate, "args": args, "explanation": explanation}
                for predicate, args, explanation in assertions
            ]
        }
        request = build_predicate_request(
            task, text, terms, self.prompts, self.provider.model, strategy)
        self.record_request(request, content if content is not None else json.dumps(document))

    def record_direct(self, task: TaskDefinition, text: str, label: str,
                      assertions: list[tuple[str, list[str], str]] | None = None,
                      content: str | None = None) -> None:
        from adjudge.pipeline import render_predicate_definitions, render_term_definitions
        prompt = self.prompts.render(
            "sd-direct", "direct",
            domain_description=task.domain_description,
            terms=render_term_definitions(task),
            predicates=render_predicate_definitions(task),
            text=text,
            positive_label=task.positive_label,
            negative_label=task.negative_label,
        )
        document = {
            "label": label,
            "assertions": [
                {"predicate": p, "args": a, "explanation": e}
                for p, a, e in (assertions or [])
            ],
        }
        request = ChatRequest(model=self.provider.model,
                              messages=(ChatMessage("user", prompt),),
                              temperature=0.0, response_format="json")
        self.record_request(request, content if content is not None else json.dumps(document))

    def record_few_shot(self, task: TaskDefinition, exemplars, text: str,
                        content: str) -> ChatRequest:
        prompt = self.prompts.render(
            "few-shot", "prompt",
            exemplars=render_exemplars(exemplars),
            text=text,
            positive_label=task.positive_label,
            negative_label=task.negative_label,
        )
        request = ChatRequest(model=self.provider.model,
                              messages=(ChatMessage("user", prompt),), temperature=0.0)
        self.record_request(request, content)
        return request

    def record_cot(self, task: TaskDefinition, exemplars, text: str,
                   content: str) -> ChatRequest:
        prompt = self.prompts.render(
            "cot", "prompt",
            exemplars=render_cot_exemplars(exemplars),
            text=text,
            positive_label=task.positive_label,
            negative_label=task.negative_label,
        )
        request = ChatRequest(model=self.provider.model,
                              messages=(ChatMessage("user", prompt),), temperature=0.0)
        self.record_request(request, content)
        return request

    def record_label_repair(self, request: ChatRequest, first_reply: str,
                            repair_instruction: str, content: str) -> None:
        from dataclasses import replace
        repair_request = replace(
            request,
            messages=request.messages + (
                ChatMessage("assistant", first_reply),
                ChatMessage("user", repair_instruction),
            ),
        )
        self.record_request(repair_request, content)

    def record_martin(self, task: TaskDefinition, strategy: str = "structured",
                      assertions=None) -> TermIdentification:
        terms = self.record_terms(task, MARTIN_TEXT, MARTIN_TERMS, strategy=strategy)
        self.record_predicates(
            task, MARTIN_TEXT, terms,
            assertions if assertions is not None else MARTIN_ASSERTIONS,
            strategy=strategy)
        return terms


# Ten authored scenarios with known gold labels and scripted mock outcomes:
# pred "Yes" fixtures assert all five predicates, pred "No" fixtures leave
# IsOutOfCourt out. Confusion matrix by hand: tp=4, fp=1, fn=2, tn=3.
SYNTHETIC_SCENARIOS = [
    {"id": "ex00", "gold": "Yes", "pred": "Yes",
     "text": "On whether the shipment arrived late, a warehouse log entry stating "
             "the truck arrived at 9 pm, offered to show the arrival time."},
    {"id": "ex01", "gold": "Yes", "pred": "Yes",
     "text": "To prove the dog bit the mail carrier, a neighbor's remark over the "
             "fence that the dog bit someone last week."},
    {"id": "ex02", "gold": "Yes", "pred": "Yes",
     "text": "On the question of who started the fire, a bystander's statement to "
             "a reporter that the tenant lit a match, offered for that fact."},
    {"id": "ex03", "gold": "Yes", "pred": "Yes",
     "text": "To establish the car ran the light, a passenger's text message "
             "saying the light was red when they crossed."},
    {"id": "ex04", "gold": "Yes", "pred": "No",
     "text": "On whether the manager approved the refund, a coworker's voicemail "
             "recounting that the manager said to process it."},
    {"id": "ex05", "gold": "Yes", "pred": "No",
     "text": "To show the patient reported dizziness, a nurse's chart note "
             "recording the complaint, offered to prove the dizziness occurred."},
    {"id": "ex06", "gold": "No", "pred": "Yes",
     "text": "On whether the signature is genuine, an expert compares the ink on "
             "the page to known samples in front of the jury."},
    {"id": "ex07", "gold": "No", "pred": "No",
     "text": "To show the witness can identify the defendant, the witness points "
             "at the defendant from the stand during trial."},
    {"id": "ex08", "gold": "No", "pred": "No",
     "text": "On whether notice was given, the landlord testifies in court that "
             "she mailed the letter herself."},
    {"id": "ex09", "gold": "No", "pred": "No",
     "text": "To prove the machine was inspected, the inspection tag itself is "
             "shown to the jury as a physical object, not for any statement."},
]

SYNTHETIC_EXPECTED = {"tp": 4, "fp": 1, "fn": 2, "tn": 3}


def write_synthetic_dataset(path: Path, scenarios=None, shuffle_seed=None) -> Path:
    rows = list(scenarios or SYNTHETIC_SCENARIOS)
    if shuffle_seed is not None:
        import random

        random.Random(shuffle_seed).shuffle(rows)
    lines = ["index\ttext\tanswer"]
    lines += [f"{r['id']}\t{r['text']}\t{r['gold']}" for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def record_synthetic_structured_run(mock: MockLlm, task: TaskDefinition,
                                    skip_ids: set[str] = frozenset()) -> None:
    """Record term and predicate fixtures driving each scenario to its scripted label."""
    for scenario in SYNTHETIC_SCENARIOS:
        if scenario["id"] in skip_ids:
            continue
        text = scenario["text"]
        terms = mock.record_terms(task, text, [
            ("l", text.split(",")[0], "the clause framing the disputed point"),
            ("s", text, "the communicative act described in the scenario"),
            ("a", "the fact the statement conveys", "the claim at issue"),
        ])
        assertions = [
            ("IsStatement", ["s1"], "the scenario describes a communicative act"),
            ("HasAssertion", ["s1", "a1"], "the act conveys a factual claim"),
            ("IntroducedForLegalIssue", ["s1", "l1"], "offered on the disputed point"),
            ("ProvesTruthOfAssertion", ["s1", "l1"], "offered for its truth"),
        ]
        if scenario["pred"] == "Yes":
            assertions.insert(1, ("IsOutOfCourt", ["s1"], "made away from the trial"))
        mock.record_predicates(task, text, terms, assertions)


@pytest.fixture(scope="session")
def hearsay_task() -> TaskDefinition:
    return load_task(builtin_task_path("hearsay"))


@pytest.fixture(scope="session")
def hearsay_complementary_task() -> TaskDefinition:
    return load_task(builtin_task_path("hearsay-complementary"))


@pytest.fixture()
def martin_example() -> Example:
    return Example("martin", MARTIN_TEXT, "Yes")


__all__ = [
    "MARTIN_ASSERTIONS",
    "MARTIN_TERMS",
    "MARTIN_TEXT",
    "MockLlm",
    "structured_repair_request",
]
