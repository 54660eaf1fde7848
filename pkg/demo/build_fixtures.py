#!/usr/bin/env python3
"""Regenerate the demo's mock fixtures.

Writes fixtures.jsonl (and its .requests.jsonl companion) so every command in
the README's demo section runs offline. Run from anywhere:

    python3 demo/build_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from adjudge.gateway import ChatMessage, ChatRequest, FixtureStore, ProviderConfig
from adjudge.pipeline import (
    build_predicate_request,
    build_term_request,
    render_predicate_definitions,
    render_term_definitions,
    terms_from_document,
)
from adjudge.prompts import PromptLibrary
from adjudge.resources import builtin_task_path
from adjudge.strategies import Exemplar, render_cot_exemplars, render_exemplars
from adjudge.task import load_task

BASE = Path(__file__).parent

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
    ("a", "Martin punched James", "This is the factual claim that the nod conveys."),
]

MARTIN_ASSERTIONS = [
    ("IsStatement", ["s1"],
     "The nod and smile were an intentional response to a direct question."),
    ("IsOutOfCourt", ["s1"],
     "The conduct happened at the scene in front of an officer, not at trial."),
    ("HasAssertion", ["s1", "a1"],
     "By nodding, Martin conveyed the claim that he punched James."),
    ("IntroducedForLegalIssue", ["s1", "l1"],
     "The evidence is offered on the disputed question."),
    ("ProvesTruthOfAssertion", ["s1", "l1"],
     "The nod is offered to show the punch actually happened."),
]

# Six authored scenarios: gold label, scripted structured outcome, scripted
# one-call outcome. "short" marks the no-statement path (term omitted, no
# extraction call).
SCENARIOS = [
    {"id": "d0", "gold": "Yes", "structured": "Yes", "direct": "Yes",
     "text": "On whether the tenant paid rent in May, a landlord's ledger entry "
             "reading 'May rent unpaid', offered to show the rent was not paid."},
    {"id": "d1", "gold": "Yes", "structured": "Yes", "direct": "No",
     "text": "To prove the driver was speeding, a passenger's remark to police at "
             "the crash site that the car was going over ninety."},
    {"id": "d2", "gold": "No", "structured": "No", "direct": "No",
     "text": "To show the witness can speak English, her earlier conversation in "
             "English with a clerk, offered only for the fact she spoke it."},
    {"id": "d3", "gold": "No", "structured": "No", "direct": "Yes",
     "text": "On whether the defendant owned the warehouse, the signed deed "
             "itself, admitted as a legally operative document."},
    {"id": "d4", "gold": "Yes", "structured": "No", "direct": "No",
     "text": "To prove the patient took the medication, a pharmacy refill record "
             "noting the prescription was collected."},
    {"id": "d5", "gold": "No", "structured": "short", "direct": "No",
     "text": "On whether the guard was alert, video footage of the guard pacing "
             "the hallway."},
]

EXEMPLARS = [
    Exemplar(
        "To prove the floor was wet, a shopper's comment to a clerk that someone "
        "spilled juice in aisle three.", "Yes",
        "The comment is a statement by a person. It was made in the store, not "
        "during this trial, so it is out of court. It is offered to prove "
        "exactly what it asserts, that juice was spilled. All elements hold."),
    Exemplar(
        "On whether the alarm sounded, the guard testifies at trial that he "
        "heard it go off.", "No",
        "The testimony is a statement. But it is given from the stand during "
        "this trial, so it is not out of court. One element fails, so the rule "
        "is not met."),
]


class Recorder:
    def __init__(self, store: FixtureStore, provider_id: str, model: str,
                 prompts: PromptLibrary):
        self.store = store
        self.provider_id = provider_id
        self.model = model
        self.prompts = prompts

    def record(self, request: ChatRequest, content: str) -> None:
        self.store.record(self.provider_id, request, content)

    def structured_pair(self, task, text, term_rows, assertions):
        document = {
            "entries": [
                {"term": t, "text_span": span, "explanation": why}
                for t, span, why in term_rows
            ],
            "omissions": [],
        }
        request = build_term_request(task, text, self.prompts, self.model)
        self.record(request, json.dumps(document))
        terms = terms_from_document(task, document)
        if assertions is None:
            return
        pred_document = {
            "assertions": [
                {"predicate": p, "args": a, "explanation": e} for p, a, e in assertions
            ]
        }
        request = build_predicate_request(task, text, terms, self.prompts, self.model)
        self.record(request, json.dumps(pred_document))

    def terms_only(self, task, text, term_rows, omissions):
        document = {
            "entries": [
                {"term": t, "text_span": span, "explanation": why}
                for t, span, why in term_rows
            ],
            "omissions": omissions,
        }
        request = build_term_request(task, text, self.prompts, self.model)
        self.record(request, json.dumps(document))

    def direct(self, task, text, label, assertions):
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
                {"predicate": p, "args": a, "explanation": e} for p, a, e in assertions
            ],
        }
        request = ChatRequest(model=self.model, messages=(ChatMessage("user", prompt),),
                              temperature=0.0, response_format="json")
        self.record(request, json.dumps(document))

    def baseline(self, task, step, exemplars, text, content):
        if step == "few-shot":
            block = render_exemplars(exemplars)
        else:
            block = render_cot_exemplars(exemplars)
        prompt = self.prompts.render(
            step, "prompt",
            exemplars=block,
            text=text,
            positive_label=task.positive_label,
            negative_label=task.negative_label,
        )
        request = ChatRequest(model=self.model, messages=(ChatMessage("user", prompt),),
                              temperature=0.0)
        self.record(request, content)


def scenario_assertions(outcome: str):
    base = [
        ("IsStatement", ["s1"], "the scenario describes a communicative act"),
        ("HasAssertion", ["s1", "a1"], "the act conveys a factual claim"),
        ("IntroducedForLegalIssue", ["s1", "l1"], "offered on the disputed point"),
        ("ProvesTruthOfAssertion", ["s1", "l1"], "offered for its truth"),
    ]
    if outcome == "Yes":
        base.insert(1, ("IsOutOfCourt", ["s1"], "made away from the trial"))
    return base


def direct_claims(outcome: str):
    # One-call claims range over term names, not entity ids.
    if outcome != "Yes":
        return []
    return [
        ("IsStatement", ["s"], "the scenario describes a communicative act"),
        ("IsOutOfCourt", ["s"], "made away from the trial"),
    ]


def scenario_terms(text: str):
    return [
        ("l", text.split(",")[0], "the clause framing the disputed point"),
        ("s", text, "the communicative act described in the scenario"),
        ("a", "the fact the statement conveys", "the claim at issue"),
    ]


def main() -> None:
    task = load_task(builtin_task_path("hearsay"))
    prompts = PromptLibrary()
    fixtures_path = BASE / "fixtures.jsonl"
    fixtures_path.unlink(missing_ok=True)
    FixtureStore(fixtures_path).companion_path.unlink(missing_ok=True)
    recorder = Recorder(FixtureStore(fixtures_path), "demo-mock", "mock-model", prompts)

    # Single-example walkthrough under every strategy.
    recorder.structured_pair(task, MARTIN_TEXT, MARTIN_TERMS, MARTIN_ASSERTIONS)
    recorder.direct(task, MARTIN_TEXT, "Yes", [
        ("IsStatement", ["s"], "assertive non-verbal conduct"),
        ("IsOutOfCourt", ["s"], "occurred at the scene"),
    ])
    recorder.baseline(task, "few-shot", EXEMPLARS, MARTIN_TEXT, "Yes")
    recorder.baseline(
        task, "cot", EXEMPLARS, MARTIN_TEXT,
        "The nod is assertive conduct, so there is a statement. It happened at "
        "the scene, out of court. It is offered to prove the punch happened.\n"
        "Answer: Yes")

    # Batch fixtures for the six-example demo dataset.
    for scenario in SCENARIOS:
        text = scenario["text"]
        if scenario["structured"] == "short":
            recorder.terms_only(
                task, text,
                [("l", text.split(",")[0], "the clause framing the disputed point")],
                omissions=["s", "a"])
        else:
            recorder.structured_pair(task, text, scenario_terms(text),
                                     scenario_assertions(scenario["structured"]))
        recorder.direct(task, text, scenario["direct"], direct_claims(scenario["direct"]))

    dataset_lines = ["index\ttext\tanswer"] + [
        f"{s['id']}\t{s['text']}\t{s['gold']}" for s in SCENARIOS
    ]
    (BASE / "dataset.tsv").write_text("\n".join(dataset_lines) + "\n", encoding="utf-8")

    exemplar_lines = ["text\tanswer"] + [f"{e.text}\t{e.label}" for e in EXEMPLARS]
    (BASE / "exemplars.tsv").write_text("\n".join(exemplar_lines) + "\n", encoding="utf-8")
    (BASE / "cot_rationales.json").write_text(
        json.dumps({str(i): e.rationale for i, e in enumerate(EXEMPLARS)}, indent=2)
        + "\n", encoding="utf-8")

    (BASE / "provider.mock.json").write_text(json.dumps({
        "id": "demo-mock",
        "kind": "mock",
        "model": "mock-model",
        "endpoint": str((BASE / "fixtures.jsonl").relative_to(BASE.parent)),
    }, indent=2) + "\n", encoding="utf-8")
    print(f"wrote demo inputs under {BASE}")


if __name__ == "__main__":
    main()
