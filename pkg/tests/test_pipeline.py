from __future__ import annotations

import json
import random

import pytest

from adjudge.fol import evaluate
from adjudge.pipeline import (
    ComplementConflictError,
    PipelineError,
    PredicateAssertion,
    PredicateExtraction,
    TermEntry,
    TermIdentification,
    apply_rule,
    build_model,
    build_predicate_request,
    extract_predicates,
    identify_terms,
    predicate_extraction_schema,
)
from conftest import MARTIN_ASSERTIONS, MARTIN_TERMS, MARTIN_TEXT, MockLlm
from oracles import brute_force_evaluate


def entity_terms(*pairs: tuple[str, str]) -> TermIdentification:
    entries = tuple(
        TermEntry(term, entity_id, f"span for {entity_id}", f"why {entity_id}")
        for term, entity_id in pairs
    )
    return TermIdentification(entries, ())


def extraction(*assertions: tuple[str, tuple[str, ...]]) -> PredicateExtraction:
    return PredicateExtraction(tuple(
        PredicateAssertion(predicate, args, f"{predicate} holds") for predicate, args in assertions
    ))


MARTIN_FULL = extraction(
    ("IsStatement", ("s1",)),
    ("IsOutOfCourt", ("s1",)),
    ("HasAssertion", ("s1", "a1")),
    ("IntroducedForLegalIssue", ("s1", "l1")),
    ("ProvesTruthOfAssertion", ("s1", "l1")),
)

MARTIN_ENTITIES = entity_terms(("s", "s1"), ("l", "l1"), ("a", "a1"))


def test_identify_terms_martin(tmp_path, hearsay_task):
    mock = MockLlm(tmp_path)
    mock.record_terms(hearsay_task, MARTIN_TEXT, MARTIN_TERMS)
    terms, exchange = identify_terms(hearsay_task, MARTIN_TEXT, mock.gateway(), mock.prompts)
    assert [(e.term, e.entity_id) for e in terms.entries] == [
        ("l", "l1"), ("s", "s1"), ("a", "a1")]
    assert terms.entries[1].text_span == MARTIN_TERMS[1][1]
    assert terms.omissions == ()
    assert exchange.step == "term_identification"
    assert MARTIN_TEXT in exchange.prompt
    assert exchange.repairs == 0


def test_identify_terms_normalizes_omissions(tmp_path, hearsay_task):
    mock = MockLlm(tmp_path)
    text = "The parties dispute whether the contract was signed before noon."
    mock.record_terms(
        hearsay_task, text,
        entries=[("l", "whether the contract was signed before noon", "the disputed point")],
        omissions=["s"],  # the model forgot to list 'a'; normalization adds it
    )
    terms, _ = identify_terms(hearsay_task, text, mock.gateway(), mock.prompts)
    assert [e.term for e in terms.entries] == ["l"]
    assert terms.omissions == ("s", "a")


def test_identify_terms_rejects_empty_text(tmp_path, hearsay_task):
    mock = MockLlm(tmp_path)
    with pytest.raises(PipelineError) as excinfo:
        identify_terms(hearsay_task, "   ", mock.gateway(), mock.prompts)
    assert excinfo.value.step == "term_identification"


def test_identify_terms_wraps_gateway_errors(tmp_path, hearsay_task):
    mock = MockLlm(tmp_path)  # no fixtures recorded
    with pytest.raises(PipelineError) as excinfo:
        identify_terms(hearsay_task, "Some scenario.", mock.gateway(), mock.prompts)
    assert excinfo.value.step == "term_identification"


def test_extract_predicates_martin(tmp_path, hearsay_task):
    mock = MockLlm(tmp_path)
    terms = mock.record_terms(hearsay_task, MARTIN_TEXT, MARTIN_TERMS)
    mock.record_predicates(hearsay_task, MARTIN_TEXT, terms, MARTIN_ASSERTIONS)
    predicates, exchange = extract_predicates(
        hearsay_task, MARTIN_TEXT, terms, mock.gateway(), mock.prompts)
    assert [(a.predicate, a.args) for a in predicates.assertions] == [
        ("IsStatement", ("s1",)),
        ("IsOutOfCourt", ("s1",)),
        ("HasAssertion", ("s1", "a1")),
        ("IntroducedForLegalIssue", ("s1", "l1")),
        ("ProvesTruthOfAssertion", ("s1", "l1")),
    ]
    assert exchange.step == "predicate_extraction"
    assert "s1" in exchange.prompt


def test_extract_predicates_requires_identified_terms(tmp_path, hearsay_task):
    mock = MockLlm(tmp_path)
    empty = TermIdentification((), ("s", "l", "a"))
    with pytest.raises(PipelineError) as excinfo:
        extract_predicates(hearsay_task, "text", empty, mock.gateway(), mock.prompts)
    assert excinfo.value.step == "predicate_extraction"


@pytest.mark.parametrize("bad_assertion", [
    {"predicate": "Ghost", "args": ["s1"], "explanation": "not declared"},
    {"predicate": "IsStatement", "args": ["s9"], "explanation": "invented entity"},
    {"predicate": "IsStatement", "args": ["s1", "l1"], "explanation": "wrong arity"},
])
def test_extract_predicates_schema_rejects_bad_assertions(tmp_path, hearsay_task, bad_assertion):
    from adjudge.gateway import structured_repair_request

    mock = MockLlm(tmp_path)
    terms = mock.record_terms(hearsay_task, MARTIN_TEXT, MARTIN_TERMS)
    bad = json.dumps({"assertions": [bad_assertion]})
    request = build_predicate_request(
        hearsay_task, MARTIN_TEXT, terms, mock.prompts, mock.provider.model)
    mock.record_request(request, bad)
    schema = predicate_extraction_schema(hearsay_task, terms)
    mock.record_request(structured_repair_request(request, bad, schema), bad)
    with pytest.raises(PipelineError, match="schema-violation") as excinfo:
        extract_predicates(hearsay_task, MARTIN_TEXT, terms, mock.gateway(), mock.prompts)
    assert excinfo.value.step == "predicate_extraction"


def test_build_model_from_martin_tables():
    model = build_model(MARTIN_ENTITIES, MARTIN_FULL)
    assert model.domain == {"s1", "l1", "a1"}
    assert model.extensions == {
        "IsStatement": {("s1",)},
        "IsOutOfCourt": {("s1",)},
        "HasAssertion": {("s1", "a1")},
        "IntroducedForLegalIssue": {("s1", "l1")},
        "ProvesTruthOfAssertion": {("s1", "l1")},
    }


def test_build_model_with_no_assertions_keeps_domain():
    model = build_model(MARTIN_ENTITIES, extraction())
    assert model.domain == {"s1", "l1", "a1"}
    assert model.extensions == {}


def test_build_model_deduplicates_assertions():
    model = build_model(
        MARTIN_ENTITIES,
        extraction(("IsStatement", ("s1",)), ("IsStatement", ("s1",))),
    )
    assert model.extensions["IsStatement"] == {("s1",)}


def test_build_model_rejects_dangling_entity():
    with pytest.raises(PipelineError, match="unknown entity"):
        build_model(MARTIN_ENTITIES, extraction(("IsStatement", ("s9",))))


def test_apply_rule_martin_positive(hearsay_task):
    verdict = apply_rule(hearsay_task, MARTIN_ENTITIES, MARTIN_FULL)
    assert verdict.satisfied is True
    assert verdict.label == "Yes"
    assert verdict.conflicts == ()
    assert verdict.fallback_applied is False


def test_apply_rule_negative_without_out_of_court(hearsay_task):
    reduced = extraction(*[

        (a.predicate, a.args) for a in MARTIN_FULL.assertions if a.predicate != "IsOutOfCourt"
    ])
    verdict = apply_rule(hearsay_task, MARTIN_ENTITIES, reduced)
    assert verdict.satisfied is False
    assert verdict.label == "No"


def test_apply_rule_second_witness_satisfies_existential(hearsay_task):
    terms = entity_terms(("s", "s1"), ("l", "l1"), ("a", "a1"), ("a", "a2"))
    predicates = extraction(
        ("IsStatement", ("s1",)),
        ("IsOutOfCourt", ("s1",)),
        ("HasAssertion", ("s1", "a2")),
        ("IntroducedForLegalIssue", ("s1", "l1")),
        ("ProvesTruthOfAssertion", ("s1", "l1")),
    )
    verdict = apply_rule(hearsay_task, terms, predicates)
    assert verdict.satisfied is True
    assert brute_force_evaluate(
        hearsay_task.parsed_formula(), build_model(terms, predicates),
        {"s": "s1", "l": "l1"}) is True


def test_apply_rule_missing_binding_term_is_negative(hearsay_task):
    terms = entity_terms(("l", "l1"), ("a", "a1"))
    verdict = apply_rule(hearsay_task, terms, extraction())
    assert verdict.satisfied is False
    assert verdict.label == "No"
    assert verdict.fallback_applied is False
    assert "s" in (verdict.reason or "")


def test_apply_rule_conflict_forces_negative(hearsay_complementary_task):
    predicates = extraction(
        ("IsStatement", ("s1",)),
        ("IsOutOfCourt", ("s1",)),
        ("IsInCourt", ("s1",)),
        ("HasAssertion", ("s1", "a1")),
        ("IntroducedForLegalIssue", ("s1", "l1")),
        ("ProvesTruthOfAssertion", ("s1", "l1")),
    )
    verdict = apply_rule(hearsay_complementary_task, MARTIN_ENTITIES, predicates)
    assert verdict.satisfied is False
    assert verdict.label == "No"
    assert verdict.fallback_applied is True
    assert len(verdict.conflicts) == 1
    assert verdict.conflicts[0].pair == ("IsInCourt", "IsOutOfCourt")


def test_apply_rule_conflict_policy_fail(hearsay_complementary_task):
    predicates = extraction(("IsOutOfCourt", ("s1",)), ("IsInCourt", ("s1",)))
    with pytest.raises(ComplementConflictError):
        apply_rule(hearsay_complementary_task, MARTIN_ENTITIES, predicates,
                   conflict_policy="fail")


def test_apply_rule_is_pure(hearsay_task):
    first = apply_rule(hearsay_task, MARTIN_ENTITIES, MARTIN_FULL)
    for _ in range(5):
        assert apply_rule(hearsay_task, MARTIN_ENTITIES, MARTIN_FULL) == first


def test_apply_rule_rejects_unknown_policy(hearsay_task):
    with pytest.raises(ValueError):
        apply_rule(hearsay_task, MARTIN_ENTITIES, MARTIN_FULL, conflict_policy="shrug")


def test_apply_rule_matches_direct_evaluation_on_random_extractions(hearsay_task):
    """The verdict's satisfied flag always equals evaluating the rule over the
    built model with the term-name binding."""
    rng = random.Random(20240817)
    candidates = [
        ("IsStatement", ("s1",)),
        ("IsOutOfCourt", ("s1",)),
        ("HasAssertion", ("s1", "a1")),
        ("HasAssertion", ("s1", "a2")),
        ("IntroducedForLegalIssue", ("s1", "l1")),
        ("ProvesTruthOfAssertion", ("s1", "l1")),
    ]
    terms = entity_terms(("s", "s1"), ("l", "l1"), ("a", "a1"), ("a", "a2"))
    binding = {"s": "s1", "l": "l1"}
    for _ in range(300):
        chosen = [c for c in candidates if rng.random() < 0.5]
        predicates = extraction(*chosen)
        verdict = apply_rule(hearsay_task, terms, predicates)
        expected = evaluate(hearsay_task.parsed_formula(),
                            build_model(terms, predicates), binding)
        assert verdict.satisfied == expected
        assert verdict.label == ("Yes" if expected else "No")


def test_single_removal_flips_the_verdict(hearsay_task):
    """Dropping any one conjunct-supporting assertion turns the verdict negative."""
    for removed in range(len(MARTIN_FULL.assertions)):
        kept = [
            (a.predicate, a.args)
            for i, a in enumerate(MARTIN_FULL.assertions) if i != removed
        ]
        verdict = apply_rule(hearsay_task, MARTIN_ENTITIES, extraction(*kept))
        assert verdict.satisfied is False, f"removal of assertion {removed} did not flip"
