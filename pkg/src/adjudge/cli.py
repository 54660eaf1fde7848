"""Command-line surface: task validation, single-example runs, batch
evaluation, and run comparison.

Exit codes: 0 success, 1 domain failure (validation findings, comparison
mismatch, failed example), 2 usage or unreadable input.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dataset import ColumnMapping, Example, load_dataset, parse_column_map
from .errors import AdjudgeError
from .gateway import LlmGateway, load_provider_config
from .harness import (
    RunConfig,
    StrategyConfig,
    compare_runs,
    evaluate_strategy,
    load_manifest,
)
from .prompts import PromptLibrary
from .resources import resolve_task_path
from .strategies import (
    STRATEGY_NAMES,
    Exemplar,
    ExtractionTrace,
    run_strategy,
)
from .task import (
    TaskDocumentError,
    TaskFileError,
    parse_task_document,
    load_task,
    validate_task,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


@click.group()
def main() -> None:
    """Apply formal rules to text: structured extraction, model checking,
    and strategy evaluation."""


def _echo_error(message: str) -> None:
    click.echo(f"error: {message}", err=True)


def _load_task_or_exit(task_spec: str):
    path = resolve_task_path(task_spec)
    try:
        return load_task(path)
    except TaskFileError as exc:
        _echo_error(str(exc))
        sys.exit(EXIT_USAGE)
    except AdjudgeError as exc:
        _echo_error(str(exc))
        sys.exit(EXIT_DOMAIN)


def _gateway_from_options(provider_path: str, cache_dir: str | None,
                          mock_fixtures: str | None) -> LlmGateway:
    provider = load_provider_config(provider_path)
    kwargs = {}
    if provider.kind == "mock" and mock_fixtures:
        kwargs["mock_fixtures"] = mock_fixtures
    return LlmGateway(provider, cache_dir=cache_dir, **kwargs)


def _column_mapping(column_map: str | None) -> ColumnMapping:
    return parse_column_map(column_map) if column_map else ColumnMapping()


def _load_exemplars(strategy: str, exemplars_path: str | None, mapping: ColumnMapping,
                    labels: tuple[str, str], rationales_path: str | None) -> tuple[Exemplar, ...]:
    if strategy not in ("few-shot", "cot"):
        return ()
    if not exemplars_path:
        raise click.UsageError(f"strategy '{strategy}' requires --exemplars")
    dataset = load_dataset(exemplars_path, mapping, labels)
    rationales: dict[str, str] = {}
    if rationales_path:
        rationales = json.loads(Path(rationales_path).read_text(encoding="utf-8"))
    return tuple(
        Exemplar(example.text, example.gold_label or "",
                 rationales.get(example.example_id))
        for example in dataset.examples
    )


@main.command("validate")
@click.argument("task_path")
def cmd_validate(task_path: str) -> None:
    """Validate a task file and print every finding."""
    path = resolve_task_path(task_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        _echo_error(f"cannot read task file {path}: {exc}")
        sys.exit(EXIT_USAGE)
    try:
        document = json.loads(text)
        definition = parse_task_document(document)
    except (json.JSONDecodeError, TaskDocumentError) as exc:
        click.echo(f"ERROR MALFORMED_DOCUMENT: {exc}")
        sys.exit(EXIT_DOMAIN)
    report = validate_task(definition)
    click.echo(report.render())
    sys.exit(EXIT_OK if report.ok else EXIT_DOMAIN)


def _render_trace(trace: ExtractionTrace, task) -> str:
    lines: list[str] = []
    if trace.terms is not None:
        lines.append("Terms")
        rows = [("Term", "Entity", "Text", "Explanation")] + [
            (e.term, e.entity_id, e.text_span, e.explanation) for e in trace.terms.entries
        ]
        lines.extend(_format_table(rows))
        if trace.terms.omissions:
            lines.append(f"  not found: {', '.join(trace.terms.omissions)}")
        lines.append("")
    if trace.predicates is not None:
        lines.append("Predicates")
        rows = [("Predicate", "Arguments", "Explanation")] + [
            (a.predicate, ", ".join(a.args), a.explanation)
            for a in trace.predicates.assertions
        ]
        lines.extend(_format_table(rows))
        lines.append("")
    if trace.verdict is not None:
        verdict = trace.verdict
        for conflict in verdict.conflicts:
            lines.append(
                f"Conflict: {conflict.pair[0]} and {conflict.pair[1]} both "
                f"asserted on ({', '.join(conflict.args)})")
        state = "satisfied" if verdict.satisfied else "not satisfied"
        lines.append(f"Verdict: {verdict.label} ({task.task_predicate_name} {state})")
        if verdict.reason:
            lines.append(f"  reason: {verdict.reason}")
    elif trace.label is not None:
        lines.append(f"Verdict: {trace.label}")
    return "\n".join(lines)


def _format_table(rows: list[tuple[str, ...]]) -> list[str]:
    widths = [max(len(str(row[i])) for row in rows) for i in range(len(rows[0]) - 1)]
    out = []
    for index, row in enumerate(rows):
        cells = [str(cell).ljust(widths[i]) for i, cell in enumerate(row[:-1])]
        out.append("  " + "  ".join(cells + [str(row[-1])]))
        if index == 0:
            out.append("  " + "  ".join("-" * w for w in widths) + "  " + "-" * 11)
    return out


@main.command("run")
@click.option("--task", "task_spec", required=True, help="Task file path or builtin name.")
@click.option("--strategy", type=click.Choice(STRATEGY_NAMES), required=True)
@click.option("--provider", "provider_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--text", default=None, help="Inline input text.")
@click.option("--example-id", default=None, help="Example id looked up in --dataset.")
@click.option("--dataset", "dataset_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--prompts", "prompts_dir", default=None,
              type=click.Path(exists=True, file_okay=False))
@click.option("--cache-dir", default=None, type=click.Path(file_okay=False))
@click.option("--out", "out_dir", default="out", type=click.Path(file_okay=False))
@click.option("--parallel", default=1, show_default=True)
@click.option("--mock-fixtures", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--column-map", default=None,
              help="Column mapping like text=...,label=...,index=...")
@click.option("--exemplars", "exemplars_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="TSV of exemplars for few-shot and cot.")
@click.option("--cot-rationales", "rationales_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON mapping exemplar ids to authored rationales.")
@click.option("--conflict-policy", type=click.Choice(("negative-label", "fail")),
              default="negative-label", show_default=True)
def cmd_run(task_spec, strategy, provider_path, text, example_id, dataset_path,
            prompts_dir, cache_dir, out_dir, parallel, mock_fixtures, column_map,
            exemplars_path, rationales_path, conflict_policy) -> None:
    """Run one example through a strategy and print the trace."""
    if (text is None) == (example_id is None):
        raise click.UsageError("give exactly one of --text or --example-id")
    if example_id is not None and dataset_path is None:
        raise click.UsageError("--example-id needs --dataset")
    task = _load_task_or_exit(task_spec)
    try:
        mapping = _column_mapping(column_map)
        if example_id is not None:
            dataset = load_dataset(dataset_path, mapping, task.labels())
            try:
                example = dataset.by_id()[example_id]
            except KeyError:
                _echo_error(f"example id {example_id!r} not in {dataset_path}")
                sys.exit(EXIT_DOMAIN)
        else:
            example = Example("adhoc", text, None)
        exemplars = _load_exemplars(strategy, exemplars_path, mapping, task.labels(),
                                    rationales_path)
        gateway = _gateway_from_options(provider_path, cache_dir, mock_fixtures)
        prompts = PromptLibrary(prompts_dir)
        trace = run_strategy(strategy, task, example, gateway, prompts,
                             exemplars=exemplars, conflict_policy=conflict_policy)
    except AdjudgeError as exc:
        _echo_error(str(exc))
        sys.exit(EXIT_DOMAIN)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / f"{example.example_id}.trace.json"
    trace_path.write_text(
        json.dumps(trace.to_json_dict(), indent=2, sort_keys=True, ensure_ascii=True) + "\n",
        encoding="utf-8")
    click.echo(_render_trace(trace, task))
    click.echo(f"trace written to {trace_path}")
    if trace.status != "ok":
        _echo_error(f"example failed at step {trace.error.get('step')}: "
                    f"{trace.error.get('message')}")
        sys.exit(EXIT_DOMAIN)


@main.command("eval")
@click.option("--task", "task_spec", required=True)
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--strategy", type=click.Choice(STRATEGY_NAMES), required=True)
@click.option("--provider", "provider_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--prompts", "prompts_dir", default=None,
              type=click.Path(exists=True, file_okay=False))
@click.option("--cache-dir", default=None, type=click.Path(file_okay=False))
@click.option("--out", "out_dir", default="out", type=click.Path(file_okay=False))
@click.option("--parallel", default=1, show_default=True)
@click.option("--mock-fixtures", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--column-map", default=None)
@click.option("--exemplars", "exemplars_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--cot-rationales", "rationales_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--conflict-policy", type=click.Choice(("negative-label", "fail")),
              default="negative-label", show_default=True)
@click.option("--run-id", default=None, help="Override the derived run id.")
def cmd_eval(task_spec, dataset_path, strategy, provider_path, prompts_dir, cache_dir,
             out_dir, parallel, mock_fixtures, column_map, exemplars_path,
             rationales_path, conflict_policy, run_id) -> None:
    """Evaluate a strategy over a dataset; write traces and a run manifest."""
    task = _load_task_or_exit(task_spec)
    try:
        mapping = _column_mapping(column_map)
        dataset = load_dataset(dataset_path, mapping, task.labels())
        exemplars = _load_exemplars(strategy, exemplars_path, mapping, task.labels(),
                                    rationales_path)
        gateway = _gateway_from_options(provider_path, cache_dir, mock_fixtures)
        prompts = PromptLibrary(prompts_dir)
        result = evaluate_strategy(
            task, dataset,
            StrategyConfig(strategy, exemplars, conflict_policy),
            gateway,
            RunConfig(out_dir=Path(out_dir), parallel=parallel, run_id=run_id),
            prompts)
    except AdjudgeError as exc:
        _echo_error(str(exc))
        sys.exit(EXIT_DOMAIN)
    metrics = result.metrics
    click.echo(
        f"{strategy} on {dataset.split_name}: "
        f"accuracy={metrics.accuracy:.3f} precision={metrics.precision:.3f} "
        f"recall={metrics.recall:.3f} f1={metrics.f1:.3f} "
        f"(tp={metrics.tp} fp={metrics.fp} fn={metrics.fn} tn={metrics.tn} "
        f"failed={metrics.n_failed})")
    if metrics.zero_denominator_flags:
        click.echo("zero-denominator ratios pinned to 0: "
                   + ", ".join(metrics.zero_denominator_flags))
    click.echo(f"manifest: {result.manifest_path}")


@main.command("compare")
@click.argument("manifests", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False))
def cmd_compare(manifests, out_dir) -> None:
    """Compare run manifests over the same dataset."""
    try:
        loaded = [load_manifest(path) for path in manifests]
        report = compare_runs(loaded)
    except AdjudgeError as exc:
        _echo_error(str(exc))
        sys.exit(EXIT_DOMAIN)
    table = report.render_markdown()
    click.echo(table)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.json").write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        (out / "comparison.md").write_text(table + "\n", encoding="utf-8")
        click.echo(f"reports written to {out}")


if __name__ == "__main__":
    main()
