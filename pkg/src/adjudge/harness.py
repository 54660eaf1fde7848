"""Batch evaluation: run a strategy over a dataset, write traces and a
manifest, and compare completed runs."""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .dataset import Dataset
from .errors import AdjudgeError
from .gateway import LlmGateway
from .metrics import Metrics, Prediction, compute_metrics
from .prompts import PromptLibrary
from .strategies import Exemplar, ExtractionTrace, check_strategy_task, run_strategy
from .task import TaskDefinition


class HarnessError(AdjudgeError):
    pass


class IncompatibleRunsError(HarnessError):
    pass


@dataclass(frozen=True)
class StrategyConfig:
    name: str
    exemplars: tuple[Exemplar, ...] = ()
    conflict_policy: str = "negative-label"


@dataclass(frozen=True)
class RunConfig:
    out_dir: Path
    parallel: int = 1
    run_id: str | None = None


@dataclass(frozen=True)
class RunResult:
    run_id: str
    task_name: str
    strategy: str
    model: str
    dataset_digest: str
    metrics: Metrics
    run_dir: Path
    trace_paths: tuple[Path, ...]
    predictions: tuple[Prediction, ...]
    manifest_path: Path
    config: dict = field(default_factory=dict)


def _derive_run_id(task: TaskDefinition, strategy: StrategyConfig, llm: LlmGateway,
                   dataset: Dataset) -> str:
    seed = "|".join([
        task.task_name, strategy.name, strategy.conflict_policy,
        llm.provider.id, llm.provider.model, dataset.digest(),
    ])
    return hashlib.sha256(seed.encode("utf-8")).hexdigest()[:12]


def _safe_filename(example_id: str) -> str:
    cleaned = re.sub(r"[^A-Za-z0-9_.-]", "_", example_id)
    if cleaned != example_id or not cleaned:
        suffix = hashlib.sha256(example_id.encode("utf-8")).hexdigest()[:8]
        cleaned = f"{cleaned or 'example'}-{suffix}"
    return cleaned


def _dump_json(path: Path, data: object) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=True) + "\n",
                    encoding="utf-8")


def evaluate_strategy(
    task: TaskDefinition,
    dataset: Dataset,
    strategy: StrategyConfig,
    llm: LlmGateway,
    run_config: RunConfig,
    prompts: PromptLibrary | None = None,
) -> RunResult:
    """Run one strategy over every example and persist traces plus a manifest.

    Per-example failures never abort the run; they surface as n_failed.
    Output bytes are deterministic apart from the manifest's created_at field.
    """
    check_strategy_task(strategy.name, task)
    if strategy.name in ("few-shot", "cot") and not strategy.exemplars:
        raise HarnessError(f"strategy {strategy.name!r} requires at least one exemplar")
    prompts = prompts or PromptLibrary()
    run_id = run_config.run_id or _derive_run_id(task, strategy, llm, dataset)
    run_dir = Path(run_config.out_dir) / "runs" / run_id
    trace_dir = run_dir / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)

    def run_one(example) -> ExtractionTrace:
        try:
            return run_strategy(
                strategy.name, task, example, llm, prompts,
                exemplars=strategy.exemplars, conflict_policy=strategy.conflict_policy)
        except AdjudgeError as exc:
            return ExtractionTrace(
                example_id=example.example_id,
                strategy=strategy.name,
                input_text=example.text,
                exchanges=(),
                status="failed",
                error={"step": getattr(exc, "step", None), "message": str(exc)},
            )

    workers = max(1, run_config.parallel)
    if workers == 1:
        traces = [run_one(example) for example in dataset.examples]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run_one, dataset.examples))

    # Deterministic merge regardless of completion order.
    traces.sort(key=lambda t: t.example_id)
    gold = {e.example_id: e.gold_label for e in dataset.examples}
    predictions = tuple(
        Prediction(t.example_id, gold[t.example_id] or "", t.prediction) for t in traces
    )
    metrics = compute_metrics(predictions, task.positive_label)

    trace_paths = []
    for trace in traces:
        path = trace_dir / f"{_safe_filename(trace.example_id)}.json"
        _dump_json(path, trace.to_json_dict())
        trace_paths.append(path)

    config_snapshot = {
        "strategy": strategy.name,
        "conflict_policy": strategy.conflict_policy,
        "n_exemplars": len(strategy.exemplars),
        "provider_id": llm.provider.id,
        "provider_kind": llm.provider.kind,
        "model": llm.provider.model,
        "parallel": workers,
        "split_name": dataset.split_name,
    }
    manifest = {
        "run_id": run_id,
        "task": task.task_name,
        "strategy": strategy.name,
        "model": llm.provider.model,
        "dataset_digest": dataset.digest(),
        "metrics": metrics.to_json_dict(),
        "trace_dir": "traces",
        "config": config_snapshot,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    manifest_path = run_dir / "manifest.json"
    _dump_json(manifest_path, manifest)
    return RunResult(
        run_id=run_id,
        task_name=task.task_name,
        strategy=strategy.name,
        model=llm.provider.model,
        dataset_digest=dataset.digest(),
        metrics=metrics,
        run_dir=run_dir,
        trace_paths=tuple(trace_paths),
        predictions=predictions,
        manifest_path=manifest_path,
        config=config_snapshot,
    )


def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise HarnessError(f"cannot read run manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise HarnessError(f"run manifest {path} is not valid JSON: {exc}") from exc
    for key in ("run_id", "strategy", "model", "dataset_digest", "metrics"):
        if key not in data:
            raise HarnessError(f"run manifest {path} is missing field {key!r}")
    return data


def recompute_metrics_from_traces(run_dir: str | Path, dataset: Dataset,
                                  positive_label: str) -> Metrics:
    """Rebuild Metrics from stored trace files (replay soundness check)."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    trace_dir = run_dir / manifest["trace_dir"]
    gold = {e.example_id: e.gold_label for e in dataset.examples}
    predictions = []
    for path in sorted(trace_dir.glob("*.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        if data["status"] != "ok":
            label = None
        elif isinstance(data["verdict"], dict):
            label = data["verdict"]["label"]
        else:
            label = data["verdict"]
        predictions.append(Prediction(data["example_id"],
                                      gold.get(data["example_id"]) or "", label))
    return compute_metrics(predictions, positive_label)


@dataclass(frozen=True)
class ComparisonRow:
    strategy: str
    model: str
    metrics: Metrics
    f1_delta_pp: float | None  # vs the few-shot run of the same model


@dataclass(frozen=True)
class ComparisonReport:
    dataset_digest: str
    rows: tuple[ComparisonRow, ...]

    def to_json_dict(self) -> dict:
        return {
            "dataset_digest": self.dataset_digest,
            "rows": [
                {
                    "strategy": row.strategy,
                    "model": row.model,
                    **row.metrics.to_json_dict(),
                    "f1_delta_pp_vs_few_shot": row.f1_delta_pp,
                }
                for row in self.rows
            ],
        }

    def render_markdown(self) -> str:
        """Strategy-by-model table; the best value per model is bolded."""
        best: dict[tuple[str, str], float] = {}
        for row in self.rows:
            for name in ("accuracy", "precision", "recall", "f1"):
                key = (row.model, name)
                value = getattr(row.metrics, name)
                best[key] = max(best.get(key, float("-inf")), value)

        def cell(row: ComparisonRow, name: str) -> str:
            value = getattr(row.metrics, name)
            text = f"{value:.3f}"
            siblings = sum(1 for r in self.rows if r.model == row.model)
            if siblings > 1 and value == best[(row.model, name)]:
                return f"**{text}**"
            return text

        lines = [
            "| Model | Strategy | Accuracy | Precision | Recall | F1 | F1 delta vs few-shot (pp) |",
            "| --- | --- | --- | --- | --- | --- | --- |",
        ]
        for row in self.rows:
            delta = "" if row.f1_delta_pp is None else f"{row.f1_delta_pp:+.1f}"
            lines.append(
                f"| {row.model} | {row.strategy} | {cell(row, 'accuracy')} | "
                f"{cell(row, 'precision')} | {cell(row, 'recall')} | {cell(row, 'f1')} | "
                f"{delta} |")
        return "\n".join(lines)


def compare_runs(manifests: Sequence[dict]) -> ComparisonReport:
    """Combine run manifests over the same dataset into a comparison table."""
    if not manifests:
        raise HarnessError("nothing to compare: no run manifests given")
    digests = {m["dataset_digest"] for m in manifests}
    if len(digests) > 1:
        raise IncompatibleRunsError(
            "runs cover different datasets: " + ", ".join(sorted(digests)))
    few_shot_f1: dict[str, float] = {}
    for manifest in manifests:
        if manifest["strategy"] == "few-shot":
            few_shot_f1[manifest["model"]] = Metrics.from_json_dict(manifest["metrics"]).f1
    rows = []
    for manifest in sorted(manifests, key=lambda m: (m["model"], m["strategy"])):
        metrics = Metrics.from_json_dict(manifest["metrics"])
        baseline = few_shot_f1.get(manifest["model"])
        delta = None
        if baseline is not None and manifest["strategy"] != "few-shot":
            delta = (metrics.f1 - baseline) * 100.0
        rows.append(ComparisonRow(manifest["strategy"], manifest["model"], metrics, delta))
    return ComparisonReport(dataset_digest=digests.pop(), rows=tuple(rows))
