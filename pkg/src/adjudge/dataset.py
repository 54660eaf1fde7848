"""Tab-separated dataset ingestion with configurable column mapping."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import AdjudgeError

DEFAULT_TEXT_COLUMN = "text"
DEFAULT_LABEL_COLUMN = "answer"
DEFAULT_INDEX_COLUMN = "index"


class DatasetError(AdjudgeError):
    pass


@dataclass(frozen=True)
class Example:
    example_id: str
    text: str
    gold_label: str | None = None


@dataclass(frozen=True)
class ColumnMapping:
    text: str = DEFAULT_TEXT_COLUMN
    label: str = DEFAULT_LABEL_COLUMN
    index: str | None = DEFAULT_INDEX_COLUMN
    # Set when the caller named the index column explicitly; the default
    # index column quietly falls back to ordinals when absent.
    strict_index: bool = False


@dataclass(frozen=True)
class Dataset:
    split_name: str
    examples: tuple[Example, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "examples", tuple(self.examples))

    def __len__(self) -> int:
        return len(self.examples)

    def by_id(self) -> dict[str, Example]:
        return {example.example_id: example for example in self.examples}

    def digest(self) -> str:
        """Content digest over id-sorted examples; row order never matters."""
        canonical = json.dumps(
            [
                {"example_id": e.example_id, "text": e.text, "gold_label": e.gold_label}
                for e in sorted(self.examples, key=lambda e: e.example_id)
            ],
            sort_keys=True,
            ensure_ascii=True,
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def normalize_label(raw: str, labels: tuple[str, str]) -> str | None:
    """Case-insensitive match against the task labels, ignoring edge whitespace
    and trailing periods."""
    cleaned = raw.strip().rstrip(".").strip().casefold()
    for label in labels:
        if cleaned == label.casefold():
            return label
    return None


def load_dataset(
    path: str | Path,
    mapping: ColumnMapping | None = None,
    labels: tuple[str, str] = ("Yes", "No"),
    split_name: str | None = None,
) -> Dataset:
    """Parse a header-rowed TSV into a dataset with normalized gold labels."""
    path = Path(path)
    mapping = mapping or ColumnMapping()
    try:
        handle = path.open(encoding="utf-8", newline="")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle, delimiter="\t")
        header = reader.fieldnames or []
        for required in (mapping.text, mapping.label):
            if required not in header:
                raise DatasetError(f"dataset {path} is missing mapped column {required!r}")
        index_column = mapping.index if mapping.index in header else None
        if mapping.index is not None and index_column is None and mapping.strict_index:
            raise DatasetError(f"dataset {path} is missing mapped column {mapping.index!r}")
        examples: list[Example] = []
        seen_ids: set[str] = set()
        for row_number, row in enumerate(reader, start=2):
            raw_label = row.get(mapping.label) or ""
            label = normalize_label(raw_label, labels)
            if label is None:
                raise DatasetError(
                    f"dataset {path} row {row_number}: label {raw_label!r} does not "
                    f"normalize to one of {labels}")
            example_id = (
                str(row[index_column]).strip() if index_column else str(len(examples))
            )
            if not example_id:
                raise DatasetError(f"dataset {path} row {row_number}: empty example id")
            if example_id in seen_ids:
                raise DatasetError(
                    f"dataset {path} row {row_number}: duplicate example id {example_id!r}")
            seen_ids.add(example_id)
            examples.append(Example(example_id, row.get(mapping.text) or "", label))
    if not examples:
        raise DatasetError(f"dataset {path} contains no examples")
    return Dataset(split_name or path.stem, tuple(examples))


def parse_column_map(spec: str) -> ColumnMapping:
    """Parse a CLI column map like ``text=body,label=answer,index=id``."""
    values: dict[str, str] = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise DatasetError(f"bad column mapping entry {part!r}; expected key=value")
        key, _, value = part.partition("=")
        if key not in ("text", "label", "index"):
            raise DatasetError(f"unknown column mapping key {key!r}")
        values[key] = value
    return ColumnMapping(
        text=values.get("text", DEFAULT_TEXT_COLUMN),
        label=values.get("label", DEFAULT_LABEL_COLUMN),
        index=values.get("index", DEFAULT_INDEX_COLUMN),
        strict_index="index" in values,
    )
