"""Access to packaged task files and prompt templates."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

BUILTIN_TASKS = {
    "hearsay": "hearsay.task.json",
    "hearsay-complementary": "hearsay_complementary.task.json",
}


def data_dir() -> Path:
    return Path(str(resources.files("adjudge") / "data"))


def builtin_task_path(name: str) -> Path:
    try:
        filename = BUILTIN_TASKS[name]
    except KeyError:
        raise KeyError(
            f"unknown builtin task {name!r}; available: {', '.join(sorted(BUILTIN_TASKS))}"
        ) from None
    return data_dir() / "tasks" / filename


def default_prompts_dir() -> Path:
    return data_dir() / "prompts"


def resolve_task_path(spec: str | Path) -> Path:
    """Resolve a --task argument: an existing file path or a builtin task name."""
    path = Path(spec)
    if path.exists():
        return path
    if isinstance(spec, str) and spec in BUILTIN_TASKS:
        return builtin_task_path(spec)
    return path
