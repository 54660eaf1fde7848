"""Prompt template loading and placeholder substitution.

Templates are plain text files under ``<dir>/<strategy>/<step>.txt`` with
``{{name}}`` placeholders, swappable without touching code.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping

from .errors import AdjudgeError
from .resources import default_prompts_dir

_PLACEHOLDER_RE = re.compile(r"\{\{([a-z_]+)\}\}")

# Strategies that reuse another strategy's template directory.
_STRATEGY_ALIASES = {"structured-complementary": "structured"}


class PromptError(AdjudgeError):
    pass


def render_template(text: str, values: Mapping[str, str]) -> str:
    """Substitute {{name}} placeholders; an unknown placeholder is an error."""

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise PromptError(f"template references unknown placeholder {{{{{name}}}}}")
        return values[name]

    return _PLACEHOLDER_RE.sub(substitute, text)


class PromptLibrary:
    """Reads step templates for each strategy from a directory tree."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory is not None else default_prompts_dir()
        self._cache: dict[tuple[str, str], str] = {}

    def template_path(self, strategy: str, step: str) -> Path:
        folder = _STRATEGY_ALIASES.get(strategy, strategy)
        return self.directory / folder / f"{step}.txt"

    def template(self, strategy: str, step: str) -> str:
        key = (strategy, step)
        if key not in self._cache:
            path = self.template_path(strategy, step)
            try:
                self._cache[key] = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise PromptError(f"cannot read prompt template {path}: {exc}") from exc
        return self._cache[key]

    def render(self, strategy: str, step: str, **values: str) -> str:
        return render_template(self.template(strategy, step), values)
