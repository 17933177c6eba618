"""Prompt templates for the three generation stages.

A template has a persona (the system prompt) and four user-prompt parts:
the task description, the context slot carrying upstream inputs, the UT
instructions for the reasoning call, and the format specification for the
structured call. Templates are YAML files with ``str.format`` placeholders.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Mapping

import yaml

from animlayout.st_model import Stage

__all__ = [
    "OPTIONAL_PLACEHOLDERS",
    "REQUIRED_PLACEHOLDERS",
    "StageTemplate",
    "TemplateError",
    "default_templates",
    "load_template",
    "load_templates",
]

REQUIRED_PLACEHOLDERS: dict[Stage, frozenset[str]] = {
    Stage.BANNER: frozenset({"banner_prompt"}),
    Stage.MAINGROUND: frozenset({"mainground_prompt", "banner_st"}),
    Stage.ANIMATION: frozenset({"mainground_st"}),
}
OPTIONAL_PLACEHOLDERS = frozenset({"canvas_width", "canvas_height", "canvas_fps"})
_PIPELINE_STAGES = (Stage.BANNER, Stage.MAINGROUND, Stage.ANIMATION)


class TemplateError(ValueError):
    pass


def _fields_of(text: str, where: str) -> set[str]:
    try:
        names = {name for _, name, _, _ in string.Formatter().parse(text) if name is not None}
    except ValueError as exc:
        raise TemplateError(f"{where}: {exc}") from None
    if "" in names or any(not n.isidentifier() for n in names):
        raise TemplateError(f"{where}: placeholders must be named")
    return names


@dataclass(frozen=True)
class StageTemplate:
    stage: Stage
    persona: str
    task_description: str
    context_slot: str
    ut_format: str
    reasoning_slot: str
    format_spec: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "stage", Stage(self.stage))
        if self.stage not in REQUIRED_PLACEHOLDERS:
            raise TemplateError(f"no template shape for stage {self.stage.value}")
        required = REQUIRED_PLACEHOLDERS[self.stage]
        allowed = required | OPTIONAL_PLACEHOLDERS
        used: set[str] = set()
        for part in ("persona", "task_description", "context_slot", "ut_format", "format_spec"):
            names = _fields_of(getattr(self, part), f"{self.stage.value}.{part}")
            unknown = names - allowed
            if unknown:
                raise TemplateError(f"{self.stage.value}.{part}: unknown placeholder(s) {sorted(unknown)}")
            used |= names
        missing = required - used
        if missing:
            raise TemplateError(f"{self.stage.value}: template never uses {sorted(missing)}")
        slot = _fields_of(self.reasoning_slot, f"{self.stage.value}.reasoning_slot")
        if slot != {"ut"}:
            raise TemplateError(f"{self.stage.value}.reasoning_slot must use exactly {{ut}}")

    @property
    def placeholders(self) -> frozenset[str]:
        return REQUIRED_PLACEHOLDERS[self.stage]

    def _fill(self, part: str, context: Mapping[str, str]) -> str:
        return getattr(self, part).format_map(context)

    def system_prompt(self, context: Mapping[str, str]) -> str:
        return self._fill("persona", context)

    def ut_prompt(self, context: Mapping[str, str]) -> str:
        """User prompt of the reasoning call."""
        return "\n\n".join(
            self._fill(p, context).strip() for p in ("task_description", "context_slot", "ut_format")
        )

    def st_prompt(self, context: Mapping[str, str], ut: str) -> str:
        """User prompt of the structured call, with the UT text in context."""
        return "\n\n".join(
            [
                self._fill("task_description", context).strip(),
                self._fill("context_slot", context).strip(),
                self.reasoning_slot.format(ut=ut).strip(),
                self._fill("format_spec", context).strip(),
            ]
        )

    def single_prompt(self, context: Mapping[str, str]) -> str:
        """User prompt asking for UT and ST in one completion."""
        return "\n\n".join(
            self._fill(p, context).strip()
            for p in ("task_description", "context_slot", "ut_format", "format_spec")
        )


def load_template(path: str | Path, stage: Stage | str) -> StageTemplate:
    stage = Stage(stage)
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise TemplateError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise TemplateError(f"{path}: expected a mapping")
    keys = [f.name for f in fields(StageTemplate) if f.name != "stage"]
    missing = [k for k in keys if k not in data]
    extra = sorted(set(data) - set(keys))
    if missing or extra:
        raise TemplateError(f"{path}: missing {missing}, unexpected {extra}")
    bad = [k for k in keys if not isinstance(data[k], str)]
    if bad:
        raise TemplateError(f"{path}: non-string values for {bad}")
    return StageTemplate(stage, **{k: data[k] for k in keys})


def default_templates() -> dict[Stage, StageTemplate]:
    root = resources.files("animlayout.pipeline") / "templates"
    out = {}
    for stage in _PIPELINE_STAGES:
        with resources.as_file(root / f"{stage.value}.yaml") as path:
            out[stage] = load_template(path, stage)
    return out


def load_templates(overrides: Mapping[Stage | str, str | Path] | None = None) -> dict[Stage, StageTemplate]:
    """Default templates with per-stage files swapped in from ``overrides``."""
    out = default_templates()
    for stage, path in (overrides or {}).items():
        out[Stage(stage)] = load_template(path, stage)
    return out
