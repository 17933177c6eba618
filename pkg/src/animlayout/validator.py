"""Structural validation of generated ST text and the failure-rate metric."""

from __future__ import annotations

import enum
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from animlayout.st_model import (
    Canvas,
    Fragment,
    IssueKind,
    JsonSyntax,
    ObjectClass,
    SchemaViolation,
    Stage,
    decode,
    load_json,
)

__all__ = [
    "EmptyInput",
    "Failure",
    "FailureKind",
    "PromptSpec",
    "RequestedElement",
    "ValidationReport",
    "extract_quoted",
    "failure_rate",
    "failure_rate_by_stage",
    "validate_stage",
]


class FailureKind(str, enum.Enum):
    # declaration order is the classification priority
    JSON_PARSE = "json_parse"
    MISSING_KEY = "missing_key"
    WRONG_HIERARCHY = "wrong_hierarchy"
    MISSING_REQUESTED_ELEMENT = "missing_requested_element"
    INVARIANT_BREACH = "invariant_breach"


_ISSUE_TO_FAILURE = {
    IssueKind.MISSING_KEY: FailureKind.MISSING_KEY,
    IssueKind.WRONG_HIERARCHY: FailureKind.WRONG_HIERARCHY,
    IssueKind.INVARIANT: FailureKind.INVARIANT_BREACH,
}

_STRUCTURAL = {FailureKind.JSON_PARSE, FailureKind.MISSING_KEY, FailureKind.WRONG_HIERARCHY}


@dataclass(frozen=True)
class Failure:
    kind: FailureKind
    path: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind.value, "path": self.path, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    stage: Stage
    failures: tuple[Failure, ...] = ()
    document: Fragment | None = field(default=None, compare=False, repr=False)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def kinds(self) -> list[FailureKind]:
        return [f.kind for f in self.failures]

    @property
    def structural(self) -> bool:
        return any(k in _STRUCTURAL for k in self.kinds)

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage.value,
            "ok": self.ok,
            "failures": [f.to_dict() for f in self.failures],
        }


_SCOPES = ("banner", "foreground", "any")


@dataclass(frozen=True)
class RequestedElement:
    """An element the user prompt asks for.

    ``text`` is matched case-insensitively as a substring of an object's raw
    text. Logo requests carry no text. ``scope`` says where to look: banner
    objects, foreground objects, or anywhere (checked on full documents only).
    """

    cls: ObjectClass
    text: str | None = None
    scope: str = "any"

    def __post_init__(self) -> None:
        object.__setattr__(self, "cls", ObjectClass(self.cls))
        if self.scope not in _SCOPES:
            raise ValueError(f"scope must be one of {_SCOPES}")
        if self.cls is ObjectClass.TEXT and not (self.text and self.text.strip()):
            raise ValueError("text requests need a non-empty substring")

    def describe(self) -> str:
        if self.cls is ObjectClass.LOGO:
            return f"{self.scope} logo"
        return f"{self.scope} text {self.text!r}"


_QUOTED = re.compile(r'"([^"]+)"|“([^”]+)”')


def extract_quoted(prompt: str) -> list[str]:
    """Quoted strings in ``prompt`` (straight or curly double quotes), deduplicated."""
    out: list[str] = []
    for m in _QUOTED.finditer(prompt):
        s = (m.group(1) or m.group(2)).strip()
        # a list comma typed inside the quotes is not on-screen text
        s = s.rstrip(",")
        if s and s not in out:
            out.append(s)
    return out


_NEGATED_LOGO = re.compile(r"\bno\s+logos?\b", re.IGNORECASE)


@dataclass(frozen=True)
class PromptSpec:
    requested_elements: tuple[RequestedElement, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "requested_elements", tuple(self.requested_elements))

    @classmethod
    def from_prompts(cls, banner_prompt: str = "", mainground_prompt: str = "") -> PromptSpec:
        """Requested elements implied by the two user prompts.

        Every quoted string becomes a text request in the matching scope; a
        banner prompt that mentions a logo also requests one.
        """
        elems = [RequestedElement(ObjectClass.TEXT, s, "banner") for s in extract_quoted(banner_prompt)]
        unquoted = _QUOTED.sub("", banner_prompt)
        if re.search(r"\blogo\b", unquoted, re.IGNORECASE) and not _NEGATED_LOGO.search(unquoted):
            elems.append(RequestedElement(ObjectClass.LOGO, None, "banner"))
        elems += [RequestedElement(ObjectClass.TEXT, s, "foreground") for s in extract_quoted(mainground_prompt)]
        return cls(tuple(elems))

    def for_stage(self, stage: Stage) -> list[RequestedElement]:
        if stage is Stage.BANNER:
            return [e for e in self.requested_elements if e.scope == "banner"]
        if stage is Stage.MAINGROUND:
            return [e for e in self.requested_elements if e.scope == "foreground"]
        if stage is Stage.FULL:
            return list(self.requested_elements)
        return []


def _raw_objects(payload: Any, stage: Stage) -> dict[str, list[dict]]:
    """Object dicts by scope, read leniently from structurally valid JSON."""
    banner_objs: list[dict] = []
    fg_objs: list[dict] = []
    if isinstance(payload, dict):
        for banner in payload.get("banners", []) if stage in (Stage.BANNER, Stage.FULL) else []:
            if isinstance(banner, dict):
                banner_objs += [o for o in banner.get("objects", []) if isinstance(o, dict)]
        if stage in (Stage.MAINGROUND, Stage.FULL):
            fg_objs = [o for o in payload.get("foreground", []) if isinstance(o, dict)]
    return {"banner": banner_objs, "foreground": fg_objs, "any": banner_objs + fg_objs}


def _satisfied(elem: RequestedElement, objs: Iterable[dict]) -> bool:
    for o in objs:
        if o.get("class") != elem.cls.value:
            continue
        if elem.cls is ObjectClass.LOGO:
            return True
        text = o.get("text")
        if isinstance(text, str) and elem.text.casefold() in text.casefold():
            return True
    return False


def validate_stage(
    text: str | bytes,
    stage: Stage | str,
    spec: PromptSpec | None = None,
    canvas: Canvas | None = None,
    foreground_count: int | None = None,
) -> ValidationReport:
    """Validate one generated ST text.

    Parse failures preempt every other check. Requested elements are checked
    only when the document is structurally sound (no missing keys or wrong
    hierarchy), so a malformed document is not double-counted as incomplete.
    The report's ``document`` carries the decoded fragment when parsing
    succeeded.
    """
    stage = stage if isinstance(stage, Stage) else Stage(stage)
    try:
        payload = load_json(text)
    except JsonSyntax as exc:
        return ValidationReport(stage, (Failure(FailureKind.JSON_PARSE, exc.path, exc.message),))

    failures: list[Failure] = []
    document = None
    try:
        document = decode(payload, stage, canvas, foreground_count)
    except SchemaViolation as exc:
        failures = [Failure(_ISSUE_TO_FAILURE[i.kind], i.path, i.message) for i in exc.issues]

    if spec is not None and not any(f.kind in _STRUCTURAL for f in failures):
        objs = _raw_objects(payload, stage)
        for elem in spec.for_stage(stage):
            if not _satisfied(elem, objs[elem.scope]):
                failures.append(
                    Failure(FailureKind.MISSING_REQUESTED_ELEMENT, "$", f"missing requested {elem.describe()}")
                )

    order = list(FailureKind)
    failures.sort(key=lambda f: order.index(f.kind))
    return ValidationReport(stage, tuple(failures), document)


class EmptyInput(ValueError):
    pass


def failure_rate(reports: Sequence[ValidationReport]) -> float:
    """Fraction of reports that are not ok."""
    if not reports:
        raise EmptyInput("failure_rate needs at least one report")
    return sum(not r.ok for r in reports) / len(reports)


def failure_rate_by_stage(reports: Sequence[ValidationReport]) -> dict[Stage, float]:
    groups: dict[Stage, list[ValidationReport]] = defaultdict(list)
    for r in reports:
        groups[r.stage].append(r)
    return {stage: failure_rate(rs) for stage, rs in groups.items()}
