"""Three-stage generation: Banner, then Mainground, then Animation.

Each stage makes a reasoning (UT) call followed by a structured (ST) call
that sees the UT text. Structurally broken answers are retried; the whole
exchange is recorded in a :class:`GenerationTrace`.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Sequence

from animlayout.pipeline.backends import GeneratorBackend
from animlayout.pipeline.templates import REQUIRED_PLACEHOLDERS, StageTemplate, default_templates
from animlayout.st_model import (
    Animation,
    BannerST,
    Canvas,
    MaingroundST,
    Stage,
    VideoST,
    serialize_st,
    to_payload,
)
from animlayout.validator import Failure, FailureKind, PromptSpec, ValidationReport, validate_stage

__all__ = [
    "Attempt",
    "Call",
    "GenerationTrace",
    "MissingContext",
    "NoJsonFound",
    "RetryDecision",
    "StageFailed",
    "StageOutput",
    "StageTrace",
    "extract_json_block",
    "generate",
    "retry_policy",
    "run_stage",
]

STAGE_ORDER = (Stage.BANNER, Stage.MAINGROUND, Stage.ANIMATION)
_FENCE = re.compile(r"```[^\n`]*\n?(.*?)```", re.DOTALL)


class NoJsonFound(ValueError):
    pass


class MissingContext(KeyError):
    pass


def _balanced_from(text: str, start: int) -> str | None:
    depth, in_str, esc = 0, False, False
    for i in range(start, len(text)):
        ch = text[i]
        if in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def extract_json_block(text: str) -> str:
    """JSON payload of a model answer.

    Returns the body of the first fenced code block when there is one,
    otherwise the balanced ``{...}`` span starting at the first ``{``.
    Brace matching skips braces inside JSON strings.

    Raises:
        NoJsonFound: neither a fence nor a complete brace span exists.
    """
    m = _FENCE.search(text)
    if m:
        return m.group(1).strip()
    start = text.find("{")
    if start >= 0:
        block = _balanced_from(text, start)
        if block is not None:
            return block
    raise NoJsonFound("no JSON block in backend output")


def _ut_prefix(text: str) -> str:
    cut = [i for i in (text.find("```"), text.find("{")) if i >= 0]
    return text[: min(cut)] if cut else text


class RetryDecision(str, enum.Enum):
    RETRY = "retry"
    ABORT = "abort"


_RETRYABLE = {FailureKind.JSON_PARSE, FailureKind.MISSING_KEY, FailureKind.WRONG_HIERARCHY}


def retry_policy(report: ValidationReport, attempt: int, max_retries: int = 2) -> RetryDecision:
    """Retry only structural failures, and only while the budget lasts.

    ``attempt`` counts from 1, so ``max_retries=2`` allows three attempts.
    """
    if attempt < 1:
        raise ValueError("attempt counts from 1")
    if report.ok or attempt > max_retries:
        return RetryDecision.ABORT
    if all(k in _RETRYABLE for k in report.kinds):
        return RetryDecision.RETRY
    return RetryDecision.ABORT


# --------------------------------------------------------------------------
# Trace
# --------------------------------------------------------------------------


@dataclass
class Call:
    phase: str
    system_prompt: str
    user_prompt: str
    response: str | None = None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "phase": self.phase,
            "system_prompt": self.system_prompt,
            "user_prompt": self.user_prompt,
            "response": self.response,
            "error": self.error,
        }


@dataclass
class Attempt:
    number: int
    calls: list[Call] = field(default_factory=list)
    ut_text: str | None = None
    raw_st_text: str | None = None
    st_text: str | None = None
    report: ValidationReport | None = None
    decision: RetryDecision | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "number": self.number,
            "calls": [c.to_dict() for c in self.calls],
            "ut_text": self.ut_text,
            "raw_st_text": self.raw_st_text,
            "st_text": self.st_text,
            "report": self.report.to_dict() if self.report else None,
            "decision": self.decision.value if self.decision else None,
        }


@dataclass
class StageTrace:
    stage: Stage
    backend: str
    attempts: list[Attempt] = field(default_factory=list)
    accepted: bool = False

    @property
    def report(self) -> ValidationReport | None:
        return self.attempts[-1].report if self.attempts else None

    @property
    def system_prompt(self) -> str | None:
        return self.attempts[-1].calls[0].system_prompt if self.attempts and self.attempts[-1].calls else None

    @property
    def ut_text(self) -> str | None:
        return self.attempts[-1].ut_text if self.attempts else None

    @property
    def raw_st_text(self) -> str | None:
        return self.attempts[-1].raw_st_text if self.attempts else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "stage": self.stage.value,
            "backend": self.backend,
            "accepted": self.accepted,
            "attempts": [a.to_dict() for a in self.attempts],
        }


@dataclass
class GenerationTrace:
    stages: list[StageTrace] = field(default_factory=list)
    report: ValidationReport | None = None

    @property
    def ok(self) -> bool:
        return self.report is not None and self.report.ok

    @property
    def calls(self) -> list[Call]:
        return [c for s in self.stages for a in s.attempts for c in a.calls]

    def stage(self, stage: Stage) -> StageTrace | None:
        return next((s for s in self.stages if s.stage is stage), None)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "report": self.report.to_dict() if self.report else None,
            "stages": [s.to_dict() for s in self.stages],
        }


class StageFailed(RuntimeError):
    def __init__(self, stage: Stage, report: ValidationReport, trace: GenerationTrace) -> None:
        kinds = ", ".join(k.value for k in report.kinds) or "unknown"
        super().__init__(f"{stage.value} stage failed: {kinds}")
        self.stage = stage
        self.report = report
        self.trace = trace


# --------------------------------------------------------------------------
# Stage execution
# --------------------------------------------------------------------------


class StageOutput(NamedTuple):
    ut_text: str
    st_text: str
    raw_st_text: str


def _format_context(context: Mapping[str, str], canvas: Canvas | None) -> dict[str, Any]:
    canvas = canvas or Canvas()
    out: dict[str, Any] = {
        "canvas_width": canvas.width,
        "canvas_height": canvas.height,
        "canvas_fps": canvas.fps,
    }
    out.update(context)
    return out


def _call(backend: GeneratorBackend, calls: list[Call], phase: str, system: str, user: str, stage: Stage) -> str:
    record = Call(phase, system, user)
    calls.append(record)
    try:
        record.response = backend.complete(system, user, stage=stage, phase=phase)
    except Exception as exc:
        record.error = f"{type(exc).__name__}: {exc}"
        raise
    return record.response


def run_stage(
    stage: Stage,
    context: Mapping[str, str],
    backend: GeneratorBackend,
    template: StageTemplate,
    calls: list[Call] | None = None,
    single_call: bool = False,
    canvas: Canvas | None = None,
) -> StageOutput:
    """UT call, then ST call with the UT text in context.

    With ``single_call`` one completion must hold the reasoning followed by
    the JSON; the UT is the text before the first fence or brace.

    Raises:
        MissingContext: ``context`` lacks a placeholder the stage needs.
        NoJsonFound: the structured answer holds no JSON.
    """
    stage = Stage(stage)
    missing = REQUIRED_PLACEHOLDERS[stage] - set(context)
    if missing:
        raise MissingContext(f"{stage.value} stage needs {sorted(missing)}")
    calls = calls if calls is not None else []
    ctx = _format_context(context, canvas)
    system = template.system_prompt(ctx)
    if single_call:
        raw = _call(backend, calls, "single", system, template.single_prompt(ctx), stage)
        ut = _ut_prefix(raw)
    else:
        ut = _call(backend, calls, "ut", system, template.ut_prompt(ctx), stage)
        raw = _call(backend, calls, "st", system, template.st_prompt(ctx, ut), stage)
    return StageOutput(ut, extract_json_block(raw), raw)


def _foreground_context(mainground: MaingroundST) -> str:
    payload = {"foreground": to_payload(mainground)["foreground"]}
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)


def _backend_triplet(backends) -> dict[Stage, GeneratorBackend]:
    if isinstance(backends, GeneratorBackend):
        return {s: backends for s in STAGE_ORDER}
    if isinstance(backends, Mapping):
        return {s: backends[s] for s in STAGE_ORDER}
    if isinstance(backends, Sequence) and len(backends) == 3:
        return dict(zip(STAGE_ORDER, backends))
    raise TypeError("backends must be one backend, a (B, S, T) triple, or a stage mapping")


def _run_with_retries(
    stage: Stage,
    context: Mapping[str, str],
    backend: GeneratorBackend,
    template: StageTemplate,
    trace: GenerationTrace,
    spec: PromptSpec | None,
    canvas: Canvas,
    single_call: bool,
    foreground_count: int | None = None,
):
    st = StageTrace(stage, backend.name)
    trace.stages.append(st)
    attempt_no = 0
    while True:
        attempt_no += 1
        attempt = Attempt(attempt_no)
        st.attempts.append(attempt)
        try:
            out = run_stage(stage, context, backend, template, attempt.calls, single_call, canvas)
        except NoJsonFound as exc:
            if attempt.calls:
                attempt.raw_st_text = attempt.calls[-1].response
            report = ValidationReport(stage, (Failure(FailureKind.JSON_PARSE, "$", str(exc)),))
        else:
            attempt.ut_text, attempt.st_text, attempt.raw_st_text = out
            report = validate_stage(out.st_text, stage, spec, canvas, foreground_count)
        attempt.report = report
        if report.ok:
            st.accepted = True
            return report.document
        attempt.decision = retry_policy(report, attempt_no, backend.max_retries)
        if attempt.decision is RetryDecision.RETRY:
            continue
        if report.document is not None:
            # semantic failures only: keep the document, the report records them
            st.accepted = True
            return report.document
        raise StageFailed(stage, report, trace)


def generate(
    p_b: str,
    p_m: str,
    backends,
    templates: Mapping[Stage, StageTemplate] | None = None,
    spec: PromptSpec | None = None,
    canvas: Canvas | None = None,
    single_call: bool = False,
) -> tuple[VideoST, GenerationTrace]:
    """Run Banner, Mainground and Animation stages in order.

    Args:
        p_b: Banner prompt.
        p_m: Mainground prompt.
        backends: One backend for all stages, a ``(B, S, T)`` triple, or a
            mapping from stage to backend.
        templates: Per-stage templates; the packaged defaults otherwise.
        spec: Requested elements checked at each stage and on the final
            document. ``None`` skips that check.
        canvas: Canvas for containment checks and the final document.
        single_call: Ask for UT and ST in one completion per attempt.

    Returns:
        The assembled document and the trace. ``trace.report`` validates the
        whole document and is the unit of the failure rate.

    Raises:
        StageFailed: a stage ran out of retries or failed semantically
            without a usable document. ``exc.trace`` holds the calls made.
        BackendUnavailable: a backend could not be reached.
    """
    canvas = canvas or Canvas()
    chosen = _backend_triplet(backends)
    tmpl = dict(templates) if templates else default_templates()
    trace = GenerationTrace()

    banner = _run_with_retries(
        Stage.BANNER, {"banner_prompt": p_b}, chosen[Stage.BANNER], tmpl[Stage.BANNER], trace, spec, canvas, single_call
    )
    assert isinstance(banner, BannerST)
    mainground = _run_with_retries(
        Stage.MAINGROUND,
        {"mainground_prompt": p_m, "banner_st": serialize_st(banner)},
        chosen[Stage.MAINGROUND],
        tmpl[Stage.MAINGROUND],
        trace,
        spec,
        canvas,
        single_call,
    )
    assert isinstance(mainground, MaingroundST)
    animation = _run_with_retries(
        Stage.ANIMATION,
        {"mainground_st": _foreground_context(mainground)},
        chosen[Stage.ANIMATION],
        tmpl[Stage.ANIMATION],
        trace,
        spec,
        canvas,
        single_call,
        foreground_count=len(mainground.foreground),
    )
    assert isinstance(animation, Animation)
    doc = VideoST.assemble(banner, mainground, animation, canvas)
    trace.report = validate_stage(serialize_st(doc), Stage.FULL, spec, canvas)
    return doc, trace
