"""Prompt-to-document generation over pluggable text backends."""

from animlayout.pipeline.backends import (
    TOKEN_ENV,
    BackendError,
    BackendUnavailable,
    GeneratorBackend,
    HttpBackend,
    MockBackend,
    prompt_key,
)
from animlayout.pipeline.stages import (
    Attempt,
    Call,
    GenerationTrace,
    MissingContext,
    NoJsonFound,
    RetryDecision,
    StageFailed,
    StageOutput,
    StageTrace,
    extract_json_block,
    generate,
    retry_policy,
    run_stage,
)
from animlayout.pipeline.templates import (
    StageTemplate,
    TemplateError,
    default_templates,
    load_template,
    load_templates,
)

__all__ = [
    "TOKEN_ENV",
    "Attempt",
    "BackendError",
    "BackendUnavailable",
    "Call",
    "GenerationTrace",
    "GeneratorBackend",
    "HttpBackend",
    "MissingContext",
    "MockBackend",
    "NoJsonFound",
    "RetryDecision",
    "StageFailed",
    "StageOutput",
    "StageTemplate",
    "StageTrace",
    "TemplateError",
    "default_templates",
    "extract_json_block",
    "generate",
    "load_template",
    "load_templates",
    "prompt_key",
    "retry_policy",
    "run_stage",
]
