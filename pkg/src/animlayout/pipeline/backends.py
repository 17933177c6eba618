"""Text-generation backends: an HTTP client and a deterministic mock."""

from __future__ import annotations

import abc
import hashlib
import json
import os
import socket
import urllib.error
import urllib.request
from pathlib import Path

from animlayout.st_model import Canvas, Stage

__all__ = [
    "BackendError",
    "BackendUnavailable",
    "GeneratorBackend",
    "HttpBackend",
    "MockBackend",
    "TOKEN_ENV",
    "prompt_key",
]

TOKEN_ENV = "ANIMLAYOUT_BACKEND_TOKEN"


class BackendError(RuntimeError):
    """The backend answered, but not with a usable completion."""


class BackendUnavailable(BackendError):
    """The backend could not be reached."""


class GeneratorBackend(abc.ABC):
    """Opaque text-in/text-out completion service.

    ``stage`` and ``phase`` ("ut" or "st") are routing hints; backends that
    talk to a real model ignore them.
    """

    name: str = "backend"
    timeout: float = 120.0
    max_retries: int = 2
    single_flight: bool = False

    @abc.abstractmethod
    def complete(
        self,
        system_prompt: str,
        user_prompt: str,
        *,
        stage: Stage | None = None,
        phase: str | None = None,
    ) -> str: ...


class HttpBackend(GeneratorBackend):
    """POSTs ``{"system", "prompt", "max_tokens"}`` and reads ``{"text"}`` back.

    The bearer token comes from ``token`` or the ``ANIMLAYOUT_BACKEND_TOKEN``
    environment variable.
    """

    def __init__(
        self,
        url: str,
        token: str | None = None,
        timeout: float = 120.0,
        max_retries: int = 2,
        max_tokens: int = 4096,
        name: str = "http",
    ) -> None:
        self.url = url
        self.token = token if token is not None else os.environ.get(TOKEN_ENV)
        self.timeout = timeout
        self.max_retries = max_retries
        self.max_tokens = max_tokens
        self.name = name

    def complete(self, system_prompt, user_prompt, *, stage=None, phase=None) -> str:
        body = json.dumps({"system": system_prompt, "prompt": user_prompt, "max_tokens": self.max_tokens})
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            req = urllib.request.Request(self.url, data=body.encode("utf-8"), headers=headers, method="POST")
        except ValueError as exc:
            raise BackendUnavailable(f"bad backend URL {self.url!r}: {exc}") from None
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code >= 500:
                raise BackendUnavailable(f"{self.url}: HTTP {exc.code}") from None
            raise BackendError(f"{self.url}: HTTP {exc.code}") from None
        except (urllib.error.URLError, socket.timeout, ConnectionError, OSError) as exc:
            raise BackendUnavailable(f"{self.url}: {exc}") from None
        try:
            payload = json.loads(raw)
            text = payload["text"]
        except (ValueError, KeyError, TypeError):
            raise BackendError(f"{self.url}: response is not {{\"text\": str}}") from None
        if not isinstance(text, str):
            raise BackendError(f"{self.url}: 'text' is not a string")
        return text


def prompt_key(user_prompt: str) -> str:
    return hashlib.sha256(user_prompt.encode("utf-8")).hexdigest()[:16]


class MockBackend(GeneratorBackend):
    """Deterministic offline backend.

    Lookup order for a call: ``<responses_dir>/<stage>/<phase>/<prompt_key>.txt``,
    then ``<responses_dir>/<stage>/<phase>/default.txt``, then the built-in
    rule generator, which turns any prompt into a minimal valid answer.
    """

    name = "mock"

    def __init__(
        self,
        responses_dir: str | Path | None = None,
        canvas: Canvas | None = None,
        max_retries: int = 2,
    ) -> None:
        self.responses_dir = Path(responses_dir) if responses_dir else None
        self.canvas = canvas or Canvas()
        self.max_retries = max_retries

    def _canned(self, stage: Stage, phase: str, user_prompt: str) -> str | None:
        if self.responses_dir is None:
            return None
        base = self.responses_dir / stage.value / phase
        for name in (f"{prompt_key(user_prompt)}.txt", "default.txt"):
            path = base / name
            if path.is_file():
                return path.read_text(encoding="utf-8")
        return None

    def complete(self, system_prompt, user_prompt, *, stage=None, phase=None) -> str:
        from animlayout.pipeline import mock_rules

        if stage is None or phase is None:
            raise BackendError("the mock backend needs stage and phase hints")
        stage = Stage(stage)
        canned = self._canned(stage, phase, user_prompt)
        if canned is not None:
            return canned
        return mock_rules.respond(stage, phase, user_prompt, self.canvas)
