"""Command-line interface: ``animlayout validate|generate|render|eval|extract``.

Exit codes are 0 for success, 1 for a domain failure (invalid document,
failed generation, unpaired corpus) and 2 for IO or environment problems.
Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import yaml

from animlayout import maskproc, metrics
from animlayout.pipeline import (
    BackendError,
    BackendUnavailable,
    HttpBackend,
    MockBackend,
    StageFailed,
    TemplateError,
    generate,
    load_templates,
)
from animlayout.renderer import RenderConfig, render_video
from animlayout.st_model import Canvas, Stage, VideoST, serialize_st
from animlayout.validator import PromptSpec, ValidationReport, failure_rate, validate_stage

__all__ = ["CONFIG_ENV", "Config", "ConfigError", "load_config", "main"]

CONFIG_ENV = "ANIMLAYOUT_CONFIG"
EXIT_OK, EXIT_FAIL, EXIT_ENV = 0, 1, 2

log = logging.getLogger("animlayout")


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    """Settings from the config file; command-line flags take precedence."""

    backend: str = "mock"
    backend_url: str | None = None
    responses_dir: str | None = None
    timeout: float = 120.0
    max_retries: int = 2
    max_tokens: int = 4096
    single_call: bool = False
    templates: dict[str, str] = field(default_factory=dict)
    canvas: Canvas = field(default_factory=Canvas)
    scale: float = 1.0
    font: str | None = None
    background_image_dir: str | None = None
    strict_background: bool = False
    include_banner_objects: bool = False
    match: str = "auto"
    tol: float = 2.0
    jobs: int = 1


_SECTIONS: dict[str, dict[str, str]] = {
    "backend": {
        "kind": "backend",
        "url": "backend_url",
        "responses_dir": "responses_dir",
        "timeout": "timeout",
        "max_retries": "max_retries",
        "max_tokens": "max_tokens",
        "single_call": "single_call",
    },
    "render": {
        "scale": "scale",
        "font": "font",
        "background_image_dir": "background_image_dir",
        "strict_background": "strict_background",
    },
    "metrics": {"include_banner_objects": "include_banner_objects", "match": "match"},
    "extract": {"tol": "tol"},
}
_PATH_KEYS = ("responses_dir", "background_image_dir")


def load_config(path: str | Path | None) -> Config:
    """Read a YAML config. ``None`` gives the defaults.

    Layout::

        backend: {kind: mock|http, url, responses_dir, timeout, max_retries, max_tokens, single_call}
        templates: {banner: path, mainground: path, animation: path}
        canvas: {width, height, fps}
        render: {scale, font, background_image_dir, strict_background}
        metrics: {include_banner_objects, match}
        extract: {tol}
        jobs: N

    Raises:
        ConfigError: unreadable file, unknown keys, or a referenced path that
            does not exist.
    """
    cfg = Config()
    if path is None:
        return cfg
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: {key} must be a mapping")
            for sub, sub_value in value.items():
                if sub not in _SECTIONS[key]:
                    raise ConfigError(f"{path}: unknown key {key}.{sub}")
                setattr(cfg, _SECTIONS[key][sub], sub_value)
        elif key == "templates":
            if not isinstance(value, dict) or set(value) - {"banner", "mainground", "animation"}:
                raise ConfigError(f"{path}: templates maps banner/mainground/animation to files")
            cfg.templates = {k: str(v) for k, v in value.items()}
        elif key == "canvas":
            try:
                cfg.canvas = Canvas(**value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad canvas: {exc}") from None
        elif key == "jobs":
            cfg.jobs = value
        else:
            raise ConfigError(f"{path}: unknown key {key}")
    for attr in _PATH_KEYS:
        value = getattr(cfg, attr)
        if value is not None and not Path(value).exists():
            raise ConfigError(f"{path}: {attr} {value} does not exist")
    for stage, tpath in cfg.templates.items():
        if not Path(tpath).is_file():
            raise ConfigError(f"{path}: template for {stage} {tpath} does not exist")
    if cfg.font not in (None, "", "builtin") and not Path(cfg.font).is_file():
        raise ConfigError(f"{path}: font {cfg.font} does not exist")
    if cfg.backend not in ("mock", "http"):
        raise ConfigError(f"{path}: backend.kind must be mock or http")
    return cfg


def _apply_flags(cfg: Config, args: argparse.Namespace) -> Config:
    for name in (
        "backend",
        "backend_url",
        "responses_dir",
        "max_retries",
        "scale",
        "font",
        "background_image_dir",
        "tol",
        "jobs",
        "match",
    ):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    for name in ("single_call", "strict_background", "include_banner_objects"):
        if getattr(args, name, False):
            setattr(cfg, name, True)
    return cfg


def _err(msg: str) -> None:
    print(f"animlayout: {msg}", file=sys.stderr)


def _write_json(path: Path, payload: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _read_text(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------


def _report_line(path: str, report: ValidationReport) -> str:
    if report.ok:
        return f"{path}: ok"
    parts = [f"{f.kind.value} at {f.path}: {f.message}" for f in report.failures]
    return f"{path}: FAIL " + "; ".join(parts)


def cmd_validate(args: argparse.Namespace, cfg: Config) -> int:
    spec = None
    if args.banner_prompt is not None or args.mainground_prompt is not None:
        spec = PromptSpec.from_prompts(args.banner_prompt or "", args.mainground_prompt or "")
    status = EXIT_OK
    for path in args.paths:
        try:
            text = _read_text(path)
        except (OSError, UnicodeDecodeError) as exc:
            _err(f"cannot read {path}: {exc}")
            return EXIT_ENV
        report = validate_stage(text, Stage(args.stage), spec, cfg.canvas)
        if args.json:
            print(json.dumps({"path": path, **report.to_dict()}, sort_keys=True))
        else:
            print(_report_line(path, report))
        if not report.ok:
            status = EXIT_FAIL
    return status


# --------------------------------------------------------------------------
# generate
# --------------------------------------------------------------------------


def _backend(cfg: Config):
    if cfg.backend == "mock":
        return MockBackend(cfg.responses_dir, cfg.canvas, cfg.max_retries)
    if not cfg.backend_url:
        raise ConfigError("the http backend needs --backend-url or backend.url")
    return HttpBackend(cfg.backend_url, timeout=cfg.timeout, max_retries=cfg.max_retries, max_tokens=cfg.max_tokens)


def cmd_generate(args: argparse.Namespace, cfg: Config) -> int:
    try:
        p_b = _read_text(args.banner_prompt_file) if args.banner_prompt_file else (args.banner_prompt or "")
        p_m = _read_text(args.mainground_prompt_file) if args.mainground_prompt_file else (args.mainground_prompt or "")
        templates = load_templates(cfg.templates)
        backend = _backend(cfg)
    except (OSError, TemplateError, ConfigError) as exc:
        _err(str(exc))
        return EXIT_ENV
    spec = None if args.no_spec else PromptSpec.from_prompts(p_b, p_m)
    out = Path(args.out)
    try:
        doc, trace = generate(p_b, p_m, backend, templates, spec, cfg.canvas, cfg.single_call)
    except StageFailed as exc:
        _write_json(out / "trace.json", exc.trace.to_dict())
        _err(str(exc))
        return EXIT_FAIL
    except BackendUnavailable as exc:
        _err(f"backend unavailable: {exc}")
        return EXIT_ENV
    except BackendError as exc:
        _err(f"backend error: {exc}")
        return EXIT_FAIL
    out.mkdir(parents=True, exist_ok=True)
    (out / "document.json").write_text(serialize_st(doc) + "\n", encoding="utf-8")
    _write_json(out / "trace.json", trace.to_dict())
    if not trace.ok:
        _err("generated document failed validation: " + ", ".join(k.value for k in trace.report.kinds))
        return EXIT_FAIL
    return EXIT_OK


# --------------------------------------------------------------------------
# render
# --------------------------------------------------------------------------


def _load_document(path: str, canvas: Canvas) -> tuple[VideoST | None, int]:
    try:
        text = _read_text(path)
    except (OSError, UnicodeDecodeError) as exc:
        _err(f"cannot read {path}: {exc}")
        return None, EXIT_ENV
    report = validate_stage(text, Stage.FULL, canvas=canvas)
    if not report.ok:
        _err(_report_line(path, report))
        return None, EXIT_FAIL
    return report.document, EXIT_OK


def cmd_render(args: argparse.Namespace, cfg: Config) -> int:
    doc, status = _load_document(args.st_path, cfg.canvas)
    if doc is None:
        return status
    try:
        rcfg = RenderConfig(
            scale=cfg.scale,
            font=cfg.font,
            background_image_dir=cfg.background_image_dir,
            strict_background=cfg.strict_background,
        )
        render_video(doc, rcfg, args.out_dir, jobs=cfg.jobs)
    except FileNotFoundError as exc:
        _err(str(exc))
        return EXIT_ENV
    except OSError as exc:
        _err(f"cannot write frames: {exc}")
        return EXIT_ENV
    except ValueError as exc:
        _err(str(exc))
        return EXIT_FAIL
    return EXIT_OK


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------


def _pairs(args: argparse.Namespace) -> list[tuple[str, str]]:
    gen_dir, real_dir = Path(args.gen), Path(args.real)
    if args.pairs:
        raw = json.loads(_read_text(args.pairs))
        if isinstance(raw, dict):
            raw = raw.get("pairs", [])
        return [(str(g), str(r)) for g, r in raw]
    gen = sorted(p.name for p in gen_dir.glob("*.json"))
    real = sorted(p.name for p in real_dir.glob("*.json"))
    unpaired = sorted(set(gen) ^ set(real))
    if unpaired:
        raise LookupError(f"unpaired file(s): {', '.join(unpaired)}")
    return [(n, n) for n in gen]


def _table(report: dict[str, Any]) -> str:
    rows = [("metric", "value")]
    for key in ("fmd", "overlap", "miou", "failure_rate", "n"):
        value = report[key]
        if value is None:
            shown = "n/a"
        elif isinstance(value, float):
            shown = f"{value:.4f}"
        else:
            shown = str(value)
        rows.append((key, shown))
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    lines = [f"{a:<{w0}}  {b:>{w1}}" for a, b in rows]
    lines.insert(1, "-" * (w0 + 2 + w1))
    return "\n".join(lines)


def cmd_eval(args: argparse.Namespace, cfg: Config) -> int:
    gen_dir, real_dir = Path(args.gen), Path(args.real)
    if not gen_dir.is_dir() or not real_dir.is_dir():
        _err("--gen and --real must be directories")
        return EXIT_ENV
    try:
        pairs = _pairs(args)
    except LookupError as exc:
        _err(str(exc))
        return EXIT_FAIL
    except (OSError, ValueError, TypeError) as exc:
        _err(f"cannot read pairs: {exc}")
        return EXIT_ENV
    if not pairs:
        _err("no documents to evaluate")
        return EXIT_FAIL

    reports, gen_docs, real_docs, matched = [], [], [], []
    for gname, rname in pairs:
        gpath, rpath = gen_dir / gname, real_dir / rname
        if not gpath.is_file() or not rpath.is_file():
            _err(f"unpaired: {gname} -> {rname}")
            return EXIT_FAIL
        try:
            gtext, rtext = _read_text(gpath), _read_text(rpath)
        except (OSError, UnicodeDecodeError) as exc:
            _err(f"cannot read pair {gname}: {exc}")
            return EXIT_ENV
        real_report = validate_stage(rtext, Stage.FULL)
        if not real_report.ok:
            _err(_report_line(str(rpath), real_report))
            return EXIT_FAIL
        report = validate_stage(gtext, Stage.FULL)
        reports.append(report)
        real_docs.append(real_report.document)
        if report.ok:
            gen_docs.append(report.document)
            matched.append((report.document, real_report.document))

    inc = cfg.include_banner_objects
    fmd_value = None
    try:
        fmd_value = metrics.fmd(metrics.corpus_stats(real_docs), metrics.corpus_stats(gen_docs))
    except metrics.InsufficientSamples as exc:
        _err(f"fmd unavailable: {exc}")
    result = {
        "fmd": fmd_value,
        "overlap": sum(metrics.overlap(d, inc) for d in gen_docs) / len(gen_docs) if gen_docs else None,
        "miou": (
            sum(metrics.max_iou(g, r, inc, cfg.match) for g, r in matched) / len(matched) if matched else None
        ),
        "failure_rate": failure_rate(reports),
        "n": len(pairs),
    }
    if args.out:
        try:
            _write_json(Path(args.out), result)
        except OSError as exc:
            _err(f"cannot write {args.out}: {exc}")
            return EXIT_ENV
    else:
        print(json.dumps(result, sort_keys=True))
    print(_table(result))
    return EXIT_OK


# --------------------------------------------------------------------------
# extract
# --------------------------------------------------------------------------


def cmd_extract(args: argparse.Namespace, cfg: Config) -> int:
    try:
        frames, index = maskproc.load_mask_dir(args.mask_dir)
        if not frames:
            _err("index.json lists no frames")
            return EXIT_FAIL
        tracks = maskproc.assemble_tracks(frames[::-1])
    except maskproc.DimensionMismatch as exc:
        _err(str(exc))
        return EXIT_ENV
    except (OSError, ValueError, KeyError) as exc:
        _err(f"cannot read masks: {exc}")
        return EXIT_ENV
    index_of = maskproc.object_index_map(index, tracks)
    anim = maskproc.tracks_to_animation(tracks, len(frames), cfg.tol, index_of)
    text = serialize_st(anim) + "\n"
    if args.out:
        try:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            _err(f"cannot write {args.out}: {exc}")
            return EXIT_ENV
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # common flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=f"YAML config file (default: ${CONFIG_ENV})")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker cap for parallel steps")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="animlayout", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[common])

    p = add("validate", help="validate ST documents")
    p.add_argument("paths", nargs="+")
    p.add_argument("--stage", default="full", choices=[s.value for s in Stage])
    p.add_argument("--banner-prompt")
    p.add_argument("--mainground-prompt")
    p.add_argument("--json", action="store_true", help="one JSON report per line")
    p.set_defaults(func=cmd_validate)

    p = add("generate", help="run the three-stage generation")
    p.add_argument("--banner-prompt")
    p.add_argument("--mainground-prompt")
    p.add_argument("--banner-prompt-file")
    p.add_argument("--mainground-prompt-file")
    p.add_argument("--backend", choices=["mock", "http"])
    p.add_argument("--backend-url")
    p.add_argument("--responses-dir", help="canned responses for the mock backend")
    p.add_argument("--max-retries", type=int)
    p.add_argument("--single-call", action="store_true", help="UT and ST in one completion")
    p.add_argument("--no-spec", action="store_true", help="skip requested-element checks")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = add("render", help="render a document to PNG frames")
    p.add_argument("st_path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scale", type=float)
    p.add_argument("--font")
    p.add_argument("--background-image-dir")
    p.add_argument("--strict-background", action="store_true")
    p.set_defaults(func=cmd_render)

    p = add("eval", help="FMD, overlap, mIoU and failure rate")
    p.add_argument("--gen", required=True)
    p.add_argument("--real", required=True)
    p.add_argument("--pairs", help="JSON list of [gen_file, real_file] pairs")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--include-banner-objects", action="store_true")
    p.add_argument("--match", choices=["auto", "exact", "greedy"])
    p.set_defaults(func=cmd_eval)

    p = add("extract", help="Animation ST from object-id masks")
    p.add_argument("mask_dir")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("config", None), ("jobs", None), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        cfg = _apply_flags(load_config(args.config or os.environ.get(CONFIG_ENV) or None), args)
        if cfg.jobs < 1:
            raise ConfigError("jobs must be >= 1")
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_ENV
    return args.func(args, cfg)


if __name__ == "__main__":
    raise SystemExit(main())
