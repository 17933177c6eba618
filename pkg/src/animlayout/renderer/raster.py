"""Rasterisation of documents into RGB frames and PNG sequences."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image

from animlayout.renderer.font import BitmapFont, Font, load_font
from animlayout.st_model import (
    TRANSPARENT,
    BackgroundKind,
    BBox,
    Color,
    LayoutObject,
    ObjectClass,
    VideoST,
)
from animlayout.timeline import FrameOutOfRange, boxes_at, expand_animation

__all__ = [
    "Frame",
    "MissingBackgroundImage",
    "RenderConfig",
    "TextLine",
    "TextPlan",
    "Unrenderable",
    "caption_key",
    "fit_text",
    "render_frame",
    "render_video",
]

log = logging.getLogger(__name__)

FALLBACK_GRAY = Color(0x80, 0x80, 0x80)
MIN_TEXT_PX = 4
WRAP_BELOW_PX = 8
FILL_RATIO = 0.9


class Unrenderable(ValueError):
    pass


class MissingBackgroundImage(FileNotFoundError):
    pass


@dataclass(frozen=True)
class RenderConfig:
    """Rendering options.

    ``background_image_dir`` holds images named ``<caption_key(caption)>``
    plus ``.png``/``.jpg``; missing images fall back to mid-gray unless
    ``strict_background`` is set.
    """

    scale: float = 1.0
    font: str | None = None
    logo_placeholder: Color = Color(0xC8, 0xC8, 0xC8)
    background_image_dir: str | None = None
    strict_background: bool = False
    png_compress_level: int = 6

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError("scale must be > 0")


@dataclass
class Frame:
    width: int
    height: int
    array: np.ndarray
    warnings: list[str] = field(default_factory=list)

    @property
    def pixels(self) -> bytes:
        """Row-major RGB bytes."""
        return self.array.tobytes()

    def pixel(self, x: int, y: int) -> tuple[int, int, int]:
        r, g, b = self.array[y, x]
        return int(r), int(g), int(b)


# --------------------------------------------------------------------------
# Text layout
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TextLine:
    text: str
    x: int
    y: int
    width: int


@dataclass(frozen=True)
class TextPlan:
    size: int
    lines: tuple[TextLine, ...]


def _px(v: float) -> int:
    return int(math.floor(v + 0.5))


def pixel_rect(box: BBox) -> tuple[int, int, int, int]:
    """Pixel span ``(left, top, right, bottom)``, right/bottom exclusive."""
    return _px(box.x1), _px(box.y1), _px(box.x2), _px(box.y2)


def _wrap(words: list[str], font: Font, size: int, max_w: int) -> list[str] | None:
    lines: list[str] = []
    current = ""
    for word in words:
        if font.line_width(word, size) > max_w:
            return None
        candidate = f"{current} {word}" if current else word
        if font.line_width(candidate, size) <= max_w:
            current = candidate
        else:
            lines.append(current)
            current = word
    if current:
        lines.append(current)
    return lines


@lru_cache(maxsize=8192)
def _plan_lines(text: str, pw: int, ph: int, font: Font) -> tuple[int, tuple[str, ...]]:
    max_w = math.floor(FILL_RATIO * pw)
    max_h = math.floor(FILL_RATIO * ph)
    single = 0
    for size in range(max_h, MIN_TEXT_PX - 1, -1):
        if font.line_width(text, size) <= max_w:
            single = size
            break
    if single >= WRAP_BELOW_PX:
        return single, (text,)
    words = text.split()
    if len(words) > 1:
        for size in range(max_h // 2, max(single, MIN_TEXT_PX - 1), -1):
            lines = _wrap(words, font, size, max_w)
            if lines is not None and len(lines) * size <= max_h:
                return size, tuple(lines)
    if single:
        return single, (text,)
    raise Unrenderable(f"no glyph size >= {MIN_TEXT_PX}px fits {text!r} in a {pw}x{ph} box")


def fit_text(text: str, bbox: BBox, font: Font | None = None) -> TextPlan:
    """Largest integer pixel size at which ``text`` fits 90% of ``bbox``.

    Single-line text is preferred; when it would be smaller than 8 px the
    text is wrapped at spaces if that allows a larger size. The block and
    each line are centred. Raises :class:`Unrenderable` when no size of at
    least 4 px fits.
    """
    font = font or BitmapFont()
    left, top, right, bottom = pixel_rect(bbox)
    pw, ph = right - left, bottom - top
    if pw <= 0 or ph <= 0:
        raise Unrenderable(f"empty box {bbox.as_list()}")
    size, lines = _plan_lines(text.strip(), pw, ph, font)
    y = top + (ph - size * len(lines)) // 2
    placed = []
    for i, line in enumerate(lines):
        w = font.line_width(line, size)
        placed.append(TextLine(line, left + (pw - w) // 2, y + i * size, w))
    return TextPlan(size, tuple(placed))


# --------------------------------------------------------------------------
# Painting
# --------------------------------------------------------------------------


def _fill(canvas: np.ndarray, box: BBox, color: Color) -> None:
    left, top, right, bottom = pixel_rect(box)
    h, w = canvas.shape[:2]
    canvas[max(top, 0) : min(bottom, h), max(left, 0) : min(right, w)] = color.as_tuple()


def _paint_logo(canvas: np.ndarray, box: BBox, fill: Color) -> None:
    left, top, right, bottom = pixel_rect(box)
    if right <= left or bottom <= top:
        return
    border = Color(fill.r // 2, fill.g // 2, fill.b // 2)
    _fill(canvas, box, border)
    if right - left > 2 and bottom - top > 2:
        inner = BBox(left + 1, top + 1, right - left - 2, bottom - top - 2)
        _fill(canvas, inner, fill)


def _paint_text(canvas: np.ndarray, obj: LayoutObject, box: BBox, font: Font, warnings: list[str]) -> None:
    attrs = obj.attrs
    if attrs.textbox_color != TRANSPARENT:
        _fill(canvas, box, attrs.textbox_color)
    try:
        plan = fit_text(attrs.raw_text, box, font)
    except Unrenderable as exc:
        warnings.append(str(exc))
        return
    left, top, right, bottom = pixel_rect(box)
    h, w = canvas.shape[:2]
    clip_l, clip_t, clip_r, clip_b = max(left, 0), max(top, 0), min(right, w), min(bottom, h)
    color = np.array(attrs.text_color.as_tuple(), dtype=np.uint8)
    for line in plan.lines:
        cover = font.render_line(line.text, plan.size)
        y0, x0 = line.y, line.x
        ys0, xs0 = max(y0, clip_t), max(x0, clip_l)
        ys1, xs1 = min(y0 + cover.shape[0], clip_b), min(x0 + cover.shape[1], clip_r)
        if ys1 <= ys0 or xs1 <= xs0:
            continue
        sub = cover[ys0 - y0 : ys1 - y0, xs0 - x0 : xs1 - x0]
        canvas[ys0:ys1, xs0:xs1][sub] = color


def _paint_object(canvas: np.ndarray, obj: LayoutObject, box: BBox, cfg: RenderConfig, font: Font, warnings: list[str]) -> None:
    if obj.cls is ObjectClass.LOGO:
        _paint_logo(canvas, box, cfg.logo_placeholder)
    else:
        _paint_text(canvas, obj, box, font, warnings)


def caption_key(caption: str) -> str:
    return hashlib.sha256(caption.encode("utf-8")).hexdigest()[:16]


@lru_cache(maxsize=16)
def _load_background(path: str, width: int, height: int) -> np.ndarray:
    with Image.open(path) as img:
        img = img.convert("RGB").resize((width, height), Image.NEAREST)
        return np.array(img, dtype=np.uint8)


def _resolve_background(caption: str, cfg: RenderConfig) -> str | None:
    if not cfg.background_image_dir:
        return None
    key = caption_key(caption)
    for ext in (".png", ".jpg", ".jpeg"):
        candidate = os.path.join(cfg.background_image_dir, key + ext)
        if os.path.exists(candidate):
            return candidate
    return None


def _paint_background(canvas: np.ndarray, doc: VideoST, cfg: RenderConfig, warnings: list[str]) -> None:
    bg = doc.background
    if bg.kind is BackgroundKind.SOLID_COLOR:
        canvas[:, :] = bg.color.as_tuple()
        return
    path = _resolve_background(bg.caption, cfg)
    if path is None:
        msg = f"no background image for caption {bg.caption!r}; using #808080"
        if cfg.strict_background:
            raise MissingBackgroundImage(msg)
        warnings.append(msg)
        canvas[:, :] = FALLBACK_GRAY.as_tuple()
        return
    h, w = canvas.shape[:2]
    canvas[:, :] = _load_background(path, w, h)


def _frame_size(doc: VideoST, cfg: RenderConfig) -> tuple[int, int]:
    return max(1, _px(doc.canvas.width * cfg.scale)), max(1, _px(doc.canvas.height * cfg.scale))


def _render(doc: VideoST, f: int, cfg: RenderConfig, font: Font, tracks) -> Frame:
    width, height = _frame_size(doc, cfg)
    canvas = np.zeros((height, width, 3), dtype=np.uint8)
    warnings: list[str] = []
    s = cfg.scale
    _paint_background(canvas, doc, cfg, warnings)
    for obj, box in boxes_at(doc, f, tracks):
        if box is not None:
            _paint_object(canvas, obj, box.scaled(s), cfg, font, warnings)
    for banner in doc.banners:
        _fill(canvas, banner.bbox.scaled(s), banner.color)
        for obj in banner.objects:
            _paint_object(canvas, obj, obj.bbox.scaled(s), cfg, font, warnings)
    return Frame(width, height, canvas, warnings)


def render_frame(doc: VideoST, f: int, cfg: RenderConfig | None = None) -> Frame:
    """Rasterise frame ``f``.

    Paint order: background, foreground objects in list order (at their
    animated boxes), banners, banner objects. Raises
    :class:`~animlayout.timeline.FrameOutOfRange` for frames outside the
    animation.
    """
    cfg = cfg or RenderConfig()
    if not 0 <= f < doc.animation.duration:
        raise FrameOutOfRange(f"frame {f} outside [0, {doc.animation.duration})")
    return _render(doc, f, cfg, load_font(cfg.font), expand_animation(doc.animation))


def render_video(doc: VideoST, cfg: RenderConfig | None, out_dir: str | Path, jobs: int = 1) -> dict:
    """Write ``frame_%05d.png`` for every frame plus ``manifest.json``.

    Returns the manifest. Output is byte-identical for identical inputs.
    """
    cfg = cfg or RenderConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    font = load_font(cfg.font)
    tracks = expand_animation(doc.animation)

    def work(f: int) -> list[str]:
        frame = _render(doc, f, cfg, font, tracks)
        img = Image.fromarray(frame.array, "RGB")
        img.save(out / f"frame_{f:05d}.png", format="PNG", compress_level=cfg.png_compress_level)
        return frame.warnings

    frames = range(doc.animation.duration)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_frame = list(pool.map(work, frames))
    else:
        per_frame = [work(f) for f in frames]

    warnings: list[str] = []
    for ws in per_frame:
        for w in ws:
            if w not in warnings:
                warnings.append(w)
    for w in warnings:
        log.warning(w)
    width, height = _frame_size(doc, cfg)
    manifest = {
        "fps": doc.canvas.fps,
        "frames": doc.animation.duration,
        "width": width,
        "height": height,
        "warnings": warnings,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
