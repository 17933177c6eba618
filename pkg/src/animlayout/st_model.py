"""Domain types for animated layouts and their canonical JSON codec.

A full document holds four components (banners, foreground, background,
animation) plus canvas metadata. Generation happens in stages, so the codec
also reads and writes the per-stage fragments:

* ``Stage.BANNER``      -> ``{"banners": [...]}``
* ``Stage.MAINGROUND``  -> ``{"foreground": [...], "background": {...}}``
* ``Stage.ANIMATION``   -> ``{"duration": int, "tracks": [...]}``
* ``Stage.FULL``        -> all of the above keys plus an optional ``canvas``
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Union

__all__ = [
    "Animation",
    "Background",
    "BackgroundKind",
    "Banner",
    "BannerPosition",
    "BannerST",
    "BBox",
    "Canvas",
    "Color",
    "Issue",
    "IssueKind",
    "JsonSyntax",
    "Keyframe",
    "LayoutObject",
    "MaingroundST",
    "ObjectAnimation",
    "ObjectClass",
    "SchemaViolation",
    "STError",
    "Stage",
    "TextAttrs",
    "TRANSPARENT",
    "VideoST",
    "iou",
    "parse_st",
    "serialize_st",
    "to_payload",
]

TRANSPARENT = "transparent"
_HEX_RE = re.compile(r"^#[0-9A-Fa-f]{6}$")


class Stage(str, enum.Enum):
    BANNER = "banner"
    MAINGROUND = "mainground"
    ANIMATION = "animation"
    FULL = "full"


class ObjectClass(str, enum.Enum):
    TEXT = "text"
    LOGO = "logo"


class BannerPosition(str, enum.Enum):
    BOTTOM = "bottom"
    TOP_LEFT = "top_left"
    TOP_RIGHT = "top_right"


class BackgroundKind(str, enum.Enum):
    SOLID_COLOR = "solid_color"
    IMAGE = "image"


# --------------------------------------------------------------------------
# Value types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box ``[x1, y1, w, h]`` in canvas pixels."""

    x1: float
    y1: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "w", "h"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"BBox.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.w < 0 or self.h < 0:
            raise ValueError(f"BBox width/height must be >= 0, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x1 + self.w

    @property
    def y2(self) -> float:
        return self.y1 + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.w, self.h]

    def scaled(self, sx: float, sy: float | None = None) -> BBox:
        sy = sx if sy is None else sy
        return BBox(self.x1 * sx, self.y1 * sy, self.w * sx, self.h * sy)

    def inside(self, other: BBox) -> bool:
        return (
            self.x1 >= other.x1
            and self.y1 >= other.y1
            and self.x2 <= other.x2
            and self.y2 <= other.y2
        )


@dataclass(frozen=True)
class Color:
    r: int
    g: int
    b: int

    def __post_init__(self) -> None:
        for name in ("r", "g", "b"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= 255:
                raise ValueError(f"Color.{name} must be an integer in [0, 255], got {value!r}")

    @classmethod
    def from_hex(cls, text: str) -> Color:
        if not isinstance(text, str) or not _HEX_RE.match(text):
            raise ValueError(f"not a #RRGGBB color: {text!r}")
        return cls(int(text[1:3], 16), int(text[3:5], 16), int(text[5:7], 16))

    def to_hex(self) -> str:
        return f"#{self.r:02X}{self.g:02X}{self.b:02X}"

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.r, self.g, self.b)


@dataclass(frozen=True)
class TextAttrs:
    raw_text: str
    text_color: Color
    textbox_color: Union[Color, str] = TRANSPARENT

    def __post_init__(self) -> None:
        if not self.raw_text.strip():
            raise ValueError("raw_text must not be blank")
        if isinstance(self.textbox_color, str) and self.textbox_color != TRANSPARENT:
            raise ValueError(f"textbox_color must be a Color or {TRANSPARENT!r}")


@dataclass(frozen=True)
class LayoutObject:
    cls: ObjectClass
    bbox: BBox
    attrs: TextAttrs | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cls", ObjectClass(self.cls))
        if self.cls is ObjectClass.TEXT and self.attrs is None:
            raise ValueError("text objects require attributes")
        if self.cls is ObjectClass.LOGO and self.attrs is not None:
            raise ValueError("logo objects carry no attributes")

    @classmethod
    def text(
        cls,
        bbox: BBox,
        raw_text: str,
        text_color: Color = Color(255, 255, 255),
        textbox_color: Union[Color, str] = TRANSPARENT,
    ) -> LayoutObject:
        return cls(ObjectClass.TEXT, bbox, TextAttrs(raw_text, text_color, textbox_color))

    @classmethod
    def logo(cls, bbox: BBox) -> LayoutObject:
        return cls(ObjectClass.LOGO, bbox)


@dataclass(frozen=True)
class Banner:
    position: BannerPosition
    bbox: BBox
    color: Color
    objects: tuple[LayoutObject, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", BannerPosition(self.position))
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class Background:
    kind: BackgroundKind
    color: Color | None = None
    caption: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", BackgroundKind(self.kind))
        if self.kind is BackgroundKind.SOLID_COLOR:
            if self.color is None or self.caption is not None:
                raise ValueError("solid_color background needs a color and no caption")
        elif self.caption is None or self.color is not None:
            raise ValueError("image background needs a caption and no color")

    @classmethod
    def solid(cls, color: Color) -> Background:
        return cls(BackgroundKind.SOLID_COLOR, color=color)

    @classmethod
    def image(cls, caption: str) -> Background:
        return cls(BackgroundKind.IMAGE, caption=caption)


@dataclass(frozen=True)
class Keyframe:
    frame: int
    bbox: BBox

    def __post_init__(self) -> None:
        if isinstance(self.frame, bool) or not isinstance(self.frame, int) or self.frame < 0:
            raise ValueError(f"keyframe index must be a non-negative int, got {self.frame!r}")


@dataclass(frozen=True)
class ObjectAnimation:
    object_index: int
    keyframes: tuple[Keyframe, ...]

    def __post_init__(self) -> None:
        kfs = tuple(self.keyframes)
        object.__setattr__(self, "keyframes", kfs)
        if not kfs:
            raise ValueError("an object animation needs at least one keyframe")
        for a, b in zip(kfs, kfs[1:]):
            if b.frame <= a.frame:
                raise ValueError("keyframe indices must be strictly increasing")


@dataclass(frozen=True)
class Animation:
    duration: int
    tracks: tuple[ObjectAnimation, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "tracks", tuple(self.tracks))
        if isinstance(self.duration, bool) or not isinstance(self.duration, int) or self.duration < 1:
            raise ValueError(f"duration must be an int >= 1, got {self.duration!r}")
        seen = set()
        for track in self.tracks:
            if track.object_index in seen:
                raise ValueError(f"duplicate track for object {track.object_index}")
            seen.add(track.object_index)
            if track.keyframes[-1].frame >= self.duration:
                raise ValueError("keyframe index beyond animation duration")

    def track_for(self, object_index: int) -> ObjectAnimation | None:
        for track in self.tracks:
            if track.object_index == object_index:
                return track
        return None


@dataclass(frozen=True)
class Canvas:
    width: int = 1920
    height: int = 1080
    fps: int = 30

    @property
    def bbox(self) -> BBox:
        return BBox(0, 0, self.width, self.height)


@dataclass(frozen=True)
class BannerST:
    banners: tuple[Banner, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "banners", tuple(self.banners))


@dataclass(frozen=True)
class MaingroundST:
    foreground: tuple[LayoutObject, ...]
    background: Background

    def __post_init__(self) -> None:
        object.__setattr__(self, "foreground", tuple(self.foreground))


@dataclass(frozen=True)
class VideoST:
    banners: tuple[Banner, ...]
    foreground: tuple[LayoutObject, ...]
    background: Background
    animation: Animation
    canvas: Canvas = field(default_factory=Canvas)

    def __post_init__(self) -> None:
        object.__setattr__(self, "banners", tuple(self.banners))
        object.__setattr__(self, "foreground", tuple(self.foreground))
        positions = [b.position for b in self.banners]
        if len(set(positions)) != len(positions):
            raise ValueError("banner positions must be distinct")
        for track in self.animation.tracks:
            if not 0 <= track.object_index < len(self.foreground):
                raise ValueError(f"track refers to missing object {track.object_index}")

    @classmethod
    def assemble(
        cls,
        banner: BannerST,
        mainground: MaingroundST,
        animation: Animation,
        canvas: Canvas | None = None,
    ) -> VideoST:
        return cls(
            banner.banners,
            mainground.foreground,
            mainground.background,
            animation,
            canvas or Canvas(),
        )


Fragment = Union[BannerST, MaingroundST, Animation, VideoST]


# --------------------------------------------------------------------------
# Errors
# --------------------------------------------------------------------------


class IssueKind(str, enum.Enum):
    MISSING_KEY = "missing_key"
    WRONG_HIERARCHY = "wrong_hierarchy"
    INVARIANT = "invariant"


@dataclass(frozen=True)
class Issue:
    path: str
    message: str
    kind: IssueKind


class STError(Exception):
    """Base class for decoding errors."""


class JsonSyntax(STError):
    def __init__(self, message: str, path: str = "$") -> None:
        super().__init__(message)
        self.path = path
        self.message = message


class SchemaViolation(STError):
    """Raised when well-formed JSON does not describe a valid document.

    ``issues`` lists every problem found, in document order; the exception
    message is the first one.
    """

    def __init__(self, issues: list[Issue]) -> None:
        if not issues:
            raise ValueError("SchemaViolation needs at least one issue")
        super().__init__(issues[0].message)
        self.issues = list(issues)

    @property
    def path(self) -> str:
        return self.issues[0].path


# --------------------------------------------------------------------------
# Decoding
# --------------------------------------------------------------------------

_BAD = object()

_STAGE_KEYS: dict[Stage, tuple[tuple[str, ...], tuple[str, ...]]] = {
    Stage.BANNER: (("banners",), ()),
    Stage.MAINGROUND: (("foreground", "background"), ()),
    Stage.ANIMATION: (("duration", "tracks"), ()),
    Stage.FULL: (("banners", "foreground", "background", "animation"), ("canvas",)),
}


def _pairs_hook(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise ValueError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _reject_constant(name: str) -> Any:
    raise ValueError(f"non-standard JSON constant {name}")


def load_json(text: str | bytes) -> Any:
    """Strict ``json.loads``: no NaN/Infinity, no duplicate keys."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise JsonSyntax(f"invalid UTF-8: {exc}") from None
    try:
        return json.loads(text, object_pairs_hook=_pairs_hook, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise JsonSyntax(f"{exc.msg} at line {exc.lineno} column {exc.colno}") from None
    except ValueError as exc:
        raise JsonSyntax(str(exc)) from None


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class _Decoder:
    def __init__(self, canvas: Canvas) -> None:
        self.canvas = canvas
        self.issues: list[Issue] = []

    def fail(self, path: str, message: str, kind: IssueKind) -> object:
        self.issues.append(Issue(path, message, kind))
        return _BAD

    # -- generic shapes -----------------------------------------------------

    def obj(self, value: Any, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
        if not isinstance(value, dict):
            self.fail(path, f"expected object, got {type(value).__name__}", IssueKind.WRONG_HIERARCHY)
            return None
        for key in required:
            if key not in value:
                self.fail(f"{path}.{key}", f"missing key: {key}", IssueKind.MISSING_KEY)
        allowed = set(required) | set(optional)
        for key in value:
            if key not in allowed:
                self.fail(f"{path}.{key}", f"unknown key: {key}", IssueKind.WRONG_HIERARCHY)
        return value

    def array(self, value: Any, path: str) -> list | None:
        if not isinstance(value, list):
            self.fail(path, f"expected array, got {type(value).__name__}", IssueKind.WRONG_HIERARCHY)
            return None
        return value

    def integer(self, value: Any, path: str, minimum: int) -> Any:
        if _is_int(value):
            if value < minimum:
                return self.fail(path, f"must be >= {minimum}, got {value}", IssueKind.INVARIANT)
            return value
        if _is_number(value):
            return self.fail(path, f"must be an integer, got {value!r}", IssueKind.INVARIANT)
        return self.fail(path, f"expected integer, got {type(value).__name__}", IssueKind.WRONG_HIERARCHY)

    def string(self, value: Any, path: str) -> Any:
        if not isinstance(value, str):
            return self.fail(path, f"expected string, got {type(value).__name__}", IssueKind.WRONG_HIERARCHY)
        return value

    def enum(self, enum_cls: type[enum.Enum], value: Any, path: str) -> Any:
        if not isinstance(value, str):
            return self.fail(path, f"expected string, got {type(value).__name__}", IssueKind.WRONG_HIERARCHY)
        try:
            return enum_cls(value)
        except ValueError:
            allowed = ", ".join(m.value for m in enum_cls)
            return self.fail(path, f"bad value {value!r} (expected one of {allowed})", IssueKind.INVARIANT)

    def color(self, value: Any, path: str, allow_transparent: bool = False) -> Any:
        if not isinstance(value, str):
            return self.fail(path, f"expected color string, got {type(value).__name__}", IssueKind.WRONG_HIERARCHY)
        if allow_transparent and value == TRANSPARENT:
            return TRANSPARENT
        try:
            return Color.from_hex(value)
        except ValueError:
            return self.fail(path, f"bad color {value!r}", IssueKind.INVARIANT)

    def bbox(self, value: Any, path: str, container: BBox | None = None) -> Any:
        if not isinstance(value, list) or len(value) != 4 or not all(_is_number(v) for v in value):
            return self.fail(path, "bbox must be an array of 4 numbers", IssueKind.WRONG_HIERARCHY)
        x1, y1, w, h = (float(v) for v in value)
        if not all(math.isfinite(v) for v in (x1, y1, w, h)):
            return self.fail(path, "bbox values must be finite", IssueKind.INVARIANT)
        if w < 0 or h < 0:
            return self.fail(path, "bbox width and height must be >= 0", IssueKind.INVARIANT)
        box = BBox(x1, y1, w, h)
        if not box.inside(self.canvas.bbox):
            return self.fail(
                path,
                f"bbox {value} outside canvas {self.canvas.width}x{self.canvas.height}",
                IssueKind.INVARIANT,
            )
        if container is not None and not box.inside(container):
            return self.fail(path, f"bbox {value} outside its banner", IssueKind.INVARIANT)
        return box

    # -- components ---------------------------------------------------------

    def layout_object(self, value: Any, path: str, container: BBox | None = None) -> Any:
        base = ("class", "bbox")
        text_keys = ("text", "text_color", "textbox_color")
        if not isinstance(value, dict):
            self.obj(value, path, base)
            return _BAD
        cls = _BAD
        if "class" in value:
            cls = self.enum(ObjectClass, value["class"], f"{path}.class")
        if cls is ObjectClass.TEXT:
            self.obj(value, path, base + text_keys)
        elif cls is ObjectClass.LOGO:
            self.obj(value, path, base)
        else:
            self.obj(value, path, base, text_keys)
        bbox = self.bbox(value["bbox"], f"{path}.bbox", container) if "bbox" in value else _BAD
        if cls is not ObjectClass.TEXT:
            if cls is _BAD or bbox is _BAD or any(k in value for k in text_keys):
                return _BAD
            return LayoutObject(ObjectClass.LOGO, bbox)

        raw = self.string(value["text"], f"{path}.text") if "text" in value else _BAD
        if raw is not _BAD and not raw.strip():
            raw = self.fail(f"{path}.text", "text must not be blank", IssueKind.INVARIANT)
        tc = self.color(value["text_color"], f"{path}.text_color") if "text_color" in value else _BAD
        bc = (
            self.color(value["textbox_color"], f"{path}.textbox_color", allow_transparent=True)
            if "textbox_color" in value
            else _BAD
        )
        if _BAD in (bbox, raw, tc, bc) or len(value) != len(base + text_keys):
            return _BAD
        return LayoutObject(ObjectClass.TEXT, bbox, TextAttrs(raw, tc, bc))

    def objects(self, value: Any, path: str, container: BBox | None = None) -> Any:
        items = self.array(value, path)
        if items is None:
            return _BAD
        out = [self.layout_object(item, f"{path}[{i}]", container) for i, item in enumerate(items)]
        return _BAD if _BAD in out else tuple(out)

    def banner(self, value: Any, path: str) -> Any:
        d = self.obj(value, path, ("position", "bbox", "color", "objects"))
        if d is None:
            return _BAD
        position = self.enum(BannerPosition, d["position"], f"{path}.position") if "position" in d else _BAD
        bbox = self.bbox(d["bbox"], f"{path}.bbox") if "bbox" in d else _BAD
        color = self.color(d["color"], f"{path}.color") if "color" in d else _BAD
        container = bbox if isinstance(bbox, BBox) else None
        objects = self.objects(d["objects"], f"{path}.objects", container) if "objects" in d else _BAD
        if container is None and objects is not _BAD:
            # children could not be checked against an unusable banner box
            objects = _BAD
        if _BAD in (position, bbox, color, objects):
            return _BAD
        return Banner(position, bbox, color, objects)

    def banners(self, value: Any, path: str) -> Any:
        items = self.array(value, path)
        if items is None:
            return _BAD
        out = [self.banner(item, f"{path}[{i}]") for i, item in enumerate(items)]
        if len(items) > len(BannerPosition):
            self.fail(path, f"at most {len(BannerPosition)} banners allowed", IssueKind.INVARIANT)
            return _BAD
        seen: dict[BannerPosition, int] = {}
        for i, banner in enumerate(out):
            if banner is _BAD:
                continue
            if banner.position in seen:
                self.fail(
                    f"{path}[{i}].position",
                    f"duplicate banner position {banner.position.value}",
                    IssueKind.INVARIANT,
                )
                return _BAD
            seen[banner.position] = i
        return _BAD if _BAD in out else tuple(out)

    def background(self, value: Any, path: str) -> Any:
        if not isinstance(value, dict):
            self.obj(value, path, ("kind",))
            return _BAD
        kind = self.enum(BackgroundKind, value["kind"], f"{path}.kind") if "kind" in value else _BAD
        if kind is BackgroundKind.SOLID_COLOR:
            self.obj(value, path, ("kind", "color"))
            color = self.color(value["color"], f"{path}.color") if "color" in value else _BAD
            if color is _BAD or "caption" in value:
                return _BAD
            return Background(kind, color=color)
        if kind is BackgroundKind.IMAGE:
            self.obj(value, path, ("kind", "caption"))
            caption = self.string(value["caption"], f"{path}.caption") if "caption" in value else _BAD
            if caption is _BAD or "color" in value:
                return _BAD
            return Background(kind, caption=caption)
        self.obj(value, path, ("kind",), ("color", "caption"))
        return _BAD

    def keyframe(self, value: Any, path: str) -> Any:
        d = self.obj(value, path, ("frame", "bbox"))
        if d is None:
            return _BAD
        frame = self.integer(d["frame"], f"{path}.frame", 0) if "frame" in d else _BAD
        bbox = self.bbox(d["bbox"], f"{path}.bbox") if "bbox" in d else _BAD
        if _BAD in (frame, bbox) or len(d) != 2:
            return _BAD
        return Keyframe(frame, bbox)

    def track(self, value: Any, path: str, duration: Any, n_objects: int | None) -> Any:
        d = self.obj(value, path, ("object_index", "keyframes"))
        if d is None:
            return _BAD
        index = self.integer(d["object_index"], f"{path}.object_index", 0) if "object_index" in d else _BAD
        if index is not _BAD and n_objects is not None and index >= n_objects:
            index = self.fail(
                f"{path}.object_index",
                f"object_index {index} out of range for {n_objects} foreground objects",
                IssueKind.INVARIANT,
            )
        items = self.array(d["keyframes"], f"{path}.keyframes") if "keyframes" in d else None
        if items is None:
            return _BAD
        if not items:
            self.fail(f"{path}.keyframes", "at least one keyframe required", IssueKind.INVARIANT)
            return _BAD
        kfs = [self.keyframe(item, f"{path}.keyframes[{i}]") for i, item in enumerate(items)]
        if _BAD in kfs:
            return _BAD
        for i, (a, b) in enumerate(zip(kfs, kfs[1:]), start=1):
            if b.frame <= a.frame:
                self.fail(f"{path}.keyframes[{i}].frame", "keyframe frames must strictly increase", IssueKind.INVARIANT)
                return _BAD
        if duration is not _BAD and kfs[-1].frame >= duration:
            self.fail(
                f"{path}.keyframes[{len(kfs) - 1}].frame",
                f"keyframe frame {kfs[-1].frame} >= duration {duration}",
                IssueKind.INVARIANT,
            )
            return _BAD
        if _BAD in (index, duration) or len(d) != 2:
            return _BAD
        return ObjectAnimation(index, tuple(kfs))

    def animation(self, value: Any, path: str, n_objects: int | None) -> Any:
        d = self.obj(value, path, ("duration", "tracks"))
        if d is None:
            return _BAD
        duration = self.integer(d["duration"], f"{path}.duration", 1) if "duration" in d else _BAD
        items = self.array(d["tracks"], f"{path}.tracks") if "tracks" in d else None
        if items is None:
            return _BAD
        tracks = [self.track(item, f"{path}.tracks[{i}]", duration, n_objects) for i, item in enumerate(items)]
        if _BAD in tracks:
            return _BAD
        seen = set()
        for i, track in enumerate(tracks):
            if track.object_index in seen:
                self.fail(
                    f"{path}.tracks[{i}].object_index",
                    f"duplicate track for object {track.object_index}",
                    IssueKind.INVARIANT,
                )
                return _BAD
            seen.add(track.object_index)
        if duration is _BAD or len(d) != 2:
            return _BAD
        return Animation(duration, tuple(tracks))

    def canvas_(self, value: Any, path: str) -> Any:
        d = self.obj(value, path, ("width", "height", "fps"))
        if d is None:
            return _BAD
        vals = [self.integer(d[k], f"{path}.{k}", 1) if k in d else _BAD for k in ("width", "height", "fps")]
        if _BAD in vals or len(d) != 3:
            return _BAD
        return Canvas(*vals)


def _stage_of(expected: Stage | str) -> Stage:
    return expected if isinstance(expected, Stage) else Stage(expected)


def decode(
    payload: Any,
    expected: Stage | str,
    canvas: Canvas | None = None,
    foreground_count: int | None = None,
) -> Fragment:
    """Decode an already-parsed JSON value; see :func:`parse_st`."""
    stage = _stage_of(expected)
    dec = _Decoder(canvas or Canvas())
    required, optional = _STAGE_KEYS[stage]
    root = dec.obj(payload, "$", required, optional)
    result: Any = _BAD
    if root is not None:
        if stage is Stage.BANNER:
            banners = dec.banners(root["banners"], "$.banners") if "banners" in root else _BAD
            if banners is not _BAD:
                result = BannerST(banners)
        elif stage is Stage.MAINGROUND:
            fg = dec.objects(root["foreground"], "$.foreground") if "foreground" in root else _BAD
            bg = dec.background(root["background"], "$.background") if "background" in root else _BAD
            if _BAD not in (fg, bg):
                result = MaingroundST(fg, bg)
        elif stage is Stage.ANIMATION:
            result = dec.animation(root, "$", foreground_count)
        else:
            if "canvas" in root:
                cv = dec.canvas_(root["canvas"], "$.canvas")
                if cv is not _BAD:
                    dec.canvas = cv
            else:
                cv = dec.canvas
            banners = dec.banners(root["banners"], "$.banners") if "banners" in root else _BAD
            fg = dec.objects(root["foreground"], "$.foreground") if "foreground" in root else _BAD
            bg = dec.background(root["background"], "$.background") if "background" in root else _BAD
            n_fg = len(fg) if fg is not _BAD else None
            anim = dec.animation(root["animation"], "$.animation", n_fg) if "animation" in root else _BAD
            if _BAD not in (cv, banners, fg, bg, anim):
                result = VideoST(banners, fg, bg, anim, cv)
    if dec.issues:
        raise SchemaViolation(dec.issues)
    assert result is not _BAD
    return result


def parse_st(
    text: str | bytes,
    expected: Stage | str,
    canvas: Canvas | None = None,
    foreground_count: int | None = None,
) -> Fragment:
    """Parse a JSON document for ``expected`` stage into domain objects.

    Args:
        text: JSON text.
        expected: Which document shape to expect.
        canvas: Canvas used for containment checks of fragments. A full
            document's own ``canvas`` key takes precedence. Defaults to
            1920x1080 at 30 fps.
        foreground_count: For ``Stage.ANIMATION`` only; when given, each
            track's ``object_index`` must be below it.

    Raises:
        JsonSyntax: ``text`` is not strict JSON.
        SchemaViolation: the JSON does not describe a valid document. All
            detected problems are listed in ``issues``.
    """
    return decode(load_json(text), expected, canvas, foreground_count)


# --------------------------------------------------------------------------
# Encoding
# --------------------------------------------------------------------------


def _num(value: float) -> int | float:
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def _bbox_payload(box: BBox) -> list:
    return [_num(v) for v in box.as_list()]


def _object_payload(obj: LayoutObject) -> dict:
    out: dict[str, Any] = {"class": obj.cls.value, "bbox": _bbox_payload(obj.bbox)}
    if obj.attrs is not None:
        tb = obj.attrs.textbox_color
        out["text"] = obj.attrs.raw_text
        out["text_color"] = obj.attrs.text_color.to_hex()
        out["textbox_color"] = tb if isinstance(tb, str) else tb.to_hex()
    return out


def _banner_payload(banner: Banner) -> dict:
    return {
        "position": banner.position.value,
        "bbox": _bbox_payload(banner.bbox),
        "color": banner.color.to_hex(),
        "objects": [_object_payload(o) for o in banner.objects],
    }


def _background_payload(bg: Background) -> dict:
    if bg.kind is BackgroundKind.SOLID_COLOR:
        return {"kind": bg.kind.value, "color": bg.color.to_hex()}
    return {"kind": bg.kind.value, "caption": bg.caption}


def _animation_payload(anim: Animation) -> dict:
    return {
        "duration": anim.duration,
        "tracks": [
            {
                "object_index": t.object_index,
                "keyframes": [{"frame": k.frame, "bbox": _bbox_payload(k.bbox)} for k in t.keyframes],
            }
            for t in anim.tracks
        ],
    }


def to_payload(doc: Fragment) -> dict:
    """Convert a document or fragment to plain JSON-ready data."""
    if isinstance(doc, VideoST):
        return {
            "banners": [_banner_payload(b) for b in doc.banners],
            "foreground": [_object_payload(o) for o in doc.foreground],
            "background": _background_payload(doc.background),
            "animation": _animation_payload(doc.animation),
            "canvas": {"width": doc.canvas.width, "height": doc.canvas.height, "fps": doc.canvas.fps},
        }
    if isinstance(doc, BannerST):
        return {"banners": [_banner_payload(b) for b in doc.banners]}
    if isinstance(doc, MaingroundST):
        return {
            "foreground": [_object_payload(o) for o in doc.foreground],
            "background": _background_payload(doc.background),
        }
    if isinstance(doc, Animation):
        return _animation_payload(doc)
    raise TypeError(f"cannot serialize {type(doc).__name__}")


def serialize_st(doc: Fragment) -> str:
    """Canonical JSON text: sorted keys, two-space indent, integral floats as ints."""
    return json.dumps(to_payload(doc), sort_keys=True, indent=2, ensure_ascii=False)


# --------------------------------------------------------------------------
# Geometry
# --------------------------------------------------------------------------


def _overlap_1d(a1: float, aw: float, b1: float, bw: float) -> float:
    lo, hi = max(a1, b1), min(a1 + aw, b1 + bw)
    # a span nested in the other overlaps by its own length; taking it
    # directly avoids (x1 + w) - x1 != w rounding
    if lo == a1 and hi == a1 + aw:
        return aw
    if lo == b1 and hi == b1 + bw:
        return bw
    return hi - lo


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0.0 when the union has no area."""
    iw = _overlap_1d(a.x1, a.w, b.x1, b.w)
    ih = _overlap_1d(a.y1, a.h, b.y1, b.h)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union
