"""From per-frame object-ID masks to keyframed animation tracks.

The box extraction tolerates tracker noise: spurious blobs far from the
object and spurious empty rows inside it. Frames are processed from the last
frame backwards; the last frame seeds each object's reference size, and boxes
in earlier frames that shrink below a fraction of it are discarded.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from animlayout.st_model import Animation, BBox, Keyframe, ObjectAnimation
from animlayout.timeline import interpolate

__all__ = [
    "BoxConfig",
    "DimensionMismatch",
    "IdMask",
    "TrackState",
    "assemble_tracks",
    "compress_keyframes",
    "extract_boxes",
    "load_mask_dir",
    "read_pgm",
    "tracks_to_animation",
    "write_pgm",
]

log = logging.getLogger(__name__)


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BoxConfig:
    top_early: float = 0.7
    bottom_early: float = 0.3
    refine_ratio: float = 0.5
    size_factor: float = 0.2


@dataclass(frozen=True)
class IdMask:
    width: int
    height: int
    ids: np.ndarray

    def __post_init__(self) -> None:
        ids = np.asarray(self.ids)
        if ids.ndim == 1:
            if ids.size != self.width * self.height:
                raise ValueError(f"expected {self.width * self.height} ids, got {ids.size}")
            ids = ids.reshape(self.height, self.width)
        if ids.shape != (self.height, self.width):
            raise ValueError(f"ids shape {ids.shape} != ({self.height}, {self.width})")
        if ids.size and ids.min() < 0:
            raise ValueError("object ids must be non-negative")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_array(cls, ids: np.ndarray) -> IdMask:
        ids = np.asarray(ids)
        return cls(ids.shape[1], ids.shape[0], ids)


@dataclass
class TrackState:
    max_values: dict[int, int] = field(default_factory=dict)
    boxes_by_frame: dict[int, list[BBox | None]] = field(default_factory=dict)
    frames_seen: int = 0

    def copy(self) -> TrackState:
        return TrackState(
            dict(self.max_values),
            {k: list(v) for k, v in self.boxes_by_frame.items()},
            self.frames_seen,
        )


# --------------------------------------------------------------------------
# Single-object box extraction
# --------------------------------------------------------------------------


def _scan_top_down(rows: np.ndarray, y_min: int, y_max: int, cfg: BoxConfig) -> tuple[int, int, bool]:
    extent = y_max - y_min
    for y in range(y_min, y_max + 1):
        if not rows[y]:
            return y_min, y - 1, (y - y_min) < cfg.top_early * extent
    return y_min, y_max, False


def _scan_bottom_up(rows: np.ndarray, y_min: int, y_max: int, cfg: BoxConfig) -> tuple[int, int, bool]:
    extent = y_max - y_min
    for y in range(y_max, y_min - 1, -1):
        if not rows[y]:
            return y + 1, y_max, (y - y_min) > cfg.bottom_early * extent
    return y_min, y_max, False


def _scan_from_middle(rows: np.ndarray, y_min: int, y_max: int, y_mid: int, cfg: BoxConfig) -> tuple[int, int]:
    # Empty rows inside the band that triggered the early stops are treated
    # as tracker dropouts; only empty rows beyond it end the object.
    extent = y_max - y_min
    top = y_mid
    for y in range(y_mid - 1, y_min - 1, -1):
        if rows[y]:
            top = y
        elif (y - y_min) <= cfg.bottom_early * extent:
            break
    bottom = y_mid
    for y in range(y_mid + 1, y_max + 1):
        if rows[y]:
            bottom = y
        elif (y - y_min) >= cfg.top_early * extent:
            break
    return top, bottom


def _refine_x(m: np.ndarray, x1: int, y1: int, x2: int, y2: int, ratio: float) -> tuple[int, int]:
    need = ratio * (y2 - y1 + 1)
    while x1 < x2 and m[y1 : y2 + 1, x1].sum() < need:
        x1 += 1
    while x2 > x1 and m[y1 : y2 + 1, x2].sum() < need:
        x2 -= 1
    return x1, x2


def _refine_y(m: np.ndarray, x1: int, y1: int, x2: int, y2: int, ratio: float) -> tuple[int, int]:
    need = ratio * (x2 - x1 + 1)
    while y1 < y2 and m[y1, x1 : x2 + 1].sum() < need:
        y1 += 1
    while y2 > y1 and m[y2, x1 : x2 + 1].sum() < need:
        y2 -= 1
    return y1, y2


def _size(box: tuple[int, int, int, int]) -> int:
    x1, y1, x2, y2 = box
    return (x2 - x1) * (y2 - y1)


def object_box(m: np.ndarray, cfg: BoxConfig = BoxConfig()) -> tuple[int, int, int, int] | None:
    """Inclusive pixel bounds ``(x1, y1, x2, y2)`` of one object's boolean mask."""
    rows = m.any(axis=1)
    ys = np.flatnonzero(rows)
    if ys.size == 0:
        return None
    y_min, y_max = int(ys[0]), int(ys[-1])
    y_mid = (y_min + y_max) // 2

    t1, t2, top_early = _scan_top_down(rows, y_min, y_max, cfg)
    b1, b2, bottom_early = _scan_bottom_up(rows, y_min, y_max, cfg)
    if top_early and bottom_early and rows[y_mid]:
        y1, y2 = _scan_from_middle(rows, y_min, y_max, y_mid, cfg)
        branch = "middle"
    elif (b2 - b1) > (t2 - t1):
        y1, y2 = b1, b2
        branch = "bottom_up"
    else:
        y1, y2 = t1, t2
        branch = "top_down"
    if top_early != bottom_early:
        log.debug("single early stop (top=%s bottom=%s); kept %s bounds", top_early, bottom_early, branch)

    cols = np.flatnonzero(m[y1 : y2 + 1].any(axis=0))
    x1, x2 = int(cols[0]), int(cols[-1])

    r = cfg.refine_ratio
    ax1, ax2 = _refine_x(m, x1, y1, x2, y2, r)
    ay1, ay2 = _refine_y(m, ax1, y1, ax2, y2, r)
    box_xy = (ax1, ay1, ax2, ay2)
    by1, by2 = _refine_y(m, x1, y1, x2, y2, r)
    bx1, bx2 = _refine_x(m, x1, by1, x2, by2, r)
    box_yx = (bx1, by1, bx2, by2)
    return box_xy if _size(box_xy) >= _size(box_yx) else box_yx


def extract_boxes(
    mask: IdMask | np.ndarray,
    state: TrackState | None = None,
    is_first: bool = False,
    cfg: BoxConfig = BoxConfig(),
) -> tuple[dict[int, BBox], TrackState]:
    """Boxes for every object id in ``mask`` plus the updated state.

    On the first processed frame every box is kept and its size becomes the
    object's reference. Later, a box survives only if its size reaches
    ``cfg.size_factor`` times the reference; ids absent from the first frame
    have no reference and are dropped. Size is ``(x2 - x1) * (y2 - y1)`` on
    inclusive pixel bounds. The input state is not modified.
    """
    ids = mask.ids if isinstance(mask, IdMask) else np.asarray(mask)
    state = TrackState() if state is None else state.copy()
    boxes: dict[int, BBox] = {}
    for obj_id in (int(v) for v in np.unique(ids)):
        if obj_id == 0:
            continue
        bounds = object_box(ids == obj_id, cfg)
        if bounds is None:
            continue
        size = _size(bounds)
        if is_first:
            state.max_values[obj_id] = size
        elif obj_id not in state.max_values:
            log.debug("object %d not present in the first frame; dropped", obj_id)
            continue
        elif size < cfg.size_factor * state.max_values[obj_id]:
            continue
        x1, y1, x2, y2 = bounds
        boxes[obj_id] = BBox(x1, y1, x2 - x1 + 1, y2 - y1 + 1)

    for obj_id in set(state.boxes_by_frame) | set(boxes):
        history = state.boxes_by_frame.setdefault(obj_id, [None] * state.frames_seen)
        history.append(boxes.get(obj_id))
    state.frames_seen += 1
    return boxes, state


# --------------------------------------------------------------------------
# Track assembly and keyframe compression
# --------------------------------------------------------------------------


def assemble_tracks(
    masks: Sequence[IdMask | np.ndarray],
    cfg: BoxConfig = BoxConfig(),
) -> dict[int, list[BBox | None]]:
    """Per-object boxes in forward frame order.

    ``masks`` must be ordered last frame first. Frames where an object has
    no surviving box are ``None``.
    """
    arrays = [m.ids if isinstance(m, IdMask) else np.asarray(m) for m in masks]
    if not arrays:
        return {}
    shape = arrays[0].shape
    for i, a in enumerate(arrays):
        if a.shape != shape:
            raise DimensionMismatch(f"mask {i} has shape {a.shape}, expected {shape}")
    state = TrackState()
    for i, a in enumerate(arrays):
        _, state = extract_boxes(a, state, is_first=(i == 0), cfg=cfg)
    return {obj_id: list(reversed(hist)) for obj_id, hist in sorted(state.boxes_by_frame.items())}


def _deviation(a: BBox, b: BBox) -> float:
    return max(abs(a.x1 - b.x1), abs(a.y1 - b.y1), abs(a.w - b.w), abs(a.h - b.h))


def compress_keyframes(track: Sequence[BBox | None], tol: float = 2.0, object_index: int = 0) -> ObjectAnimation:
    """Fewest-effort keyframes reproducing ``track`` within ``tol`` pixels.

    Recursive split at the frame of largest deviation (max over the four
    coordinates) from the straight segment between retained keyframes. A
    trailing keyframe is dropped when holding the previous one already stays
    within ``tol``. Leading ``None`` frames stay hidden; interior ``None``
    frames are unconstrained.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    present = [(f, b) for f, b in enumerate(track) if b is not None]
    if not present:
        raise ValueError("cannot compress an empty track")
    kept = {0, len(present) - 1}
    stack = [(0, len(present) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        k0 = Keyframe(present[i][0], present[i][1])
        k1 = Keyframe(present[j][0], present[j][1])
        worst, worst_k = -1.0, -1
        for k in range(i + 1, j):
            d = _deviation(interpolate(k0, k1, present[k][0]), present[k][1])
            if d > worst:
                worst, worst_k = d, k
        if worst > tol:
            kept.add(worst_k)
            stack += [(i, worst_k), (worst_k, j)]
    order = sorted(kept)
    while len(order) >= 2:
        anchor = present[order[-2]][1]
        if all(_deviation(anchor, b) <= tol for _, b in present[order[-2] :]):
            order.pop()
        else:
            break
    keyframes = tuple(Keyframe(present[k][0], present[k][1]) for k in order)
    return ObjectAnimation(object_index, keyframes)


def tracks_to_animation(
    tracks: Mapping[int, Sequence[BBox | None]],
    duration: int,
    tol: float = 2.0,
    index_of: Mapping[int, int] | None = None,
) -> Animation:
    """Compress every non-empty track into an :class:`Animation`.

    ``index_of`` maps object ids to foreground indices; by default ids are
    numbered in ascending order.
    """
    if index_of is None:
        index_of = {obj_id: i for i, obj_id in enumerate(sorted(tracks))}
    out = []
    for obj_id in sorted(tracks, key=lambda k: index_of[k]):
        boxes = tracks[obj_id]
        if any(b is not None for b in boxes):
            out.append(compress_keyframes(boxes, tol, index_of[obj_id]))
    return Animation(duration, tuple(out))


# --------------------------------------------------------------------------
# Mask files
# --------------------------------------------------------------------------


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary (P5) PGM with 8- or 16-bit samples into an int array."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    return raw.reshape(height, width).astype(np.int64)


def write_pgm(path: str | Path, ids: np.ndarray) -> None:
    ids = np.asarray(ids)
    maxval = 255 if ids.max(initial=0) <= 255 else 65535
    dtype = np.dtype("u1") if maxval == 255 else np.dtype(">u2")
    header = f"P5\n{ids.shape[1]} {ids.shape[0]}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + ids.astype(dtype).tobytes())


def load_mask_dir(mask_dir: str | Path) -> tuple[list[np.ndarray], dict]:
    """Masks listed in ``index.json`` (forward order) and the index itself.

    ``index.json`` holds ``{"frames": [file, ...], "objects": {id: {...}}}``;
    object metadata may set ``object_index`` to place the object in the
    foreground list.
    """
    mask_dir = Path(mask_dir)
    index = json.loads((mask_dir / "index.json").read_text())
    frames = [read_pgm(mask_dir / name) for name in index["frames"]]
    return frames, index


def object_index_map(index: dict, ids: Iterable[int]) -> dict[int, int]:
    meta = {int(k): v for k, v in index.get("objects", {}).items()}
    ordered = sorted(ids)
    out = {}
    for i, obj_id in enumerate(ordered):
        out[obj_id] = int(meta.get(obj_id, {}).get("object_index", i))
    return out
