"""Expansion of keyframed tracks into per-frame boxes.

Motion between keyframes is linear in ``[x1, y1, w, h]``. An object is hidden
before its first keyframe and holds its last keyframe box until the end of
the animation.
"""

from __future__ import annotations

from dataclasses import dataclass

from animlayout.st_model import Animation, BBox, Keyframe, LayoutObject, ObjectAnimation, VideoST

__all__ = [
    "FrameOutOfRange",
    "FrameTrack",
    "boxes_at",
    "expand_animation",
    "expand_track",
    "final_boxes",
    "interpolate",
]


class FrameOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class FrameTrack:
    object_index: int
    boxes: tuple[BBox | None, ...]

    @property
    def first_visible(self) -> int | None:
        for f, box in enumerate(self.boxes):
            if box is not None:
                return f
        return None

    def visible(self) -> list[tuple[int, BBox]]:
        return [(f, b) for f, b in enumerate(self.boxes) if b is not None]


def _lerp(a: float, b: float, t: float) -> float:
    v = a + (b - a) * t
    # keep rounding from stepping outside the segment
    lo, hi = (a, b) if a <= b else (b, a)
    return min(max(v, lo), hi)


def interpolate(k0: Keyframe, k1: Keyframe, f: int) -> BBox:
    """Box at frame ``f`` on the straight segment from ``k0`` to ``k1``."""
    if k0.frame >= k1.frame:
        raise FrameOutOfRange(f"keyframes not increasing: {k0.frame} >= {k1.frame}")
    if not k0.frame <= f <= k1.frame:
        raise FrameOutOfRange(f"frame {f} outside [{k0.frame}, {k1.frame}]")
    if f == k0.frame:
        return k0.bbox
    if f == k1.frame:
        return k1.bbox
    t = (f - k0.frame) / (k1.frame - k0.frame)
    a, b = k0.bbox, k1.bbox
    return BBox(_lerp(a.x1, b.x1, t), _lerp(a.y1, b.y1, t), _lerp(a.w, b.w, t), _lerp(a.h, b.h, t))


def expand_track(track: ObjectAnimation, duration: int) -> FrameTrack:
    kfs = track.keyframes
    if kfs[-1].frame >= duration:
        raise FrameOutOfRange(f"keyframe {kfs[-1].frame} beyond duration {duration}")
    boxes: list[BBox | None] = [None] * kfs[0].frame
    for k0, k1 in zip(kfs, kfs[1:]):
        boxes.extend(interpolate(k0, k1, f) for f in range(k0.frame, k1.frame))
    boxes.extend([kfs[-1].bbox] * (duration - kfs[-1].frame))
    return FrameTrack(track.object_index, tuple(boxes))


def expand_animation(animation: Animation) -> dict[int, FrameTrack]:
    return {t.object_index: expand_track(t, animation.duration) for t in animation.tracks}


def boxes_at(doc: VideoST, frame: int, tracks: dict[int, FrameTrack] | None = None) -> list[tuple[LayoutObject, BBox | None]]:
    """Foreground objects paired with their box at ``frame``.

    Objects without a track keep their layout box on every frame; ``None``
    means the object is not visible yet.
    """
    if not 0 <= frame < doc.animation.duration:
        raise FrameOutOfRange(f"frame {frame} outside [0, {doc.animation.duration})")
    if tracks is None:
        tracks = expand_animation(doc.animation)
    out = []
    for i, obj in enumerate(doc.foreground):
        track = tracks.get(i)
        out.append((obj, obj.bbox if track is None else track.boxes[frame]))
    return out


def final_boxes(doc: VideoST) -> list[tuple[LayoutObject, BBox]]:
    """Foreground objects with their box on the last frame."""
    out = []
    for i, obj in enumerate(doc.foreground):
        track = doc.animation.track_for(i)
        # hold policy: the last keyframe box persists to the final frame
        out.append((obj, obj.bbox if track is None else track.keyframes[-1].bbox))
    return out
