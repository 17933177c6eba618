"""Layout and motion metrics: FMD, Overlap and maximum IoU.

FMD (Fréchet Motion Distance) compares Gaussian fits of relative motion
vectors. For every tracked foreground object, each visible frame after the
first contributes ``b_norm(t) - b_norm(t0)`` where boxes are normalised by
the canvas size (x and w by width, y and h by height).

Overlap and maximum IoU are computed on final-frame boxes.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from animlayout.st_model import BBox, ObjectClass, VideoST, iou
from animlayout.timeline import expand_track, final_boxes

__all__ = [
    "COV_EPS",
    "InsufficientSamples",
    "MotionStats",
    "NumericalFailure",
    "corpus_stats",
    "fmd",
    "gaussian_stats",
    "layout_elements",
    "max_iou",
    "match_iou",
    "motion_vectors",
    "overlap",
    "trace_sqrt_product",
]

log = logging.getLogger(__name__)

COV_EPS = 1e-10
EIG_CLAMP = 1e-8
EXACT_MATCH_LIMIT = 8


class InsufficientSamples(ValueError):
    pass


class NumericalFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class MotionStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of size {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


# --------------------------------------------------------------------------
# FMD
# --------------------------------------------------------------------------


def motion_vectors(doc: VideoST) -> np.ndarray:
    """Relative motion vectors of all tracked objects, pooled. Shape ``(n, 4)``."""
    W, H = doc.canvas.width, doc.canvas.height
    scale = np.array([W, H, W, H], dtype=np.float64)
    rows: list[np.ndarray] = []
    for track in doc.animation.tracks:
        visible = expand_track(track, doc.animation.duration).visible()
        if len(visible) < 2:
            continue
        boxes = np.array([b.as_list() for _, b in visible], dtype=np.float64) / scale
        rows.append(boxes[1:] - boxes[0])
    if not rows:
        return np.zeros((0, 4))
    return np.vstack(rows)


def gaussian_stats(vectors: np.ndarray | Sequence[Sequence[float]], eps: float = COV_EPS) -> MotionStats:
    """Sample mean and unbiased covariance, regularised by ``eps * I``."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        x = x.reshape(len(x), -1)
    n = x.shape[0]
    if n < 2:
        raise InsufficientSamples(f"need at least 2 motion vectors, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2 + eps * np.eye(x.shape[1])
    return MotionStats(mean, cov, n)


def corpus_stats(docs: Iterable[VideoST], eps: float = COV_EPS) -> MotionStats:
    vecs = [motion_vectors(d) for d in docs]
    return gaussian_stats(np.vstack(vecs) if vecs else np.zeros((0, 4)), eps)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    if vals.min() < -EIG_CLAMP:
        raise NumericalFailure(f"matrix is not positive semi-definite (eigenvalue {vals.min():.3e})")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def trace_sqrt_product(sr: np.ndarray, sg: np.ndarray) -> float:
    """``Tr((Sr Sg)^(1/2))`` for symmetric PSD matrices.

    ``Sr Sg`` is similar to the symmetric ``Sr^(1/2) Sg Sr^(1/2)``, so the
    eigenvalues come from ``eigvalsh`` of the latter and are real.
    """
    sr = np.asarray(sr, dtype=np.float64)
    sg = np.asarray(sg, dtype=np.float64)
    root = _psd_sqrt(sr)
    inner = root @ sg @ root
    vals = np.linalg.eigvalsh((inner + inner.T) / 2)
    if vals.min() < -EIG_CLAMP:
        raise NumericalFailure(f"negative eigenvalue {vals.min():.3e} in Sr Sg")
    return float(np.sqrt(np.clip(vals, 0.0, None)).sum())


def fmd(real: MotionStats, gen: MotionStats) -> float:
    diff = real.mean - gen.mean
    value = float(diff @ diff) + float(np.trace(real.cov) + np.trace(gen.cov)) - 2.0 * trace_sqrt_product(
        real.cov, gen.cov
    )
    if value < 0:
        if value < -EIG_CLAMP:
            raise NumericalFailure(f"FMD came out negative: {value:.3e}")
        value = 0.0
    return value


# --------------------------------------------------------------------------
# Layout metrics
# --------------------------------------------------------------------------


def layout_elements(doc: VideoST, include_banner_objects: bool = False) -> list[tuple[ObjectClass, BBox]]:
    """Final-frame elements of a layout as ``(class, box)`` pairs."""
    elems = [(obj.cls, box) for obj, box in final_boxes(doc)]
    if include_banner_objects:
        elems += [(o.cls, o.bbox) for b in doc.banners for o in b.objects]
    return elems


def overlap(doc: VideoST, include_banner_objects: bool = False) -> float:
    """Mean IoU over unordered element pairs; 0.0 with fewer than two elements."""
    boxes = [box for _, box in layout_elements(doc, include_banner_objects)]
    if len(boxes) < 2:
        return 0.0
    ious = [iou(a, b) for a, b in itertools.combinations(boxes, 2)]
    return math.fsum(ious) / len(ious)


def _exact_matching(m: np.ndarray) -> float:
    rows, cols = m.shape
    if rows > cols:
        m = m.T
        rows, cols = cols, rows
    best = 0.0
    for perm in itertools.permutations(range(cols), rows):
        total = math.fsum(m[i, j] for i, j in enumerate(perm))
        if total > best:
            best = total
    return best


def _greedy_matching(m: np.ndarray) -> float:
    pairs = sorted(((m[i, j], i, j) for i in range(m.shape[0]) for j in range(m.shape[1])), key=lambda t: -t[0])
    used_r, used_c = set(), set()
    picked = []
    for v, i, j in pairs:
        if i in used_r or j in used_c:
            continue
        used_r.add(i)
        used_c.add(j)
        picked.append(v)
    return math.fsum(picked)


def match_iou(gen: Sequence[BBox], real: Sequence[BBox], method: str = "auto") -> tuple[float, str]:
    """Best total IoU of a one-to-one matching between two box lists.

    ``method`` is ``"exact"`` (enumerate injections), ``"greedy"`` (take
    pairs by descending IoU) or ``"auto"``, which is exact up to
    ``EXACT_MATCH_LIMIT`` boxes per side. Returns ``(total, method_used)``.
    """
    if not gen or not real:
        return 0.0, "exact"
    m = np.array([[iou(g, r) for r in real] for g in gen], dtype=np.float64)
    if method == "auto":
        method = "exact" if max(len(gen), len(real)) <= EXACT_MATCH_LIMIT else "greedy"
    if method == "exact":
        return _exact_matching(m), method
    if method == "greedy":
        return _greedy_matching(m), method
    raise ValueError(f"unknown matching method {method!r}")


def max_iou(
    gen: VideoST,
    real: VideoST,
    include_banner_objects: bool = False,
    method: str = "auto",
) -> float:
    """Maximum IoU between the elements of a generated and a real layout.

    Elements are matched one-to-one within each object class so as to
    maximise total IoU. The result is the matched IoU summed over classes
    divided by the summed per-class ``max(count_gen, count_real)``, so an
    unmatched element on either side counts as zero. Two empty layouts
    score 1.0.
    """
    by_cls_gen: dict[ObjectClass, list[BBox]] = defaultdict(list)
    by_cls_real: dict[ObjectClass, list[BBox]] = defaultdict(list)
    for cls, box in layout_elements(gen, include_banner_objects):
        by_cls_gen[cls].append(box)
    for cls, box in layout_elements(real, include_banner_objects):
        by_cls_real[cls].append(box)
    total, denom = [], 0
    for cls in ObjectClass:
        g, r = by_cls_gen.get(cls, []), by_cls_real.get(cls, [])
        if not g and not r:
            continue
        matched, used = match_iou(g, r, method)
        if used == "greedy":
            log.warning("max_iou: %d/%d %s elements, using greedy matching", len(g), len(r), cls.value)
        total.append(matched)
        denom += max(len(g), len(r))
    if denom == 0:
        return 1.0
    return math.fsum(total) / denom
