"""Synthetic object-id mask sequences for the box-extraction tests."""

from __future__ import annotations

import random

import numpy as np

KINDS = ("clean", "noise_rows", "shrinking")


def _paint(mask, obj_id, x, y, w, h):
    mask[y : y + h, x : x + w] = obj_id


def sequence(rng: random.Random, kind: str, width: int = 64, height: int = 48, frames: int = 6) -> list[np.ndarray]:
    """Forward-ordered masks with one to three moving rectangles.

    ``noise_rows`` blanks random rows inside objects and adds stray pixels;
    ``shrinking`` makes objects small in early frames so the size filter
    triggers.
    """
    n_obj = rng.randint(1, 3)
    specs = []
    for obj_id in range(1, n_obj + 1):
        w, h = rng.randint(4, 20), rng.randint(4, 16)
        x0, y0 = rng.randint(0, width - w), rng.randint(0, height - h)
        x1, y1 = rng.randint(0, width - w), rng.randint(0, height - h)
        appear = rng.randint(0, frames - 1) if rng.random() < 0.3 else 0
        specs.append((obj_id, w, h, x0, y0, x1, y1, appear))
    out = []
    for f in range(frames):
        t = f / (frames - 1)
        mask = np.zeros((height, width), dtype=np.int64)
        for obj_id, w, h, x0, y0, x1, y1, appear in specs:
            if f < appear:
                continue
            if kind == "shrinking":
                k = 0.15 + 0.85 * t
                cw, ch = max(1, round(w * k)), max(1, round(h * k))
            else:
                cw, ch = w, h
            x = round(x0 + (x1 - x0) * t)
            y = round(y0 + (y1 - y0) * t)
            x, y = min(x, width - cw), min(y, height - ch)
            _paint(mask, obj_id, x, y, cw, ch)
            if kind == "noise_rows":
                for _ in range(rng.randint(0, 2)):
                    if ch > 2:
                        mask[y + rng.randint(1, ch - 2), x : x + cw] = 0
                if rng.random() < 0.5:
                    mask[rng.randrange(height), rng.randrange(width)] = obj_id
        out.append(mask)
    return out
