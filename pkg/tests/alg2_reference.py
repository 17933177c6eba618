"""Plain-Python reference of the box post-processing algorithm.

Written independently with plain lists, as an oracle for
``animlayout.maskproc``. Interpretations shared with the package:
early stop is relative to the object's vertical extent; the middle scan
ignores empty rows inside the 30-70% band; ties in bound selection go to
the top-down scan; size is (x2 - x1) * (y2 - y1) on inclusive bounds.
"""

from __future__ import annotations

TOP_EARLY, BOTTOM_EARLY, RATIO, SIZE_FACTOR = 0.7, 0.3, 0.5, 0.2


def _count_col(active, x, ya, yb):
    return sum(active[y][x] for y in range(ya, yb + 1))


def _count_row(active, y, xa, xb):
    return sum(active[y][xa : xb + 1])


def _refine_x(active, x1, y1, x2, y2):
    need = RATIO * (y2 - y1 + 1)
    while x1 < x2 and _count_col(active, x1, y1, y2) < need:
        x1 += 1
    while x2 > x1 and _count_col(active, x2, y1, y2) < need:
        x2 -= 1
    return x1, x2


def _refine_y(active, x1, y1, x2, y2):
    need = RATIO * (x2 - x1 + 1)
    while y1 < y2 and _count_row(active, y1, x1, x2) < need:
        y1 += 1
    while y2 > y1 and _count_row(active, y2, x1, x2) < need:
        y2 -= 1
    return y1, y2


def reference_box(mask, obj_id):
    """Inclusive ``(x1, y1, x2, y2)`` or None. ``mask`` is a list of rows."""
    height, width = len(mask), len(mask[0])
    active = [[1 if v == obj_id else 0 for v in row] for row in mask]
    has = [1 in row for row in active]
    ys = [y for y in range(height) if has[y]]
    if not ys:
        return None
    y_min, y_max = ys[0], ys[-1]
    extent = y_max - y_min

    # ScanTopDown
    top = (y_min, y_max)
    top_early = False
    for y in range(y_min, y_max + 1):
        if not has[y]:
            top = (y_min, y - 1)
            top_early = (y - y_min) < TOP_EARLY * extent
            break

    # ScanBottomUp
    bottom = (y_min, y_max)
    bottom_early = False
    for y in range(y_max, y_min - 1, -1):
        if not has[y]:
            bottom = (y + 1, y_max)
            bottom_early = (y - y_min) > BOTTOM_EARLY * extent
            break

    mid = (y_min + y_max) // 2
    if top_early and bottom_early and has[mid]:
        # ScanFromMiddle
        y1 = mid
        y = mid - 1
        while y >= y_min:
            if has[y]:
                y1 = y
            elif y - y_min <= BOTTOM_EARLY * extent:
                break
            y -= 1
        y2 = mid
        y = mid + 1
        while y <= y_max:
            if has[y]:
                y2 = y
            elif y - y_min >= TOP_EARLY * extent:
                break
            y += 1
    elif bottom[1] - bottom[0] > top[1] - top[0]:
        y1, y2 = bottom
    else:
        y1, y2 = top

    xs = [x for x in range(width) if any(active[y][x] for y in range(y1, y2 + 1))]
    x1, x2 = xs[0], xs[-1]

    ax1, ax2 = _refine_x(active, x1, y1, x2, y2)
    ay1, ay2 = _refine_y(active, ax1, y1, ax2, y2)
    by1, by2 = _refine_y(active, x1, y1, x2, y2)
    bx1, bx2 = _refine_x(active, x1, by1, x2, by2)
    a = (ax1, ay1, ax2, ay2)
    b = (bx1, by1, bx2, by2)
    return a if size(a) >= size(b) else b


def size(box):
    x1, y1, x2, y2 = box
    return (x2 - x1) * (y2 - y1)


def reference_sequence(masks_last_first):
    """Per processed frame: ``{id: (x1, y1, w, h)}`` of kept boxes, plus drop log.

    Returns ``(kept_per_frame, dropped)`` where ``dropped`` lists
    ``(frame_position, id, size, max_value)`` for filtered boxes.
    """
    max_values = {}
    kept_per_frame = []
    dropped = []
    for pos, mask in enumerate(masks_last_first):
        ids = sorted({v for row in mask for v in row if v != 0})
        kept = {}
        for obj_id in ids:
            box = reference_box(mask, obj_id)
            if box is None:
                continue
            s = size(box)
            if pos == 0:
                max_values[obj_id] = s
            elif obj_id not in max_values:
                continue
            elif s < SIZE_FACTOR * max_values[obj_id]:
                dropped.append((pos, obj_id, s, max_values[obj_id]))
                continue
            x1, y1, x2, y2 = box
            kept[obj_id] = (x1, y1, x2 - x1 + 1, y2 - y1 + 1)
        kept_per_frame.append(kept)
    return kept_per_frame, dropped
