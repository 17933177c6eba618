"""Rule-based answers for the mock backend.

The UT (reasoning) answer is a short plan in plain text; the ST answer is
derived from that plan when it is present in the prompt, otherwise straight
from the user prompt. Everything is a pure function of the prompt text.
"""

from __future__ import annotations

import json
import re
import zlib
from dataclasses import dataclass

from animlayout.st_model import Canvas, Stage

PLAN_HEADER = "Layout plan:"
DURATION = 50

_PALETTE = ["#1F3A93", "#C0392B", "#27AE60", "#8E44AD", "#D35400", "#2C3E50", "#F1C40F", "#16A085"]
_POSITIONS = {
    "bottom": re.compile(r"\bbottom\b"),
    "top_left": re.compile(r"\btop[- ]left\b"),
    "top_right": re.compile(r"\btop[- ]right\b"),
}
_NEGATION = re.compile(r"\b(no|not|without|none)\b")
_QUOTE = re.compile(r'"([^"]+)"|“([^”]+)”')
_MOTIONS = ("slide_left", "slide_up", "grow", "appear", "pulse")


def _stable(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


def _pick_color(seed: str) -> str:
    return _PALETTE[_stable(seed) % len(_PALETTE)]


def _plan_text(user_prompt: str) -> str | None:
    idx = user_prompt.rfind(PLAN_HEADER)
    return None if idx < 0 else user_prompt[idx + len(PLAN_HEADER) :]


def _user_section(prompt: str) -> str:
    """The user's own words, when a template fenced them with ``<<<``/``>>>``."""
    m = re.search(r"<<<(.*?)>>>", prompt, re.DOTALL)
    return m.group(1) if m else prompt


def _quoted(text: str) -> list[str]:
    return [(m.group(1) or m.group(2)).strip().rstrip(",") for m in _QUOTE.finditer(text)]


# --------------------------------------------------------------------------
# Banner stage
# --------------------------------------------------------------------------


@dataclass
class _BannerPlan:
    position: str
    items: list[tuple[str, str | None]]


def _banner_plan_from_prompt(prompt: str) -> list[_BannerPlan]:
    prompt = _user_section(prompt)
    quotes: list[str] = []

    def stash(m: re.Match) -> str:
        quotes.append((m.group(1) or m.group(2)).strip().rstrip(","))
        return f"\x00{len(quotes) - 1}\x00"

    masked = _QUOTE.sub(stash, prompt)
    sentences = re.split(r"(?<=[.!?])\s+", masked)
    plans: dict[str, _BannerPlan] = {}
    current: _BannerPlan | None = None
    for sentence in sentences:
        ids = [int(i) for i in re.findall(r"\x00(\d+)\x00", sentence)]
        bare = re.sub(r"\x00\d+\x00", " ", sentence).lower()
        if _NEGATION.search(bare) and not ids:
            continue
        positions = [p for p, rx in _POSITIONS.items() if rx.search(bare)]
        if positions:
            pos = positions[0]
            current = plans.setdefault(pos, _BannerPlan(pos, []))
        elif ids and current is None:
            current = plans.setdefault("bottom", _BannerPlan("bottom", []))
        if current is None:
            continue
        if re.search(r"\blogo\b", bare) and not any(kind == "logo" for kind, _ in current.items):
            current.items.insert(0, ("logo", None))
        for i in ids:
            if ("text", quotes[i]) not in current.items:
                current.items.append(("text", quotes[i]))
    order = ["bottom", "top_left", "top_right"]
    return [plans[p] for p in order if p in plans]


def _banner_ut(prompt: str) -> str:
    plans = _banner_plan_from_prompt(prompt)
    lines = [f"The design calls for {len(plans)} banner(s).", PLAN_HEADER]
    if not plans:
        lines.append("- no banners")
    for plan in plans:
        parts = ["logo" if kind == "logo" else f"text «{text}»" for kind, text in plan.items]
        lines.append(f"- {plan.position} banner: " + "; ".join(parts))
    return "\n".join(lines) + "\n"


def _banner_plan_from_ut(plan_text: str) -> list[_BannerPlan]:
    plans = []
    for m in re.finditer(r"^- (bottom|top_left|top_right) banner: (.*)$", plan_text, re.MULTILINE):
        items = [
            ("text", t.group(1)) if t.group(1) is not None else ("logo", None)
            for t in re.finditer(r"text «([^»]*)»|logo", m.group(2))
        ]
        plans.append(_BannerPlan(m.group(1), items))
    return plans


def _banner_geometry(position: str, canvas: Canvas) -> list[int]:
    W, H = canvas.width, canvas.height
    bh = round(H * 100 / 1080)
    if position == "bottom":
        return [0, H - bh, W, bh]
    if position == "top_left":
        return [0, 0, W // 4, bh]
    return [W - W // 4, 0, W // 4, bh]


def _banner_st(plans: list[_BannerPlan], canvas: Canvas) -> dict:
    banners = []
    for plan in plans:
        bx, by, bw, bh = _banner_geometry(plan.position, canvas)
        color = _pick_color(plan.position + "".join(t or "" for _, t in plan.items))
        objects = []
        n = max(len(plan.items), 1)
        slot = bw // n
        pad = max(1, bh // 10)
        for i, (kind, text) in enumerate(plan.items):
            sx = bx + i * slot
            if kind == "logo":
                side = min(slot, bh) - 2 * pad
                objects.append({"class": "logo", "bbox": [sx + pad, by + pad, side, side]})
            else:
                objects.append(
                    {
                        "class": "text",
                        "bbox": [sx + pad, by + pad, slot - 2 * pad, bh - 2 * pad],
                        "text": text,
                        "text_color": "#FFFFFF",
                        "textbox_color": "transparent",
                    }
                )
        banners.append({"position": plan.position, "bbox": [bx, by, bw, bh], "color": color, "objects": objects})
    return {"banners": banners}


# --------------------------------------------------------------------------
# Mainground stage
# --------------------------------------------------------------------------


def _strip_json(text: str) -> str:
    """Drop balanced ``{...}`` blocks so quoted JSON keys are not read as text."""
    out, depth, in_str, esc = [], 0, False, False
    for ch in text:
        if depth:
            if in_str:
                if esc:
                    esc = False
                elif ch == "\\":
                    esc = True
                elif ch == '"':
                    in_str = False
            elif ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
            continue
        if ch == "{":
            depth = 1
            continue
        out.append(ch)
    return "".join(out)


def _mainground_from_prompt(prompt: str) -> tuple[tuple[str, str], list[str]]:
    text = _strip_json(_user_section(prompt))
    texts: list[str] = []
    for q in _quoted(text):
        if q not in texts:
            texts.append(q)
    m = re.search(r"image of ([^.;\n]+)", text, re.IGNORECASE)
    if m:
        background = ("image", m.group(1).strip())
    else:
        background = ("color", _pick_color("bg" + "".join(texts)))
    return background, texts


def _mainground_ut(prompt: str) -> str:
    (kind, value), texts = _mainground_from_prompt(prompt)
    lines = [f"The scene shows {len(texts)} text element(s).", PLAN_HEADER]
    lines.append(f"- background {'image' if kind == 'image' else 'color'}: {value}")
    lines += [f"- text «{t}»" for t in texts]
    return "\n".join(lines) + "\n"


def _mainground_from_ut(plan_text: str) -> tuple[tuple[str, str], list[str]]:
    m = re.search(r"^- background (image|color): (.*)$", plan_text, re.MULTILINE)
    background = (m.group(1), m.group(2).strip()) if m else ("color", _PALETTE[0])
    texts = re.findall(r"^- text «([^»]*)»$", plan_text, re.MULTILINE)
    return background, texts


def _mainground_st(background: tuple[str, str], texts: list[str], canvas: Canvas) -> dict:
    W, H = canvas.width, canvas.height
    top, bottom = round(H * 0.12), round(H * 0.88)
    n = max(len(texts), 1)
    gap = round(H * 0.02)
    row_h = min(round(H * 0.12), (bottom - top - gap * (n - 1)) // n)
    block = row_h * len(texts) + gap * (len(texts) - 1)
    y = top + (bottom - top - block) // 2
    width = round(W * 0.7)
    x = (W - width) // 2
    fg = []
    for t in texts:
        seed = _stable(t)
        boxed = seed % 3 == 0
        fg.append(
            {
                "class": "text",
                "bbox": [x, y, width, row_h],
                "text": t,
                "text_color": "#FFFFFF" if boxed else "#111111",
                "textbox_color": _pick_color(t) if boxed else "transparent",
            }
        )
        y += row_h + gap
    kind, value = background
    bg = {"kind": "image", "caption": value} if kind == "image" else {"kind": "solid_color", "color": value}
    return {"foreground": fg, "background": bg}


# --------------------------------------------------------------------------
# Animation stage
# --------------------------------------------------------------------------


def _foreground_from_prompt(prompt: str) -> list[dict]:
    from animlayout.pipeline.stages import NoJsonFound, extract_json_block

    try:
        payload = json.loads(extract_json_block(prompt))
    except (NoJsonFound, ValueError):
        return []
    fg = payload.get("foreground", []) if isinstance(payload, dict) else payload
    return [o for o in fg if isinstance(o, dict) and isinstance(o.get("bbox"), list)] if isinstance(fg, list) else []


def _motion_plan(fg: list[dict]) -> list[tuple[int, str, int, int]]:
    plan = []
    for i, obj in enumerate(fg):
        motion = _MOTIONS[_stable(str(obj.get("text", i))) % len(_MOTIONS)]
        start = min(6 * i, 30)
        plan.append((i, motion, start, start + 15))
    return plan


def _animation_ut(prompt: str) -> str:
    plan = _motion_plan(_foreground_from_prompt(prompt))
    lines = [f"{len(plan)} object(s) will animate over {DURATION} frames.", PLAN_HEADER]
    lines += [f"- object {i}: {m} from frame {s} to {e}" for i, m, s, e in plan]
    return "\n".join(lines) + "\n"


def _keyframes(motion: str, box: list[float], start: int, end: int, canvas: Canvas) -> list[dict]:
    x, y, w, h = box
    W, H = canvas.width, canvas.height
    if motion == "slide_left":
        first = [max(0, round(x - W * 0.1)), y, w, h]
    elif motion == "slide_up":
        first = [x, min(H - h, round(y + H * 0.05)), w, h]
    elif motion == "grow":
        first = [x + w / 4, y + h / 4, w / 2, h / 2]
    elif motion == "pulse":
        mid = (start + end) // 2
        inner = [x + w * 0.05, y + h * 0.05, w * 0.9, h * 0.9]
        return [
            {"frame": start, "bbox": box},
            {"frame": mid, "bbox": inner},
            {"frame": end, "bbox": box},
        ]
    else:
        return [{"frame": start, "bbox": box}]
    return [{"frame": start, "bbox": first}, {"frame": end, "bbox": box}]


def _animation_st(prompt: str, canvas: Canvas) -> dict:
    fg = _foreground_from_prompt(prompt)
    plan_text = _plan_text(prompt)
    plan = []
    if plan_text is not None:
        plan = [
            (int(i), m, int(s), int(e))
            for i, m, s, e in re.findall(r"^- object (\d+): (\w+) from frame (\d+) to (\d+)$", plan_text, re.MULTILINE)
        ]
    if not plan:
        plan = _motion_plan(fg)
    tracks = []
    for i, motion, start, end in plan:
        if i >= len(fg):
            continue
        tracks.append({"object_index": i, "keyframes": _keyframes(motion, fg[i]["bbox"], start, end, canvas)})
    return {"duration": DURATION, "tracks": tracks}


# --------------------------------------------------------------------------


def _fenced(payload: dict) -> str:
    return "Here is the structured layout.\n```json\n" + json.dumps(payload, indent=2, ensure_ascii=False) + "\n```\n"


def respond(stage: Stage, phase: str, user_prompt: str, canvas: Canvas) -> str:
    """Answer one call. ``phase`` is "ut", "st", or "single" (UT then ST in one text)."""
    if phase == "single":
        ut = respond(stage, "ut", user_prompt, canvas)
        return ut + "\n" + respond(stage, "st", user_prompt + "\n" + ut, canvas)
    if phase == "ut":
        if stage is Stage.BANNER:
            return _banner_ut(user_prompt)
        if stage is Stage.MAINGROUND:
            return _mainground_ut(user_prompt)
        return _animation_ut(user_prompt)

    plan_text = _plan_text(user_prompt)
    if stage is Stage.BANNER:
        plans = _banner_plan_from_ut(plan_text) if plan_text is not None else _banner_plan_from_prompt(user_prompt)
        return _fenced(_banner_st(plans, canvas))
    if stage is Stage.MAINGROUND:
        if plan_text is not None:
            background, texts = _mainground_from_ut(plan_text)
        else:
            background, texts = _mainground_from_prompt(user_prompt)
        return _fenced(_mainground_st(background, texts, canvas))
    return _fenced(_animation_st(user_prompt, canvas))
