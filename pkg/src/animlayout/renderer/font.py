"""Raster fonts with binary coverage.

``BitmapFont`` is a built-in 5x7 ASCII font on a 6x8 cell, scaled by
nearest-neighbour sampling. ``TrueTypeFont`` wraps an external font file
rendered through Pillow with anti-aliasing turned off.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Protocol

import numpy as np

__all__ = ["BitmapFont", "Font", "TrueTypeFont", "load_font"]


class Font(Protocol):
    def line_width(self, text: str, size: int) -> int: ...

    def render_line(self, text: str, size: int) -> np.ndarray:
        """Boolean coverage of shape ``(size, line_width(text, size))``."""
        ...


# Column-major glyphs for 0x20..0x7E: five bytes per glyph, bit 0 is the top row.
_GLYPHS_5X7 = bytes.fromhex(
    "0000000000" "00005f0000" "0007000700" "147f147f14" "242a7f2a12"
    "2313086462" "3649552250" "0005030000" "001c224100" "0041221c00"
    "082a1c2a08" "08083e0808" "0050300000" "0808080808" "0060600000"
    "2010080402" "3e5149453e" "00427f4000" "4261514946" "2141454b31"
    "1814127f10" "2745454539" "3c4a494930" "0171090503" "3649494936"
    "064949291e" "0036360000" "0056360000" "0814224100" "1414141414"
    "0041221408" "0201510906" "324979413e" "7e1111117e" "7f49494936"
    "3e41414122" "7f4141221c" "7f49494941" "7f09090101" "3e41415132"
    "7f0808087f" "00417f4100" "2040413f01" "7f08142241" "7f40404040"
    "7f0204027f" "7f0408107f" "3e4141413e" "7f09090906" "3e4151215e"
    "7f09192946" "4649494931" "01017f0101" "3f4040403f" "1f2040201f"
    "7f2018207f" "6314081463" "0304780403" "6151494543" "00007f4141"
    "0204081020" "41417f0000" "0402010204" "4040404040" "0001020400"
    "2054545478" "7f48444438" "3844444420" "384444487f" "3854545418"
    "087e090102" "081454543c" "7f08040478" "00447d4000" "2040443d00"
    "007f102844" "00417f4000" "7c04180478" "7c08040478" "3844444438"
    "7c14141408" "081414187c" "7c08040408" "4854545420" "043f444020"
    "3c4040207c" "1c2040201c" "3c4030403c" "4428102844" "0c5050503c"
    "4464544c44" "0008364100" "00007f0000" "0041360800" "08082a1c08"
)

_CELL_W, _CELL_H = 6, 8
_GLYPH_W, _GLYPH_H = 5, 7


def _decode_glyph(code: int) -> np.ndarray:
    cols = _GLYPHS_5X7[(code - 0x20) * 5 : (code - 0x20) * 5 + 5]
    cell = np.zeros((_CELL_H, _CELL_W), dtype=bool)
    for x, col in enumerate(cols):
        for y in range(_GLYPH_H):
            cell[y, x] = bool(col >> y & 1)
    return cell


_CELLS = {chr(c): _decode_glyph(c) for c in range(0x20, 0x7F)}
_FALLBACK = "?"


class BitmapFont:
    """The embedded fixed-width font. ``size`` is the line height in pixels."""

    name = "builtin-5x7"

    def advance(self, size: int) -> int:
        return max(1, (_CELL_W * size + _CELL_H // 2) // _CELL_H)

    def line_width(self, text: str, size: int) -> int:
        return self.advance(size) * len(text)

    @lru_cache(maxsize=4096)
    def glyph(self, ch: str, size: int) -> np.ndarray:
        cell = _CELLS.get(ch, _CELLS[_FALLBACK])
        adv = self.advance(size)
        rows = np.arange(size) * _CELL_H // size
        cols = np.arange(adv) * _CELL_W // adv
        return cell[np.ix_(rows, cols)]

    def render_line(self, text: str, size: int) -> np.ndarray:
        if not text:
            return np.zeros((size, 0), dtype=bool)
        return np.hstack([self.glyph(ch, size) for ch in text])

    def __hash__(self) -> int:
        return hash(self.name)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BitmapFont)


class TrueTypeFont:
    """An external TrueType/OpenType font rendered without anti-aliasing."""

    def __init__(self, path: str | Path) -> None:
        from PIL import ImageFont

        self.path = str(path)
        self._ImageFont = ImageFont
        ImageFont.truetype(self.path, 10)  # fail early on unreadable files
        self.name = Path(self.path).name

    @lru_cache(maxsize=64)
    def _face(self, size: int):
        return self._ImageFont.truetype(self.path, size)

    def line_width(self, text: str, size: int) -> int:
        return int(np.ceil(self._face(size).getlength(text)))

    def render_line(self, text: str, size: int) -> np.ndarray:
        from PIL import Image, ImageDraw

        width = self.line_width(text, size)
        img = Image.new("1", (max(width, 1), size), 0)
        draw = ImageDraw.Draw(img)
        draw.fontmode = "1"
        face = self._face(size)
        ascent, descent = face.getmetrics()
        # fit ascent+descent into the line height
        draw.text((0, (size - (ascent + descent)) // 2), text, fill=1, font=face)
        return np.array(img, dtype=bool)[:, :width]

    def __hash__(self) -> int:
        return hash(self.path)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TrueTypeFont) and other.path == self.path


def load_font(source: str | None) -> Font:
    """``None`` or ``"builtin"`` gives the embedded font; anything else is a font path."""
    if source in (None, "", "builtin"):
        return BitmapFont()
    return TrueTypeFont(source)
