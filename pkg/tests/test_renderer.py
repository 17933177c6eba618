from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from animlayout.renderer import (
    BitmapFont,
    MissingBackgroundImage,
    RenderConfig,
    TrueTypeFont,
    Unrenderable,
    caption_key,
    fit_text,
    load_font,
    render_frame,
    render_video,
)
from animlayout.st_model import Background, Banner, BBox, Canvas, Color
from animlayout.timeline import FrameOutOfRange

import golden_docs
from factories import doc, logo, text, track

GOLDEN = golden_docs.GOLDEN
DEJAVU = Path("/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf")
SMALL = Canvas(160, 90, 30)


def digest(frame) -> str:
    return hashlib.sha256(frame.pixels).hexdigest()


@pytest.mark.parametrize("name,f", sorted(GOLDEN))
def test_golden_frames(name, f):
    d = getattr(golden_docs, name)()
    assert digest(render_frame(d, f)) == GOLDEN[(name, f)]


class TestGeometry:
    def test_uniform_fill(self):
        frame = render_frame(golden_docs.solid_red(), 0)
        assert len(frame.pixels) == frame.width * frame.height * 3
        assert (frame.array == (255, 0, 0)).all()

    def test_banner_pixel(self):
        frame = render_frame(golden_docs.banner_strip(), 0)
        assert frame.pixel(10, 1000) == (0, 0, 255)
        assert frame.pixel(10, 979) == (16, 32, 48)
        assert frame.pixel(1919, 1079) == (0, 0, 255)

    def test_animated_box_tracks_timeline(self):
        d = golden_docs.animated_text()
        assert render_frame(d, 0).pixel(25, 45) == (30, 60, 90)  # hidden before first keyframe
        mid = render_frame(d, 7)  # box at x 100..220, y 70..110
        assert mid.pixel(100, 70) == (0, 0, 0)
        assert mid.pixel(99, 70) == (30, 60, 90)
        assert mid.pixel(219, 109) == (0, 0, 0)
        assert mid.pixel(220, 110) == (30, 60, 90)

    def test_textbox_non_glyph_pixels(self):
        obj = text(0, 0, 100, 100, "Hi", Color(255, 255, 255), Color(0, 0, 0))
        frame = render_frame(doc([obj], canvas=Canvas(200, 120)), 0)
        colors = {tuple(c) for c in frame.array[:100, :100].reshape(-1, 3)}
        assert colors == {(0, 0, 0), (255, 255, 255)}

    def test_logo_placeholder_with_border(self):
        d = doc([logo(10, 10, 20, 10)], canvas=SMALL)
        frame = render_frame(d, 0)
        assert frame.pixel(10, 10) == (100, 100, 100)
        assert frame.pixel(29, 19) == (100, 100, 100)
        assert frame.pixel(11, 11) == (200, 200, 200)
        assert frame.pixel(30, 10) == (16, 32, 48)

    def test_paint_order_banner_over_foreground(self):
        banner = Banner("top_left", BBox(0, 0, 40, 20), Color(0, 255, 0))
        fg = text(0, 0, 80, 40, "x", Color(1, 1, 1), Color(255, 0, 255))
        frame = render_frame(doc([fg], banners=[banner], canvas=SMALL), 0)
        assert frame.pixel(5, 5) == (0, 255, 0)
        assert frame.pixel(79, 39) == (255, 0, 255)

    def test_foreground_list_order(self):
        a = text(0, 0, 50, 50, "a", Color(1, 1, 1), Color(255, 0, 0))
        b = text(25, 25, 50, 50, "b", Color(1, 1, 1), Color(0, 0, 255))
        frame = render_frame(doc([a, b], canvas=SMALL), 0)
        assert frame.pixel(26, 26) == (0, 0, 255)

    def test_frame_out_of_range(self):
        with pytest.raises(FrameOutOfRange):
            render_frame(golden_docs.solid_red(), 1)

    def test_scale(self):
        frame = render_frame(golden_docs.banner_strip(), 0, RenderConfig(scale=0.25))
        assert (frame.width, frame.height) == (480, 270)
        assert frame.pixel(2, 250) == (0, 0, 255)

    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError):
            RenderConfig(scale=0)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 100),
    st.integers(0, 60),
    st.integers(1, 60),
    st.integers(1, 30),
    st.text(alphabet="AaBb 019!?é", min_size=1, max_size=12).filter(lambda s: s.strip()),
)
def test_text_never_paints_outside_its_box(x, y, w, h, s):
    w, h = min(w, SMALL.width - x), min(h, SMALL.height - y)
    obj = text(x, y, w, h, s, Color(255, 255, 255))
    frame = render_frame(doc([obj], canvas=SMALL), 0)
    outside = np.ones((SMALL.height, SMALL.width), dtype=bool)
    outside[y : y + h, x : x + w] = False
    assert (frame.array[outside] == (16, 32, 48)).all()


class TestFitText:
    def test_single_glyph_oracle(self):
        font = BitmapFont()
        plan = fit_text("A", BBox(0, 0, 100, 100), font)
        # size bounded by floor(0.9 * 100); advance at 90 px is (6 * 90 + 4) // 8 = 68
        assert plan.size == 90
        (line,) = plan.lines
        assert line.width == 68
        assert (line.x, line.y) == ((100 - 68) // 2, (100 - 90) // 2)

    def test_empty_box(self):
        with pytest.raises(Unrenderable):
            fit_text("A", BBox(0, 0, 0, 10))

    def test_too_small(self):
        with pytest.raises(Unrenderable):
            fit_text("A", BBox(0, 0, 3, 3))

    def test_wraps_long_sentence(self):
        sentence = "the quick brown fox jumps over the lazy dog again and again"
        box = BBox(0, 0, 200, 30)
        font = BitmapFont()
        plan = fit_text(sentence, box, font)
        assert len(plan.lines) >= 2
        assert " ".join(line.text for line in plan.lines) == sentence
        single = max(s for s in range(4, 28) if font.line_width(sentence, s) <= 180)
        assert plan.size > single
        assert len(plan.lines) * plan.size <= 27
        assert all(line.width <= 180 for line in plan.lines)

    @given(st.text(alphabet="abc XYZ", min_size=1, max_size=20).filter(lambda s: s.strip()), st.integers(8, 400), st.integers(8, 200))
    def test_plan_fits_ninety_percent(self, s, w, h):
        try:
            plan = fit_text(s, BBox(0, 0, w, h))
        except Unrenderable:
            return
        assert len(plan.lines) * plan.size <= math.floor(0.9 * h)
        assert all(line.width <= math.floor(0.9 * w) for line in plan.lines)
        assert plan.size >= 4

    def test_unrenderable_becomes_warning(self, tmp_path):
        d = doc([text(0, 0, 2, 2, "tiny")], duration=1, canvas=SMALL)
        manifest = render_video(d, None, tmp_path)
        assert any("tiny" in w for w in manifest["warnings"])


class TestFonts:
    def test_bitmap_glyph_shape(self):
        font = BitmapFont()
        g = font.render_line("Hi", 16)
        assert g.shape == (16, font.line_width("Hi", 16))
        assert g.dtype == bool

    def test_unknown_char_falls_back(self):
        font = BitmapFont()
        assert (font.render_line("中", 8) == font.render_line("?", 8)).all()

    def test_load_font_builtin(self):
        assert isinstance(load_font(None), BitmapFont)
        assert isinstance(load_font("builtin"), BitmapFont)

    @pytest.mark.skipif(not DEJAVU.exists(), reason="DejaVu font not installed")
    def test_truetype(self):
        font = load_font(str(DEJAVU))
        assert isinstance(font, TrueTypeFont)
        cover = font.render_line("Sale", 20)
        assert cover.shape == (20, font.line_width("Sale", 20))
        assert cover.any()
        obj = text(0, 0, 100, 40, "Sale", Color(255, 255, 255))
        a = render_frame(doc([obj], canvas=SMALL), 0, RenderConfig(font=str(DEJAVU)))
        b = render_frame(doc([obj], canvas=SMALL), 0, RenderConfig(font=str(DEJAVU)))
        assert a.pixels == b.pixels
        assert {tuple(c) for c in a.array.reshape(-1, 3)} == {(16, 32, 48), (255, 255, 255)}


class TestBackgrounds:
    def test_missing_image_falls_back_to_gray(self):
        d = doc(background=Background.image("sunset"), duration=1, canvas=SMALL)
        frame = render_frame(d, 0)
        assert frame.pixel(0, 0) == (128, 128, 128)
        assert frame.warnings and "sunset" in frame.warnings[0]

    def test_strict_missing_image(self):
        d = doc(background=Background.image("sunset"), duration=1, canvas=SMALL)
        with pytest.raises(MissingBackgroundImage):
            render_frame(d, 0, RenderConfig(strict_background=True))

    def test_image_resolved_by_caption_key(self, tmp_path):
        Image.new("RGB", (4, 4), (7, 8, 9)).save(tmp_path / f"{caption_key('sunset')}.png")
        d = doc(background=Background.image("sunset"), duration=1, canvas=SMALL)
        frame = render_frame(d, 0, RenderConfig(background_image_dir=str(tmp_path)))
        assert (frame.array == (7, 8, 9)).all()
        assert frame.warnings == []

    def test_caption_key(self):
        assert caption_key("sunset") == hashlib.sha256(b"sunset").hexdigest()[:16]


class TestRenderVideo:
    def test_fifty_frames_and_manifest(self, tmp_path):
        d = doc([text(0, 0, 40, 20, "go")], [track(0, (0, (0, 0, 40, 20)), (49, (100, 50, 40, 20)))], duration=50, canvas=SMALL)
        manifest = render_video(d, None, tmp_path)
        pngs = sorted(p.name for p in tmp_path.glob("frame_*.png"))
        assert pngs == [f"frame_{i:05d}.png" for i in range(50)]
        assert manifest == {"fps": 30, "frames": 50, "width": 160, "height": 90, "warnings": []}
        assert json.loads((tmp_path / "manifest.json").read_text()) == manifest

    def test_single_frame(self, tmp_path):
        render_video(golden_docs.solid_red(), None, tmp_path)
        assert [p.name for p in tmp_path.glob("*.png")] == ["frame_00000.png"]

    def test_png_matches_frame_buffer(self, tmp_path):
        d = golden_docs.animated_text()
        render_video(d, None, tmp_path)
        with Image.open(tmp_path / "frame_00007.png") as img:
            assert img.mode == "RGB"
            assert hashlib.sha256(img.tobytes()).hexdigest() == GOLDEN[("animated_text", 7)]

    def test_rerender_and_parallel_are_byte_identical(self, tmp_path):
        d = golden_docs.animated_text()
        render_video(d, None, tmp_path / "a")
        render_video(d, None, tmp_path / "b", jobs=4)
        for p in sorted((tmp_path / "a").iterdir()):
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()
