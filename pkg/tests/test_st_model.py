from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from animlayout.st_model import (
    Animation,
    Background,
    Banner,
    BannerST,
    BBox,
    Canvas,
    Color,
    IssueKind,
    JsonSyntax,
    LayoutObject,
    MaingroundST,
    SchemaViolation,
    Stage,
    VideoST,
    iou,
    parse_st,
    serialize_st,
    to_payload,
)

from factories import bottom_banner, doc, logo, text, track


def mainground_payload(**overrides):
    payload = {
        "foreground": [
            {
                "class": "text",
                "bbox": [100, 100, 400, 80],
                "text": "Consult Now!",
                "text_color": "#FFFFFF",
                "textbox_color": "transparent",
            }
        ],
        "background": {"kind": "solid_color", "color": "#102030"},
    }
    payload.update(overrides)
    return payload


def full_payload():
    return {
        "banners": [
            {
                "position": "bottom",
                "bbox": [0, 980, 1920, 100],
                "color": "#C81E1E",
                "objects": [{"class": "logo", "bbox": [10, 990, 80, 80]}],
            }
        ],
        **mainground_payload(),
        "animation": {
            "duration": 50,
            "tracks": [{"object_index": 0, "keyframes": [{"frame": 0, "bbox": [0, 100, 400, 80]}]}],
        },
        "canvas": {"width": 1920, "height": 1080, "fps": 30},
    }


class TestValueTypes:
    def test_bbox_rejects_negative_size(self):
        with pytest.raises(ValueError):
            BBox(0, 0, -1, 5)

    def test_bbox_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            BBox(float("nan"), 0, 1, 1)

    def test_color_hex_round_trip(self):
        c = Color.from_hex("#0aFf10")
        assert c == Color(10, 255, 16)
        assert c.to_hex() == "#0AFF10"

    @pytest.mark.parametrize("bad", ["#12345", "123456", "#GG0000", "#1234567"])
    def test_color_rejects_malformed_hex(self, bad):
        with pytest.raises(ValueError):
            Color.from_hex(bad)

    def test_color_channel_range(self):
        with pytest.raises(ValueError):
            Color(256, 0, 0)

    def test_text_requires_attrs_and_logo_forbids_them(self):
        with pytest.raises(ValueError):
            LayoutObject("text", BBox(0, 0, 1, 1))
        with pytest.raises(ValueError):
            LayoutObject("logo", BBox(0, 0, 1, 1), text(0, 0, 1, 1).attrs)

    def test_blank_text_rejected(self):
        with pytest.raises(ValueError):
            text(0, 0, 1, 1, "   ")

    def test_background_needs_matching_field(self):
        with pytest.raises(ValueError):
            Background("solid_color", caption="x")
        with pytest.raises(ValueError):
            Background("image", color=Color(0, 0, 0))

    def test_keyframes_strictly_increasing(self):
        with pytest.raises(ValueError):
            track(0, (3, (0, 0, 1, 1)), (3, (0, 0, 1, 1)))

    def test_keyframe_beyond_duration(self):
        with pytest.raises(ValueError):
            Animation(5, (track(0, (5, (0, 0, 1, 1))),))

    def test_duplicate_banner_positions(self):
        with pytest.raises(ValueError):
            doc(banners=[bottom_banner(), bottom_banner()])

    def test_track_must_reference_existing_object(self):
        with pytest.raises(ValueError):
            doc([text(0, 0, 10, 10)], [track(1, (0, (0, 0, 10, 10)))])


class TestIou:
    def test_identity(self):
        assert iou(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2)) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 1, 1)) == 0.0

    def test_half_shift(self):
        # intersection 1x2 = 2, union 4 + 4 - 2 = 6
        assert iou(BBox(0, 0, 2, 2), BBox(1, 0, 2, 2)) == pytest.approx(1 / 3, abs=1e-15)

    def test_zero_area_boxes(self):
        assert iou(BBox(3, 3, 0, 0), BBox(3, 3, 0, 0)) == 0.0
        assert iou(BBox(0, 0, 0, 5), BBox(0, 0, 4, 4)) == 0.0

    @given(
        st.tuples(*[st.integers(0, 50)] * 2, *[st.integers(0, 30)] * 2),
        st.tuples(*[st.integers(0, 50)] * 2, *[st.integers(0, 30)] * 2),
    )
    def test_matches_exact_rational_oracle(self, a, b):
        ax, ay, aw, ah = a
        bx, by, bw, bh = b
        iw = max(0, min(ax + aw, bx + bw) - max(ax, bx))
        ih = max(0, min(ay + ah, by + bh) - max(ay, by))
        union = aw * ah + bw * bh - iw * ih
        expected = float(Fraction(iw * ih, union)) if union > 0 else 0.0
        assert iou(BBox(*a), BBox(*b)) == expected
        assert iou(BBox(*b), BBox(*a)) == expected


class TestParse:
    def test_minimal_mainground(self):
        frag = parse_st(json.dumps(mainground_payload()), "mainground")
        assert isinstance(frag, MaingroundST)
        assert len(frag.foreground) == 1
        assert frag.foreground[0].cls.value == "text"
        assert frag.foreground[0].attrs.raw_text == "Consult Now!"

    def test_unbalanced_brace(self):
        with pytest.raises(JsonSyntax):
            parse_st("{", "full")

    def test_banner_json_as_animation(self):
        with pytest.raises(SchemaViolation) as err:
            parse_st('{"banners": []}', "animation")
        assert str(err.value) == "missing key: duration"
        assert err.value.path == "$.duration"

    @pytest.mark.parametrize("text", ['{"a": 1, "a": 2}', '{"duration": NaN, "tracks": []}'])
    def test_strict_json(self, text):
        with pytest.raises(JsonSyntax):
            parse_st(text, "animation")

    def test_unknown_key_is_wrong_hierarchy(self):
        payload = mainground_payload()
        payload["extra"] = 1
        with pytest.raises(SchemaViolation) as err:
            parse_st(json.dumps(payload), "mainground")
        assert [i.kind for i in err.value.issues] == [IssueKind.WRONG_HIERARCHY]

    def test_logo_with_text_keys_rejected(self):
        payload = mainground_payload(foreground=[{"class": "logo", "bbox": [0, 0, 5, 5], "text": "x"}])
        with pytest.raises(SchemaViolation) as err:
            parse_st(json.dumps(payload), "mainground")
        assert err.value.issues[0].path == "$.foreground[0].text"

    def test_bad_enum_is_invariant(self):
        payload = {"banners": [{"position": "middle", "bbox": [0, 0, 10, 10], "color": "#000000", "objects": []}]}
        with pytest.raises(SchemaViolation) as err:
            parse_st(json.dumps(payload), "banner")
        assert err.value.issues[0].kind is IssueKind.INVARIANT
        assert err.value.issues[0].path == "$.banners[0].position"

    def test_out_of_canvas(self):
        payload = mainground_payload()
        payload["foreground"][0]["bbox"] = [1900, 0, 40, 10]
        with pytest.raises(SchemaViolation) as err:
            parse_st(json.dumps(payload), "mainground")
        assert err.value.issues[0].kind is IssueKind.INVARIANT

    def test_banner_object_outside_banner(self):
        payload = full_payload()
        payload["banners"][0]["objects"][0]["bbox"] = [10, 900, 80, 80]
        with pytest.raises(SchemaViolation):
            parse_st(json.dumps(payload), "full")

    def test_bbox_shape_is_wrong_hierarchy(self):
        payload = mainground_payload()
        payload["foreground"][0]["bbox"] = [1, 2, 3]
        with pytest.raises(SchemaViolation) as err:
            parse_st(json.dumps(payload), "mainground")
        assert err.value.issues[0].kind is IssueKind.WRONG_HIERARCHY

    def test_fractional_frame_rejected(self):
        payload = {"duration": 10, "tracks": [{"object_index": 0, "keyframes": [{"frame": 1.5, "bbox": [0, 0, 1, 1]}]}]}
        with pytest.raises(SchemaViolation):
            parse_st(json.dumps(payload), "animation")

    def test_object_index_checked_against_foreground(self):
        payload = full_payload()
        payload["animation"]["tracks"][0]["object_index"] = 3
        with pytest.raises(SchemaViolation) as err:
            parse_st(json.dumps(payload), "full")
        assert "object_index" in err.value.path

    def test_canvas_defaults_when_absent(self):
        payload = full_payload()
        del payload["canvas"]
        assert parse_st(json.dumps(payload), "full").canvas == Canvas()

    def test_full_canvas_box_survives(self):
        payload = full_payload()
        payload["foreground"][0]["bbox"] = [0, 0, 1920, 1080]
        d = parse_st(json.dumps(payload), "full")
        assert d.foreground[0].bbox == BBox(0, 0, 1920, 1080)
        assert parse_st(serialize_st(d), "full") == d

    def test_all_issues_collected(self):
        payload = {"foreground": [{"class": "text", "bbox": [0, 0, 1, 1]}]}
        with pytest.raises(SchemaViolation) as err:
            parse_st(json.dumps(payload), "mainground")
        paths = [i.path for i in err.value.issues]
        assert "$.background" in paths
        assert "$.foreground[0].text" in paths


class TestSerialize:
    def test_key_order_irrelevant(self):
        a = json.dumps(full_payload())
        b = json.dumps(dict(reversed(list(full_payload().items()))))
        assert serialize_st(parse_st(a, "full")) == serialize_st(parse_st(b, "full"))

    def test_canonical_text_fixed_point(self):
        text1 = serialize_st(parse_st(json.dumps(full_payload()), "full"))
        assert serialize_st(parse_st(text1, "full")) == text1

    def test_integral_floats_written_as_ints(self):
        out = json.loads(serialize_st(BannerST((bottom_banner(),))))
        assert out["banners"][0]["bbox"] == [0, 980, 1920, 100]
        assert all(isinstance(v, int) for v in out["banners"][0]["bbox"])

    def test_fragments(self):
        frag = MaingroundST((logo(1, 2, 3, 4),), Background.image("a sunny beach"))
        assert set(to_payload(frag)) == {"foreground", "background"}
        assert parse_st(serialize_st(frag), "mainground") == frag


# --------------------------------------------------------------------------
# Round-trip property over generated documents
# --------------------------------------------------------------------------

_W, _H = 320, 240
_coord = st.one_of(st.integers(0, 100), st.floats(0, 100, allow_nan=False).map(lambda v: round(v, 3)))
_colors = st.builds(Color, st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))


@st.composite
def boxes_in(draw, x0, y0, w, h):
    bw = draw(st.integers(0, w))
    bh = draw(st.integers(0, h))
    x = draw(st.integers(x0, x0 + w - bw))
    y = draw(st.integers(y0, y0 + h - bh))
    frac = draw(st.sampled_from([0.0, 0.25, 0.5]))
    if bw >= 1 and bh >= 1:
        return BBox(x + frac, y, bw - frac, bh)
    return BBox(x, y, bw, bh)


@st.composite
def objects_in(draw, x0, y0, w, h):
    box = draw(boxes_in(x0, y0, w, h))
    if draw(st.booleans()):
        return LayoutObject.logo(box)
    s = draw(st.text(alphabet="abc XYZ!é0", min_size=1, max_size=8).filter(lambda t: t.strip()))
    tb = draw(st.one_of(st.just("transparent"), _colors))
    return LayoutObject.text(box, s, draw(_colors), tb)


@st.composite
def documents(draw):
    canvas = Canvas(_W, _H, draw(st.sampled_from([24, 30])))
    positions = draw(st.lists(st.sampled_from(["bottom", "top_left", "top_right"]), unique=True, max_size=3))
    geometry = {"bottom": (0, 200, 320, 40), "top_left": (0, 0, 80, 40), "top_right": (240, 0, 80, 40)}
    banners = []
    for p in positions:
        g = geometry[p]
        objs = draw(st.lists(objects_in(*g), max_size=2))
        banners.append(Banner(p, BBox(*g), draw(_colors), tuple(objs)))
    fg = draw(st.lists(objects_in(0, 0, _W, _H), max_size=4))
    duration = draw(st.integers(1, 40))
    tracks = []
    for i in range(len(fg)):
        if not draw(st.booleans()):
            continue
        frames = sorted(draw(st.sets(st.integers(0, duration - 1), min_size=1, max_size=4)))
        kfs = [(f, draw(boxes_in(0, 0, _W, _H)).as_list()) for f in frames]
        tracks.append(track(i, *kfs))
    bg = draw(st.one_of(_colors.map(Background.solid), st.just(Background.image("city at night"))))
    return VideoST(tuple(banners), tuple(fg), bg, Animation(duration, tuple(tracks)), canvas)


@settings(max_examples=150, deadline=None)
@given(documents())
def test_round_trip_identity(d):
    text1 = serialize_st(d)
    assert parse_st(text1, "full") == d
    assert serialize_st(parse_st(text1, "full")) == text1


@given(_coord, _coord, _coord, _coord)
def test_iou_self_is_one_when_area_positive(x, y, w, h):
    b = BBox(x, y, w, h)
    if b.area > 0:
        assert iou(b, b) == 1.0
