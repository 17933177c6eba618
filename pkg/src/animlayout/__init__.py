"""Structured-text layouts for animated video ads: parsing, timelines,
rendering, generation and evaluation."""

from animlayout.st_model import (
    Animation,
    Background,
    Banner,
    BannerST,
    BBox,
    Canvas,
    Color,
    Keyframe,
    LayoutObject,
    MaingroundST,
    ObjectAnimation,
    Stage,
    VideoST,
    parse_st,
    serialize_st,
)

__version__ = "0.1.0"

__all__ = [
    "Animation",
    "BBox",
    "Background",
    "Banner",
    "BannerST",
    "Canvas",
    "Color",
    "Keyframe",
    "LayoutObject",
    "MaingroundST",
    "ObjectAnimation",
    "Stage",
    "VideoST",
    "__version__",
    "parse_st",
    "serialize_st",
]
