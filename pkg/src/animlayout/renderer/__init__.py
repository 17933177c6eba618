"""Rasterisation of documents into frames."""

from animlayout.renderer.font import BitmapFont, Font, TrueTypeFont, load_font
from animlayout.renderer.raster import (
    Frame,
    MissingBackgroundImage,
    RenderConfig,
    TextLine,
    TextPlan,
    Unrenderable,
    caption_key,
    fit_text,
    pixel_rect,
    render_frame,
    render_video,
)

__all__ = [
    "BitmapFont",
    "Font",
    "Frame",
    "MissingBackgroundImage",
    "RenderConfig",
    "TextLine",
    "TextPlan",
    "TrueTypeFont",
    "Unrenderable",
    "caption_key",
    "fit_text",
    "load_font",
    "pixel_rect",
    "render_frame",
    "render_video",
]
