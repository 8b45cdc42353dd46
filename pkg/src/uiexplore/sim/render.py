"""Synthetic screenshot rendering.

Elements are filled rectangles whose gray level is a hash of their
identifier, on a white page with a per-screen title bar. Dialogs dim the
backdrop; banners paint a fixed strip at the top.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

from .scenario import TITLE_HEIGHT, ScreenDef

BACKGROUND = 255
BANNER_LEVEL = 70
DIM_FACTOR = 0.45


def gray_level(key: str, lo: int = 30, hi: int = 200) -> int:
    h = int.from_bytes(hashlib.blake2b(key.encode(), digest_size=4).digest(), "big")
    return lo + h % (hi - lo)


def _paint_elements(img: np.ndarray, screen: ScreenDef) -> None:
    for e in screen.elements:
        x0, y0, x1, y1 = e.bounds
        if e.clickable:
            level = gray_level(e.resource_id or e.label or e.id)
        else:
            level = gray_level(e.label or e.resource_id or e.id, 150, 235)
        img[y0:y1, x0:x1] = level


def render(
    screens: Sequence[ScreenDef],
    width: int,
    height: int,
    banner: bool = False,
    banner_height: int = 12,
) -> np.ndarray:
    """Render a base screen followed by zero or more dialog overlays."""
    base, dialogs = screens[0], screens[1:]
    img = np.full((height, width), BACKGROUND, dtype=np.float64)
    img[:TITLE_HEIGHT, :] = gray_level("title:" + base.id, 60, 220)
    _paint_elements(img, base)
    for d in dialogs:
        img *= DIM_FACTOR
        if d.elements:
            x0 = min(e.bounds[0] for e in d.elements) - 8
            y0 = min(e.bounds[1] for e in d.elements) - 8
            x1 = max(e.bounds[2] for e in d.elements) + 8
            y1 = max(e.bounds[3] for e in d.elements) + 8
            img[max(0, y0):min(height, y1), max(0, x0):min(width, x1)] = BACKGROUND
        _paint_elements(img, d)
    if banner:
        img[:banner_height, :] = BANNER_LEVEL
    out = np.rint(img).astype(np.uint8)
    out.flags.writeable = False
    return out
