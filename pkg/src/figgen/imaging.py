"""Small raster helpers. Images travel through the system as PNG bytes."""

from __future__ import annotations

import hashlib
import io

from PIL import Image


def png_dimensions(data: bytes) -> tuple[int, int]:
    """Return (width, height) of a PNG byte string."""
    with Image.open(io.BytesIO(data)) as im:
        return im.size


def make_placeholder_png(width: int, height: int, key: str = "") -> bytes:
    """Deterministic solid-color placeholder; color derived from ``key``."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    color = (digest[0], digest[1], digest[2])
    im = Image.new("RGB", (width, height), color)
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def downscale_png(data: bytes, max_side: int) -> bytes:
    """Downscale so the longest side is at most ``max_side``; no-op otherwise."""
    with Image.open(io.BytesIO(data)) as im:
        w, h = im.size
        if max(w, h) <= max_side:
            return data
        scale = max_side / max(w, h)
        resized = im.resize((max(1, round(w * scale)), max(1, round(h * scale))))
        buf = io.BytesIO()
        resized.save(buf, format="PNG")
        return buf.getvalue()
