"""PNG/JPEG reading and writing helpers shared by the CLI and service."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError


def load_image(path_or_bytes):
    """Read a PNG/JPEG into a uint8 array: (H, W, 3) for color, (H, W) for
    grayscale sources."""
    if isinstance(path_or_bytes, (bytes, bytearray)):
        src = io.BytesIO(path_or_bytes)
    else:
        src = path_or_bytes
    img = Image.open(src)
    if img.mode in ("L", "I;16"):
        return np.asarray(img.convert("L"))
    return np.asarray(img.convert("RGB"))


def save_png(array, path_or_buf):
    """Write uint8 (or [0,1] float, quantized) image data as PNG."""
    a = np.asarray(array)
    if a.dtype != np.uint8:
        a = np.clip(np.floor(a * 255.0 + 0.5), 0, 255).astype(np.uint8)
    mode = "L" if a.ndim == 2 else "RGB"
    Image.fromarray(a, mode=mode).save(path_or_buf, format="PNG")


def png_bytes(array):
    buf = io.BytesIO()
    save_png(array, buf)
    return buf.getvalue()


def sniff_format(data: bytes):
    """'png' | 'jpeg' | None from magic bytes."""
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return "png"
    if data[:3] == b"\xff\xd8\xff":
        return "jpeg"
    return None
