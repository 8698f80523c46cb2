"""Encoding/decoding helpers for frame images (lossless PNG throughout)."""

from __future__ import annotations

import hashlib
import io

import numpy as np
from PIL import Image


def decode_rgb(image_bytes: bytes) -> np.ndarray:
    """Decode an encoded image to an (H, W, 3) float64 array in [0, 1]."""
    with Image.open(io.BytesIO(image_bytes)) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an (H, W, 3) array in [0, 1] to PNG bytes."""
    arr = np.clip(np.asarray(pixels), 0.0, 1.0)
    img = Image.fromarray((arr * 255.0 + 0.5).astype(np.uint8), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def content_ref(data: bytes) -> str:
    """Content address for a frame payload."""
    return "sha256:" + hashlib.sha256(data).hexdigest()


def resize_rgb(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize of an (H, W, 3) array in [0, 1]."""
    img = Image.fromarray((np.clip(pixels, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8), mode="RGB")
    out = img.resize((width, height), Image.BILINEAR)
    return np.asarray(out, dtype=np.float64) / 255.0
