"""Image and text file I/O: 8-bit PNG and binary PPM (P6), atomic writes.

Float images convert to 8-bit as round(v * 255) clamped; 8-bit loads as
v / 255. All writes go through a temp file plus rename so an interrupted run
never leaves a partial file in place.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .image import as_image


def to_uint8(img: np.ndarray) -> np.ndarray:
    img = as_image(img)
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw)
    if raw.dtype != np.uint8:
        raise ValueError(f"expected uint8 data, got {raw.dtype}")
    return raw.astype(np.float64) / 255.0


def write_bytes_atomic(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path: str | Path, text: str) -> None:
    write_bytes_atomic(path, text.encode("utf-8"))


def _encode_ppm(raw: np.ndarray) -> bytes:
    height, width = raw.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + raw.tobytes()


def _decode_ppm(payload: bytes) -> np.ndarray:
    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed, a single whitespace byte before the raster.
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(payload):
            ch = payload[pos:pos + 1]
            if ch == b"#":
                while pos < len(payload) and payload[pos:pos + 1] != b"\n":
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(payload) and not payload[pos:pos + 1].isspace():
            pos += 1
        return payload[start:pos]

    magic = next_token()
    if magic != b"P6":
        raise ValueError(f"not a binary PPM (P6) file, magic {magic!r}")
    width = int(next_token())
    height = int(next_token())
    maxval = int(next_token())
    if maxval != 255:
        raise ValueError(f"only 8-bit PPM supported, maxval {maxval}")
    pos += 1  # single whitespace separating header from raster
    expected = width * height * 3
    raster = payload[pos:pos + expected]
    if len(raster) != expected:
        raise ValueError("PPM raster truncated")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def write_image(path: str | Path, img: np.ndarray) -> None:
    """Write a float image as PNG or PPM depending on the file extension."""
    path = Path(path)
    raw = to_uint8(img)
    suffix = path.suffix.lower()
    if suffix == ".png":
        import io as _io
        buf = _io.BytesIO()
        PILImage.fromarray(raw, mode="RGB").save(buf, format="PNG")
        write_bytes_atomic(path, buf.getvalue())
    elif suffix in (".ppm", ".pnm"):
        write_bytes_atomic(path, _encode_ppm(raw))
    else:
        raise ValueError(f"unsupported image extension {path.suffix!r} (use .png or .ppm)")


def read_image(path: str | Path) -> np.ndarray:
    """Read an 8-bit PNG or PPM file into a float image in [0, 1]."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        with PILImage.open(path) as handle:
            raw = np.asarray(handle.convert("RGB"), dtype=np.uint8)
    elif suffix in (".ppm", ".pnm"):
        raw = _decode_ppm(path.read_bytes())
    else:
        raise ValueError(f"unsupported image extension {path.suffix!r} (use .png or .ppm)")
    return from_uint8(raw)
