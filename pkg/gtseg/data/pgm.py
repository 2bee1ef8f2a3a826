from __future__ import annotations

from pathlib import Path
from typing import List, Tuple

import numpy as np

MAGIC = b"P5"
MAXVAL = 255


class PGMFormatError(ValueError):
    """Raised for malformed, truncated or unsupported PGM files."""


# -------------------------------------------------------------------
# Internal helpers
# -------------------------------------------------------------------
def _read_header(raw: bytes, path: Path) -> Tuple[int, int, int, int]:
    """Returns (width, height, maxval, payload offset)."""
    fields: List[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(raw):
            raise PGMFormatError(f"{path}: header ends after {len(fields)} fields")
        if raw[pos:pos + 1] == b"#":
            end = raw.find(b"\n", pos)
            pos = len(raw) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        fields.append(raw[start:pos])
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise PGMFormatError(f"{path}: missing whitespace after maxval")
    if fields[0] != MAGIC:
        raise PGMFormatError(f"{path}: expected magic P5, got {fields[0]!r}")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise PGMFormatError(f"{path}: non-integer header field in {fields[1:]!r}") from exc
    if width < 1 or height < 1:
        raise PGMFormatError(f"{path}: invalid dimensions {width}×{height}")
    if maxval != MAXVAL:
        raise PGMFormatError(f"{path}: unsupported maxval {maxval} (only {MAXVAL} is supported)")
    return width, height, maxval, pos + 1


def _to_bytes(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array)
    if array.ndim != 2:
        raise ValueError(f"PGM data must be 2-D, got shape {array.shape}")
    if array.dtype == np.uint8:
        return array
    if np.issubdtype(array.dtype, np.floating):
        if array.size and (array.min() < 0.0 or array.max() > 1.0):
            raise ValueError("floating-point images must lie in [0, 1]")
        return np.rint(array * MAXVAL).astype(np.uint8)
    raise TypeError(f"unsupported PGM array dtype {array.dtype}")


# -------------------------------------------------------------------
# Public API
# -------------------------------------------------------------------
def load_pgm(path: Path) -> np.ndarray:
    """Binary (P5) 8-bit PGM → (H, W) uint8 array."""
    path = Path(path)
    raw = path.read_bytes()
    width, height, _, offset = _read_header(raw, path)
    payload = raw[offset:]
    expected = width * height
    if len(payload) < expected:
        raise PGMFormatError(f"{path}: truncated payload, {len(payload)} of {expected} bytes")
    return np.frombuffer(payload[:expected], dtype=np.uint8).reshape(height, width).copy()


def save_pgm(path: Path, array: np.ndarray) -> None:
    """uint8 arrays are written as-is; float arrays in [0, 1] are quantized to 0..255."""
    data = _to_bytes(array)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n{MAXVAL}\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(data).tobytes())


def load_image(path: Path) -> np.ndarray:
    return load_pgm(path).astype(np.float64) / MAXVAL


def load_mask(path: Path) -> np.ndarray:
    """Any value of at least 128 is foreground."""
    return (load_pgm(path) >= 128).astype(np.uint8)


def save_mask(path: Path, mask: np.ndarray) -> None:
    mask = np.asarray(mask)
    if not np.all((mask == 0) | (mask == 1)):
        raise ValueError("mask must be binary (0/1)")
    save_pgm(path, (mask * MAXVAL).astype(np.uint8))
