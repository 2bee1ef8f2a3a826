from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from gtseg.model.config import GTUNetConfig
from gtseg.model.gt_unet import GTUNet

MAGIC = b"GTU1"
VERSION = 1


class CheckpointError(ValueError):
    """Raised for unreadable checkpoints or ones that do not fit their model."""


# -------------------------------------------------------------------
# Encoding
# -------------------------------------------------------------------
def encode_state(state: Dict[str, np.ndarray], header: Dict[str, Any]) -> bytes:
    """
    Layout (little-endian):
      magic "GTU1" | u8 version | u32 entry count
      per entry, sorted by name: u16 name length | name (utf-8) | u8 ndim |
        u32 × ndim shape | float64 × size values
      u32 header length | header JSON (utf-8, sorted keys)
    """
    parts = [MAGIC, struct.pack("<BI", VERSION, len(state))]
    for name in sorted(state):
        value = np.ascontiguousarray(state[name], dtype="<f8")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack(f"<B{value.ndim}I", value.ndim, *value.shape))
        parts.append(value.tobytes())
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts.append(struct.pack("<I", len(blob)))
    parts.append(blob)
    return b"".join(parts)


class _Reader:
    def __init__(self, raw: bytes, source: str):
        self.raw = raw
        self.pos = 0
        self.source = source

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.raw):
            raise CheckpointError(f"{self.source}: truncated at byte {self.pos}")
        chunk = self.raw[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: str) -> Tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_state(raw: bytes, source: str = "<bytes>") -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    reader = _Reader(raw, source)
    if reader.take(4) != MAGIC:
        raise CheckpointError(f"{source}: not a GTU1 checkpoint")
    version, count = reader.unpack("<BI")
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint version {version}")
    state: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (length,) = reader.unpack("<H")
        name = reader.take(length).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I") if ndim else ()
        size = int(np.prod(shape, dtype=np.int64))
        state[name] = np.frombuffer(reader.take(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
    (length,) = reader.unpack("<I")
    try:
        header = json.loads(reader.take(length).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{source}: corrupt config block") from exc
    if reader.pos != len(raw):
        raise CheckpointError(f"{source}: {len(raw) - reader.pos} trailing bytes")
    return state, header


# -------------------------------------------------------------------
# Files
# -------------------------------------------------------------------
def save_checkpoint(path: Path, model: GTUNet, meta: Optional[Dict[str, Any]] = None) -> Path:
    """Atomic write of the model state, its config and optional metadata."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"config": model.config.model_dump(mode="json"), "meta": dict(meta or {})}
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    tmp_path.write_bytes(encode_state(model.state_dict(), header))
    os.replace(tmp_path, path)
    return path


def load_checkpoint(path: Path) -> Tuple[GTUNet, Dict[str, Any]]:
    """Rebuilds the model in eval mode; returns it with the stored metadata."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    state, header = decode_state(raw, source=str(path))
    try:
        config = GTUNetConfig.model_validate(header.get("config", {}))
    except ValidationError as exc:
        raise CheckpointError(f"{path}: stored config is invalid: {exc}") from exc
    model = GTUNet(config)
    try:
        model.load_state_dict(state)
    except ValueError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    model.eval()
    return model, dict(header.get("meta", {}))
