from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

SEED_ENV_VAR = "GTSEG_SEED"


# -------------------------------------------------------------------
# Status output (stderr, bracket markers)
# -------------------------------------------------------------------
def log_progress(message: str) -> None:
    print(f"[~] {message}", file=sys.stderr)


def log_success(message: str) -> None:
    print(f"[✓] {message}", file=sys.stderr)


def log_warning(message: str) -> None:
    print(f"[!] {message}", file=sys.stderr)


# -------------------------------------------------------------------
# Files
# -------------------------------------------------------------------
def write_json_atomic(path: Path, payload: Dict[str, Any]) -> None:
    """
    Atomic JSON write to avoid partial/corrupt files if interrupted.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    tmp_path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    os.replace(tmp_path, path)


def read_json(path: Path) -> Dict[str, Any]:
    """
    Reads a JSON object; raises ValueError when the file does not hold one.
    """
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise ValueError(f"{path} must contain a JSON object")
    return payload


# -------------------------------------------------------------------
# Seeds
# -------------------------------------------------------------------
def resolve_seed(explicit: Optional[int] = None, configured: Optional[int] = None) -> int:
    """
    Seed precedence: explicit flag, config value, GTSEG_SEED, then 0.
    """
    if explicit is not None:
        return int(explicit)
    if configured is not None:
        return int(configured)
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is not None and raw.strip():
        try:
            return int(raw.strip())
        except ValueError as exc:
            raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc
    return 0
