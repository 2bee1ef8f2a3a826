import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]  # repo root
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from gtseg.model.config import GTUNetConfig  # noqa: E402


@pytest.fixture
def tiny_config():
    """Two-level 32×32 network: small enough for exact checks on CPU."""
    return GTUNetConfig(
        input_size=(32, 32),
        levels=2,
        channels_per_level=[8, 16],
        group_h=4,
        group_w=4,
        phi=2,
        heads=2,
        seed=0,
    )


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv("GTSEG_SEED", raising=False)
