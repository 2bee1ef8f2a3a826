from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, Optional

import numpy as np
import pandas as pd

from gtseg.engine.instrument import count_macs
from gtseg.engine.tensor import Tensor, no_grad
from gtseg.model.attention import MHSAWeights, mhsa_forward


@dataclass(frozen=True)
class ComplexityReport:
    height: int
    width: int
    channels: int
    group_h: int
    group_w: int
    phi: int
    omega_mhsa: int
    omega_gt_per_group: int
    num_groups: int
    omega_gt_total: int
    ratio: float

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _validate(height: int, width: int, channels: int, group_h: int, group_w: int, phi: int) -> None:
    for name, value in (
        ("H", height), ("W", width), ("C", channels), ("h", group_h), ("w", group_w), ("phi", phi)
    ):
        if int(value) < 1:
            raise ValueError(f"{name} must be a positive integer, got {value}")
    if height % group_h or width % group_w:
        raise ValueError(f"{height}×{width} map is not divisible into {group_h}×{group_w} groups")
    if channels % phi:
        raise ValueError(f"C={channels} is not divisible by phi={phi}")


def complexity(height: int, width: int, channels: int, group_h: int, group_w: int, phi: int) -> ComplexityReport:
    """
    Attention cost of global MHSA versus the grouped bottleneck variant.

    omega_mhsa = 4·HW·C² + 2·(HW)²·C
    omega_gt_per_group = 4·hw·(C/φ)² + 2·(hw)²·(C/φ)
    omega_gt_total = (HW / hw) · omega_gt_per_group
    """
    _validate(height, width, channels, group_h, group_w, phi)
    hw_map = height * width
    hw_group = group_h * group_w
    inner = channels // phi
    omega_mhsa = 4 * hw_map * channels ** 2 + 2 * hw_map ** 2 * channels
    per_group = 4 * hw_group * inner ** 2 + 2 * hw_group ** 2 * inner
    num_groups = hw_map // hw_group
    total = num_groups * per_group
    return ComplexityReport(
        height=height,
        width=width,
        channels=channels,
        group_h=group_h,
        group_w=group_w,
        phi=phi,
        omega_mhsa=omega_mhsa,
        omega_gt_per_group=per_group,
        num_groups=num_groups,
        omega_gt_total=total,
        ratio=total / omega_mhsa,
    )


def count_mhsa_macs(
    height: int,
    width: int,
    channels: int,
    group_h: int,
    group_w: int,
    phi: int,
    heads: Optional[int] = None,
    seed: int = 0,
) -> Dict[str, int]:
    """
    Run one instrumented attention pass over every group of an H×W×(C/φ) map
    and return the counted multiply-accumulates per section.
    """
    _validate(height, width, channels, group_h, group_w, phi)
    inner = channels // phi
    if heads is None:
        heads = 4 if inner % 4 == 0 else 1
    rng = np.random.default_rng(seed)
    weights = MHSAWeights(inner, heads, group_h, group_w, rng)
    num_groups = (height // group_h) * (width // group_w)
    tokens = Tensor(rng.normal(size=(num_groups, group_h * group_w, inner)))
    with no_grad(), count_macs() as counter:
        mhsa_forward(tokens, weights)
    return {
        "projection": counter.get("projection"),
        "attention": counter.get("attention"),
        "position": counter.get("position"),
        "num_groups": num_groups,
    }


def verify_complexity(
    height: int, width: int, channels: int, group_h: int, group_w: int, phi: int
) -> Dict[str, Any]:
    """
    Compare the closed-form counts term by term with the instrumented pass.
    """
    report = complexity(height, width, channels, group_h, group_w, phi)
    measured = count_mhsa_macs(height, width, channels, group_h, group_w, phi)
    n = group_h * group_w
    inner = channels // phi
    expected_projection = report.num_groups * 4 * n * inner ** 2
    expected_attention = report.num_groups * 2 * n ** 2 * inner
    return {
        "report": report.as_dict(),
        "measured": measured,
        "expected": {"projection": expected_projection, "attention": expected_attention},
        "ok": (
            measured["projection"] == expected_projection
            and measured["attention"] == expected_attention
            and measured["projection"] + measured["attention"] == report.omega_gt_total
        ),
    }


def complexity_table(
    height: int,
    width: int,
    channels: int,
    group_h: int,
    group_w: int,
    phis: Iterable[int],
) -> pd.DataFrame:
    rows = [complexity(height, width, channels, group_h, group_w, phi).as_dict() for phi in phis]
    return pd.DataFrame(rows)
