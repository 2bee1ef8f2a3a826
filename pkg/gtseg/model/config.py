from __future__ import annotations

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class GTUNetConfig(BaseModel):
    """
    Architectural hyperparameters of the GT U-Net.

    Defaults: 256×256 inputs, 4 levels with channels (16, 32, 64, 128),
    8×8 attention groups, bottleneck factor 2 and 4 heads.
    """

    model_config = ConfigDict(extra="forbid")

    input_size: Tuple[int, int] = (256, 256)
    input_channels: int = Field(default=1, ge=1)
    levels: int = Field(default=4, ge=2)
    channels_per_level: List[int] = Field(default_factory=lambda: [16, 32, 64, 128])
    group_h: int = Field(default=8, ge=1)
    group_w: int = Field(default=8, ge=1)
    phi: int = Field(default=2, ge=1)
    heads: int = Field(default=4, ge=1)
    output_channels: int = Field(default=1, ge=1)
    seed: int = 0

    @field_validator("input_size")
    @classmethod
    def _positive_size(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] < 1 or value[1] < 1:
            raise ValueError(f"input_size must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def _check_divisibility(self) -> "GTUNetConfig":
        if len(self.channels_per_level) != self.levels:
            raise ValueError(
                f"channels_per_level has {len(self.channels_per_level)} entries but levels={self.levels}"
            )
        for i, c in enumerate(self.channels_per_level):
            if c % self.phi:
                raise ValueError(f"channels_per_level[{i}]={c} is not divisible by phi={self.phi}")
            if (c // self.phi) % self.heads:
                raise ValueError(
                    f"channels_per_level[{i}]/phi={c // self.phi} is not divisible by heads={self.heads}"
                )
        problems = size_problems(self, *self.input_size)
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def required_divisors(self) -> Tuple[int, int]:
        scale = 2 ** (self.levels - 1)
        return scale * self.group_h, scale * self.group_w


def size_problems(config: GTUNetConfig, height: int, width: int) -> List[str]:
    """
    Human-readable list of divisibility violations for an H×W input.
    """
    div_h, div_w = config.required_divisors
    problems = []
    if height % div_h:
        problems.append(
            f"height {height} must be divisible by {div_h} "
            f"(2^(levels-1)={2 ** (config.levels - 1)} × group_h={config.group_h})"
        )
    if width % div_w:
        problems.append(
            f"width {width} must be divisible by {div_w} "
            f"(2^(levels-1)={2 ** (config.levels - 1)} × group_w={config.group_w})"
        )
    return problems
