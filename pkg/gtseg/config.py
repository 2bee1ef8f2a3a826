from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from gtseg.model.config import GTUNetConfig
from gtseg.utils.helpers import read_json


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=2e-4, gt=0)
    beta1: float = Field(default=0.5, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)


class TrainingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=200, ge=0)
    batch_size: int = Field(default=12, ge=1)
    loss: Literal["bce", "fd"] = "bce"
    beta: float = 10.0
    descriptor_k: int = Field(default=16, ge=1)
    descriptor_n: int = Field(default=128, ge=4)
    folds: int = Field(default=3, ge=2)
    seed: Optional[int] = None
    augment: bool = True

    @model_validator(mode="after")
    def _check_loss(self) -> "TrainingConfig":
        if self.loss == "fd" and self.beta <= 0:
            raise ValueError(f"loss=fd requires beta > 0, got {self.beta}")
        if self.descriptor_k > self.descriptor_n - 2:
            raise ValueError(
                f"descriptor_k={self.descriptor_k} must be <= descriptor_n - 2 = {self.descriptor_n - 2}"
            )
        return self


class PatchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    size: int = Field(default=64, ge=1)
    per_image: int = Field(default=8, ge=1)


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: Literal["synth", "directory"] = "synth"
    path: Optional[str] = None
    size: int = Field(default=256, ge=16)
    count: int = Field(default=248, ge=1)
    patch: Optional[PatchConfig] = None

    @model_validator(mode="after")
    def _check_source(self) -> "DataConfig":
        if self.source == "directory" and not self.path:
            raise ValueError("data.source=directory requires data.path")
        if self.patch is not None and self.patch.size > self.size:
            raise ValueError(f"data.patch.size={self.patch.size} exceeds data.size={self.size}")
        return self

    @property
    def effective_size(self) -> int:
        return self.patch.size if self.patch is not None else self.size


class RunConfig(BaseModel):
    """
    Full training/evaluation configuration. Defaults reproduce the reference
    protocol: Adam 2e-4 / 0.5 / 0.999, 200 epochs, batch 12, β=10, 3 folds,
    256×256 inputs. Desk-scale runs should shrink data.count and epochs.
    """

    model_config = ConfigDict(extra="forbid")

    model: GTUNetConfig = Field(default_factory=GTUNetConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    data: DataConfig = Field(default_factory=DataConfig)

    @model_validator(mode="before")
    @classmethod
    def _sync_input_size(cls, raw: Any) -> Any:
        """
        model.input_size follows the effective data size unless given
        explicitly. This runs before field validation because GTUNetConfig
        checks its divisibility rules against input_size as soon as it is
        built. Callers may pass already-built DataConfig or PatchConfig
        instances, so those are dumped back to dicts first.
        """
        if not isinstance(raw, dict):
            return raw
        model = raw.get("model")
        model = dict(model) if isinstance(model, dict) else ({} if model is None else model)
        if isinstance(model, dict) and "input_size" not in model:
            data = raw.get("data") or {}
            if isinstance(data, BaseModel):
                data = data.model_dump()
            patch = data.get("patch")
            if isinstance(patch, BaseModel):
                patch = patch.model_dump()
            size = patch.get("size", 64) if isinstance(patch, dict) else data.get("size", 256)
            model["input_size"] = (size, size)
            raw = {**raw, "model": model}
        return raw

    @model_validator(mode="after")
    def _check_sizes(self) -> "RunConfig":
        size = self.data.effective_size
        if tuple(self.model.input_size) != (size, size):
            raise ValueError(
                f"model.input_size={tuple(self.model.input_size)} does not match the "
                f"effective data size {size}×{size}"
            )
        return self


# -------------------------------------------------------------------
# Loading and overrides
# -------------------------------------------------------------------
def parse_override(item: str) -> tuple:
    """``dotted.key=value``; the value is parsed as JSON, else kept as a string."""
    if "=" not in item:
        raise ValueError(f"override must look like key=value, got {item!r}")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ValueError(f"override has an empty key: {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    result = json.loads(json.dumps(raw))
    for item in overrides:
        path, value = parse_override(item)
        node = result
        for part in path[:-1]:
            child = node.get(part)
            if child is None:
                child = {}
                node[part] = child
            if not isinstance(child, dict):
                raise ValueError(f"override {item!r}: {part!r} is not a section")
            node = child
        node[path[-1]] = value
    return result


def load_run_config(path: Optional[Path] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """JSON file (optional) plus ``--set`` overrides, validated as a RunConfig."""
    raw: Dict[str, Any] = read_json(Path(path)) if path is not None else {}
    return RunConfig.model_validate(apply_overrides(raw, overrides))
