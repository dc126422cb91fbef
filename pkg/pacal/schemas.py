"""
Run configuration documents shared by the CLI and the HTTP service.

Every model forbids unknown keys so that a mistyped tolerance is an error instead
of a silently ignored setting.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .utils.errors import ConfigError
from .utils.limits import LimitConfig

GalleryKind = Literal["flat", "rotation2d", "scaling", "mixed_exp2d", "polynomial", "kink"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainSpec(StrictModel):
    min: List[float]
    max: List[float]


class GallerySpec(StrictModel):
    kind: GalleryKind
    dim: int = Field(2, ge=1)
    params: Dict[str, Any] = Field(default_factory=dict)
    domain: Optional[DomainSpec] = None
    seed: int = 0


class LimitSpec(StrictModel):
    h0: float = Field(1e-2, gt=0)
    levels: int = Field(8, ge=2, le=12)
    tol: float = Field(1e-9, gt=0)
    ratio: float = Field(2.0, gt=1)
    symmetric: bool = False

    def to_config(self) -> LimitConfig:
        return LimitConfig(h0=self.h0, levels=self.levels, tol=self.tol, ratio=self.ratio, symmetric=self.symmetric)


class FieldSpec(StrictModel):
    """A field given by one arithmetic expression per component, in x0..x{n-1}."""

    kind: Literal["scalar", "vector", "covector"]
    expr: Union[str, List[str]]

    @field_validator("expr")
    @classmethod
    def non_empty(cls, value):
        items = [value] if isinstance(value, str) else value
        if not items or any(not s.strip() for s in items):
            raise ValueError("field expressions must be non-empty")
        return value

    def components(self) -> List[str]:
        return [self.expr] if isinstance(self.expr, str) else list(self.expr)


class OutputSpec(StrictModel):
    format: Literal["csv", "json", "both"] = "csv"
    path: str = "out"


class VerifySpec(StrictModel):
    samples: int = Field(20, ge=1)
    fields: List[str] = Field(default_factory=list)


class RunConfig(StrictModel):
    space: GallerySpec
    grid: List[int] = Field(default_factory=list)
    limit: LimitSpec = Field(default_factory=LimitSpec)
    fields: Dict[str, FieldSpec] = Field(default_factory=dict)
    seed: int = 0
    output: OutputSpec = Field(default_factory=OutputSpec)
    verify: VerifySpec = Field(default_factory=VerifySpec)

    @model_validator(mode="after")
    def check_references(self) -> "RunConfig":
        if self.grid:
            if len(self.grid) != self.space.dim:
                raise ValueError(f"grid needs {self.space.dim} counts, got {len(self.grid)}")
            if any(c < 1 for c in self.grid):
                raise ValueError("grid counts must be at least 1")
        missing = [name for name in self.verify.fields if name not in self.fields]
        if missing:
            raise ValueError(f"verify.fields references undefined fields: {', '.join(missing)}")
        return self

    def grid_counts(self) -> List[int]:
        return list(self.grid) if self.grid else [3] * self.space.dim


def parse_run_config(data: Any) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return parse_run_config(data)
