"""Experiment configuration."""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..basis import CollocationScheme, Family
from ..integrator import Method
from ..model import CraneParams
from ..nlpsolve import SolveOptions

_CRANE_KEYS = ("r_min", "r_max", "T", "beta", "a", "N")


class Configuration(BaseModel):
    """One transcription to benchmark: method, point family and order.

    Example:
        >>> Configuration(method="pc", family="gauss", d=4).label
        'PC-GL-8'
    """

    model_config = ConfigDict(frozen=True)

    method: Method
    family: Family
    d: int = Field(ge=1, le=10)

    @field_validator("method", mode="before")
    @classmethod
    def _parse_method(cls, value: Any) -> Method:
        return Method.parse(value)

    @field_validator("family", mode="before")
    @classmethod
    def _parse_family(cls, value: Any) -> Family:
        return Family.parse(value)

    @property
    def scheme(self) -> CollocationScheme:
        return CollocationScheme.create(self.family, self.d)

    @property
    def order(self) -> int:
        return 2 * self.d if self.family is Family.GAUSS_LEGENDRE else 2 * self.d - 1

    @property
    def label(self) -> str:
        """Method, family and convergence order, e.g. "SC-R-3"."""
        return f"{self.method.label}-{self.family.label}-{self.order}"

    @property
    def key(self) -> Tuple[str, str, int]:
        return self.method.value, self.family.value, self.d


def default_configurations() -> List[Configuration]:
    return [
        Configuration(method=method, family=family, d=d)
        for d in (2, 3)
        for family in (Family.RADAU_IIA, Family.GAUSS_LEGENDRE)
        for method in (Method.SC, Method.PC)
    ]


class InstanceBox(BaseModel):
    """Sampling box for the crane initial state (r0, θ0)."""

    model_config = ConfigDict(frozen=True)

    r0: Tuple[float, float] = (-3.0, 3.0)
    theta0: Tuple[float, float] = (-math.pi / 3.0, math.pi / 3.0)

    @model_validator(mode="after")
    def _check_ordered(self) -> "InstanceBox":
        for name in ("r0", "theta0"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} bounds must be ordered, got ({lo}, {hi})")
        return self


class CraneInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    r0: float
    theta0: float


class ExperimentConfig(BaseModel):
    """Settings of the crane experiments.

    Accepts the crane JSON document ({"r_min", ..., "N", "instances": [...]})
    with crane keys at the top level, plus harness keys.

    Attributes:
        seed: 64-bit seed of the instance sampler
        n_instances: Instances to sample when no explicit list is given
        box: Sampling box for (r0, θ0)
        crane: Crane parameters
        instances: Explicit instances; overrides sampling
        configurations: Transcriptions to benchmark
        reference: Transcription whose objective is the reference value
        solver: Interior-point settings

    Example:
        >>> config = ExperimentConfig.from_document({"beta": 0.0, "N": 20})
        >>> config.crane.beta
        0.0
    """

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0, lt=2**64)
    n_instances: int = Field(default=200, ge=1)
    box: InstanceBox = Field(default_factory=InstanceBox)
    crane: CraneParams = Field(default_factory=CraneParams)
    instances: Optional[List[CraneInstance]] = None
    configurations: List[Configuration] = Field(default_factory=default_configurations)
    reference: Configuration = Configuration(method=Method.SC, family=Family.GAUSS_LEGENDRE, d=5)
    solver: SolveOptions = Field(default_factory=SolveOptions)

    @model_validator(mode="before")
    @classmethod
    def _lift_crane_keys(cls, data: Any) -> Any:
        if isinstance(data, dict) and any(key in data for key in _CRANE_KEYS):
            data = dict(data)
            crane = dict(data.get("crane") or {})
            for key in _CRANE_KEYS:
                if key in data:
                    crane[key] = data.pop(key)
            data["crane"] = crane
        return data

    @classmethod
    def from_document(cls, document: Dict[str, Any], **overrides: Any) -> "ExperimentConfig":
        data = dict(document)
        data.update({key: value for key, value in overrides.items() if value is not None})
        return cls.model_validate(data)

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides: Any) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_document(json.load(fh), **overrides)
