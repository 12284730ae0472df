# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Run configurations for the generate, train and bench commands."""

from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from opf import Method

SPLIT_SUM_TOL = 1e-9


def format_validation_errors(error: ValidationError) -> str:
    """Flatten pydantic errors into one comma-separated message."""
    messages = [err["msg"].removeprefix("Value error, ") for err in error.errors()]
    return ", ".join(messages)


def parse_methods(value) -> Tuple[Method, ...]:
    """Parse a comma list of methods into canonical order without duplicates."""
    items = value.split(",") if isinstance(value, str) else list(value)
    requested = set()
    for item in items:
        name = item.value if isinstance(item, Method) else str(item).strip().lower()
        if not name:
            continue
        try:
            requested.add(Method(name))
        except ValueError:
            known = ",".join(m.value for m in Method)
            raise ValueError(f"methods must be drawn from {known}; got '{name}'")
    if not requested:
        raise ValueError("methods must name at least one method")
    return tuple(m for m in Method if m in requested)


class GenerateConfig(BaseModel):
    """Parameters of a dataset generation run."""

    case: str
    samples: int
    perturb: float = 0.10
    tau: float = 0.7
    eps_gen: float = 1e-6
    seed: int = 0
    split: Tuple[float, float, float] = (0.9, 0.1, 0.0)
    workers: int = 1
    global_scale: bool = False
    record_timing: bool = True
    allow_negative_loads: bool = False

    @field_validator("samples", mode="before")
    @classmethod
    def validate_samples(cls, v):
        """Ensure at least one sample is requested."""
        if not isinstance(v, int) or v <= 0:
            raise ValueError("samples must be a positive integer")
        return v

    @field_validator("perturb", mode="before")
    @classmethod
    def validate_perturb(cls, v):
        """Ensure the perturbation fraction lies in [0, 1)."""
        if not isinstance(v, (int, float)) or not 0.0 <= v < 1.0:
            raise ValueError("perturb must be in [0, 1)")
        return float(v)

    @field_validator("tau", mode="before")
    @classmethod
    def validate_tau(cls, v):
        """Ensure the congestion threshold lies in (0, 1]."""
        if not isinstance(v, (int, float)) or not 0.0 < v <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        return float(v)

    @field_validator("eps_gen", mode="before")
    @classmethod
    def validate_eps_gen(cls, v):
        """Ensure the max-capacity tolerance is non-negative."""
        if not isinstance(v, (int, float)) or v < 0:
            raise ValueError("eps-gen must be non-negative")
        return float(v)

    @field_validator("seed", mode="before")
    @classmethod
    def validate_seed(cls, v):
        """Ensure the seed is a non-negative integer."""
        if not isinstance(v, int) or v < 0:
            raise ValueError("seed must be a non-negative integer")
        return v

    @field_validator("split", mode="before")
    @classmethod
    def validate_split(cls, v):
        """Parse "train,val[,test]" fractions that sum to one."""
        try:
            parts = [float(p) for p in (v.split(",") if isinstance(v, str) else v)]
        except (TypeError, ValueError):
            raise ValueError("split must be a comma list of fractions")
        if len(parts) not in (2, 3) or any(p < 0 for p in parts):
            raise ValueError("split must hold two or three non-negative fractions")
        if abs(sum(parts) - 1.0) > SPLIT_SUM_TOL:
            raise ValueError("split fractions must sum to 1")
        return tuple(parts + [0.0] * (3 - len(parts)))

    @field_validator("workers", mode="before")
    @classmethod
    def validate_workers(cls, v):
        """Ensure at least one worker."""
        if not isinstance(v, int) or v < 1:
            raise ValueError("workers must be at least 1")
        return v


class TrainConfig(BaseModel):
    """Hyperparameters of one training stage."""

    stage: Literal["line", "gen"]
    epochs: int = 100
    learning_rate: float = 1e-3
    hidden_dim: int = 64
    n_layers: int = 3
    pos_weight_cap: float = 50.0
    seed: int = 0
    loss: Literal["bce", "mse"] = "bce"
    teacher_forcing: bool = False
    decision_threshold: float = 0.5
    line_model: Optional[str] = None

    @field_validator("epochs", "hidden_dim", "n_layers", mode="before")
    @classmethod
    def validate_positive_int(cls, v, info):
        """Ensure sizes and epoch counts are positive integers."""
        if not isinstance(v, int) or v < 1:
            raise ValueError(f"{info.field_name.replace('_', '-')} must be a positive integer")
        return v

    @field_validator("learning_rate", mode="before")
    @classmethod
    def validate_learning_rate(cls, v):
        """Ensure the step size is positive."""
        if not isinstance(v, (int, float)) or v <= 0:
            raise ValueError("lr must be positive")
        return float(v)

    @field_validator("pos_weight_cap", mode="before")
    @classmethod
    def validate_pos_weight_cap(cls, v):
        """Ensure the positive-class weight cap is at least 1."""
        if not isinstance(v, (int, float)) or v < 1:
            raise ValueError("pos-weight-cap must be at least 1")
        return float(v)

    @field_validator("seed", mode="before")
    @classmethod
    def validate_seed(cls, v):
        """Ensure the seed is a non-negative integer."""
        if not isinstance(v, int) or v < 0:
            raise ValueError("seed must be a non-negative integer")
        return v

    @field_validator("decision_threshold", mode="before")
    @classmethod
    def validate_threshold(cls, v):
        """Ensure the decision threshold lies in (0, 1)."""
        if not isinstance(v, (int, float)) or not 0.0 < v < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        return float(v)

    @model_validator(mode="after")
    def check_stage_inputs(self):
        """Ensure the generator stage has its stage-one model."""
        if self.stage == "gen" and self.line_model is None and not self.teacher_forcing:
            raise ValueError("line-model is required for the gen stage")
        if self.stage == "line" and self.teacher_forcing:
            raise ValueError("teacher-forcing applies to the gen stage only")
        return self


class BenchConfig(BaseModel):
    """What a benchmark run evaluates and which models it needs."""

    methods: Tuple[Method, ...] = tuple(Method)
    oracle: bool = False
    record_timing: bool = True
    seed: int = 0
    threshold: Optional[float] = None
    line_model: Optional[str] = None
    gen_model: Optional[str] = None

    @field_validator("methods", mode="before")
    @classmethod
    def validate_methods(cls, v):
        """Parse and canonicalize the method list."""
        return parse_methods(v)

    @field_validator("threshold", mode="before")
    @classmethod
    def validate_threshold(cls, v):
        """Ensure an overriding threshold lies in (0, 1)."""
        if v is None:
            return v
        if not isinstance(v, (int, float)) or not 0.0 < v < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        return float(v)

    @model_validator(mode="after")
    def check_models(self):
        """Ensure each requested reduced method has the models it predicts with."""
        if self.oracle:
            return self
        reduced = [m for m in self.methods if m != Method.FOPF]
        if reduced and self.line_model is None:
            raise ValueError(f"line-model is required for {reduced[0].value}")
        fixing = [m for m in self.methods if m.fixes_generators]
        if fixing and self.gen_model is None:
            raise ValueError(f"gen-model is required for {fixing[0].value}")
        return self

    @property
    def needs_models(self) -> bool:
        """Whether any requested method predicts labels from models."""
        return not self.oracle and any(m != Method.FOPF for m in self.methods)
