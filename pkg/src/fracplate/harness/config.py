"""Study configuration: a flat ``key = value`` text format validated by pydantic.

Example::

    study = static
    theory = mindlin
    bc = CCCC
    alpha = 1.0, 0.9, 0.8, 0.7
    lf = 0.2, 0.3, 0.4, 0.5

Lines starting with ``#`` are comments.  Lists are comma separated.
Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..mesh import Theory
from ..model import PlateModel, isotropic

__all__ = ["StudyConfig", "ConfigError", "parse_config_text", "load_config", "DEFAULT_RATES"]

# Converged dynamic rates per theory, and the convergence sweep.
DEFAULT_RATES = {"mindlin": 12, "kirchhoff": 10}
CONVERGENCE_RATES = {"mindlin": (4, 8, 10, 12, 16), "kirchhoff": (4, 8, 10, 12)}
_THEORY_DEFAULTS = {"mindlin": {"h": 0.1, "nu": 0.3}, "kirchhoff": {"h": 0.01, "nu": 0.25}}
_LIST_KEYS = {"alpha", "lf", "rate"}


class ConfigError(ValueError):
    """Malformed or invalid study configuration."""


class StudyConfig(BaseModel):
    """One study: a sweep over fractional orders and horizon fractions."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    study: Literal["validate", "converge", "static", "modal"] = "static"
    theory: Literal["mindlin", "kirchhoff"] = "mindlin"
    bc: Literal["CCCC", "SSSS"] = "CCCC"
    L: float = Field(1.0, gt=0)
    B: float = Field(1.0, gt=0)
    h: float | None = Field(None, gt=0)
    E: float = Field(30e9, gt=0)
    nu: float | None = Field(None, ge=0, lt=0.5)
    rho: float = Field(1.0, gt=0)
    Ks: float = Field(5.0 / 6.0, gt=0, le=1)
    alpha: tuple[float, ...] = (1.0, 0.9, 0.8, 0.7)
    lf: tuple[float, ...] = (0.2, 0.3, 0.4, 0.5)
    rate: tuple[int, ...] | None = None
    rate_y: int | None = Field(None, ge=4)
    load: float = 1.0
    n_modes: int = Field(1, ge=1, le=50)
    horizon: Literal["whole", "exact"] = "whole"
    far_gauss: int | None = Field(None, ge=1)
    out: str | None = None

    @field_validator("theory", mode="before")
    @classmethod
    def _theory(cls, v):
        return Theory.parse(v).value if isinstance(v, str) else v

    @field_validator("bc", mode="before")
    @classmethod
    def _bc(cls, v):
        return v.upper() if isinstance(v, str) else v

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, v):
        if not v or any(not (0.0 < a <= 1.0) for a in v):
            raise ValueError("alpha values must lie in (0, 1]")
        return v

    @field_validator("lf")
    @classmethod
    def _lf(cls, v):
        if not v or any(not (0.0 < f <= 0.5) for f in v):
            raise ValueError("lf fractions must lie in (0, 0.5]")
        return v

    @field_validator("rate")
    @classmethod
    def _rate(cls, v):
        if v is not None and (not v or any(r < 4 for r in v)):
            raise ValueError("dynamic rates must be >= 4")
        return v

    @model_validator(mode="after")
    def _defaults(self):
        fill = {k: v for k, v in _THEORY_DEFAULTS[self.theory].items() if getattr(self, k) is None}
        if self.study == "validate":
            # Manufactured-solution cases: classical plus two orders and two horizons.
            if "alpha" not in self.model_fields_set:
                fill["alpha"] = (1.0, 0.9, 0.8)
            if "lf" not in self.model_fields_set:
                fill["lf"] = (0.1, 0.2)
        if self.rate is None:
            fill["rate"] = CONVERGENCE_RATES[self.theory] if self.study == "converge" else (DEFAULT_RATES[self.theory],)
        for k, v in fill.items():
            object.__setattr__(self, k, v)
        if self.study == "validate" and self.theory != "mindlin":
            raise ValueError("the manufactured-solution study is defined for the Mindlin plate")
        if self.study in ("validate", "converge") and self.bc != "CCCC":
            raise ValueError(f"the {self.study} study uses the clamped plate")
        if self.study != "converge" and len(self.rate) != 1:
            raise ValueError("only the convergence study sweeps several rates")
        return self

    @property
    def plate(self) -> PlateModel:
        return PlateModel(self.L, self.B, self.h, isotropic(self.E, self.nu, self.rho, self.Ks))


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _LIST_KEYS:
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if raw.lower() in ("none", ""):
        return None
    return raw


def parse_config_text(text: str, **overrides) -> StudyConfig:
    """Parse flat ``key = value`` text; keyword overrides win over the file."""
    data: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in data:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        data[key] = _coerce(key, value)
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return StudyConfig(**data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, **overrides) -> StudyConfig:
    return parse_config_text(Path(path).read_text(), **overrides)
