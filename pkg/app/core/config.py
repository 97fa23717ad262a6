from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Literal

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

load_dotenv()

BASE_DIR = Path(__file__).resolve().parents[2]
OUT_DIR = Path(os.getenv("SUQ2_OUT_DIR", BASE_DIR / "out"))

APP_NAME = os.getenv("APP_NAME", "suq2cs")
APP_TITLE = os.getenv("APP_TITLE", "SU_q(2) Chern-Simons")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

Q = float(os.getenv("SUQ2_Q", "0.5"))
M_MAX = int(os.getenv("SUQ2_M_MAX", "40"))
GUARD = int(os.getenv("SUQ2_GUARD", "8"))
K_CUTOFF = int(os.getenv("SUQ2_K", "1"))
LEVEL = int(os.getenv("SUQ2_LEVEL", "1"))
N_MATRIX = int(os.getenv("SUQ2_N", "1"))
SEED = int(os.getenv("SUQ2_SEED", "0"))
PHI1_ROUTE = os.getenv("SUQ2_PHI1_ROUTE", "symbolic").strip().lower()

FIT_TOL = float(os.getenv("SUQ2_FIT_TOL", "1e-3"))
INDEX_THRESHOLD = float(os.getenv("SUQ2_INDEX_THRESHOLD", "1e-8"))
# Fit design matrices above this condition number are rejected.
MAX_CONDITION = float(os.getenv("SUQ2_MAX_CONDITION", "1e12"))
TAU0_TOL = float(os.getenv("SUQ2_TAU0_TOL", "1e-10"))

# Thread pool size for multi-start searches and the selftest suite.
MAX_WORKERS = int(os.getenv("SUQ2_MAX_WORKERS", "4"))


class ConfigError(ValueError):
    pass


class Tolerances(BaseModel):
    relation: float = 1e-12
    residue: float = FIT_TOL
    trace_identity: float = 1e-6
    phi3_routes: float = 1e-2
    phi1_routes: float = 2e-2
    closed_form: float = 1e-10
    index: float = 0.05
    gauge_shift: float = 0.02
    gradient: float = 1e-6
    stationary: float = 1e-8
    index_threshold: float = INDEX_THRESHOLD

    @field_validator("*")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("tolerances must be positive")
        return v


class Config(BaseModel):
    q: float = Q
    m_max: int = M_MAX
    guard: int = GUARD
    K: int = K_CUTOFF
    k_level: int = LEVEL
    N: int = N_MATRIX
    seed: int = SEED
    phi1_route: Literal["symbolic", "cm", "cocycle"] = Field(PHI1_ROUTE, validate_default=True)  # type: ignore[assignment]
    phi0_route: Literal["auto", "explicit", "regularized"] = "auto"
    residue_convention: Literal["wres", "tau"] = "wres"
    tolerances: Tolerances = Field(default_factory=Tolerances)
    out_dir: Path = OUT_DIR

    @field_validator("q")
    @classmethod
    def _q_range(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"q must lie in [0, 1), got {v}")
        return v

    @field_validator("K")
    @classmethod
    def _cutoff(cls, v: int) -> int:
        if v < 0:
            raise ValueError("K must be nonnegative")
        return v

    @field_validator("N")
    @classmethod
    def _matrix_size(cls, v: int) -> int:
        if v < 1:
            raise ValueError("N must be at least 1")
        return v

    @model_validator(mode="after")
    def _truncation(self) -> "Config":
        if self.guard < 2:
            raise ValueError("guard must be at least 2")
        if self.guard > self.m_max:
            raise ValueError(f"guard {self.guard} exceeds m_max {self.m_max}")
        return self


def load_config(path: str | Path | None = None, **overrides: Any) -> Config:
    """Environment defaults, then the JSON file at `path`, then non-None overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            data.update(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Config(**data)
    except ValidationError as exc:
        msgs = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
        raise ConfigError(msgs) from exc
