"""Application configuration."""

import os
from contextlib import contextmanager
from contextvars import ContextVar
from pathlib import Path
from typing import Iterator

from pydantic import BaseModel, Field

# Base directory
BASE_DIR = Path(__file__).resolve().parent.parent

# Data storage
DATA_DIR = Path(os.getenv("HELICAL_DATA_DIR", BASE_DIR / "data"))
REPORTS_FILE = DATA_DIR / "reports.json"

# Logging
LOG_LEVEL = os.getenv("HELICAL_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Verification
DEFAULT_SEED = int(os.getenv("HELICAL_SEED", "20240501"))

ENV_PREFIX = "HELICAL_TOL_"


class Tolerances(BaseModel):
    """Numerical tolerances shared by every operation."""

    skew_tol: float = Field(1e-12, ge=0)
    ortho_tol: float = Field(1e-9, ge=0)
    block_tol: float = Field(1e-9, ge=0)
    poly_tol: float = Field(1e-9, ge=0)
    freq_floor: float = Field(1e-10, ge=0)
    freq_sep: float = Field(1e-8, ge=0)
    amp_tol: float = Field(1e-10, ge=0)  # relative to |u0|
    fit_tol: float = Field(1e-6, ge=0)
    rat_denom_bound: int = Field(10**6, ge=1)
    rat_tol: float = Field(1e-14, ge=0)  # relative to max(1, ratio)
    dep_tol: float = Field(1e-10, ge=0)

    @classmethod
    def from_env(cls) -> "Tolerances":
        """Build tolerances from HELICAL_TOL_* environment variables."""
        overrides = {}
        for name in cls.model_fields:
            raw = os.getenv(ENV_PREFIX + name.upper())
            if raw is not None:
                overrides[name] = raw
        return cls(**overrides)


DEFAULT_TOLERANCES = Tolerances.from_env()

_active: ContextVar[Tolerances] = ContextVar("tolerances", default=DEFAULT_TOLERANCES)


def get_tolerances() -> Tolerances:
    """Return the tolerances in effect for the current context."""
    return _active.get()


@contextmanager
def use_tolerances(tol: Tolerances) -> Iterator[Tolerances]:
    """Temporarily replace the active tolerances."""
    token = _active.set(tol)
    try:
        yield tol
    finally:
        _active.reset(token)
