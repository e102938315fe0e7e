"""
Parameter Validators
Pydantic models for channel parameters, sweep configuration and CSV rows.
"""
import itertools
import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.utils.error_handler import DegenerateParametersError, ValidationError

# CLI regularisation of the endpoints: p = 0 means "arbitrarily small",
# p = 1 means "arbitrarily close to 1".
P_FLOOR = 1e-15
P_CEILING = 1.0 - 1e-9

QUANTITIES = (
    "lower",
    "iud_lower",
    "upper_L",
    "genie",
    "expansion",
    "sim_rate",
    "sim_hy",
    "sim_hyx",
    "trivial",
)
Quantity = Literal[
    "lower", "iud_lower", "upper_L", "genie", "expansion", "sim_rate", "sim_hy", "sim_hyx", "trivial"
]


class ChannelParams(BaseModel):
    """Insertion probability p_i and deletion probability p_d of the DID channel."""
    model_config = ConfigDict(frozen=True)

    p_i: float = Field(..., ge=0.0, le=1.0)
    p_d: float = Field(..., ge=0.0, le=1.0)

    @classmethod
    def symmetric(cls, p: float) -> "ChannelParams":
        return cls(p_i=p, p_d=p)

    @property
    def total(self) -> float:
        return self.p_i + self.p_d

    @property
    def is_symmetric(self) -> bool:
        return self.p_i == self.p_d

    def require_nondegenerate(self) -> None:
        if self.p_i + self.p_d <= 0.0:
            raise DegenerateParametersError(self.p_i, self.p_d)

    def interior(self, floor: float = P_FLOOR, ceiling: float = P_CEILING) -> "ChannelParams":
        """Clamp both probabilities into [floor, ceiling]."""
        return ChannelParams(
            p_i=min(max(self.p_i, floor), ceiling),
            p_d=min(max(self.p_d, floor), ceiling),
        )


def _split_list(v, cast):
    if v is None:
        return None
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return [cast(v)]
    if isinstance(v, str):
        parts = [s.strip() for s in v.split(",") if s.strip()]
        if not parts:
            raise ValueError("empty list")
        return [cast(s) for s in parts]
    return [cast(s) for s in v]


def _parse_int_range(s) -> List[int]:
    """'2..6' → [2, 3, 4, 5, 6]; plain integers pass through."""
    if isinstance(s, str) and ".." in s:
        lo, hi = s.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s)]


class SweepConfig(BaseModel):
    """Merged flag / config-file values for one CLI invocation."""
    p: Optional[List[float]] = None
    pi: Optional[List[float]] = None
    pd: Optional[List[float]] = None
    L: List[int] = Field(default_factory=lambda: [2])
    tol: float = Field(1e-9, gt=0.0)
    bitsym: bool = True
    n: Optional[int] = Field(None, ge=1)
    samples: Optional[int] = Field(None, ge=2)
    seed: Optional[int] = Field(None, ge=0)
    alpha: str = "0.5"
    out: Optional[str] = None
    pivot: bool = False
    quantities: List[str] = Field(default_factory=lambda: ["lower", "iud_lower", "genie"])
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("p", "pi", "pd", mode="before")
    @classmethod
    def parse_float_list(cls, v):
        return _split_list(v, float)

    @field_validator("p", "pi", "pd")
    @classmethod
    def check_probabilities(cls, v):
        if v is None:
            return v
        for x in v:
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"probability {x} outside [0, 1]")
        return v

    @field_validator("L", mode="before")
    @classmethod
    def parse_window_list(cls, v):
        if isinstance(v, str):
            out: List[int] = []
            for part in v.split(","):
                if part.strip():
                    out.extend(_parse_int_range(part.strip()))
            return out
        return _split_list(v, int)

    @field_validator("L")
    @classmethod
    def check_windows(cls, v):
        if not v:
            raise ValueError("L list must not be empty")
        if any(L < 1 for L in v):
            raise ValueError("L values must be >= 1")
        return v

    @field_validator("quantities", mode="before")
    @classmethod
    def parse_quantities(cls, v):
        return _split_list(v, str)

    @field_validator("quantities")
    @classmethod
    def check_quantities(cls, v):
        for q in v:
            if q not in QUANTITIES:
                raise ValueError(f"unknown quantity {q!r}; choose from {', '.join(QUANTITIES)}")
        return v

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, v):
        if v == "opt":
            return v
        a = float(v)
        if not 0.0 <= a <= 1.0:
            raise ValueError("alpha must be in [0, 1] or 'opt'")
        return v

    @model_validator(mode="after")
    def check_grid_source(self):
        if self.p is not None and (self.pi is not None or self.pd is not None):
            raise ValueError("use either --p or --pi/--pd, not both")
        if (self.pi is None) != (self.pd is None):
            raise ValueError("--pi and --pd must be given together")
        return self

    def grid(self) -> List[ChannelParams]:
        """Requested grid points; --p sets p_i = p_d, --pi/--pd form a product."""
        if self.p is not None:
            points = [ChannelParams.symmetric(p) for p in self.p]
        elif self.pi is not None and self.pd is not None:
            points = [ChannelParams(p_i=a, p_d=b) for a, b in itertools.product(self.pi, self.pd)]
        else:
            raise ValidationError("no channel parameters given (use --p or --pi/--pd)")
        if not points:
            raise ValidationError("parameter grid is empty")
        return points


class CsvRow(BaseModel):
    """One emitted value with its provenance."""
    p_i: float
    p_d: float
    quantity: Quantity
    L: Optional[int] = None
    value: float
    aux: str = ""
    converged: bool = True
    tol: float

    @field_validator("value")
    @classmethod
    def check_finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("value must be finite")
        return v

    def sort_key(self) -> Tuple[float, float, int, int]:
        return (self.p_i, self.p_d, QUANTITIES.index(self.quantity), -1 if self.L is None else self.L)


def split_floats(v) -> Optional[List[float]]:
    """Comma list (or scalar / sequence) → list of floats."""
    return _split_list(v, float)
