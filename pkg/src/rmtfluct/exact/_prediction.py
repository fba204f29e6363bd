from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

REGIMES = ("finite_N", "global_limit", "bulk_scaled", "asymptote")


@dataclass(frozen=True)
class Divergence:
    """Known growth of a divergent prediction: value ~ rate * log(scale)."""

    rate: float
    scale: str = "N"
    law: str = "log"
    formula: str = ""

    def to_json(self):
        return {"rate": self.rate, "scale": self.scale, "law": self.law, "formula": self.formula}


class DivergenceError(ArithmeticError):
    """Raised when a finite value is requested for a divergent quantity."""

    def __init__(self, divergence: Divergence, message: str = ""):
        super().__init__(message or f"divergent: {divergence.law} rate {divergence.rate:.6g}"
                         f" in {divergence.scale} ({divergence.formula})")
        self.divergence = divergence


@dataclass(frozen=True)
class Prediction:
    """An analytic value with its regime and the formula label it came from."""

    value: float
    regime: str
    formula: str
    params: dict = field(default_factory=dict)
    divergence: Divergence | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if not math.isfinite(self.value) and self.divergence is None:
            raise ValueError("non-finite prediction without declared divergence")

    def __float__(self):
        if self.divergence is not None:
            raise DivergenceError(self.divergence)
        return float(self.value)

    def to_json(self) -> dict[str, Any]:
        out = {"value": self.value if math.isfinite(self.value) else None,
               "regime": self.regime, "formula": self.formula, "params": _plain(self.params)}
        if self.divergence is not None:
            out["divergence"] = self.divergence.to_json()
        if self.extras:
            out["extras"] = _plain(self.extras)
        return out


def divergent(divergence: Divergence, formula: str, params: dict, allow: bool) -> Prediction:
    if not allow:
        raise DivergenceError(divergence)
    return Prediction(math.inf, "asymptote", formula, params, divergence)


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, complex):
            v = [v.real, v.imag]
        elif hasattr(v, "tolist"):
            v = v.tolist()
        elif isinstance(v, dict):
            v = _plain(v)
        out[k] = v
    return out
