"""Result records shared by the two reduction pipelines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class ReductionAttempt:
    attempt: int
    solver_value: float  # objective recomputed by the reduction, never trusted
    kappa_target: float
    kappa_met: bool
    dist: Optional[float] = None
    bound: Optional[float] = None
    membership: Optional[bool] = None
    verified: bool = False
    e_prime_inf: Optional[float] = None
    e_prime_bound_ok: Optional[bool] = None
    guess_col: int = 0
    divisor: int = 1
    guess_ok: Optional[bool] = None
    wraparound: Optional[bool] = None
    within_wraparound_bound: Optional[bool] = None
    extraction_error: Optional[str] = None
    skipped_reason: Optional[str] = None

    def to_json_obj(self):
        return dict(self.__dict__)


@dataclass
class ReductionResult:
    verified: bool
    s: Optional[np.ndarray]
    attempts: int
    regime: str
    records: list[ReductionAttempt] = field(default_factory=list)

    @property
    def last(self) -> Optional[ReductionAttempt]:
        return self.records[-1] if self.records else None

    def to_json_obj(self):
        last = self.last
        return {
            "s": None if self.s is None else [float(v) for v in self.s],
            "attempts": self.attempts,
            "dist": None if last is None else last.dist,
            "bound": None if last is None else last.bound,
            "verified": self.verified,
            "regime": self.regime,
            "records": [r.to_json_obj() for r in self.records],
        }
