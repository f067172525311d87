"""BoundReport: the outcome of one inequality check."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

SLACK = 1e-9


def digest(*parts) -> str:
    """Short sha256 digest of a canonical text rendering of ``parts``."""
    text = json.dumps(parts, sort_keys=True, default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class BoundReport:
    """lhs <= rhs checked with an absolute slack of 1e-9.

    ``anchor`` names the inequality; ``context`` is a digest of the inputs.
    ``extras`` carries diagnostics that are reported but never asserted.
    """

    anchor: str
    lhs: float
    rhs: float
    context: str = ""
    note: str = ""
    extras: dict = field(default_factory=dict, compare=False)
    satisfied: bool = field(init=False)
    margin: float = field(init=False)

    def __post_init__(self):
        lhs, rhs = float(self.lhs), float(self.rhs)
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)
        ok = lhs <= rhs + SLACK if not (math.isnan(lhs) or math.isnan(rhs)) else False
        object.__setattr__(self, "satisfied", bool(ok))
        object.__setattr__(self, "margin", rhs - lhs)

    def record(self) -> dict:
        rec = {
            "anchor": self.anchor,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "satisfied": self.satisfied,
            "context": self.context,
        }
        if self.note:
            rec["note"] = self.note
        if self.extras:
            rec["extras"] = self.extras
        return rec
