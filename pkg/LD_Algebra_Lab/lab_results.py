"""
Non-exception outcomes shared by the decision procedures.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict


class Verdict(Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"

    def flipped(self) -> "Verdict":
        if self is Verdict.LESS:
            return Verdict.GREATER
        if self is Verdict.GREATER:
            return Verdict.LESS
        return self

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Exhausted:
    """A semi-decision procedure ran out of fuel or table levels."""
    operation: str
    spent: Dict[str, int] = field(default_factory=dict)
    reason: str = ""

    def __str__(self) -> str:
        return "exhausted"


@dataclass(frozen=True)
class Undefined:
    """A partial operation (the inverse braid action) has no value."""
    reason: str = ""

    def __str__(self) -> str:
        return "undefined"
