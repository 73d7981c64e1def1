"""Verification outcomes."""
from dataclasses import dataclass, field
from typing import Dict, List, Union

from utils.formula import Value

# One dict per absolute step, signal name -> value (strings when symbolic)
Trace = List[Dict[str, Union[Value, str]]]


@dataclass(frozen=True)
class Valid:
    at_k: int = 1

    @property
    def label(self) -> str:
        return "valid"


@dataclass(frozen=True)
class Invalid:
    trace: Trace = field(default_factory=list)
    symbolic: bool = False

    def __post_init__(self):
        if not self.trace:
            raise ValueError("An Invalid verdict needs a trace of at least one step")

    @property
    def label(self) -> str:
        return "invalid"


@dataclass(frozen=True)
class Unknown:
    reason: str = "budget"

    def __post_init__(self):
        if self.reason not in ("budget", "unsupported"):
            raise ValueError(f"Unknown reason must be 'budget' or 'unsupported', got {self.reason}")

    @property
    def label(self) -> str:
        return "unknown"


Verdict = Union[Valid, Invalid, Unknown]


def exit_code(verdicts: List[Verdict]) -> int:
    """0 when all valid, 1 on any invalid, else 2"""
    if any(isinstance(v, Invalid) for v in verdicts):
        return 1
    if any(isinstance(v, Unknown) for v in verdicts):
        return 2
    return 0
