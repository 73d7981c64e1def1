"""Human and machine readable reports for every command."""
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

import pandas as pd
import psutil

from utils.compose import CompositionResult
from utils.formula import Formula, format_rational, render
from utils.rangeprop import Interval, Range
from utils.smt_bridge import SatResult, format_model
from utils.verdict import Invalid, Trace, Unknown, Valid, Verdict

logger = logging.getLogger(__name__)

SCHEMA = "relic.report/v1"


def _value(x: Any) -> Any:
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, (Fraction, int)):
        return format_rational(Fraction(x))
    return str(x)


def _bound(q: Optional[Fraction]) -> Optional[str]:
    return None if q is None else format_rational(q)


def trace_table(trace: Trace) -> pd.DataFrame:
    """One row per step, one column per signal"""
    frame = pd.DataFrame([{k: _value(v) for k, v in row.items()} for row in trace])
    frame.index.name = "step"
    return frame.fillna("-")


def memory_mb() -> float:
    return psutil.Process().memory_info().rss / 1024 / 1024


@dataclass
class Report:
    command: str
    subject: str = ""
    composition: Optional[CompositionResult] = None
    postulates: List[str] = field(default_factory=list)
    verdicts: List[Verdict] = field(default_factory=list)
    order: Optional[Dict[str, int]] = None
    sat: Optional[SatResult] = None
    range_formula: Optional[Formula] = None
    range_interval: Optional[Range] = None
    baseline: Optional[Interval] = None
    plot: Optional[str] = None
    errors: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    peak_memory_mb: float = 0.0
    exit_code: int = 0

    @contextmanager
    def phase(self, name: str):
        """Time a phase and record the process memory after it"""
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            self.peak_memory_mb = max(self.peak_memory_mb, memory_mb())
            logger.info(f"Phase {name} took {elapsed:.3f}s (memory {self.peak_memory_mb:.2f} MB)")

    def to_text(self) -> str:
        lines = [f"relic {self.command} {self.subject}".rstrip()]
        c = self.composition
        if c is not None:
            lines.append(f"strongest system-property: {render(c.ssp)}")
            if c.raw_ssp != c.ssp:
                lines.append(f"  before pruning: {render(c.raw_ssp)}")
            lines.append(f"system-initial-condition: {render(c.init)}")
        if self.order is not None:
            lines.extend(f"{k.replace('_', ' ')}: {v}" for k, v in self.order.items())
        for name, verdict in zip(self.postulates or [""] * len(self.verdicts), self.verdicts):
            lines.append(_verdict_line(name, verdict))
            if isinstance(verdict, Invalid):
                lines.append(trace_table(verdict.trace).to_string())
        if self.sat is not None:
            lines.append(self.sat.status)
            if self.sat.model:
                lines.append(format_model(self.sat.model))
            elif self.sat.reason:
                lines.append(f"reason: {self.sat.reason}")
        if self.range_formula is not None:
            lines.append(f"range: {render(self.range_formula)}")
            if self.range_interval is not None:
                lines.append(f"interval: {self.range_interval}")
        if self.baseline is not None:
            lines.append(f"interval baseline: {self.baseline}")
        if self.plot:
            lines.append(f"plot: {self.plot}")
        lines.extend(f"error: {e}" for e in self.errors)
        return "\n".join(lines)

    def to_structured(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"schema": SCHEMA, "command": self.command, "subject": self.subject,
                               "exit_code": self.exit_code}
        c = self.composition
        if c is not None:
            out["composition"] = {"ssp": render(c.ssp), "init": render(c.init), "raw_ssp": render(c.raw_ssp),
                                  "used_order_bound": c.used_order_bound, "pruned_order": c.pruned_order,
                                  "pruning_committed": c.committed}
        if self.order is not None:
            out["order"] = dict(self.order)
        if self.verdicts:
            names = self.postulates or [""] * len(self.verdicts)
            out["verdicts"] = [dict(_verdict_dict(v), postulate=n) for n, v in zip(names, self.verdicts)]
        if self.sat is not None:
            out["sat"] = {"status": self.sat.status, "reason": self.sat.reason,
                          "model": {k: _value(v) for k, v in (self.sat.model or {}).items()}}
        if self.range_formula is not None:
            out["range"] = {"formula": render(self.range_formula)}
            r = self.range_interval
            if r is not None:
                out["range"]["interval"] = {"low": _bound(r.low), "high": _bound(r.high),
                                            "low_strict": r.low_strict, "high_strict": r.high_strict}
        if self.baseline is not None:
            out["baseline"] = {"low": _bound(self.baseline.low), "high": _bound(self.baseline.high)}
        if self.plot:
            out["plot"] = self.plot
        if self.errors:
            out["errors"] = list(self.errors)
        out["timings"] = {k: round(v, 6) for k, v in self.timings.items()}
        out["peak_memory_mb"] = round(self.peak_memory_mb, 2)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_structured(), indent=2)


def _verdict_line(name: str, v: Verdict) -> str:
    prefix = f"{name}: " if name else ""
    if isinstance(v, Valid):
        return f"{prefix}valid (k={v.at_k})"
    if isinstance(v, Invalid):
        return f"{prefix}invalid{' (symbolic counterexample)' if v.symbolic else ''}"
    return f"{prefix}unknown ({v.reason})"


def _verdict_dict(v: Verdict) -> Dict[str, Any]:
    if isinstance(v, Valid):
        return {"status": "valid", "k": v.at_k}
    if isinstance(v, Invalid):
        return {"status": "invalid", "symbolic": v.symbolic,
                "trace": [{k: _value(x) for k, x in row.items()} for row in v.trace]}
    if isinstance(v, Unknown):
        return {"status": "unknown", "reason": v.reason}
    raise TypeError(f"Not a verdict: {v!r}")
