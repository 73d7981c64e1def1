"""Composition: strongest system-property, system-initial-condition and shift pruning."""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from models import SystemModel, system_order_bound
from utils import qe_real
from utils.errors import ContractViolation, ResourceLimitError, UnsupportedTheoryError
from utils.formula import (TRUE, And, Formula, Or, TimedVar, Value, all_vars, conj, conjuncts,
                           implies, instantiate, neg, normalize_window, offset_range, order, shift,
                           sorted_vars)
from utils.verdict import Invalid, Unknown, Valid, Verdict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompositionResult:
    ssp: Formula
    init: Formula = TRUE
    used_order_bound: int = 0
    pruned_order: int = 0
    raw_ssp: Formula = TRUE
    committed: bool = False


def _hidden(s: SystemModel, f: Formula) -> List[TimedVar]:
    return sorted_vars(v for v in all_vars(f) if s.is_hidden(v))


def strongest_property_static(s: SystemModel, cap: Optional[int] = None) -> Formula:
    """∃ internals (⋀ properties ∧ ⋀ connections), eliminated and simplified"""
    timed = [p.owner for p in s.properties if p.order > 0]
    if timed:
        raise ContractViolation(f"Static composition needs order-0 properties; {timed} are time-dependent")
    phi = conj(*[p.body for p in s.properties], *s.connection_formulas())
    hidden = _hidden(s, phi)
    logger.info(f"Composing {s.name} statically: eliminating {len(hidden)} internal variable(s)")
    return qe_real.simplify(qe_real.eliminate_block(hidden, phi, cap))


def replicas(s: SystemModel, bound: int) -> List[Formula]:
    """Every property and connection shifted into the past window [k-bound, k]"""
    out: List[Formula] = []
    for p in s.properties:
        out.extend(shift(p.body, -i) for i in range(bound - p.order + 1))
    for c in s.connection_formulas():
        out.extend(shift(c, -i) for i in range(bound + 1))
    return out


def strongest_property_timed(s: SystemModel, cap: Optional[int] = None, prune: bool = True) -> CompositionResult:
    bound = system_order_bound(s)
    phi = conj(*replicas(s, bound))
    hidden = _hidden(s, phi)
    logger.info(f"Composing {s.name} over window [k-{bound}, k]: {len(conjuncts(phi))} replica(s), "
                f"{len(hidden)} internal variable(s)")
    raw = qe_real.simplify(qe_real.eliminate_block(hidden, phi, cap))
    if prune:
        ssp, committed = prune_with_status(raw, cap)
    else:
        ssp, committed = normalize_window(raw), False
    pruned_order = order(ssp)
    logger.info(f"Strongest system-property of {s.name} has order {pruned_order} (bound {bound})")
    return CompositionResult(ssp=ssp, used_order_bound=bound, pruned_order=pruned_order,
                             raw_ssp=raw, committed=committed)


def initial_condition(s: SystemModel, window_order: int, cap: Optional[int] = None) -> Formula:
    """Eliminate internals from the initial conditions plus property and connection instances"""
    if not s.initials:
        return TRUE
    pinned = [v.step for ini in s.initials for v in all_vars(ini.body)]
    top = max(window_order, 1 + max(pinned, default=-1)) - 1
    parts: List[Formula] = [ini.body for ini in s.initials]
    for p in s.properties:
        parts.extend(instantiate(p.body, step) for step in range(p.order, top + 1))
    for c in s.connection_formulas():
        parts.extend(instantiate(c, step) for step in range(top + 1))
    phi = conj(*parts)
    hidden = _hidden(s, phi)
    logger.info(f"Deriving the initial condition of {s.name} over steps [0, {top}]")
    return qe_real.simplify(qe_real.eliminate_block(hidden, phi, cap))


# ---------------------------------------------------------------------------
# Pruning


def _shape(f: Formula) -> Tuple:
    """Order-insensitive key of a formula"""
    if isinstance(f, (And, Or)):
        return (type(f).__name__, tuple(sorted((_shape(a) for a in f.args), key=repr)))
    return ("lit", str(f))


def _closure(parts: List[Formula], lo: int) -> List[Formula]:
    """All shifts of relative formulas (newest offset 0) that stay inside [lo, 0]"""
    out: List[Formula] = []
    for p in parts:
        span = offset_range(p)
        depth = -span[0] if span else 0
        out.extend(shift(p, -i) for i in range(-lo - depth + 1))
    return out


def _implied(retained: List[Formula], candidate: Formula, cap: Optional[int]) -> bool:
    span = offset_range(candidate)
    lo = min([span[0] if span else 0] + [-order(r) for r in retained])
    return qe_real.is_valid(implies(conj(*_closure(retained, lo)), candidate), cap)


def prune_with_status(f: Formula, cap: Optional[int] = None) -> Tuple[Formula, bool]:
    """Pruned formula and whether pruning was committed"""
    f = normalize_window(f)
    parts = conjuncts(f)
    if len(parts) <= 1 or offset_range(f) is None:
        return f, False
    groups: Dict[Tuple, Formula] = {}
    for part in parts:
        if offset_range(part) is None:
            groups.setdefault(_shape(part), part)
            continue
        rep = normalize_window(part)
        groups.setdefault(_shape(rep), rep)
    candidates = sorted(groups.values(), key=lambda g: (order(g), str(g)))
    try:
        retained: List[Formula] = []
        for c in candidates:
            if retained and _implied(retained, c, cap):
                logger.debug(f"Dropping {c}: implied by the shifted closure")
                continue
            retained.append(c)
        lo = offset_range(f)[0]
        if not qe_real.equivalent(conj(*_closure(retained, lo)), f, cap):
            logger.warning("Pruned property is not equivalent on the composition window; keeping all conjuncts")
            return f, False
    except (ResourceLimitError, UnsupportedTheoryError) as e:
        logger.warning(f"Pruning check failed: {str(e)}; keeping all conjuncts")
        return f, False
    logger.debug(f"Pruned {len(parts)} conjunct(s) to {len(retained)}")
    return conj(*retained), True


def prune_redundant_shifts(f: Formula, cap: Optional[int] = None) -> Formula:
    return prune_with_status(f, cap)[0]


# ---------------------------------------------------------------------------
# One-shot verification


def _row(model: Dict[TimedVar, Value]) -> Dict[str, Value]:
    return {str(v): x for v, x in sorted(model.items(), key=lambda vx: vx[0].key())}


def verify_postulated_static(ssp: Formula, postl: Formula, cap: Optional[int] = None,
                             rounds: int = 64) -> Verdict:
    """Check ∀ (ssp ⇒ postl); on failure report a witness of ssp ∧ ¬postl"""
    try:
        if qe_real.is_valid(implies(ssp, postl), cap):
            return Valid(1)
        witness, model = qe_real.find_model(conj(ssp, neg(postl)), rounds=rounds)
    except ResourceLimitError as e:
        logger.warning(f"Static verification ran out of budget: {str(e)}")
        return Unknown("budget")
    except UnsupportedTheoryError as e:
        logger.warning(f"Static verification unsupported: {str(e)}")
        return Unknown("unsupported")
    if model is not None:
        return Invalid([_row(model)])
    if witness is not None:
        logger.warning("Counterexample stays nonstandard; reporting it symbolically")
        return Invalid([{str(v): str(x) for v, x in witness.values.items()}], symbolic=True)
    logger.warning("Postulate fails but no counterexample was extracted")
    return Unknown("budget")
