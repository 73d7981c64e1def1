"""Conjunctive clauses of literals, the working form of both elimination engines."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from utils.formula import (FALSE, TRUE, BoolVar, Clause, Compare, Divides, Formula, LinearTerm,
                           Not, TimedVar, atom_vars, compare)

logger = logging.getLogger(__name__)

# Past this many clauses only exact duplicates are removed
ABSORB_LIMIT = 2000


def literal_atom(lit: Formula) -> Formula:
    return lit.arg if isinstance(lit, Not) else lit


def literal_vars(lit: Formula) -> Tuple[TimedVar, ...]:
    return atom_vars(literal_atom(lit))


def mentions(lit: Formula, v: TimedVar) -> bool:
    atom = literal_atom(lit)
    if isinstance(atom, (Compare, Divides)):
        return atom.term.mentions(v)
    if isinstance(atom, BoolVar):
        return atom.var == v
    return False


@dataclass
class _Bounds:
    lower: Optional[Tuple[Fraction, bool]] = None
    upper: Optional[Tuple[Fraction, bool]] = None
    equal: Optional[Fraction] = None
    excluded: Tuple[Fraction, ...] = ()
    conflict: bool = False

    def add(self, op: str, value: Fraction) -> None:
        if op == "=":
            if self.equal is not None and self.equal != value:
                self.conflict = True
            self.equal = value
        elif op == "!=":
            if value not in self.excluded:
                self.excluded += (value,)
        elif op in ("<", "<="):
            strict = op == "<"
            if self.upper is None or value < self.upper[0] or (value == self.upper[0] and strict):
                self.upper = (value, strict)
        else:
            strict = op == ">"
            if self.lower is None or value > self.lower[0] or (value == self.lower[0] and strict):
                self.lower = (value, strict)

    def admits(self, value: Fraction) -> bool:
        if self.lower is not None:
            lo, strict = self.lower
            if value < lo or (strict and value == lo):
                return False
        if self.upper is not None:
            hi, strict = self.upper
            if value > hi or (strict and value == hi):
                return False
        return value not in self.excluded

    def emit(self, form: LinearTerm) -> Optional[List[Formula]]:
        """Tightest literals for `form`, or None when they contradict"""
        def atom(op: str, value: Fraction) -> Formula:
            return compare(LinearTerm(form.coeffs, -value), op)

        if self.conflict:
            return None
        if self.equal is not None:
            return [atom("=", self.equal)] if self.admits(self.equal) else None
        if self.lower is not None and self.upper is not None:
            (lo, ls), (hi, hs) = self.lower, self.upper
            if lo > hi or (lo == hi and (ls or hs)):
                return None
            if lo == hi:
                return [atom("=", lo)] if lo not in self.excluded else None
        out: List[Formula] = []
        if self.lower is not None:
            out.append(atom(">" if self.lower[1] else ">=", self.lower[0]))
        if self.upper is not None:
            out.append(atom("<" if self.upper[1] else "<=", self.upper[0]))
        for value in self.excluded:
            # Only disequalities inside the feasible range carry information
            lo_ok = self.lower is None or value > self.lower[0]
            hi_ok = self.upper is None or value < self.upper[0]
            if lo_ok and hi_ok:
                out.append(atom("!=", value))
        return out


def tidy_clause(lits: Iterable[Formula]) -> Optional[Clause]:
    """Fold constants, merge bounds on the same linear form, detect contradictions"""
    forms: Dict[Tuple, _Bounds] = {}
    form_terms: Dict[Tuple, LinearTerm] = {}
    others: List[Formula] = []
    seen = set()
    for lit in lits:
        if lit == TRUE:
            continue
        if lit == FALSE:
            return None
        if isinstance(lit, Compare):
            key = lit.term.coeffs
            if key not in forms:
                forms[key] = _Bounds()
                form_terms[key] = LinearTerm(key, Fraction(0))
            forms[key].add(lit.op, -lit.term.const)
        elif lit not in seen:
            seen.add(lit)
            others.append(lit)
    for lit in others:
        if isinstance(lit, Not) and lit.arg in seen:
            return None
    out: List[Formula] = []
    for key, bounds in forms.items():
        emitted = bounds.emit(form_terms[key])
        if emitted is None:
            return None
        out.extend(e for e in emitted if e != TRUE)
        if any(e == FALSE for e in emitted):
            return None
    return tuple(out + others)


def absorb(clauses: Iterable[Optional[Clause]]) -> List[Clause]:
    """Drop unsatisfiable, duplicate and subsumed (superset) clauses"""
    unique: List[Clause] = []
    keys: List[FrozenSet[Formula]] = []
    index = set()
    for c in clauses:
        if c is None:
            continue
        key = frozenset(c)
        if key in index:
            continue
        index.add(key)
        unique.append(c)
        keys.append(key)
    if not unique:
        return []
    if any(not k for k in keys):
        return [()]
    if len(unique) > ABSORB_LIMIT:
        return unique
    order = sorted(range(len(unique)), key=lambda i: len(keys[i]))
    kept: List[int] = []
    for i in order:
        if not any(keys[j] <= keys[i] for j in kept):
            kept.append(i)
    kept.sort()
    return [unique[i] for i in kept]


def project_bool(clause: Clause, v: TimedVar) -> Optional[Clause]:
    """Existentially drop boolean v from a conjunction of literals"""
    pos = BoolVar(v) in clause
    negd = Not(BoolVar(v)) in clause
    if pos and negd:
        return None
    return tuple(lit for lit in clause if not mentions(lit, v))


def occurrences(clauses: Iterable[Clause], v: TimedVar) -> int:
    return sum(1 for c in clauses for lit in c if mentions(lit, v))
