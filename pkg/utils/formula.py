"""Linear first-order formulas over time-indexed variables.

Terms are linear combinations with exact rational coefficients; atoms compare
a term against zero or state a divisibility. Every value here is immutable,
so formulas can be shared freely between threads.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import reduce
from math import ceil, floor, gcd, lcm
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

from utils.errors import (CaptureError, ContractViolation, ShiftDomainError, SortError,
                          UnboundVariableError)

logger = logging.getLogger(__name__)

Rational = Fraction


class Sort(str, Enum):
    REAL = "real"
    INT = "int"
    BOOL = "bool"


@dataclass(frozen=True)
class Relative:
    offset: int = 0


@dataclass(frozen=True)
class Absolute:
    step: int

    def __post_init__(self):
        if self.step < 0:
            raise ShiftDomainError(f"Absolute step must be non-negative, got {self.step}")


Index = Union[Relative, Absolute]


@dataclass(frozen=True)
class TimedVar:
    name: str
    index: Index = Relative(0)
    sort: Sort = Sort.REAL

    def __post_init__(self):
        if not self.name:
            raise ValueError("TimedVar name must be nonempty")

    @property
    def is_relative(self) -> bool:
        return isinstance(self.index, Relative)

    @property
    def offset(self) -> int:
        if not self.is_relative:
            raise ShiftDomainError(f"{self} has an absolute index")
        return self.index.offset

    @property
    def step(self) -> int:
        if self.is_relative:
            raise ShiftDomainError(f"{self} has a relative index")
        return self.index.step

    def key(self) -> tuple:
        # Newest offset first within a name, so rendering reads x, x[k-1], x[k-2]
        if self.is_relative:
            return (self.name, 0, -self.index.offset, self.sort.value)
        return (self.name, 1, self.index.step, self.sort.value)

    def at(self, index: Index) -> "TimedVar":
        return TimedVar(self.name, index, self.sort)

    def __str__(self) -> str:
        if self.is_relative:
            off = self.index.offset
            return self.name if off == 0 else f"{self.name}[k{off:+d}]"
        return f"{self.name}[{self.index.step}]"


def _q(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def format_rational(q: Fraction) -> str:
    q = _q(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class LinearTerm:
    """sum(coef * var) + const, with no zero coefficients stored."""
    coeffs: Tuple[Tuple[TimedVar, Fraction], ...] = ()
    const: Fraction = Fraction(0)
    _map: Dict[TimedVar, Fraction] = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        for v, c in self.coeffs:
            if v.sort is Sort.BOOL:
                raise SortError(f"Boolean variable {v} used in arithmetic", str(v))
            if c == 0:
                raise ValueError("LinearTerm stores no zero coefficients")
        object.__setattr__(self, "_map", dict(self.coeffs))

    @staticmethod
    def of(mapping: Optional[Mapping[TimedVar, object]] = None, const=0) -> "LinearTerm":
        items = [(v, _q(c)) for v, c in (mapping or {}).items() if c != 0]
        items.sort(key=lambda vc: vc[0].key())
        return LinearTerm(tuple(items), _q(const))

    @staticmethod
    def var(v: TimedVar, coef=1) -> "LinearTerm":
        return LinearTerm.of({v: coef})

    @staticmethod
    def constant(c) -> "LinearTerm":
        return LinearTerm((), _q(c))

    def coeff(self, v: TimedVar) -> Fraction:
        return self._map.get(v, Fraction(0))

    def variables(self) -> Tuple[TimedVar, ...]:
        return tuple(v for v, _ in self.coeffs)

    def mentions(self, v: TimedVar) -> bool:
        return v in self._map

    def is_constant(self) -> bool:
        return not self.coeffs

    def is_integer_sorted(self) -> bool:
        return all(v.sort is Sort.INT for v, _ in self.coeffs)

    def __add__(self, other) -> "LinearTerm":
        if not isinstance(other, LinearTerm):
            return LinearTerm(self.coeffs, self.const + _q(other))
        merged = dict(self._map)
        for v, c in other.coeffs:
            merged[v] = merged.get(v, 0) + c
        return LinearTerm.of(merged, self.const + other.const)

    def __radd__(self, other) -> "LinearTerm":
        return self + other

    def __neg__(self) -> "LinearTerm":
        return self.scale(-1)

    def __sub__(self, other) -> "LinearTerm":
        if not isinstance(other, LinearTerm):
            return self + (-_q(other))
        return self + (-other)

    def __rsub__(self, other) -> "LinearTerm":
        return (-self) + other

    def scale(self, factor) -> "LinearTerm":
        factor = _q(factor)
        if factor == 0:
            return LinearTerm.constant(0)
        return LinearTerm(tuple((v, c * factor) for v, c in self.coeffs), self.const * factor)

    def __mul__(self, factor) -> "LinearTerm":
        return self.scale(factor)

    __rmul__ = __mul__

    def drop(self, v: TimedVar) -> "LinearTerm":
        """The term without its v summand"""
        return LinearTerm(tuple((w, c) for w, c in self.coeffs if w != v), self.const)

    def substitute(self, v: TimedVar, t: "LinearTerm") -> "LinearTerm":
        c = self.coeff(v)
        if c == 0:
            return self
        return self.drop(v) + t.scale(c)

    def rename(self, fn: Callable[[TimedVar], TimedVar]) -> "LinearTerm":
        merged: Dict[TimedVar, Fraction] = {}
        for v, c in self.coeffs:
            w = fn(v)
            merged[w] = merged.get(w, 0) + c
        return LinearTerm.of(merged, self.const)

    def evaluate(self, values: Mapping[TimedVar, object]) -> Fraction:
        total = self.const
        for v, c in self.coeffs:
            if v not in values:
                raise UnboundVariableError(f"No value for {v}")
            total += c * _q(values[v])
        return total

    def integral(self) -> "LinearTerm":
        """Positive multiple with coprime integer coefficients and constant"""
        nums = [c for _, c in self.coeffs] + [self.const]
        den = reduce(lcm, (q.denominator for q in nums), 1)
        g = reduce(gcd, (int(q * den) for q in nums), 0)
        if g == 0:
            return self
        return self.scale(Fraction(den, g))

    def render_lhs(self) -> str:
        parts: List[str] = []
        for v, c in self.coeffs:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            text = str(v) if mag == 1 else f"{format_rational(mag)}*{v}"
            parts.append(f"{sign} {text}")
        if not parts:
            return "0"
        head = parts[0]
        out = head[2:] if head.startswith("+") else "-" + head[2:]
        return " ".join([out] + parts[1:])

    def __str__(self) -> str:
        if self.is_constant():
            return format_rational(self.const)
        text = self.render_lhs()
        if self.const > 0:
            return f"{text} + {format_rational(self.const)}"
        if self.const < 0:
            return f"{text} - {format_rational(-self.const)}"
        return text


TermLike = Union[LinearTerm, int, Fraction]


def as_term(t: TermLike) -> LinearTerm:
    return t if isinstance(t, LinearTerm) else LinearTerm.constant(t)


# ---------------------------------------------------------------------------
# Formula tree


class Formula:
    """Base of every formula node."""

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Compare(Formula):
    term: LinearTerm
    op: str

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"Unknown comparison {self.op}")



@dataclass(frozen=True)
class Divides(Formula):
    modulus: int
    term: LinearTerm

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError("Divides modulus must be at least 2")
        for v in self.term.variables():
            if v.sort is not Sort.INT:
                raise SortError(f"Divisibility over non-integer variable {v}", str(v))



@dataclass(frozen=True)
class BoolVar(Formula):
    var: TimedVar

    def __post_init__(self):
        if self.var.sort is not Sort.BOOL:
            raise SortError(f"{self.var} is not boolean", str(self.var))



@dataclass(frozen=True)
class TrueAtom(Formula):
    pass


@dataclass(frozen=True)
class FalseAtom(Formula):
    pass


TRUE = TrueAtom()
FALSE = FalseAtom()


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: Tuple[Formula, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("And needs at least one argument")



@dataclass(frozen=True)
class Or(Formula):
    args: Tuple[Formula, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("Or needs at least one argument")



@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: TimedVar
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: TimedVar
    body: Formula


Atom = (Compare, Divides, BoolVar, TrueAtom, FalseAtom)
Value = Union[Fraction, bool]
Assignment = Mapping[TimedVar, Value]

OPS = ("=", "!=", "<", "<=", ">", ">=")
FLIP = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}
NEGATE = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def holds(value: Fraction, op: str) -> bool:
    """Truth of `value op 0`"""
    if op == "=":
        return value == 0
    if op == "!=":
        return value != 0
    if op == "<":
        return value < 0
    if op == "<=":
        return value <= 0
    if op == ">":
        return value > 0
    return value >= 0


# ---------------------------------------------------------------------------
# Smart constructors


def compare(term: TermLike, op: str) -> Formula:
    """Canonical `term op 0`: integral coprime coefficients, positive leading coefficient.

    Over integer-sorted terms strict bounds become non-strict and coefficients are
    divided by their gcd with the constant rounded inward.
    """
    if op not in OPS:
        raise ValueError(f"Unknown comparison {op}")
    term = as_term(term)
    if term.is_constant():
        return TRUE if holds(term.const, op) else FALSE
    term = term.integral()
    if term.is_integer_sorted():
        if op == "<":
            term, op = term + 1, "<="
        elif op == ">":
            term, op = term - 1, ">="
        g = reduce(gcd, (int(c) for _, c in term.coeffs), 0)
        if g > 1:
            c = term.const
            if op == "<=":
                const = ceil(c / g)
            elif op == ">=":
                const = floor(c / g)
            elif c % g:
                return FALSE if op == "=" else TRUE
            else:
                const = c / g
            term = LinearTerm(tuple((v, k / g) for v, k in term.coeffs), Fraction(const))
    if term.coeffs[0][1] < 0:
        term, op = -term, FLIP[op]
    return Compare(term, op)


def compare2(lhs: TermLike, op: str, rhs: TermLike) -> Formula:
    """`lhs op rhs` as a canonical atom"""
    return compare(as_term(lhs) - as_term(rhs), op)


def divides(modulus: int, term: TermLike) -> Formula:
    """Canonical `modulus | term` over integer-sorted variables"""
    m = int(modulus)
    if m < 1:
        raise ValueError("Divisibility modulus must be positive")
    term = as_term(term)
    if not term.is_integer_sorted():
        bad = next(v for v in term.variables() if v.sort is not Sort.INT)
        raise SortError(f"Divisibility over non-integer variable {bad}", str(bad))
    den = reduce(lcm, [c.denominator for _, c in term.coeffs] + [term.const.denominator], 1)
    if den > 1:
        m *= den
        term = term.scale(den)
    term = LinearTerm.of({v: int(c) % m for v, c in term.coeffs}, int(term.const) % m)
    g = reduce(gcd, [int(c) for _, c in term.coeffs] + [int(term.const)], m)
    if g > 1:
        m //= g
        term = term.scale(Fraction(1, g))
    if m == 1:
        return TRUE
    if term.is_constant():
        return TRUE if term.const == 0 else FALSE
    return Divides(m, term)


def bool_var(name: str, index: Index = Relative(0)) -> BoolVar:
    return BoolVar(TimedVar(name, index, Sort.BOOL))


def _flatten(kind, items: Iterable[Formula]) -> List[Formula]:
    out: List[Formula] = []
    seen = set()
    for f in items:
        parts = f.args if isinstance(f, kind) else (f,)
        for p in parts:
            if p not in seen:
                seen.add(p)
                out.append(p)
    return out


def conj(*items: Formula) -> Formula:
    args = [f for f in _flatten(And, items) if f != TRUE]
    if any(f == FALSE for f in args):
        return FALSE
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*items: Formula) -> Formula:
    args = [f for f in _flatten(Or, items) if f != FALSE]
    if any(f == TRUE for f in args):
        return TRUE
    if not args:
        return FALSE
    return args[0] if len(args) == 1 else Or(tuple(args))


def neg(f: Formula) -> Formula:
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(lhs: Formula, rhs: Formula) -> Formula:
    return Implies(lhs, rhs)


def iff(lhs: Formula, rhs: Formula) -> Formula:
    return Iff(lhs, rhs)


def exists(vs: Iterable[TimedVar], body: Formula) -> Formula:
    for v in sorted(set(vs), key=TimedVar.key, reverse=True):
        body = Exists(v, body)
    return body


def forall(vs: Iterable[TimedVar], body: Formula) -> Formula:
    for v in sorted(set(vs), key=TimedVar.key, reverse=True):
        body = Forall(v, body)
    return body


def exists_closure(f: Formula) -> Formula:
    return exists(free_vars(f), f)


def forall_closure(f: Formula) -> Formula:
    return forall(free_vars(f), f)


# ---------------------------------------------------------------------------
# Traversals


def is_literal(f: Formula) -> bool:
    if isinstance(f, Not):
        return isinstance(f.arg, (Divides, BoolVar))
    return isinstance(f, Atom)


def is_quantifier_free(f: Formula) -> bool:
    if isinstance(f, (Exists, Forall)):
        return False
    if isinstance(f, Not):
        return is_quantifier_free(f.arg)
    if isinstance(f, (And, Or)):
        return all(is_quantifier_free(a) for a in f.args)
    if isinstance(f, (Implies, Iff)):
        return is_quantifier_free(f.lhs) and is_quantifier_free(f.rhs)
    return True


def atom_vars(f: Formula) -> Tuple[TimedVar, ...]:
    if isinstance(f, (Compare, Divides)):
        return f.term.variables()
    if isinstance(f, BoolVar):
        return (f.var,)
    return ()


def _walk_vars(f: Formula, bound: FrozenSet[TimedVar], out: set, include_bound: bool) -> None:
    if isinstance(f, Atom):
        out.update(v for v in atom_vars(f) if include_bound or v not in bound)
    elif isinstance(f, Not):
        _walk_vars(f.arg, bound, out, include_bound)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _walk_vars(a, bound, out, include_bound)
    elif isinstance(f, (Implies, Iff)):
        _walk_vars(f.lhs, bound, out, include_bound)
        _walk_vars(f.rhs, bound, out, include_bound)
    elif isinstance(f, (Exists, Forall)):
        if include_bound:
            out.add(f.var)
        _walk_vars(f.body, bound | {f.var}, out, include_bound)


def free_vars(f: Formula) -> FrozenSet[TimedVar]:
    out: set = set()
    _walk_vars(f, frozenset(), out, include_bound=False)
    return frozenset(out)


def all_vars(f: Formula) -> FrozenSet[TimedVar]:
    out: set = set()
    _walk_vars(f, frozenset(), out, include_bound=True)
    return frozenset(out)


def bound_vars(f: Formula) -> FrozenSet[TimedVar]:
    if isinstance(f, (Exists, Forall)):
        return bound_vars(f.body) | {f.var}
    if isinstance(f, Not):
        return bound_vars(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(bound_vars(a) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return bound_vars(f.lhs) | bound_vars(f.rhs)
    return frozenset()


def sorted_vars(vs: Iterable[TimedVar]) -> List[TimedVar]:
    return sorted(vs, key=TimedVar.key)


def map_formula(f: Formula, on_atom: Callable[[Formula], Formula],
                on_var: Callable[[TimedVar], TimedVar] = lambda v: v) -> Formula:
    """Rebuild f bottom-up, rewriting atoms and quantified variables"""
    if isinstance(f, Atom):
        return on_atom(f)
    if isinstance(f, Not):
        return Not(map_formula(f.arg, on_atom, on_var))
    if isinstance(f, And):
        return And(tuple(map_formula(a, on_atom, on_var) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_formula(a, on_atom, on_var) for a in f.args))
    if isinstance(f, Implies):
        return Implies(map_formula(f.lhs, on_atom, on_var), map_formula(f.rhs, on_atom, on_var))
    if isinstance(f, Iff):
        return Iff(map_formula(f.lhs, on_atom, on_var), map_formula(f.rhs, on_atom, on_var))
    if isinstance(f, Exists):
        return Exists(on_var(f.var), map_formula(f.body, on_atom, on_var))
    if isinstance(f, Forall):
        return Forall(on_var(f.var), map_formula(f.body, on_atom, on_var))
    raise TypeError(f"Not a formula: {f!r}")


def rename_vars(f: Formula, fn: Callable[[TimedVar], TimedVar]) -> Formula:
    def atom(a: Formula) -> Formula:
        if isinstance(a, Compare):
            return compare(a.term.rename(fn), a.op)
        if isinstance(a, Divides):
            return divides(a.modulus, a.term.rename(fn))
        if isinstance(a, BoolVar):
            return BoolVar(fn(a.var))
        return a
    return map_formula(f, atom, fn)


def check_sorts(f: Formula) -> None:
    """Raise SortError when one name and index is used with two sorts"""
    seen: Dict[Tuple[str, Index], Sort] = {}
    for v in sorted_vars(all_vars(f)):
        slot = (v.name, v.index)
        if slot in seen and seen[slot] is not v.sort:
            raise SortError(f"Variable {v} used as both {seen[slot].value} and {v.sort.value}", str(v))
        seen[slot] = v.sort


# ---------------------------------------------------------------------------
# Time


def _shift_var(delta: int) -> Callable[[TimedVar], TimedVar]:
    def fn(v: TimedVar) -> TimedVar:
        if not v.is_relative:
            raise ShiftDomainError(f"Cannot shift absolute variable {v}")
        return v.at(Relative(v.index.offset + delta))
    return fn


def shift(f: Formula, delta: int) -> Formula:
    fn = _shift_var(delta)
    for v in all_vars(f):
        fn(v)
    if delta == 0:
        return f
    return rename_vars(f, fn)


def order(f: Formula) -> int:
    offsets = []
    for v in all_vars(f):
        if not v.is_relative:
            raise ShiftDomainError(f"order() needs relative indices, found {v}")
        offsets.append(v.index.offset)
    return max(offsets) - min(offsets) if offsets else 0


def offset_range(f: Formula) -> Optional[Tuple[int, int]]:
    offsets = [v.offset for v in all_vars(f)]
    return (min(offsets), max(offsets)) if offsets else None


def normalize_window(f: Formula) -> Formula:
    """Shift f so its newest offset is 0"""
    span = offset_range(f)
    return f if span is None else shift(f, -span[1])


def instantiate(f: Formula, step: int) -> Formula:
    """Anchor relative offsets at an absolute step (k := step)"""
    def fn(v: TimedVar) -> TimedVar:
        if not v.is_relative:
            return v
        target = step + v.index.offset
        if target < 0:
            raise ShiftDomainError(f"{v} at step {step} reaches before step 0")
        return v.at(Absolute(target))
    return rename_vars(f, fn)


# ---------------------------------------------------------------------------
# Substitution and evaluation


def substitute(f: Formula, v: TimedVar, t: Union[TermLike, Formula, bool]) -> Formula:
    bound = bound_vars(f)
    if v in bound:
        raise CaptureError(f"{v} is bound in the formula")
    if isinstance(t, bool):
        t = TRUE if t else FALSE
    if v.sort is Sort.BOOL:
        if not isinstance(t, Formula):
            raise SortError(f"Boolean {v} replaced by a term", str(v))
        if free_vars(t) & bound:
            raise CaptureError(f"Replacement for {v} would be captured")

        def on_bool(a: Formula) -> Formula:
            return t if isinstance(a, BoolVar) and a.var == v else a
        return map_formula(f, on_bool)
    if isinstance(t, Formula):
        raise SortError(f"Numeric {v} replaced by a formula", str(v))
    t = as_term(t)
    if set(t.variables()) & bound:
        raise CaptureError(f"Replacement for {v} would be captured")

    def on_atom(a: Formula) -> Formula:
        if isinstance(a, Compare) and a.term.mentions(v):
            return compare(a.term.substitute(v, t), a.op)
        if isinstance(a, Divides) and a.term.mentions(v):
            return divides(a.modulus, a.term.substitute(v, t))
        return a
    return map_formula(f, on_atom)


def evaluate(f: Formula, a: Assignment) -> bool:
    if isinstance(f, Compare):
        return holds(f.term.evaluate(a), f.op)
    if isinstance(f, Divides):
        value = f.term.evaluate(a)
        return value.denominator == 1 and value.numerator % f.modulus == 0
    if isinstance(f, BoolVar):
        if f.var not in a:
            raise UnboundVariableError(f"No value for {f.var}")
        return bool(a[f.var])
    if isinstance(f, TrueAtom):
        return True
    if isinstance(f, FalseAtom):
        return False
    if isinstance(f, Not):
        return not evaluate(f.arg, a)
    if isinstance(f, And):
        return all(evaluate(x, a) for x in f.args)
    if isinstance(f, Or):
        return any(evaluate(x, a) for x in f.args)
    if isinstance(f, Implies):
        return (not evaluate(f.lhs, a)) or evaluate(f.rhs, a)
    if isinstance(f, Iff):
        return evaluate(f.lhs, a) == evaluate(f.rhs, a)
    raise ContractViolation("evaluate() needs a quantifier-free formula")


# ---------------------------------------------------------------------------
# Normal forms


def normalize_nnf(f: Formula) -> Formula:
    check_sorts(f)
    return _nnf(f, True)


def _nnf(f: Formula, positive: bool) -> Formula:
    if isinstance(f, Compare):
        return f if positive else compare(f.term, NEGATE[f.op])
    if isinstance(f, (Divides, BoolVar)):
        return f if positive else Not(f)
    if isinstance(f, TrueAtom):
        return TRUE if positive else FALSE
    if isinstance(f, FalseAtom):
        return FALSE if positive else TRUE
    if isinstance(f, Not):
        return _nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = [_nnf(x, positive) for x in f.args]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(f, Or):
        parts = [_nnf(x, positive) for x in f.args]
        return disj(*parts) if positive else conj(*parts)
    if isinstance(f, Implies):
        if positive:
            return disj(_nnf(f.lhs, False), _nnf(f.rhs, True))
        return conj(_nnf(f.lhs, True), _nnf(f.rhs, False))
    if isinstance(f, Iff):
        a, b = _nnf(f.lhs, True), _nnf(f.rhs, True)
        na, nb = _nnf(f.lhs, False), _nnf(f.rhs, False)
        if positive:
            return disj(conj(a, b), conj(na, nb))
        return disj(conj(a, nb), conj(na, b))
    if isinstance(f, Exists):
        body = _nnf(f.body, positive)
        return Exists(f.var, body) if positive else Forall(f.var, body)
    if isinstance(f, Forall):
        body = _nnf(f.body, positive)
        return Forall(f.var, body) if positive else Exists(f.var, body)
    raise TypeError(f"Not a formula: {f!r}")


Clause = Tuple[Formula, ...]


def _merge(a: Clause, b: Clause) -> Clause:
    out = list(a)
    seen = set(a)
    for lit in b:
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


def dnf_clauses(f: Formula) -> List[Clause]:
    """Disjuncts of f as literal tuples; [] is false and [()] is true"""
    if not is_quantifier_free(f):
        raise ContractViolation("DNF conversion needs a quantifier-free formula")
    return _clauses(normalize_nnf(f))


def _clauses(f: Formula) -> List[Clause]:
    if isinstance(f, TrueAtom):
        return [()]
    if isinstance(f, FalseAtom):
        return []
    if isinstance(f, Compare) and f.op == "!=":
        return [(compare(f.term, "<"),), (compare(f.term, ">"),)]
    if is_literal(f):
        return [(f,)]
    if isinstance(f, Or):
        out: List[Clause] = []
        for x in f.args:
            out.extend(_clauses(x))
        return out
    if isinstance(f, And):
        acc: List[Clause] = [()]
        for x in f.args:
            part = _clauses(x)
            acc = [_merge(a, b) for a in acc for b in part]
            if not acc:
                break
        return acc
    raise ContractViolation(f"Unexpected node in NNF: {type(f).__name__}")


def clauses_to_formula(clauses: Iterable[Clause]) -> Formula:
    return disj(*[conj(*c) for c in clauses])


def to_dnf(f: Formula) -> Formula:
    return clauses_to_formula(dnf_clauses(f))


# ---------------------------------------------------------------------------
# Rendering


def render(f: Formula) -> str:
    if isinstance(f, Compare):
        rhs = format_rational(-f.term.const)
        return f"{f.term.render_lhs()} {f.op} {rhs}"
    if isinstance(f, Divides):
        return f"divides({f.modulus}, {f.term})"
    if isinstance(f, BoolVar):
        return str(f.var)
    if isinstance(f, TrueAtom):
        return "true"
    if isinstance(f, FalseAtom):
        return "false"
    if isinstance(f, Not):
        return f"(not {render(f.arg)})"
    if isinstance(f, And):
        return "(" + " and ".join(render(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(" + " or ".join(render(a) for a in f.args) + ")"
    if isinstance(f, Implies):
        return f"({render(f.lhs)} => {render(f.rhs)})"
    if isinstance(f, Iff):
        return f"({render(f.lhs)} <=> {render(f.rhs)})"
    if isinstance(f, Exists):
        return f"(exists {f.var}. {render(f.body)})"
    if isinstance(f, Forall):
        return f"(forall {f.var}. {render(f.body)})"
    raise TypeError(f"Not a formula: {f!r}")


def conjuncts(f: Formula) -> List[Formula]:
    if isinstance(f, And):
        return list(f.args)
    if f == TRUE:
        return []
    return [f]
