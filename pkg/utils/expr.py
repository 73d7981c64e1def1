"""Surface expressions of the specification language and their lowering to formulas."""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from utils.errors import ShiftDomainError, SortError, SpecError, UnsupportedTheoryError
from utils.formula import (FALSE, TRUE, Absolute, BoolVar, Formula, LinearTerm, Not, Relative,
                           Sort, TimedVar, compare2, conj, disj, divides, iff, implies)

logger = logging.getLogger(__name__)

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")
CONNECTIVES = ("and", "or", "=>", "<=>")


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Ref:
    """`name` (offset 0), `name[k-2]` (offset -2) or, when absolute, `name[3]`"""
    name: str
    offset: int = 0
    absolute: bool = False


@dataclass(frozen=True)
class Prev:
    expr: "Expr"
    init: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Divisible:
    """`divides(modulus, arg)` over integer terms"""
    modulus: int
    arg: "Expr"


Expr = Union[Num, BoolLit, Ref, Prev, Unary, Binary, Divisible]

# A resolved name is either a variable (at offset 0) or a macro body
Binding = Union[TimedVar, Expr]
Resolver = Callable[[str], Optional[Binding]]


class BeforeStart(ShiftDomainError):
    """An instance at an early step reaches before step 0."""


@dataclass(frozen=True)
class Mode:
    """Relative lowering shifted by `shift`, or absolute lowering at `step`."""
    shift: int = 0
    step: Optional[int] = None

    def moved(self, delta: int) -> "Mode":
        if self.step is None:
            return Mode(self.shift + delta)
        return Mode(step=self.step + delta)


def contains_prev(e: Expr) -> bool:
    if isinstance(e, Prev):
        return True
    if isinstance(e, (Unary, Divisible)):
        return contains_prev(e.arg)
    if isinstance(e, Binary):
        return contains_prev(e.lhs) or contains_prev(e.rhs)
    return False


def contains_absolute(e: Expr) -> bool:
    if isinstance(e, Ref):
        return e.absolute
    if isinstance(e, Prev):
        return contains_absolute(e.expr) or contains_absolute(e.init)
    if isinstance(e, (Unary, Divisible)):
        return contains_absolute(e.arg)
    if isinstance(e, Binary):
        return contains_absolute(e.lhs) or contains_absolute(e.rhs)
    return False


def prev_depth(e: Expr) -> int:
    if isinstance(e, Prev):
        return 1 + prev_depth(e.expr)
    if isinstance(e, (Unary, Divisible)):
        return prev_depth(e.arg)
    if isinstance(e, Binary):
        return max(prev_depth(e.lhs), prev_depth(e.rhs))
    return 0


class Lowering:
    """Turns expressions into terms and formulas through a name resolver."""

    def __init__(self, resolve: Resolver):
        self.resolve = resolve

    def _binding(self, ref: Ref) -> Binding:
        bound = self.resolve(ref.name)
        if bound is None:
            raise SpecError(f"Unresolved name '{ref.name}'")
        return bound

    def _var(self, ref: Ref, base: TimedVar, mode: Mode) -> TimedVar:
        if ref.absolute:
            if mode.step is None:
                raise SpecError(f"Absolute reference {ref.name}[{ref.offset}] outside an initial condition")
            return base.at(Absolute(ref.offset))
        if mode.step is None:
            return base.at(Relative(mode.shift + ref.offset))
        target = mode.step + ref.offset
        if target < 0:
            raise BeforeStart(f"{ref.name} at step {target}")
        return base.at(Absolute(target))

    def is_bool(self, e: Expr) -> bool:
        if isinstance(e, BoolLit):
            return True
        if isinstance(e, Num):
            return False
        if isinstance(e, Ref):
            bound = self._binding(e)
            return bound.sort is Sort.BOOL if isinstance(bound, TimedVar) else self.is_bool(bound)
        if isinstance(e, Prev):
            return self.is_bool(e.expr)
        if isinstance(e, Divisible):
            return True
        if isinstance(e, Unary):
            return e.op == "not"
        return e.op in COMPARISONS + CONNECTIVES

    def term(self, e: Expr, mode: Mode = Mode()) -> LinearTerm:
        if isinstance(e, Num):
            return LinearTerm.constant(e.value)
        if isinstance(e, BoolLit):
            raise SortError("Boolean literal used as a number")
        if isinstance(e, Divisible):
            raise SortError("Divisibility used as a number")
        if isinstance(e, Ref):
            bound = self._binding(e)
            if isinstance(bound, TimedVar):
                if bound.sort is Sort.BOOL:
                    raise SortError(f"Boolean '{e.name}' used as a number", e.name)
                return LinearTerm.var(self._var(e, bound, mode))
            return self.term(bound, self._macro_mode(e, mode))
        if isinstance(e, Prev):
            if mode.step == 0:
                return self.term(e.init, mode)
            return self.term(e.expr, mode.moved(-1))
        if isinstance(e, Unary):
            if e.op != "-":
                raise SortError(f"'{e.op}' applied to a number")
            return -self.term(e.arg, mode)
        if e.op in ("+", "-"):
            lhs, rhs = self.term(e.lhs, mode), self.term(e.rhs, mode)
            return lhs + rhs if e.op == "+" else lhs - rhs
        if e.op == "*":
            lhs, rhs = self.term(e.lhs, mode), self.term(e.rhs, mode)
            if lhs.is_constant():
                return rhs.scale(lhs.const)
            if rhs.is_constant():
                return lhs.scale(rhs.const)
            raise UnsupportedTheoryError(f"Nonlinear product of {lhs} and {rhs}")
        if e.op == "/":
            lhs, rhs = self.term(e.lhs, mode), self.term(e.rhs, mode)
            if not rhs.is_constant():
                raise UnsupportedTheoryError(f"Division by non-constant {rhs}")
            if rhs.const == 0:
                raise SpecError("Division by zero")
            return lhs.scale(1 / rhs.const)
        raise SortError(f"'{e.op}' does not produce a number")

    def _macro_mode(self, ref: Ref, mode: Mode) -> Mode:
        if ref.absolute:
            return Mode(step=ref.offset)
        return mode.moved(ref.offset)

    def formula(self, e: Expr, mode: Mode = Mode()) -> Formula:
        if isinstance(e, BoolLit):
            return TRUE if e.value else FALSE
        if isinstance(e, Num):
            raise SortError("Number used as a condition")
        if isinstance(e, Ref):
            bound = self._binding(e)
            if isinstance(bound, TimedVar):
                if bound.sort is not Sort.BOOL:
                    raise SortError(f"Numeric '{e.name}' used as a condition", e.name)
                return BoolVar(self._var(e, bound, mode))
            return self.formula(bound, self._macro_mode(e, mode))
        if isinstance(e, Prev):
            if mode.step == 0:
                return self.formula(e.init, mode)
            return self.formula(e.expr, mode.moved(-1))
        if isinstance(e, Unary):
            if e.op != "not":
                raise SortError("Arithmetic negation of a condition")
            return Not(self.formula(e.arg, mode))
        if isinstance(e, Divisible):
            return divides(e.modulus, self.term(e.arg, mode))
        if e.op in COMPARISONS:
            if self.is_bool(e.lhs) or self.is_bool(e.rhs):
                if e.op not in ("=", "!="):
                    raise SortError(f"Ordering '{e.op}' between conditions")
                same = iff(self.formula(e.lhs, mode), self.formula(e.rhs, mode))
                return same if e.op == "=" else Not(same)
            return compare2(self.term(e.lhs, mode), e.op, self.term(e.rhs, mode))
        if e.op == "and":
            return conj(self.formula(e.lhs, mode), self.formula(e.rhs, mode))
        if e.op == "or":
            return disj(self.formula(e.lhs, mode), self.formula(e.rhs, mode))
        if e.op == "=>":
            return implies(self.formula(e.lhs, mode), self.formula(e.rhs, mode))
        if e.op == "<=>":
            return iff(self.formula(e.lhs, mode), self.formula(e.rhs, mode))
        raise SortError(f"'{e.op}' does not produce a condition")

    def constant(self, e: Expr) -> Fraction:
        t = self.term(e)
        if not t.is_constant():
            raise SpecError(f"Expected a constant, found {t}")
        return t.const
