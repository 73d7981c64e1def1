"""Quantifier elimination for linear real arithmetic with boolean variables.

Formulas are brought to disjunctive normal form and each conjunction is
projected on its own: an equality in the variable is solved and substituted
(Gauss step), otherwise every lower bound is paired with every upper bound
(Fourier-Motzkin). Boolean variables are expanded (Shannon). Integer
variables are handed to the Cooper engine in qe_int.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import floor, lcm
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from utils import qe_int
from utils.clauses import absorb, literal_vars, mentions, occurrences, project_bool, tidy_clause
from utils.errors import ContractViolation, UnsupportedTheoryError
from utils.formula import (FALSE, TRUE, And, BoolVar, Clause, Compare, Divides, Exists, Forall,
                           Formula, LinearTerm, Not, Or, Sort, TimedVar, Value, check_sorts,
                           clauses_to_formula, compare, conj, disj, dnf_clauses, evaluate,
                           exists_closure, forall_closure, free_vars, holds, iff, is_literal,
                           is_quantifier_free, normalize_nnf, sorted_vars, substitute, NEGATE)

logger = logging.getLogger(__name__)

# Contextual simplification only looks at clauses up to this size
CONTEXT_LITERALS = 8
CONTEXT_CLAUSES = 16


# ---------------------------------------------------------------------------
# Projection of a single conjunction


def _eq_rank(lit: Compare, v: TimedVar) -> tuple:
    vs = lit.term.variables()
    offsets = [w.index.offset for w in vs if w.is_relative]
    span = max(offsets) - min(offsets) if offsets else 0
    return (len(vs), span, 0 if abs(lit.term.coeff(v)) == 1 else 1, str(lit))


def solve_equality(lit: Compare, v: TimedVar) -> LinearTerm:
    """The term t with (lit <=> v = t)"""
    c = lit.term.coeff(v)
    return lit.term.drop(v).scale(Fraction(-1) / c)


def bound_of(lit: Compare, v: TimedVar) -> Tuple[str, LinearTerm, bool]:
    """Classify lit as ('lower'|'upper', bound term, strict) with respect to v"""
    a = lit.term.coeff(v)
    bound = lit.term.drop(v).scale(Fraction(-1) / a)
    op = lit.op if a > 0 else {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[lit.op]
    if op in ("<", "<="):
        return "upper", bound, op == "<"
    return "lower", bound, op == ">"


def project_clause_real(clause: Clause, v: TimedVar) -> Optional[Clause]:
    """Exact shadow of a conjunction of literals under ∃v (v real)"""
    with_v = [lit for lit in clause if mentions(lit, v)]
    if not with_v:
        return clause
    rest = [lit for lit in clause if not mentions(lit, v)]
    for lit in with_v:
        if not isinstance(lit, Compare):
            raise UnsupportedTheoryError(f"Real variable {v} occurs in non-linear-order literal {lit}")
        if lit.op == "!=":
            raise ContractViolation("Disequalities must be split before projection")
    eqs = [lit for lit in with_v if lit.op == "="]
    if eqs:
        eq = min(eqs, key=lambda lit: _eq_rank(lit, v))
        value = solve_equality(eq, v)
        out = rest + [compare(lit.term.substitute(v, value), lit.op) for lit in with_v if lit is not eq]
        return tidy_clause(out)
    lowers, uppers = [], []
    for lit in with_v:
        side, bound, strict = bound_of(lit, v)
        (lowers if side == "lower" else uppers).append((bound, strict))
    out = list(rest)
    for lo, ls in lowers:
        for hi, hs in uppers:
            out.append(compare(lo - hi, "<" if ls or hs else "<="))
    return tidy_clause(out)


def _project(clause: Clause, v: TimedVar, cap: int) -> List[Optional[Clause]]:
    if not any(mentions(lit, v) for lit in clause):
        return [clause]
    if v.sort is Sort.BOOL:
        return [project_bool(clause, v)]
    if v.sort is Sort.INT:
        return qe_int.project_clause_int(clause, v, cap)
    return [project_clause_real(clause, v)]


def _gauss_ready(clauses: Sequence[Clause], v: TimedVar) -> bool:
    for c in clauses:
        hit = [lit for lit in c if mentions(lit, v)]
        if hit and not any(isinstance(lit, Compare) and lit.op == "=" for lit in hit):
            return False
    return True


def _pick(pending: List[TimedVar], clauses: Sequence[Clause]) -> TimedVar:
    def rank(v: TimedVar) -> tuple:
        return (1 if v.sort is Sort.INT else 0,
                0 if _gauss_ready(clauses, v) else 1,
                occurrences(clauses, v),
                v.key())
    return min(pending, key=rank)


def eliminate_clauses(clauses: List[Clause], vs: Iterable[TimedVar], cap: Optional[int] = None) -> List[Clause]:
    """Project a DNF (as clauses) onto the complement of vs"""
    cap = qe_int.DEFAULT_CAP if cap is None else cap
    pending = list(dict.fromkeys(vs))
    while pending and clauses and clauses != [()]:
        v = _pick(pending, clauses)
        pending.remove(v)
        projected: List[Optional[Clause]] = []
        for c in clauses:
            projected.extend(_project(c, v, cap))
        clauses = absorb(projected)
        logger.debug(f"Eliminated {v}: {len(clauses)} clause(s) remain")
    return clauses


def eliminate_block(vs: Iterable[TimedVar], f: Formula, cap: Optional[int] = None) -> Formula:
    clauses = absorb(tidy_clause(c) for c in dnf_clauses(f))
    return clauses_to_formula(eliminate_clauses(clauses, vs, cap))


def eliminate_exists(v: TimedVar, f: Formula, cap: Optional[int] = None) -> Formula:
    if not is_quantifier_free(f):
        raise ContractViolation("eliminate_exists needs a quantifier-free body")
    if v.sort is Sort.INT:
        return qe_int.eliminate_exists_int(v, f, cap)
    if v.sort is Sort.BOOL:
        return simplify(disj(_shannon(f, v, True), _shannon(f, v, False)))
    return simplify(eliminate_block([v], f, cap))


def _shannon(f: Formula, v: TimedVar, value: bool) -> Formula:
    return substitute(f, v, value)


def _negate(f: Formula) -> Formula:
    return normalize_nnf(Not(f))


def _qe(f: Formula, cap: Optional[int]) -> Formula:
    if isinstance(f, (Exists, Forall)):
        kind = type(f)
        block: List[TimedVar] = []
        while isinstance(f, kind):
            block.append(f.var)
            f = f.body
        body = _qe(f, cap)
        if kind is Exists:
            return eliminate_block(block, body, cap)
        return _negate(eliminate_block(block, _negate(body), cap))
    if isinstance(f, And):
        return conj(*[_qe(a, cap) for a in f.args])
    if isinstance(f, Or):
        return disj(*[_qe(a, cap) for a in f.args])
    return f


def eliminate_all(f: Formula, cap: Optional[int] = None) -> Formula:
    """Quantifier-free equivalent of f, innermost quantifier blocks first"""
    check_sorts(f)
    return simplify(_qe(normalize_nnf(f), cap))


def is_valid(f: Formula, cap: Optional[int] = None) -> bool:
    return eliminate_all(forall_closure(f), cap) == TRUE


def is_satisfiable(f: Formula, cap: Optional[int] = None) -> bool:
    return eliminate_all(exists_closure(f), cap) == TRUE


def equivalent(a: Formula, b: Formula, cap: Optional[int] = None) -> bool:
    return is_valid(iff(a, b), cap)


# ---------------------------------------------------------------------------
# Simplification


def _unsat(lits: Iterable[Formula]) -> bool:
    clause = tidy_clause(lits)
    if clause is None:
        return True
    vs = set()
    for lit in clause:
        vs.update(literal_vars(lit))
    return not eliminate_clauses([clause], sorted_vars(vs))


def _drop_implied(clause: Clause, context: List[Formula]) -> Clause:
    """Remove literals of clause that follow from the context and the others"""
    if len(clause) + len(context) > CONTEXT_LITERALS:
        return clause
    if not all(isinstance(lit, Compare) for lit in list(clause) + context):
        return clause
    kept = list(clause)
    for lit in list(clause):
        others = [x for x in kept if x is not lit]
        negated = compare(lit.term, NEGATE[lit.op])
        if _disequality_unsat(context + others + [negated]):
            kept = others
    return tuple(kept)


def _disequality_unsat(lits: List[Formula]) -> bool:
    # Split disequalities so every branch is a plain conjunction
    branches: List[List[Formula]] = [[]]
    for lit in lits:
        if isinstance(lit, Compare) and lit.op == "!=":
            branches = [b + [alt] for b in branches
                        for alt in (compare(lit.term, "<"), compare(lit.term, ">"))]
        else:
            branches = [b + [lit] for b in branches]
    return all(_unsat(b) for b in branches)


def _negate_literal(lit: Formula) -> Formula:
    return normalize_nnf(Not(lit))


def _tidy_disjunction(lits: List[Formula]) -> Optional[List[Formula]]:
    """Dual of tidy_clause: None means the disjunction is valid"""
    dual = tidy_clause([_negate_literal(lit) for lit in lits])
    if dual is None:
        return None
    return [_negate_literal(lit) for lit in dual]


def _as_clause(f: Formula) -> Optional[Clause]:
    if is_literal(f):
        return (f,)
    if isinstance(f, And) and all(is_literal(a) for a in f.args):
        return f.args
    return None


def _simp(f: Formula) -> Formula:
    if isinstance(f, And):
        parts = [_simp(a) for a in f.args]
        flat = conj(*parts)
        if not isinstance(flat, And):
            return flat
        lits = [p for p in flat.args if is_literal(p)]
        rest = [p for p in flat.args if not is_literal(p)]
        tidy = tidy_clause(lits)
        if tidy is None:
            return FALSE
        keep = set(tidy)
        rest = [r for r in rest if not (isinstance(r, Or) and keep & set(r.args))]
        return conj(*tidy, *rest)
    if isinstance(f, Or):
        parts = [_simp(a) for a in f.args]
        flat = disj(*parts)
        if not isinstance(flat, Or):
            return flat
        singles = [p for p in flat.args if is_literal(p)]
        merged = _tidy_disjunction(singles) if singles else []
        if merged is None:
            return TRUE
        clauses: List[Clause] = [(lit,) for lit in merged]
        opaque: List[Formula] = []
        context = [_negate_literal(lit) for lit in merged]
        contextual = len(flat.args) <= CONTEXT_CLAUSES
        for p in flat.args:
            if is_literal(p):
                continue
            c = _as_clause(p)
            if c is None:
                opaque.append(p)
            else:
                clauses.append(_drop_implied(c, context) if contextual else c)
        clauses = absorb(clauses)
        return disj(*[conj(*c) for c in clauses], *opaque)
    return f


def simplify(f: Formula) -> Formula:
    if not is_quantifier_free(f):
        raise ContractViolation("simplify needs a quantifier-free formula")
    previous = None
    current = normalize_nnf(f)
    # Two passes settle literals exposed by the first round of merging
    for _ in range(2):
        if current == previous:
            break
        previous, current = current, _simp(current)
    return current


# ---------------------------------------------------------------------------
# Witnesses


@dataclass(frozen=True)
class Finite:
    value: Fraction

    def __str__(self) -> str:
        return _fmt(self.value)


@dataclass(frozen=True)
class FinitePlusEps:
    base: Fraction
    eps_count: int

    def __post_init__(self):
        if self.eps_count == 0 or int(self.eps_count) != self.eps_count:
            raise ValueError("eps_count must be a nonzero integer")

    def __str__(self) -> str:
        sign = "+" if self.eps_count > 0 else "-"
        mag = abs(self.eps_count)
        coef = "" if mag == 1 else f"{_fmt(mag)}*"
        return f"{_fmt(self.base)} {sign} {coef}eps"


@dataclass(frozen=True)
class PosInfinity:
    index: int

    def __str__(self) -> str:
        return f"infinity{self.index}"


@dataclass(frozen=True)
class NegInfinity:
    index: int

    def __str__(self) -> str:
        return f"-infinity{self.index}"


WitnessValue = Union[Finite, FinitePlusEps, PosInfinity, NegInfinity]


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass
class Witness:
    values: Dict[TimedVar, Union[WitnessValue, bool]] = field(default_factory=dict)

    def is_standard(self) -> bool:
        return all(isinstance(v, (Finite, bool)) for v in self.values.values())


class Hyper:
    """Nonstandard rational: levels -1 (eps), 0 (standard), i >= 1 (infinity i)."""

    __slots__ = ("parts",)

    def __init__(self, parts: Optional[Mapping[int, Fraction]] = None):
        self.parts = {k: Fraction(c) for k, c in (parts or {}).items() if c != 0}

    @staticmethod
    def of(value: Union[WitnessValue, Fraction, int]) -> "Hyper":
        if isinstance(value, Finite):
            return Hyper({0: value.value})
        if isinstance(value, FinitePlusEps):
            return Hyper({0: value.base, -1: value.eps_count})
        if isinstance(value, PosInfinity):
            return Hyper({value.index: 1})
        if isinstance(value, NegInfinity):
            return Hyper({value.index: -1})
        return Hyper({0: Fraction(value)})

    def __add__(self, other: "Hyper") -> "Hyper":
        out = dict(self.parts)
        for k, c in other.parts.items():
            out[k] = out.get(k, 0) + c
        return Hyper(out)

    def scale(self, factor: Fraction) -> "Hyper":
        return Hyper({k: c * factor for k, c in self.parts.items()})

    def __sub__(self, other: "Hyper") -> "Hyper":
        return self + other.scale(-1)

    def sign(self) -> int:
        if not self.parts:
            return 0
        return 1 if self.parts[max(self.parts)] > 0 else -1

    def is_infinitesimal(self) -> bool:
        return all(k < 0 for k in self.parts)

    def to_value(self) -> WitnessValue:
        levels = set(self.parts)
        if levels <= {0}:
            return Finite(self.parts.get(0, Fraction(0)))
        if levels <= {0, -1}:
            eps = self.parts[-1]
            if eps.denominator != 1:
                raise ValueError(f"Fractional eps coefficient {eps}")
            return FinitePlusEps(self.parts.get(0, Fraction(0)), eps.numerator)
        if len(levels) == 1:
            (k,) = levels
            return PosInfinity(k) if self.parts[k] > 0 else NegInfinity(k)
        raise ValueError(f"Nonstandard value outside the witness forms: {self.parts}")


def _term_value(term: LinearTerm, values: Mapping[TimedVar, Hyper]) -> Hyper:
    total = Hyper({0: term.const})
    for v, c in term.coeffs:
        total = total + values[v].scale(c)
    return total


def evaluate_nonstandard(f: Formula, w: Witness) -> bool:
    """Truth of quantifier-free f when eps and the infinities keep their order"""
    hypers = {v: Hyper.of(x) for v, x in w.values.items() if not isinstance(x, bool)}
    bools = {v: x for v, x in w.values.items() if isinstance(x, bool)}

    def ev(g: Formula) -> bool:
        if isinstance(g, Compare):
            value = _term_value(g.term, hypers)
            return holds(Fraction(value.sign()), g.op)
        if isinstance(g, Divides):
            value = _term_value(g.term, hypers)
            if set(value.parts) - {0}:
                return False
            std = value.parts.get(0, Fraction(0))
            return std.denominator == 1 and std.numerator % g.modulus == 0
        if isinstance(g, BoolVar):
            return bools[g.var]
        if g == TRUE:
            return True
        if g == FALSE:
            return False
        if isinstance(g, Not):
            return not ev(g.arg)
        if isinstance(g, And):
            return all(ev(a) for a in g.args)
        if isinstance(g, Or):
            return any(ev(a) for a in g.args)
        return ev(normalize_nnf(g))
    return ev(f)


def _choose(clause: Clause, v: TimedVar, values: Dict[TimedVar, Hyper], infinity: Optional[int]) -> Hyper:
    """Value for v within its bounds in clause; infinity is the level to use when v is bounded on one side only"""
    lower: Optional[Tuple[Hyper, bool]] = None
    upper: Optional[Tuple[Hyper, bool]] = None
    for lit in clause:
        if not isinstance(lit, Compare) or not lit.term.mentions(v):
            continue
        a = lit.term.coeff(v)
        bound = _term_value(lit.term.drop(v), values).scale(Fraction(-1) / a)
        if lit.op == "=":
            return bound
        side, _, strict = bound_of(lit, v)
        if side == "lower":
            if lower is None or (bound - lower[0]).sign() > 0 or ((bound - lower[0]).sign() == 0 and strict):
                lower = (bound, strict)
        else:
            if upper is None or (bound - upper[0]).sign() < 0 or ((bound - upper[0]).sign() == 0 and strict):
                upper = (bound, strict)
    eps = Hyper({-1: 1})
    if lower is not None and upper is not None:
        lo, strict = lower
        if not strict:
            return lo
        if (upper[0] - lo).is_infinitesimal():
            return (lo + upper[0]).scale(Fraction(1, 2))
        return lo + eps
    if infinity is not None and (lower is not None or upper is not None):
        return Hyper({infinity: 1 if lower is not None else -1})
    if lower is not None:
        lo, strict = lower
        return lo + eps if strict else lo
    if upper is not None:
        hi, strict = upper
        return hi - eps if strict else hi
    return Hyper()


def _integral_eps(hypers: Dict[TimedVar, Hyper]) -> Dict[TimedVar, Hyper]:
    # Scaling every eps coefficient by the same positive factor keeps all comparisons
    factor = reduce(lcm, (h.parts[-1].denominator for h in hypers.values() if -1 in h.parts), 1)
    if factor == 1:
        return hypers
    return {v: Hyper({k: c * factor if k == -1 else c for k, c in h.parts.items()}) for v, h in hypers.items()}


def _back_substitute(chain: List[Clause], vs: Sequence[TimedVar],
                     use_infinity: bool) -> Optional[Dict[TimedVar, Union[WitnessValue, bool]]]:
    """Values along the projection chain, newest choice last; None if a value leaves the witness forms"""
    hypers: Dict[TimedVar, Hyper] = {}
    result: Dict[TimedVar, Union[WitnessValue, bool]] = {}
    level = 0
    for i in reversed(range(len(vs))):
        v = vs[i]
        if v.sort is Sort.BOOL:
            result[v] = BoolVar(v) in chain[i]
            continue
        hypers[v] = _choose(chain[i], v, hypers, level + 1 if use_infinity else None)
        if max(hypers[v].parts, default=0) > level:
            level = max(hypers[v].parts)
    for v, h in _integral_eps(hypers).items():
        try:
            value = h.to_value()
        except ValueError:
            return None
        if Hyper.of(value).parts != h.parts:
            return None
        result[v] = value
    return result


def extract_witness(f: Formula, vs: Sequence[TimedVar]) -> Optional[Witness]:
    """Nonstandard witness for ∃vs. f, by back-substitution along the projection chain"""
    vs = list(vs)
    numeric = [v for v in vs if v.sort is not Sort.BOOL]
    if numeric and all(v.sort is Sort.INT for v in numeric):
        model = qe_int.int_witness(f, vs)
        if model is None:
            return None
        return Witness({v: (x if isinstance(x, bool) else Finite(Fraction(x))) for v, x in model.items()})
    if any(v.sort is Sort.INT for v in numeric):
        raise UnsupportedTheoryError("Witnesses over mixed integer and real variables are not supported")
    for clause in absorb(tidy_clause(c) for c in dnf_clauses(f)):
        chain: List[Clause] = [clause]
        for v in vs:
            nxt = project_bool(chain[-1], v) if v.sort is Sort.BOOL else project_clause_real(chain[-1], v)
            if nxt is None:
                break
            chain.append(nxt)
        if len(chain) != len(vs) + 1 or chain[-1] != ():
            continue
        result = _back_substitute(chain, vs, use_infinity=True)
        if result is None:
            logger.debug("Infinite witness values do not fit the witness forms, using finite bounds")
            result = _back_substitute(chain, vs, use_infinity=False)
        if result is None:
            raise UnsupportedTheoryError("Witness values outside the nonstandard witness forms")
        return Witness({v: result[v] for v in vs})
    return None


def _magnitudes(f: Formula) -> List[Fraction]:
    out: List[Fraction] = []

    def walk(g: Formula) -> None:
        if isinstance(g, (Compare, Divides)):
            out.extend(abs(c) for _, c in g.term.coeffs)
            out.append(abs(g.term.const))
        for child in getattr(g, "args", ()) or ():
            walk(child)
        for attr in ("arg", "lhs", "rhs", "body"):
            if hasattr(g, attr):
                walk(getattr(g, attr))
    walk(f)
    return out


def concretize_witness(w: Witness, f: Formula, rounds: int = 64) -> Optional[Dict[TimedVar, Value]]:
    """Standard assignment from a nonstandard witness, or None within the round budget"""
    eps = Fraction(1)
    big = Fraction(floor(max(_magnitudes(f), default=Fraction(0))) + 1)
    for _ in range(rounds):
        candidate: Dict[TimedVar, Value] = {}
        for v, x in w.values.items():
            if isinstance(x, bool):
                candidate[v] = x
            elif isinstance(x, Finite):
                candidate[v] = x.value
            elif isinstance(x, FinitePlusEps):
                candidate[v] = x.base + x.eps_count * eps
            elif isinstance(x, PosInfinity):
                candidate[v] = big ** x.index
            else:
                candidate[v] = -big ** x.index
        if evaluate(f, candidate):
            return candidate
        eps /= 2
        big *= 2
    logger.warning(f"Witness {w} did not concretize within {rounds} rounds")
    return None


def find_model(f: Formula, vs: Optional[Sequence[TimedVar]] = None,
               rounds: int = 64) -> Tuple[Optional[Witness], Optional[Dict[TimedVar, Value]]]:
    """Witness and (if possible) a standard model of f over its free variables"""
    vs = sorted_vars(free_vars(f)) if vs is None else list(vs)
    w = extract_witness(f, vs)
    if w is None:
        return None, None
    if all(isinstance(x, (bool, Finite)) for x in w.values.values()):
        model = {v: (x if isinstance(x, bool) else x.value) for v, x in w.values.items()}
        if evaluate(f, model):
            return w, model
    return w, concretize_witness(w, f, rounds)
