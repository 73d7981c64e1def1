"""Presburger quantifier elimination (Cooper's method) and integer witnesses."""
import logging
from fractions import Fraction
from functools import reduce
from math import floor, lcm
from typing import Dict, List, Optional, Sequence, Tuple

from utils.clauses import literal_atom, mentions, tidy_clause
from utils.errors import ContractViolation, ResourceLimitError, UnsupportedTheoryError
from utils.formula import (TRUE, Clause, Compare, Divides, Formula, LinearTerm, Not, Sort,
                           TimedVar, Value, compare, divides, evaluate, free_vars, is_quantifier_free,
                           neg, normalize_nnf)

logger = logging.getLogger(__name__)

DEFAULT_CAP = 100_000


def _check_integer(lit: Formula, v: TimedVar) -> None:
    atom = literal_atom(lit)
    if not isinstance(atom, (Compare, Divides)):
        raise UnsupportedTheoryError(f"Integer variable {v} occurs in {lit}")
    for w in atom.term.variables():
        if w.sort is not Sort.INT:
            raise UnsupportedTheoryError(f"Mixed integer/real atom {lit} while eliminating {v}")


def _gauss_int(clause: Clause, with_v: List[Formula], rest: List[Formula], v: TimedVar) -> Optional[Clause]:
    eqs = [lit for lit in with_v if isinstance(lit, Compare) and lit.op == "="]
    eq = min(eqs, key=lambda lit: (abs(lit.term.coeff(v)), len(lit.term.variables()), str(lit)))
    c = eq.term.coeff(v)
    r = eq.term.drop(v)
    value = r.scale(Fraction(-1) / c)
    out = list(rest)
    if abs(c) != 1:
        # c*v + r = 0 has an integer solution only when |c| divides r
        out.append(divides(int(abs(c)), r))
    for lit in with_v:
        if lit is eq:
            continue
        atom = literal_atom(lit)
        if isinstance(atom, Compare):
            out.append(compare(atom.term.substitute(v, value), atom.op))
        else:
            d = divides(atom.modulus, atom.term.substitute(v, value))
            out.append(neg(d) if isinstance(lit, Not) else d)
    return tidy_clause(out)


def project_clause_int(clause: Clause, v: TimedVar, cap: int = DEFAULT_CAP) -> List[Optional[Clause]]:
    """Cooper projection of one conjunction; returns the disjuncts as clauses"""
    with_v = [lit for lit in clause if mentions(lit, v)]
    if not with_v:
        return [clause]
    rest = [lit for lit in clause if not mentions(lit, v)]
    for lit in with_v:
        _check_integer(lit, v)
    if any(isinstance(lit, Compare) and lit.op == "=" for lit in with_v):
        return [_gauss_int(clause, with_v, rest, v)]

    lam = reduce(lcm, (abs(int(literal_atom(lit).term.coeff(v))) for lit in with_v), 1)
    # Literals over x = lam*v: ("lt", sigma, q) is sigma*x + q < 0,
    # ("dvd", m, q, negated) is m | x + q
    items: List[Tuple] = []
    for lit in with_v:
        atom = literal_atom(lit)
        a = int(atom.term.coeff(v))
        sigma = 1 if a > 0 else -1
        s = lam // abs(a)
        r = atom.term.drop(v).scale(s)
        if isinstance(atom, Compare):
            op = atom.op
            if op == "<=":
                items.append(("lt", sigma, r - 1))
            elif op == "<":
                items.append(("lt", sigma, r))
            elif op == ">=":
                items.append(("lt", -sigma, -r - 1))
            elif op == ">":
                items.append(("lt", -sigma, -r))
            else:
                raise ContractViolation(f"Unexpected literal {lit} in Cooper projection")
        else:
            items.append(("dvd", atom.modulus * s, r.scale(sigma), isinstance(lit, Not)))
    if lam > 1:
        items.append(("dvd", lam, LinearTerm.constant(0), False))

    delta = reduce(lcm, (it[1] for it in items if it[0] == "dvd"), 1)
    lowers = [it[2] for it in items if it[0] == "lt" and it[1] < 0]
    uppers = [-it[2] for it in items if it[0] == "lt" and it[1] > 0]

    def at(x: LinearTerm, drop_bounds: bool) -> List[Formula]:
        out = list(rest)
        for it in items:
            if it[0] == "lt":
                if not drop_bounds:
                    out.append(compare(x.scale(it[1]) + it[2], "<"))
            else:
                d = divides(it[1], x + it[2])
                out.append(neg(d) if it[3] else d)
        return out

    result: List[Optional[Clause]] = []
    if not lowers or not uppers:
        # One side unbounded: only the residues matter
        if delta > cap:
            raise ResourceLimitError(f"Cooper expansion for {v} needs {delta} candidates (cap {cap})")
        for j in range(1, delta + 1):
            result.append(tidy_clause(at(LinearTerm.constant(j), drop_bounds=True)))
        return result
    use_lower = len(lowers) <= len(uppers)
    side = lowers if use_lower else uppers
    if delta * len(side) > cap:
        raise ResourceLimitError(
            f"Cooper expansion for {v} needs {delta * len(side)} candidates (cap {cap})")
    for b in side:
        for j in range(1, delta + 1):
            x = b + j if use_lower else b - j
            result.append(tidy_clause(at(x, drop_bounds=False)))
    logger.debug(f"Cooper on {v}: lambda={lam}, delta={delta}, {len(result)} disjunct(s)")
    return result


def eliminate_exists_int(v: TimedVar, f: Formula, cap: Optional[int] = None) -> Formula:
    from utils import qe_real
    if v.sort is not Sort.INT:
        return qe_real.eliminate_exists(v, f, cap)
    if not is_quantifier_free(f):
        raise ContractViolation("eliminate_exists_int needs a quantifier-free body")
    return qe_real.simplify(qe_real.eliminate_block([v], f, cap))


def decide_sentence_int(f: Formula, cap: Optional[int] = None) -> bool:
    from utils import qe_real
    if free_vars(f):
        raise ContractViolation("decide_sentence_int needs a closed formula")
    return qe_real.eliminate_all(f, cap) == TRUE


def _candidates(g: Formula, v: TimedVar, values: Dict[TimedVar, Value]) -> List[int]:
    roots: List[Fraction] = []
    delta = 1
    stack = [g]
    while stack:
        node = stack.pop()
        if isinstance(node, (Compare, Divides)):
            a = node.term.coeff(v)
            if a != 0:
                rest = node.term.drop(v).evaluate(values)
                roots.append(-rest / a)
                if isinstance(node, Divides):
                    delta = lcm(delta, node.modulus)
            continue
        stack.extend(getattr(node, "args", ()) or ())
        for attr in ("arg", "lhs", "rhs"):
            if hasattr(node, attr):
                stack.append(getattr(node, attr))
    out = set()
    for rho in roots or [Fraction(0)]:
        base = floor(rho)
        out.update(range(base - 1, base + delta + 2))
    lo = floor(min(roots)) if roots else 0
    out.update(range(lo - delta - 1, lo + 1))
    return sorted(out, key=lambda c: (abs(c), c))


def int_witness(f: Formula, vs: Sequence[TimedVar], cap: Optional[int] = None) -> Optional[Dict[TimedVar, Value]]:
    """Concrete integer (and boolean) model of f over vs, or None when unsatisfiable"""
    from utils import qe_real
    vs = list(vs)
    for v in vs:
        if v.sort is Sort.REAL:
            raise UnsupportedTheoryError(f"int_witness got real variable {v}")
    chain: List[Formula] = [normalize_nnf(f)]
    for v in vs:
        chain.append(qe_real.eliminate_block([v], chain[-1], cap))
    if chain[-1] != TRUE:
        return None
    values: Dict[TimedVar, Value] = {}
    for i in reversed(range(len(vs))):
        v, g = vs[i], chain[i]
        options = [True, False] if v.sort is Sort.BOOL else [Fraction(c) for c in _candidates(g, v, values)]
        for option in options:
            trial = dict(values)
            trial[v] = option
            if evaluate(g, trial):
                values = trial
                break
        else:
            logger.warning(f"No integer value found for {v} despite a satisfiable projection")
            return None
    return {v: values[v] for v in vs}
