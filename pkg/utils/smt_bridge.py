"""SMT-LIB 2 front end for the linear fragment, decided by quantifier elimination."""
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Dict, List, Optional, Sequence, Tuple, Union

from utils import qe_int, qe_real
from utils.errors import ContractViolation, ResourceLimitError, SpecError, UnsupportedTheoryError
from utils.formula import (FALSE, TRUE, BoolVar, Divides, Formula, LinearTerm, Relative, Sort,
                           TimedVar, Value, all_vars, compare, compare2, conj, conjuncts, disj,
                           evaluate, format_rational, iff, implies, neg, rename_vars, sorted_vars)

logger = logging.getLogger(__name__)

SMT_SORTS = {"Real": Sort.REAL, "Int": Sort.INT, "Bool": Sort.BOOL}

_TOKEN = re.compile(r"""
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>;[^\n]*)
  | (?P<paren>[()])
  | (?P<quoted>\|[^|]*\|)
  | (?P<string>"[^"]*")
  | (?P<atom>[^\s()|";]+)
""", re.VERBOSE)


@dataclass(frozen=True)
class SmtToken:
    text: str
    line: int
    column: int


def tokenizer(text: str) -> List[SmtToken]:
    tokens: List[SmtToken] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SpecError(f"Unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line, line_start = line + 1, m.end()
        elif kind == "quoted":
            tokens.append(SmtToken(m.group()[1:-1], line, m.start() - line_start + 1))
        elif kind not in ("space", "comment"):
            tokens.append(SmtToken(m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    return tokens


SExpr = Union[SmtToken, List["SExpr"]]


def _read(tokens: List[SmtToken]) -> List[SExpr]:
    stack: List[List[SExpr]] = [[]]
    opened: List[SmtToken] = []
    for tok in tokens:
        if tok.text == "(":
            stack.append([])
            opened.append(tok)
        elif tok.text == ")":
            if len(stack) == 1:
                raise SpecError("Unbalanced ')'", tok.line, tok.column)
            done = stack.pop()
            opened.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) > 1:
        raise SpecError("Unclosed '('", opened[-1].line, opened[-1].column)
    return stack[0]


def _where(node: SExpr) -> SmtToken:
    while isinstance(node, list):
        if not node:
            return SmtToken("", 0, 0)
        node = node[0]
    return node


# Numeric values carry ite-guards: a list of (guard, term) alternatives
Cases = List[Tuple[Formula, LinearTerm]]


@dataclass
class SmtProblem:
    declarations: List[Tuple[str, Sort]] = field(default_factory=list)
    assertions: List[Formula] = field(default_factory=list)
    logic: str = ""
    wants_model: bool = False

    def var(self, name: str) -> TimedVar:
        for n, sort in self.declarations:
            if n == name:
                return TimedVar(n, Relative(0), sort)
        raise KeyError(name)

    def variables(self) -> List[TimedVar]:
        return [TimedVar(n, Relative(0), s) for n, s in self.declarations]

    def formula(self) -> Formula:
        return conj(*self.assertions)


@dataclass(frozen=True)
class SatResult:
    status: str  # sat, unsat or unknown
    model: Optional[Dict[str, Value]] = None
    reason: str = ""

    @property
    def exit_code(self) -> int:
        return {"sat": 0, "unsat": 1}.get(self.status, 2)


class _Builder:
    def __init__(self, problem: SmtProblem):
        self.problem = problem
        self.sorts = dict(problem.declarations)

    def error(self, message: str, node: SExpr) -> SpecError:
        tok = _where(node)
        return SpecError(message, tok.line, tok.column)

    def is_bool(self, node: SExpr) -> bool:
        if isinstance(node, SmtToken):
            return node.text in ("true", "false") or self.sorts.get(node.text) is Sort.BOOL
        head = node[0].text if node and isinstance(node[0], SmtToken) else ""
        if head == "ite":
            return self.is_bool(node[2])
        return head in ("and", "or", "not", "=>", "xor", "=", "distinct", "<", "<=", ">", ">=")

    def boolean(self, node: SExpr) -> Formula:
        if isinstance(node, SmtToken):
            if node.text == "true":
                return TRUE
            if node.text == "false":
                return FALSE
            if self.sorts.get(node.text) is Sort.BOOL:
                return BoolVar(TimedVar(node.text, Relative(0), Sort.BOOL))
            raise self.error(f"'{node.text}' is not a boolean", node)
        if not node or not isinstance(node[0], SmtToken):
            raise self.error("Malformed term", node)
        head, args = node[0].text, node[1:]
        if head == "and":
            return conj(*[self.boolean(a) for a in args])
        if head == "or":
            return disj(*[self.boolean(a) for a in args])
        if head == "not":
            return neg(self.boolean(args[0]))
        if head == "=>":
            parts = [self.boolean(a) for a in args]
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = implies(p, out)
            return out
        if head == "xor":
            return neg(iff(self.boolean(args[0]), self.boolean(args[1])))
        if head == "ite":
            c = self.boolean(args[0])
            return disj(conj(c, self.boolean(args[1])), conj(neg(c), self.boolean(args[2])))
        if head in ("=", "distinct") and all(self.is_bool(a) for a in args):
            parts = [self.boolean(a) for a in args]
            if head == "=":
                return conj(*[iff(a, b) for a, b in zip(parts, parts[1:])])
            return conj(*[neg(iff(parts[i], parts[j]))
                          for i in range(len(parts)) for j in range(i + 1, len(parts))])
        if head in ("=", "<", "<=", ">", ">="):
            values = [self.numeric(a) for a in args]
            return conj(*[self._compare(a, head, b) for a, b in zip(values, values[1:])])
        if head == "distinct":
            values = [self.numeric(a) for a in args]
            return conj(*[self._compare(values[i], "!=", values[j])
                          for i in range(len(values)) for j in range(i + 1, len(values))])
        raise self.error(f"Unsupported boolean operator '{head}'", node)

    @staticmethod
    def _compare(a: Cases, op: str, b: Cases) -> Formula:
        return disj(*[conj(ga, gb, compare2(ta, op, tb)) for ga, ta in a for gb, tb in b])

    def numeric(self, node: SExpr) -> Cases:
        if isinstance(node, SmtToken):
            text = node.text
            if re.fullmatch(r"\d+(\.\d+)?", text):
                return [(TRUE, LinearTerm.constant(Fraction(text)))]
            sort = self.sorts.get(text)
            if sort is None:
                raise self.error(f"Undeclared symbol '{text}'", node)
            if sort is Sort.BOOL:
                raise self.error(f"Boolean '{text}' used as a number", node)
            return [(TRUE, LinearTerm.var(TimedVar(text, Relative(0), sort)))]
        if not node or not isinstance(node[0], SmtToken):
            raise self.error("Malformed term", node)
        head, args = node[0].text, node[1:]
        if head == "ite":
            c = self.boolean(args[0])
            return ([(conj(c, g), t) for g, t in self.numeric(args[1])]
                    + [(conj(neg(c), g), t) for g, t in self.numeric(args[2])])
        if head in ("to_real", "to_int") and len(args) == 1:
            if head == "to_int":
                raise UnsupportedTheoryError("to_int is outside the linear fragment")
            return self.numeric(args[0])
        values = [self.numeric(a) for a in args]
        if not values:
            raise self.error(f"'{head}' needs arguments", node)
        if head == "-" and len(values) == 1:
            return [(g, -t) for g, t in values[0]]
        if head in ("+", "-", "*", "/"):
            out = values[0]
            for v in values[1:]:
                out = [(conj(ga, gb), self._arith(head, ta, tb, node)) for ga, ta in out for gb, tb in v]
            return [(g, t) for g, t in out if g != FALSE]
        raise self.error(f"Unsupported arithmetic operator '{head}'", node)

    def _arith(self, op: str, a: LinearTerm, b: LinearTerm, node: SExpr) -> LinearTerm:
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            if a.is_constant():
                return b.scale(a.const)
            if b.is_constant():
                return a.scale(b.const)
            tok = _where(node)
            raise UnsupportedTheoryError(f"Nonlinear product {a} * {b} (line {tok.line}, column {tok.column})")
        if not b.is_constant():
            raise UnsupportedTheoryError(f"Division by non-constant {b}")
        if b.const == 0:
            raise self.error("Division by zero", node)
        return a.scale(1 / b.const)


def _sort_of(node: SExpr, builder: _Builder) -> Sort:
    if not isinstance(node, SmtToken) or node.text not in SMT_SORTS:
        raise builder.error(f"Unsupported sort {node}", node)
    return SMT_SORTS[node.text]


def parse_smtlib(text: str) -> SmtProblem:
    problem = SmtProblem()
    builder = _Builder(problem)
    for cmd in _read(tokenizer(text)):
        if not isinstance(cmd, list) or not cmd or not isinstance(cmd[0], SmtToken):
            raise builder.error("Expected a command", cmd)
        name, args = cmd[0].text, cmd[1:]
        if name == "set-logic":
            problem.logic = args[0].text if args and isinstance(args[0], SmtToken) else ""
        elif name in ("set-info", "set-option"):
            continue
        elif name == "declare-fun":
            if len(args) != 3 or not isinstance(args[1], list):
                raise builder.error("Malformed declare-fun", cmd)
            if args[1]:
                raise builder.error(f"Function symbols with arguments are not supported ({args[0].text})", cmd)
            problem.declarations.append((args[0].text, _sort_of(args[2], builder)))
        elif name == "declare-const":
            if len(args) != 2:
                raise builder.error("Malformed declare-const", cmd)
            problem.declarations.append((args[0].text, _sort_of(args[1], builder)))
        elif name == "assert":
            if len(args) != 1:
                raise builder.error("assert takes one term", cmd)
            builder.sorts = dict(problem.declarations)
            problem.assertions.append(builder.boolean(args[0]))
        elif name == "get-model":
            problem.wants_model = True
        elif name in ("check-sat", "exit"):
            continue
        else:
            raise builder.error(f"Unknown command '{name}'", cmd)
    logger.debug(f"Parsed SMT problem: {len(problem.declarations)} declaration(s), "
                 f"{len(problem.assertions)} assertion(s), logic '{problem.logic}'")
    return problem


def format_model(model: Dict[str, Value]) -> str:
    lines = []
    for name, value in model.items():
        if isinstance(value, bool):
            lines.append(f"{name} {'true' if value else 'false'}")
        else:
            q = Fraction(value)
            lines.append(f"{name} {q.numerator}/{q.denominator}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Deciding


def _complete(model: Dict[TimedVar, Value], vs: Sequence[TimedVar]) -> Dict[TimedVar, Value]:
    out = dict(model)
    for v in vs:
        out.setdefault(v, False if v.sort is Sort.BOOL else Fraction(0))
    return out


def _solve_pure(f: Formula, vs: List[TimedVar], cap: Optional[int], rounds: int) -> SatResult:
    if not any(v.sort is Sort.REAL for v in vs):
        model = qe_int.int_witness(f, vs, cap)
        if model is None:
            return SatResult("unsat")
        return _checked(f, model, vs)
    witness, model = qe_real.find_model(f, vs, rounds)
    if witness is None:
        return SatResult("unsat")
    if model is None:
        return SatResult("unknown", reason="nonstandard witness did not concretize")
    return _checked(f, model, vs)


def _checked(f: Formula, model: Dict[TimedVar, Value], vs: Sequence[TimedVar]) -> SatResult:
    full = _complete(model, vs)
    if not evaluate(f, full):
        logger.warning("Model failed validation against the assertions")
        return SatResult("unknown", reason="model failed validation")
    return SatResult("sat", {v.name: full[v] for v in sorted_vars(full)})


def check_sat(p: SmtProblem, cap: Optional[int] = None, rounds: int = 64, logic: str = "auto",
              refine_cap: int = 32, enum_cap: int = 64) -> SatResult:
    """Satisfiability of the conjunction of assertions via existential elimination"""
    vs = p.variables()
    sorts = {v.sort for v in vs}
    if logic == "int" and Sort.REAL in sorts:
        raise ContractViolation("Logic 'int' given but the problem declares Real symbols")
    if logic == "real" and Sort.INT in sorts:
        raise ContractViolation("Logic 'real' given but the problem declares Int symbols")
    try:
        if logic == "mixed" or {Sort.INT, Sort.REAL} <= sorts:
            return check_sat_mixed(p, cap, rounds, refine_cap, enum_cap)
        f = p.formula()
        if f == FALSE:
            return SatResult("unsat")
        return _solve_pure(f, vs, cap, rounds)
    except ResourceLimitError as e:
        logger.warning(f"SAT check ran out of budget: {str(e)}")
        return SatResult("unknown", reason="budget")
    except UnsupportedTheoryError as e:
        logger.warning(f"SAT check unsupported: {str(e)}")
        return SatResult("unknown", reason="unsupported")


def _components(assertions: List[Formula]) -> List[List[Formula]]:
    """Group assertions that share variables"""
    groups: List[Tuple[set, List[Formula]]] = []
    for a in assertions:
        names = {v.name for v in all_vars(a)}
        merged = [g for g in groups if g[0] & names]
        rest = [g for g in groups if not g[0] & names]
        group = (set(names), [a])
        for g in merged:
            group[0].update(g[0])
            group[1][:0] = g[1]
        groups = rest + [group]
    return [g[1] for g in groups]


def _range_of(parts: List[Formula], v: TimedVar) -> Optional[Tuple[int, int]]:
    """Integer range of v from single-variable bound assertions"""
    lo = hi = None
    for part in parts:
        for lit in conjuncts(part):
            if not hasattr(lit, "term") or isinstance(lit, Divides) or lit.term.variables() != (v,):
                continue
            a, c = lit.term.coeff(v), lit.term.const
            value = -c / a
            op = lit.op if a > 0 else {"<=": ">=", ">=": "<=", "=": "=", "!=": "!=",
                                        "<": ">", ">": "<"}[lit.op]
            if op in ("<=", "=", "<"):
                bound = floor(value) if op != "<" else ceil(value) - 1
                hi = bound if hi is None else min(hi, bound)
            if op in (">=", "=", ">"):
                bound = ceil(value) if op != ">" else floor(value) + 1
                lo = bound if lo is None else max(lo, bound)
    if lo is None or hi is None:
        return None
    return lo, hi


def _relax(v: TimedVar) -> TimedVar:
    return TimedVar(v.name, v.index, Sort.REAL) if v.sort is Sort.INT else v


def _solve_mixed(parts: List[Formula], cap: Optional[int], rounds: int, refine_cap: int,
                 enum_cap: int) -> Tuple[str, Dict[TimedVar, Value]]:
    f = conj(*parts)
    if any(isinstance(x, Divides) for x in _atoms(f)):
        raise UnsupportedTheoryError("Divisibility constraints in a mixed integer/real problem")
    ints = [v for v in sorted_vars(all_vars(f)) if v.sort is Sort.INT]
    relaxed = rename_vars(f, _relax)
    for v in ints:
        span = _range_of(parts, v)
        if span is not None and span[1] - span[0] + 1 <= enum_cap:
            rv = _relax(v)
            # Bounded integer as a finite disjunction of values
            relaxed = conj(relaxed, disj(*[compare2(LinearTerm.var(rv), "=", LinearTerm.constant(c))
                                          for c in range(span[0], span[1] + 1)]))
    seen: List[Dict[TimedVar, Value]] = []
    for round_no in range(refine_cap + 1):
        vs = sorted_vars(all_vars(relaxed))
        witness, model = qe_real.find_model(relaxed, vs, rounds)
        if witness is None:
            return "unsat", {}
        if model is None:
            return "unknown", {}
        if model in seen:
            raise ContractViolation("Refinement re-proposed an excluded assignment")
        seen.append(model)
        fractional = [v for v in ints if Fraction(model[_relax(v)]).denominator != 1]
        if not fractional:
            back = {v: model[_relax(v)] if v.sort is Sort.INT else model[v] for v in sorted_vars(all_vars(f))}
            return "sat", back
        v = fractional[0]
        value = Fraction(model[_relax(v)])
        x = LinearTerm.var(_relax(v))
        logger.debug(f"Refinement {round_no + 1}: excluding {v} in ({floor(value)}, {ceil(value)})")
        relaxed = conj(relaxed, disj(compare(x - floor(value), "<="), compare(x - ceil(value), ">=")))
    return "unknown", {}


def _atoms(f: Formula) -> List[Formula]:
    out: List[Formula] = []
    stack = [f]
    while stack:
        g = stack.pop()
        if hasattr(g, "args"):
            stack.extend(g.args)
        elif hasattr(g, "lhs"):
            stack.extend([g.lhs, g.rhs])
        elif hasattr(g, "arg"):
            stack.append(g.arg)
        else:
            out.append(g)
    return out


def check_sat_mixed(p: SmtProblem, cap: Optional[int] = None, rounds: int = 64, refine_cap: int = 32,
                    enum_cap: int = 64) -> SatResult:
    """Integers relaxed to reals with bounded enumeration and unit-interval refinement"""
    vs = p.variables()
    model: Dict[TimedVar, Value] = {}
    for parts in _components(p.assertions):
        f = conj(*parts)
        if f == FALSE:
            return SatResult("unsat")
        if f == TRUE:
            continue
        sorts = {v.sort for v in all_vars(f)}
        if not {Sort.INT, Sort.REAL} <= sorts:
            result = _solve_pure(f, sorted_vars(all_vars(f)), cap, rounds)
            if result.status != "sat":
                return result
            model.update({v: result.model[v.name] for v in all_vars(f)})
            continue
        status, found = _solve_mixed(parts, cap, rounds, refine_cap, enum_cap)
        if status != "sat":
            return SatResult(status, reason="" if status == "unsat" else "refinement cap")
        model.update(found)
    return _checked(p.formula(), model, vs)
