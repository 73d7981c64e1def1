"""The .rlc specification language: parsing, printing, and lowering to a SystemModel."""
import itertools
import logging
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from models import (AtomicInitialCondition, Component, Connection, Direction, Port, Postulate,
                    SystemModel, desugar_prev, errors_only, validate)
from utils.errors import RelicError, SpecError
from utils.expr import (BoolLit, Binary, Divisible, Expr, Lowering, Mode, Num, Prev, Ref, Unary)
from utils.formula import TRUE, Formula, Relative, Sort, TimedVar, render

logger = logging.getLogger(__name__)

KEYWORDS = {"system", "domain", "component", "in", "out", "var", "guarantee", "initially", "connect",
            "external", "define", "postulate", "prev", "divides", "true", "false", "and", "or", "not", "k"}

_TOKEN = re.compile(r"""
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>(--|\#)[^\n]*)
  | (?P<number>\d+(\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=>|=>|->|<=|>=|!=|[<>=+\-*/()\[\]{};,:.])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SpecError(f"Unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line, line_start = line + 1, m.end()
        elif kind not in ("space", "comment"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Document


@dataclass(frozen=True)
class Clause:
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PortDecl:
    kind: str  # in, out or var
    name: str
    sort: Optional[Sort] = None


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    ports: Tuple[PortDecl, ...] = ()
    guarantees: Tuple[Clause, ...] = ()
    initials: Tuple[Clause, ...] = ()


@dataclass(frozen=True)
class SpecDocument:
    name: str
    domain: Sort = Sort.REAL
    components: Tuple[ComponentDecl, ...] = ()
    connections: Tuple[Tuple[str, str, str, str], ...] = ()
    externals: Tuple[Tuple[str, str], ...] = ()
    defines: Tuple[Tuple[str, Expr], ...] = ()
    postulates: Tuple[Clause, ...] = ()


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str) -> SpecError:
        return SpecError(message, self.tok.line, self.tok.column)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "name")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"Expected '{text}', found '{self.tok.text or 'end of input'}'")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self) -> str:
        tok = self.tok
        if tok.kind != "name" or tok.text in KEYWORDS:
            raise self.error(f"Expected a name, found '{tok.text or 'end of input'}'")
        self.i += 1
        return tok.text

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "number" or "." in tok.text:
            raise self.error(f"Expected an integer, found '{tok.text}'")
        self.i += 1
        return int(tok.text)

    def sort(self) -> Sort:
        try:
            sort = Sort(self.tok.text)
        except ValueError:
            raise self.error(f"Unknown sort '{self.tok.text}'")
        self.i += 1
        return sort

    # -- document ---------------------------------------------------------

    def document(self) -> SpecDocument:
        self.expect("system")
        name = self.ident()
        domain = Sort.REAL
        if self.accept("domain"):
            domain = self.sort()
            if domain is Sort.BOOL:
                raise self.error("System domain must be real or int")
        self.expect("{")
        components: List[ComponentDecl] = []
        connections: List[Tuple[str, str, str, str]] = []
        externals: List[Tuple[str, str]] = []
        defines: List[Tuple[str, Expr]] = []
        postulates: List[Clause] = []
        while not self.accept("}"):
            if self.accept("component"):
                components.append(self.component())
            elif self.accept("connect"):
                src = self.port_ref()
                self.expect("->")
                dst = self.port_ref()
                self.expect(";")
                connections.append(src + dst)
            elif self.accept("external"):
                externals.append(self.port_ref())
                while self.accept(","):
                    externals.append(self.port_ref())
                self.expect(";")
            elif self.accept("define"):
                macro = self.ident()
                self.expect("=")
                defines.append((macro, self.expr()))
                self.expect(";")
            elif self.at("postulate"):
                line = self.expect("postulate").line
                postulates.append(Clause(self.expr(), line))
                self.expect(";")
            else:
                raise self.error(f"Unexpected '{self.tok.text or 'end of input'}' in system body")
        if self.tok.kind != "eof":
            raise self.error("Trailing text after the system block")
        return SpecDocument(name, domain, tuple(components), tuple(connections), tuple(externals),
                            tuple(defines), tuple(postulates))

    def port_ref(self) -> Tuple[str, str]:
        comp = self.ident()
        self.expect(".")
        return comp, self.ident()

    def component(self) -> ComponentDecl:
        name = self.ident()
        self.expect("{")
        ports: List[PortDecl] = []
        guarantees: List[Clause] = []
        initials: List[Clause] = []
        while not self.accept("}"):
            kind = self.tok.text
            if kind in ("in", "out", "var"):
                self.i += 1
                port = self.ident()
                sort = self.sort() if self.accept(":") else None
                self.expect(";")
                ports.append(PortDecl(kind, port, sort))
            elif kind in ("guarantee", "initially"):
                line = self.tok.line
                self.i += 1
                clause = Clause(self.expr(), line)
                self.expect(";")
                (guarantees if kind == "guarantee" else initials).append(clause)
            else:
                raise self.error(f"Unexpected '{kind or 'end of input'}' in component {name}")
        return ComponentDecl(name, tuple(ports), tuple(guarantees), tuple(initials))

    # -- expressions ------------------------------------------------------

    def expr(self) -> Expr:
        lhs = self.implication()
        while self.accept("<=>"):
            lhs = Binary("<=>", lhs, self.implication())
        return lhs

    def implication(self) -> Expr:
        lhs = self.disjunction()
        if self.accept("=>"):
            return Binary("=>", lhs, self.implication())
        return lhs

    def disjunction(self) -> Expr:
        lhs = self.conjunction()
        while self.accept("or"):
            lhs = Binary("or", lhs, self.conjunction())
        return lhs

    def conjunction(self) -> Expr:
        lhs = self.negation()
        while self.accept("and"):
            lhs = Binary("and", lhs, self.negation())
        return lhs

    def negation(self) -> Expr:
        if self.accept("not"):
            return Unary("not", self.negation())
        return self.comparison()

    def comparison(self) -> Expr:
        lhs = self.sum()
        for op in ("=", "!=", "<=", ">=", "<", ">"):
            if self.accept(op):
                return Binary(op, lhs, self.sum())
        return lhs

    def sum(self) -> Expr:
        lhs = self.product()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            lhs = Binary(op, lhs, self.product())
        return lhs

    def product(self) -> Expr:
        lhs = self.unary()
        while self.at("*") or self.at("/"):
            op = self.tok.text
            self.i += 1
            lhs = Binary(op, lhs, self.unary())
        return lhs

    def unary(self) -> Expr:
        if self.accept("-"):
            return Unary("-", self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Num(Fraction(tok.text))
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if self.accept("prev"):
            self.expect("(")
            inner = self.expr()
            self.expect(",")
            init = self.expr()
            self.expect(")")
            return Prev(inner, init)
        if self.accept("divides"):
            self.expect("(")
            tok = self.tok
            modulus = self.integer()
            if modulus < 1:
                raise SpecError("Divisibility modulus must be positive", tok.line, tok.column)
            self.expect(",")
            inner = self.expr()
            self.expect(")")
            return Divisible(modulus, inner)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        name = self.ident()
        if not self.accept("["):
            return Ref(name)
        if self.accept("k"):
            offset = 0
            if self.accept("-"):
                offset = -self.integer()
            elif self.accept("+"):
                offset = self.integer()
            self.expect("]")
            return Ref(name, offset)
        step = self.integer()
        self.expect("]")
        return Ref(name, step, absolute=True)


def parse_spec(text: str) -> SpecDocument:
    doc = _Parser(text).document()
    logger.debug(f"Parsed system {doc.name}: {len(doc.components)} component(s), "
                 f"{len(doc.connections)} connection(s), {len(doc.postulates)} postulate(s)")
    return doc


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"Unexpected '{p.tok.text}' after expression")
    return e


def parse_formula(text: str, sorts: Optional[Dict[str, Sort]] = None, default: Sort = Sort.REAL) -> Formula:
    """Lower a free-standing expression; every name is a variable of the given (or default) sort"""
    sorts = sorts or {}
    lowering = Lowering(lambda name: TimedVar(name, Relative(0), sorts.get(name, default)))
    e = parse_expr(text)
    if any(isinstance(x, Ref) and x.absolute for x in _refs(e)):
        return lowering.formula(e, Mode(step=0))
    return lowering.formula(e)


def _refs(e: Expr) -> List[Ref]:
    if isinstance(e, Ref):
        return [e]
    if isinstance(e, Prev):
        return _refs(e.expr) + _refs(e.init)
    if isinstance(e, (Unary, Divisible)):
        return _refs(e.arg)
    if isinstance(e, Binary):
        return _refs(e.lhs) + _refs(e.rhs)
    return []


# ---------------------------------------------------------------------------
# Printing


def _decimal(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    for digits in range(1, 64):
        scaled = q * 10 ** digits
        if scaled.denominator == 1:
            text = str(abs(scaled.numerator)).rjust(digits + 1, "0")
            sign = "-" if q < 0 else ""
            return f"{sign}{text[:-digits]}.{text[-digits:]}"
    return f"({q.numerator} / {q.denominator})"


def print_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return _decimal(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Ref):
        if e.absolute:
            return f"{e.name}[{e.offset}]"
        if e.offset == 0:
            return e.name
        return f"{e.name}[k{e.offset:+d}]"
    if isinstance(e, Prev):
        return f"prev({print_expr(e.expr)}, {print_expr(e.init)})"
    if isinstance(e, Divisible):
        return f"divides({e.modulus}, {print_expr(e.arg)})"
    if isinstance(e, Unary):
        return f"(not {print_expr(e.arg)})" if e.op == "not" else f"(-{print_expr(e.arg)})"
    return f"({print_expr(e.lhs)} {e.op} {print_expr(e.rhs)})"


def print_spec(doc: SpecDocument) -> str:
    lines = [f"system {doc.name} domain {doc.domain.value} {{"]
    for c in doc.components:
        lines.append(f"  component {c.name} {{")
        for p in c.ports:
            suffix = f": {p.sort.value}" if p.sort is not None else ""
            lines.append(f"    {p.kind} {p.name}{suffix};")
        for g in c.guarantees:
            lines.append(f"    guarantee {print_expr(g.expr)};")
        for ini in c.initials:
            lines.append(f"    initially {print_expr(ini.expr)};")
        lines.append("  }")
    for a, x, b, y in doc.connections:
        lines.append(f"  connect {a}.{x} -> {b}.{y};")
    if doc.externals:
        lines.append("  external " + ", ".join(f"{c}.{p}" for c, p in doc.externals) + ";")
    for name, e in doc.defines:
        lines.append(f"  define {name} = {print_expr(e)};")
    for p in doc.postulates:
        lines.append(f"  postulate {print_expr(p.expr)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Lowering to a model


def build_model(doc: SpecDocument) -> Tuple[SystemModel, List[Postulate]]:
    """Resolve names, desugar prev, validate; raises SpecError with diagnostics"""
    components: List[Component] = []
    for c in doc.components:
        ports = tuple(Port(c.name, p.name, Direction(p.kind), p.sort or doc.domain)
                      for p in c.ports if p.kind != "var")
        locals_ = tuple((p.name, p.sort or doc.domain) for p in c.ports if p.kind == "var")
        components.append(Component(c.name, ports, locals_))
    skeleton = SystemModel(name=doc.name, components=tuple(components), domain=doc.domain)

    def lookup(comp: str, name: str) -> Port:
        port = skeleton.port(comp, name)
        if port is None:
            raise SpecError(f"Unknown port {comp}.{name}")
        return port

    connections = tuple(Connection(lookup(a, x), lookup(b, y)) for a, x, b, y in doc.connections)
    externals = tuple(lookup(c, p) for c, p in doc.externals)
    model = replace(skeleton, connections=connections, externals=externals)

    names = itertools.count()
    properties, initials = [], []
    for decl, comp in zip(doc.components, components):
        def resolve(name: str, comp: Component = comp):
            port = comp.port(name)
            if port is not None:
                return model.var(port)
            for local, sort in comp.locals:
                if local == name:
                    return TimedVar(f"{comp.name}.{local}", Relative(0), sort)
            return None

        lowering = Lowering(resolve)
        extra: List[Tuple[str, Sort]] = []
        for clause in decl.guarantees:
            try:
                out = desugar_prev(comp.name, clause.expr, lowering, doc.domain, names)
            except RelicError as e:
                raise SpecError(f"In a guarantee of {comp.name}: {str(e)}", clause.line, 1)
            properties.append(out.property)
            properties.extend(out.definitions)
            if out.initial is not None:
                initials.append(out.initial)
            extra.extend(out.locals)
        for clause in decl.initials:
            try:
                body = lowering.formula(clause.expr, Mode(step=0))
            except RelicError as e:
                raise SpecError(f"In an initial condition of {comp.name}: {str(e)}", clause.line, 1)
            initials.append(AtomicInitialCondition(comp.name, body))
        if extra:
            components[components.index(comp)] = replace(comp, locals=comp.locals + tuple(extra))
    model = replace(model, components=tuple(components), properties=tuple(properties),
                    initials=tuple(initials))

    diagnostics = validate(model)
    for d in diagnostics:
        if d.severity != "error":
            logger.warning(f"{d}")
    failures = errors_only(diagnostics)
    if failures:
        raise SpecError(f"System {doc.name} failed validation: " + "; ".join(str(d) for d in failures),
                        diagnostics=failures)

    macros: Dict[str, Expr] = dict(doc.defines)
    external = {model.var_name(p): model.var(p) for p in model.externals}
    lowering = Lowering(lambda name: external.get(name) or macros.get(name))
    postulates: List[Postulate] = []
    for i, clause in enumerate(doc.postulates, start=1):
        try:
            postulates.append(Postulate.lower(clause.expr, lowering, f"P{i}", print_expr(clause.expr)))
        except RelicError as e:
            raise SpecError(f"In postulate {i}: {str(e)}", clause.line, 1)
    logger.info(f"Built {doc.name}: {len(model.components)} component(s), {len(model.properties)} "
                f"propert(ies), order bound {sum(p.order for p in model.properties)}")
    return model, postulates


def load_spec(path: str) -> SpecDocument:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_spec(f.read())
    except OSError as e:
        raise SpecError(f"Failed to read specification {path}: {str(e)}")


def composed_spec(model: SystemModel, ssp: Formula, init: Formula) -> str:
    """A one-component system carrying a composition result, for reuse as a subsystem"""
    lines = [f"system {model.name}_composed domain {model.domain.value} {{", f"  component {model.name} {{"]
    for p in model.externals:
        lines.append(f"    {p.direction.value} {model.var_name(p)}: {p.sort.value};")
    lines.append(f"    guarantee {render(ssp)};")
    if init != TRUE:
        lines.append(f"    initially {render(init)};")
    lines.append("  }")
    if model.externals:
        lines.append("  external " + ", ".join(f"{model.name}.{model.var_name(p)}" for p in model.externals) + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"
