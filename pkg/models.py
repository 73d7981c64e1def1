"""System descriptions: components, ports, contracts and the interconnection relation."""
import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, NamedTuple, Optional, Tuple

from utils.errors import ContractViolation, ShiftDomainError
from utils.expr import BeforeStart, Binary, Divisible, Expr, Lowering, Mode, Num, Prev, Ref
from utils.formula import (TRUE, BoolVar, Formula, LinearTerm, Relative, Sort, TimedVar, all_vars,
                           compare2, conj, iff, instantiate, is_quantifier_free, normalize_window,
                           offset_range, order)

logger = logging.getLogger(__name__)


class Direction(str, Enum):
    IN = "in"
    OUT = "out"


@dataclass(frozen=True)
class Port:
    component: str
    name: str
    direction: Direction
    sort: Sort = Sort.REAL

    @property
    def qualified(self) -> str:
        return f"{self.component}.{self.name}"

    def __str__(self) -> str:
        return self.qualified


@dataclass(frozen=True)
class Component:
    name: str
    ports: Tuple[Port, ...] = ()
    locals: Tuple[Tuple[str, Sort], ...] = ()

    def port(self, name: str) -> Optional[Port]:
        for p in self.ports:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class AtomicProperty:
    """A guarantee over one component's ports and locals, normalized so its newest offset is 0."""
    owner: str
    body: Formula
    order: int = field(init=False)

    def __post_init__(self):
        for v in all_vars(self.body):
            if not v.is_relative:
                raise ShiftDomainError(f"Property of {self.owner} uses absolute index {v}")
        object.__setattr__(self, "body", normalize_window(self.body))
        object.__setattr__(self, "order", order(self.body))


@dataclass(frozen=True)
class AtomicInitialCondition:
    owner: str
    body: Formula


@dataclass(frozen=True)
class Connection:
    source: Port
    target: Port

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}"


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    message: str
    subjects: Tuple[str, ...] = ()
    severity: str = "error"

    def __str__(self) -> str:
        return f"[{self.rule}] {self.message}"


@dataclass(frozen=True)
class SystemModel:
    name: str = "system"
    components: Tuple[Component, ...] = ()
    properties: Tuple[AtomicProperty, ...] = ()
    initials: Tuple[AtomicInitialCondition, ...] = ()
    connections: Tuple[Connection, ...] = ()
    externals: Tuple[Port, ...] = ()
    domain: Sort = Sort.REAL

    def component(self, name: str) -> Optional[Component]:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def port(self, component: str, name: str) -> Optional[Port]:
        c = self.component(component)
        return c.port(name) if c is not None else None

    def var_name(self, port: Port) -> str:
        """External ports keep their bare name, everything else is qualified"""
        return port.name if port in self.externals else port.qualified

    def var(self, port: Port) -> TimedVar:
        return TimedVar(self.var_name(port), Relative(0), port.sort)

    @property
    def internals(self) -> FrozenSet[Port]:
        used = {c.source for c in self.connections} | {c.target for c in self.connections}
        return frozenset(p for p in used if p not in self.externals)

    @property
    def external_names(self) -> FrozenSet[str]:
        return frozenset(self.var_name(p) for p in self.externals)

    def external_vars(self) -> List[TimedVar]:
        return [self.var(p) for p in self.externals]

    def is_hidden(self, v: TimedVar) -> bool:
        return v.name not in self.external_names

    def known_names(self) -> FrozenSet[str]:
        names = {self.var_name(p) for c in self.components for p in c.ports}
        names.update(f"{c.name}.{n}" for c in self.components for n, _ in c.locals)
        return frozenset(names)

    def connection_formula(self, c: Connection) -> Formula:
        a, b = self.var(c.source), self.var(c.target)
        if a.sort is Sort.BOOL and b.sort is Sort.BOOL:
            return iff(BoolVar(a), BoolVar(b))
        return compare2(LinearTerm.var(a), "=", LinearTerm.var(b))

    def connection_formulas(self) -> List[Formula]:
        return [self.connection_formula(c) for c in self.connections]


def validate(s: SystemModel) -> List[Diagnostic]:
    """Check the structural rules; an empty list (or only warnings) means ok"""
    out: List[Diagnostic] = []
    comp_names = Counter(c.name for c in s.components)
    for name, n in comp_names.items():
        if n > 1:
            out.append(Diagnostic("DUPLICATE_COMPONENT", f"Component {name} declared {n} times", (name,)))
    declared = set()
    for c in s.components:
        seen = Counter(p.name for p in c.ports)
        for name, n in seen.items():
            if n > 1:
                out.append(Diagnostic("DUPLICATE_PORT", f"Port {c.name}.{name} declared {n} times",
                                      (f"{c.name}.{name}",)))
        declared.update(c.ports)

    drivers: Dict[Port, int] = Counter()
    for conn in s.connections:
        for end in (conn.source, conn.target):
            if end not in declared:
                out.append(Diagnostic("UNKNOWN_PORT", f"Connection {conn} uses undeclared port {end}", (str(end),)))
        if conn.source.direction is not Direction.OUT:
            out.append(Diagnostic("DIRECTION", f"Connection {conn} starts at input port {conn.source}",
                                  (str(conn.source),)))
        if conn.target.direction is not Direction.IN:
            out.append(Diagnostic("DIRECTION", f"Connection {conn} ends at output port {conn.target}",
                                  (str(conn.target),)))
        if conn.source.sort is not conn.target.sort:
            out.append(Diagnostic(
                "SORT_MISMATCH",
                f"Connection {conn} joins {conn.source.sort.value} to {conn.target.sort.value}",
                (str(conn.source), str(conn.target))))
        drivers[conn.target] += 1
    for port, n in drivers.items():
        if n > 1:
            out.append(Diagnostic("MULTI_DRIVER", f"Input {port} is driven by {n} connections", (str(port),)))

    bare = Counter()
    for p in s.externals:
        if p not in declared:
            out.append(Diagnostic("UNKNOWN_PORT", f"External {p} is not declared", (str(p),)))
        bare[p.name] += 1
    for name, n in bare.items():
        if n > 1:
            clashing = tuple(str(p) for p in s.externals if p.name == name)
            out.append(Diagnostic("EXTERNAL_NAME_CLASH", f"{n} external ports are named {name}", clashing))

    connected = {c.source for c in s.connections} | {c.target for c in s.connections}
    for p in sorted(declared, key=lambda p: p.qualified):
        if p not in connected and p not in s.externals:
            out.append(Diagnostic("UNCONNECTED_PORT", f"Port {p} is neither connected nor external",
                                  (str(p),), severity="warning"))

    known = s.known_names()
    for prop in s.properties:
        if s.component(prop.owner) is None:
            out.append(Diagnostic("UNKNOWN_COMPONENT", f"Property owner {prop.owner} is not a component",
                                  (prop.owner,)))
        if not is_quantifier_free(prop.body):
            out.append(Diagnostic("QUANTIFIED_PROPERTY", f"Property of {prop.owner} has quantifiers",
                                  (prop.owner,)))
        for v in sorted(all_vars(prop.body), key=TimedVar.key):
            if v.name not in known:
                out.append(Diagnostic("UNRESOLVED_VARIABLE", f"Property of {prop.owner} uses unknown {v.name}",
                                      (prop.owner, v.name)))

    bound = system_order_bound(s)
    for ini in s.initials:
        for v in sorted(all_vars(ini.body), key=TimedVar.key):
            if v.is_relative:
                out.append(Diagnostic("INITIAL_INDEX", f"Initial condition of {ini.owner} uses relative {v}",
                                      (ini.owner, v.name)))
                continue
            if v.name not in known:
                out.append(Diagnostic("UNRESOLVED_VARIABLE",
                                      f"Initial condition of {ini.owner} uses unknown {v.name}",
                                      (ini.owner, v.name)))
            if v.step >= bound:
                out.append(Diagnostic("INITIAL_STEP",
                                      f"Initial condition of {ini.owner} pins step {v.step}, "
                                      f"beyond the system order bound {bound}",
                                      (ini.owner, str(v))))
    return out


def errors_only(diagnostics: List[Diagnostic]) -> List[Diagnostic]:
    return [d for d in diagnostics if d.severity == "error"]


def system_order_bound(s: SystemModel) -> int:
    return sum(p.order for p in s.properties)


# ---------------------------------------------------------------------------
# prev desugaring


class Desugared(NamedTuple):
    property: AtomicProperty
    initial: Optional[AtomicInitialCondition]
    locals: Tuple[Tuple[str, Sort], ...] = ()
    definitions: Tuple[AtomicProperty, ...] = ()


def _hoist(e: Expr, table: List[Tuple[str, Expr]], names: Iterator[int]) -> Expr:
    """Replace prev of a compound expression by prev of a fresh local"""
    if isinstance(e, Prev):
        inner = _hoist(e.expr, table, names)
        if not isinstance(inner, (Ref, Num)):
            name = f"_prev{next(names)}"
            table.append((name, inner))
            inner = Ref(name)
        return Prev(inner, e.init)
    if isinstance(e, Binary):
        return Binary(e.op, _hoist(e.lhs, table, names), _hoist(e.rhs, table, names))
    if isinstance(e, Divisible):
        return Divisible(e.modulus, _hoist(e.arg, table, names))
    if hasattr(e, "arg"):
        return type(e)(e.op, _hoist(e.arg, table, names))
    return e


def desugar_prev(owner: str, e: Expr, lowering: Lowering, domain: Sort = Sort.REAL,
                 names: Optional[Iterator[int]] = None) -> Desugared:
    """Lower a guarantee with prev(.,.) into a relative property plus the early-step instances

    At step 0, prev(e, c) stands for c: the early instances use the init value and
    leave e unconstrained there, e.g. u = 0.2 * prev(e, 0) pins u(0) = 0, not e(0).
    """
    table: List[Tuple[str, Expr]] = []
    hoisted = _hoist(e, table, names if names is not None else itertools.count())
    fresh: Dict[str, TimedVar] = {}
    for name, inner in table:
        sort = Sort.BOOL if lowering.is_bool(inner) else domain
        fresh[name] = TimedVar(f"{owner}.{name}", Relative(0), sort)

    def resolve(name: str):
        return fresh.get(name) or lowering.resolve(name)

    low = Lowering(resolve)
    raw = low.formula(hoisted)
    prop = AtomicProperty(owner, raw)
    span = offset_range(raw)
    newest = span[1] if span else 0

    instances: List[Formula] = []
    for step in range(prop.order):
        try:
            instances.append(low.formula(hoisted, Mode(step=step - newest)))
        except (BeforeStart, ShiftDomainError):
            logger.debug(f"No early instance of {owner}'s property at step {step}")
    initial = None
    body = conj(*instances) if instances else TRUE
    if body != TRUE:
        initial = AtomicInitialCondition(owner, body)

    definitions = tuple(
        AtomicProperty(owner, low.formula(Binary("=", Ref(name), inner))) for name, inner in table)
    fresh_locals = tuple((name, fresh[name].sort) for name, _ in table)
    if fresh_locals:
        logger.debug(f"Introduced locals {[n for n, _ in fresh_locals]} for {owner}")
    return Desugared(prop, initial, fresh_locals, definitions)


# ---------------------------------------------------------------------------
# Postulated system properties


@dataclass(frozen=True)
class Postulate:
    """A system property to verify: relative body plus its instances at steps before its order."""
    body: Formula
    order: int = 0
    early: Tuple[Optional[Formula], ...] = ()
    name: str = ""
    source: str = ""

    def at(self, step: int) -> Optional[Formula]:
        """The obligation at an absolute step, or None when nothing is required there"""
        if step >= self.order:
            return instantiate(self.body, step)
        return self.early[step] if step < len(self.early) else None

    @staticmethod
    def from_formula(f: Formula, name: str = "", source: str = "") -> "Postulate":
        if not is_quantifier_free(f):
            raise ContractViolation("Postulates must be quantifier-free")
        body = normalize_window(f)
        d = order(body)
        return Postulate(body, d, (None,) * d, name, source or str(f))

    @staticmethod
    def lower(e: Expr, lowering: Lowering, name: str = "", source: str = "") -> "Postulate":
        raw = lowering.formula(e)
        base = Postulate.from_formula(raw, name, source)
        span = offset_range(raw)
        newest = span[1] if span else 0
        early: List[Optional[Formula]] = []
        for step in range(base.order):
            try:
                early.append(lowering.formula(e, Mode(step=step - newest)))
            except (BeforeStart, ShiftDomainError):
                early.append(None)
        return Postulate(base.body, base.order, tuple(early), name, base.source)
