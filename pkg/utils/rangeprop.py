"""Range propagation and relation extraction over dataflow block graphs."""
import json
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

from models import (AtomicInitialCondition, AtomicProperty, Component, Connection, Diagnostic,
                    Direction, Port, SystemModel, errors_only, system_order_bound)
from utils import qe_real
from utils.compose import (CompositionResult, initial_condition, strongest_property_static,
                           strongest_property_timed)
from utils.errors import ContractViolation, SpecError
from utils.expr import Lowering, Num
from utils.formula import (Absolute, BoolVar, Clause, Compare, Formula, LinearTerm, Relative, Sort, TimedVar,
                           compare2, conj, disj, dnf_clauses, free_vars, holds, iff, implies, neg,
                           sorted_vars)

logger = logging.getLogger(__name__)

Bound = Optional[Fraction]


# ---------------------------------------------------------------------------
# Blocks


@dataclass(frozen=True)
class Input:
    name: str
    low: Bound = None
    high: Bound = None

    inputs = ()


@dataclass(frozen=True)
class Output:
    name: str

    inputs = ("in",)


@dataclass(frozen=True)
class Constant:
    name: str
    value: Fraction

    inputs = ()


@dataclass(frozen=True)
class Gain:
    name: str
    factor: Fraction

    inputs = ("in",)


@dataclass(frozen=True)
class Sum:
    name: str
    signs: Tuple[int, ...] = (1, 1)

    @property
    def inputs(self) -> Tuple[str, ...]:
        return tuple(f"in{i + 1}" for i in range(len(self.signs)))


@dataclass(frozen=True)
class CompareBlock:
    """out <=> in op rhs, or out <=> in1 op in2 when rhs is None"""
    name: str
    op: str
    rhs: Optional[Fraction] = Fraction(0)

    @property
    def inputs(self) -> Tuple[str, ...]:
        return ("in",) if self.rhs is not None else ("in1", "in2")


@dataclass(frozen=True)
class Switch:
    name: str

    inputs = ("then", "cond", "else")


@dataclass(frozen=True)
class UnitDelay:
    name: str
    init: Fraction = Fraction(0)

    inputs = ("in",)


@dataclass(frozen=True)
class Relu:
    name: str

    inputs = ("in",)


Block = Union[Input, Output, Constant, Gain, Sum, CompareBlock, Switch, UnitDelay, Relu]


@dataclass(frozen=True)
class Wire:
    source: str
    target: str
    pin: str

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}.{self.pin}"


@dataclass(frozen=True)
class BlockGraph:
    name: str = "graph"
    blocks: Tuple[Block, ...] = ()
    wires: Tuple[Wire, ...] = ()
    algebraic_ok: bool = False

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def driver(self, target: str, pin: str) -> str:
        for w in self.wires:
            if w.target == target and w.pin == pin:
                return w.source
        raise KeyError(f"{target}.{pin}")

    @property
    def input_blocks(self) -> List[Input]:
        return [b for b in self.blocks if isinstance(b, Input)]

    @property
    def has_delay(self) -> bool:
        return any(isinstance(b, UnitDelay) for b in self.blocks)


@dataclass(frozen=True)
class Interval:
    low: Bound = None
    high: Bound = None

    def __add__(self, other: "Interval") -> "Interval":
        lo = None if self.low is None or other.low is None else self.low + other.low
        hi = None if self.high is None or other.high is None else self.high + other.high
        return Interval(lo, hi)

    def scale(self, c: Fraction) -> "Interval":
        if c >= 0:
            return Interval(None if self.low is None else self.low * c, None if self.high is None else self.high * c)
        return Interval(None if self.high is None else self.high * c, None if self.low is None else self.low * c)

    def hull(self, other: "Interval") -> "Interval":
        lo = None if self.low is None or other.low is None else min(self.low, other.low)
        hi = None if self.high is None or other.high is None else max(self.high, other.high)
        return Interval(lo, hi)

    def relu(self) -> "Interval":
        return Interval(Fraction(0) if self.low is None else max(self.low, Fraction(0)),
                        None if self.high is None else max(self.high, Fraction(0)))

    def __str__(self) -> str:
        lo = "-inf" if self.low is None else _fmt(self.low)
        hi = "inf" if self.high is None else _fmt(self.high)
        return f"[{lo}, {hi}]"


@dataclass(frozen=True)
class Range:
    """Interval reading of a range formula, with strictness per bound"""
    low: Bound = None
    high: Bound = None
    low_strict: bool = False
    high_strict: bool = False

    def __str__(self) -> str:
        lo = "(-inf" if self.low is None else ("(" if self.low_strict else "[") + _fmt(self.low)
        hi = "inf)" if self.high is None else _fmt(self.high) + (")" if self.high_strict else "]")
        return f"{lo}, {hi}"


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Relations


def pin_var(b: Block, pin: str = "out", sort: Sort = Sort.REAL) -> TimedVar:
    """Input and Output blocks are named after themselves, other pins are qualified"""
    if isinstance(b, (Input, Output)):
        return TimedVar(b.name, Relative(0), sort)
    return TimedVar(f"{b.name}.{pin}", Relative(0), sort)


def _t(b: Block, pin: str) -> LinearTerm:
    return LinearTerm.var(pin_var(b, pin))


def block_relation(b: Block) -> Formula:
    """Exact input-output predicate of one block (UnitDelay's init is in its initial condition)"""
    if isinstance(b, Gain):
        return compare2(_t(b, "out"), "=", _t(b, "in").scale(b.factor))
    if isinstance(b, Constant):
        return compare2(_t(b, "out"), "=", LinearTerm.constant(b.value))
    if isinstance(b, Sum):
        total = LinearTerm.constant(0)
        for sign, pin in zip(b.signs, b.inputs):
            total = total + _t(b, pin).scale(sign)
        return compare2(_t(b, "out"), "=", total)
    if isinstance(b, CompareBlock):
        out = BoolVar(pin_var(b, "out", Sort.BOOL))
        if b.rhs is None:
            return iff(out, compare2(_t(b, "in1"), b.op, _t(b, "in2")))
        return iff(out, compare2(_t(b, "in"), b.op, LinearTerm.constant(b.rhs)))
    if isinstance(b, Switch):
        cond = BoolVar(pin_var(b, "cond", Sort.BOOL))
        return conj(implies(cond, compare2(_t(b, "out"), "=", _t(b, "then"))),
                    implies(neg(cond), compare2(_t(b, "out"), "=", _t(b, "else"))))
    if isinstance(b, Relu):
        x = _t(b, "in")
        return conj(implies(compare2(x, ">=", 0), compare2(_t(b, "out"), "=", x)),
                    implies(compare2(x, "<", 0), compare2(_t(b, "out"), "=", 0)))
    if isinstance(b, UnitDelay):
        past = pin_var(b, "in").at(Relative(-1))
        return compare2(_t(b, "out"), "=", LinearTerm.var(past))
    return conj()


def delay_initial(b: UnitDelay) -> Formula:
    return compare2(LinearTerm.var(pin_var(b, "out").at(Absolute(0))), "=", LinearTerm.constant(b.init))


def _pin_sort(b: Block, pin: str) -> Sort:
    if isinstance(b, Switch) and pin == "cond":
        return Sort.BOOL
    if isinstance(b, CompareBlock) and pin == "out":
        return Sort.BOOL
    return Sort.REAL


def validate_graph(g: BlockGraph) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    names = {b.name for b in g.blocks}
    if len(names) != len(g.blocks):
        out.append(Diagnostic("DUPLICATE_BLOCK", "Block names must be unique"))
    driven: Dict[Tuple[str, str], int] = {}
    for w in g.wires:
        if w.source not in names or w.target not in names:
            out.append(Diagnostic("UNKNOWN_BLOCK", f"Wire {w} names an unknown block", (str(w),)))
            continue
        if w.pin not in g.block(w.target).inputs:
            out.append(Diagnostic("UNKNOWN_PIN", f"Wire {w} targets an unknown pin", (str(w),)))
        if isinstance(g.block(w.source), Output):
            out.append(Diagnostic("DIRECTION", f"Wire {w} starts at an output block", (str(w),)))
        driven[(w.target, w.pin)] = driven.get((w.target, w.pin), 0) + 1
    for b in g.blocks:
        for pin in b.inputs:
            n = driven.get((b.name, pin), 0)
            if n == 0:
                out.append(Diagnostic("UNDRIVEN_PIN", f"Pin {b.name}.{pin} has no driver", (f"{b.name}.{pin}",)))
            elif n > 1:
                out.append(Diagnostic("MULTI_DRIVER", f"Pin {b.name}.{pin} has {n} drivers", (f"{b.name}.{pin}",)))
    if not out and not g.algebraic_ok:
        loop = _algebraic_loop(g)
        if loop:
            out.append(Diagnostic("ALGEBRAIC_LOOP", f"Loop without a unit delay: {' -> '.join(loop)}",
                                  tuple(loop)))
    return out


def _algebraic_loop(g: BlockGraph) -> Optional[List[str]]:
    succ: Dict[str, List[str]] = {b.name: [] for b in g.blocks}
    for w in g.wires:
        if not isinstance(g.block(w.target), UnitDelay):
            succ[w.source].append(w.target)
    state: Dict[str, int] = {}
    path: List[str] = []

    def visit(n: str) -> Optional[List[str]]:
        state[n] = 1
        path.append(n)
        for m in succ[n]:
            if state.get(m) == 1:
                return path[path.index(m):] + [m]
            if m not in state:
                found = visit(m)
                if found:
                    return found
        state[n] = 2
        path.pop()
        return None

    for b in g.blocks:
        if b.name not in state:
            found = visit(b.name)
            if found:
                return found
    return None


def graph_model(g: BlockGraph) -> SystemModel:
    """The graph as a component system: one component per block, wires as connections"""
    failures = errors_only(validate_graph(g))
    if failures:
        raise SpecError(f"Graph {g.name} is malformed: " + "; ".join(str(d) for d in failures),
                        diagnostics=failures)
    components, properties, initials = [], [], []
    ports: Dict[Tuple[str, str], Port] = {}
    externals: List[Port] = []
    for b in g.blocks:
        if isinstance(b, Input):
            p = Port(b.name, b.name, Direction.OUT)
            ports[(b.name, "out")] = p
            externals.append(p)
            components.append(Component(b.name, (p,)))
            continue
        if isinstance(b, Output):
            p = Port(b.name, b.name, Direction.IN)
            ports[(b.name, "in")] = p
            externals.append(p)
            components.append(Component(b.name, (p,)))
            continue
        own = [Port(b.name, pin, Direction.IN, _pin_sort(b, pin)) for pin in b.inputs]
        own.append(Port(b.name, "out", Direction.OUT, _pin_sort(b, "out")))
        for p in own:
            ports[(b.name, p.name)] = p
        components.append(Component(b.name, tuple(own)))
        properties.append(AtomicProperty(b.name, block_relation(b)))
        if isinstance(b, UnitDelay):
            initials.append(AtomicInitialCondition(b.name, delay_initial(b)))
    connections = tuple(Connection(ports[(w.source, "out")], ports[(w.target, w.pin)]) for w in g.wires)
    return SystemModel(name=g.name, components=tuple(components), properties=tuple(properties),
                       initials=tuple(initials), connections=connections, externals=tuple(externals))


def io_composition(g: BlockGraph, cap: Optional[int] = None) -> CompositionResult:
    """Relation between graph inputs and outputs, with the initial condition for graphs with delays"""
    model = graph_model(g)
    if not g.has_delay:
        ssp = strongest_property_static(model, cap)
        return CompositionResult(ssp=ssp, raw_ssp=ssp)
    result = strongest_property_timed(model, cap)
    init = initial_condition(model, result.pruned_order, cap)
    logger.info(f"Graph {g.name}: relation of order {result.pruned_order} (bound {system_order_bound(model)})")
    return CompositionResult(result.ssp, init, result.used_order_bound, result.pruned_order,
                             result.raw_ssp, result.committed)


def io_relation(g: BlockGraph, cap: Optional[int] = None) -> Formula:
    return io_composition(g, cap).ssp


def input_ranges(g: BlockGraph) -> Formula:
    parts: List[Formula] = []
    for b in g.input_blocks:
        x = LinearTerm.var(pin_var(b))
        if b.low is not None:
            parts.append(compare2(x, ">=", b.low))
        if b.high is not None:
            parts.append(compare2(x, "<=", b.high))
    return conj(*parts)


def output_range(g: BlockGraph, target: str, cap: Optional[int] = None) -> Formula:
    """Exact range of one output: ∃ inputs (ranges ∧ relation), as a union of disjoint intervals"""
    if g.has_delay:
        raise ContractViolation("Range queries need a graph without unit delays")
    out = g.block(target)
    if not isinstance(out, Output):
        raise ContractViolation(f"{target} is not an output block")
    phi = conj(input_ranges(g), io_relation(g, cap))
    keep = pin_var(out)
    others = [v for v in sorted_vars(free_vars(phi)) if v != keep]
    logger.info(f"Range of {target}: eliminating {len(others)} variable(s)")
    projected = qe_real.simplify(qe_real.eliminate_block(others, phi, cap))
    pieces = interval_union(projected, keep)
    if pieces is None:
        return projected
    return disj(*[range_formula(r, keep) for r in pieces])


def _clause_range(clause: Clause, v: TimedVar) -> Optional[Range]:
    """Intersection of the bounds in one conjunction; None if a literal is not a bound on v"""
    r = Range()
    for lit in clause:
        if not isinstance(lit, Compare) or lit.term.variables() != (v,) or lit.op == "!=":
            return None
        value = -lit.term.const / lit.term.coeff(v)
        if lit.op in ("=", ">", ">="):
            if r.low is None or value > r.low or (value == r.low and lit.op == ">"):
                r = replace(r, low=value, low_strict=lit.op == ">")
        if lit.op in ("=", "<", "<="):
            if r.high is None or value < r.high or (value == r.high and lit.op == "<"):
                r = replace(r, high=value, high_strict=lit.op == "<")
    return r


def _is_empty(r: Range) -> bool:
    if r.low is None or r.high is None:
        return False
    return r.low > r.high or (r.low == r.high and (r.low_strict or r.high_strict))


def _touches(a: Range, b: Range) -> bool:
    """b starts no earlier than a; true when their union has no gap"""
    if a.high is None or b.low is None:
        return True
    return b.low < a.high or (b.low == a.high and not (a.high_strict and b.low_strict))


def _start(r: Range) -> tuple:
    return (r.low is not None, r.low if r.low is not None else 0, r.low_strict)


def _join(a: Range, b: Range) -> Range:
    low_strict = a.low_strict and b.low_strict if a.low == b.low else a.low_strict
    if a.high is None or b.high is None:
        return Range(a.low, None, low_strict, False)
    if a.high == b.high:
        return Range(a.low, a.high, low_strict, a.high_strict and b.high_strict)
    top = a if a.high > b.high else b
    return Range(a.low, top.high, low_strict, top.high_strict)


def interval_union(f: Formula, v: TimedVar) -> Optional[List[Range]]:
    """Disjoint, ordered intervals whose union is the set of values of v satisfying f"""
    pieces: List[Range] = []
    for clause in dnf_clauses(f):
        r = _clause_range(clause, v)
        if r is None:
            return None
        if not _is_empty(r):
            pieces.append(r)
    merged: List[Range] = []
    for r in sorted(pieces, key=_start):
        if merged and _touches(merged[-1], r):
            merged[-1] = _join(merged[-1], r)
        else:
            merged.append(r)
    return merged


def range_formula(r: Range, v: TimedVar) -> Formula:
    x = LinearTerm.var(v)
    if r.low is not None and r.low == r.high:
        return compare2(x, "=", r.low)
    parts: List[Formula] = []
    if r.low is not None:
        parts.append(compare2(x, ">" if r.low_strict else ">=", r.low))
    if r.high is not None:
        parts.append(compare2(x, "<" if r.high_strict else "<=", r.high))
    return conj(*parts)


def range_interval(f: Formula, v: TimedVar) -> Optional[Range]:
    """Single-interval reading of a range formula on v, or None"""
    pieces = interval_union(f, v)
    if pieces is None or len(pieces) != 1:
        return None
    return pieces[0]


def naive_interval_range(g: BlockGraph, target: str) -> Interval:
    """Forward interval arithmetic, each block treating its inputs as independent"""
    if g.has_delay:
        raise ContractViolation("Interval propagation needs a graph without unit delays")
    memo: Dict[str, Union[Interval, frozenset]] = {}

    def value(name: str):
        if name in memo:
            return memo[name]
        b = g.block(name)
        arg = lambda pin: value(g.driver(name, pin))
        if isinstance(b, Input):
            r = Interval(b.low, b.high)
        elif isinstance(b, Output):
            r = arg("in")
        elif isinstance(b, Constant):
            r = Interval(b.value, b.value)
        elif isinstance(b, Gain):
            r = arg("in").scale(b.factor)
        elif isinstance(b, Sum):
            r = Interval(Fraction(0), Fraction(0))
            for sign, pin in zip(b.signs, b.inputs):
                r = r + arg(pin).scale(Fraction(sign))
        elif isinstance(b, CompareBlock):
            r = frozenset({True, False})
        elif isinstance(b, Switch):
            cond = arg("cond")
            options = ([arg("then")] if True in cond else []) + ([arg("else")] if False in cond else [])
            r = options[0]
            for o in options[1:]:
                r = r.hull(o)
        elif isinstance(b, Relu):
            r = arg("in").relu()
        else:
            raise ContractViolation(f"Unsupported block {b}")
        memo[name] = r
        return r

    result = value(target)
    logger.info(f"Naive interval of {target}: {result}")
    return result


# ---------------------------------------------------------------------------
# Simulation


def simulate(g: BlockGraph, trace: Sequence[Dict[str, Fraction]]) -> List[Dict[str, Union[Fraction, bool]]]:
    """Step-by-step exact evaluation; one dict of block outputs per step"""
    if _algebraic_loop(g):
        raise ContractViolation("Cannot simulate a graph with an algebraic loop")
    state = {b.name: b.init for b in g.blocks if isinstance(b, UnitDelay)}
    steps: List[Dict[str, Union[Fraction, bool]]] = []
    for inputs in trace:
        values: Dict[str, Union[Fraction, bool]] = dict(state)

        def value(name: str):
            if name in values:
                return values[name]
            b = g.block(name)
            arg = lambda pin: value(g.driver(name, pin))
            if isinstance(b, Input):
                r = Fraction(inputs[name])
            elif isinstance(b, Output):
                r = arg("in")
            elif isinstance(b, Constant):
                r = b.value
            elif isinstance(b, Gain):
                r = b.factor * arg("in")
            elif isinstance(b, Sum):
                r = sum((sign * arg(pin) for sign, pin in zip(b.signs, b.inputs)), Fraction(0))
            elif isinstance(b, CompareBlock):
                rhs = b.rhs if b.rhs is not None else arg("in2")
                lhs = arg("in") if b.rhs is not None else arg("in1")
                r = holds(lhs - rhs, b.op)
            elif isinstance(b, Switch):
                r = arg("then") if arg("cond") else arg("else")
            elif isinstance(b, Relu):
                r = max(arg("in"), Fraction(0))
            else:
                raise ContractViolation(f"Unsupported block {b}")
            values[name] = r
            return r

        for b in g.blocks:
            value(b.name)
        state = {b.name: values[g.driver(b.name, "in")] for b in g.blocks if isinstance(b, UnitDelay)}
        steps.append(values)
    return steps


# ---------------------------------------------------------------------------
# Loading


def _rational(x, params: Dict[str, Fraction]) -> Fraction:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return Fraction(str(x))
    if isinstance(x, str):
        from utils.spec_parser import parse_expr
        lowering = Lowering(lambda n: Num(params[n]) if n in params else None)
        return lowering.constant(parse_expr(x))
    raise SpecError(f"Expected a number or a constant expression, got {x!r}")


def _bound(x, params: Dict[str, Fraction]) -> Bound:
    return None if x is None else _rational(x, params)


def graph_from_dict(doc: Dict) -> BlockGraph:
    """Build a BlockGraph from the JSON graph document"""
    try:
        params = {k: Fraction(str(v)) for k, v in doc.get("params", {}).items()}
        blocks: List[Block] = []
        for spec in doc["blocks"]:
            kind, name = spec["type"], spec["name"]
            if kind == "input":
                lo, hi = spec.get("range", [None, None])
                blocks.append(Input(name, _bound(lo, params), _bound(hi, params)))
            elif kind == "output":
                blocks.append(Output(name))
            elif kind == "constant":
                blocks.append(Constant(name, _rational(spec["value"], params)))
            elif kind == "gain":
                blocks.append(Gain(name, _rational(spec["factor"], params)))
            elif kind == "sum":
                signs = spec.get("signs", "++")
                blocks.append(Sum(name, tuple(1 if s == "+" else -1 for s in signs)))
            elif kind == "compare":
                rhs = spec.get("rhs", 0)
                blocks.append(CompareBlock(name, spec["op"], None if rhs is None else _rational(rhs, params)))
            elif kind == "switch":
                blocks.append(Switch(name))
            elif kind == "delay":
                blocks.append(UnitDelay(name, _rational(spec.get("init", 0), params)))
            elif kind == "relu":
                blocks.append(Relu(name))
            else:
                raise SpecError(f"Unknown block type '{kind}' for {name}")
        wires = []
        for text in doc["wires"]:
            source, _, target = (part.strip() for part in text.partition("->"))
            block, _, pin = target.partition(".")
            wires.append(Wire(source, block, pin or "in"))
    except SpecError:
        raise
    except (KeyError, ValueError, TypeError) as e:
        raise SpecError(f"Malformed graph document: {str(e)}")
    return BlockGraph(doc.get("name", "graph"), tuple(blocks), tuple(wires), bool(doc.get("algebraic_ok", False)))


def _relu_net(doc: Dict) -> BlockGraph:
    blocks: List[Block] = []
    wires: List[Wire] = []
    previous: List[str] = []
    for name, rng in doc["inputs"].items():
        lo, hi = rng
        blocks.append(Input(name, _bound(lo, {}), _bound(hi, {})))
        previous.append(name)
    layers = doc["layers"]
    for li, layer in enumerate(layers):
        current: List[str] = []
        biases = layer.get("biases", [0] * len(layer["weights"]))
        for ni, (row, bias) in enumerate(zip(layer["weights"], biases)):
            stem = f"L{li}N{ni}"
            terms: List[str] = []
            for wi, (w, src) in enumerate(zip(row, previous)):
                w = _rational(w, {})
                if w == 0:
                    continue
                gain = f"{stem}_w{wi}"
                blocks.append(Gain(gain, w))
                wires.append(Wire(src, gain, "in"))
                terms.append(gain)
            bias = _rational(bias, {})
            if bias != 0 or not terms:
                blocks.append(Constant(f"{stem}_b", bias))
                terms.append(f"{stem}_b")
            total = f"{stem}_sum"
            blocks.append(Sum(total, (1,) * len(terms)))
            wires.extend(Wire(t, total, f"in{i + 1}") for i, t in enumerate(terms))
            node = total
            if layer.get("activation", "relu") == "relu":
                node = f"{stem}_relu"
                blocks.append(Relu(node))
                wires.append(Wire(total, node, "in"))
            current.append(node)
        previous = current
    for name, src in zip(doc["outputs"], previous):
        blocks.append(Output(name))
        wires.append(Wire(src, name, "in"))
    return BlockGraph(doc.get("name", "relu_net"), tuple(blocks), tuple(wires))


def load_relu_net(doc: Dict) -> BlockGraph:
    """Desugar dense layers (weights per neuron, biases, relu|linear) into Gain/Sum/Relu blocks"""
    try:
        return _relu_net(doc)
    except SpecError:
        raise
    except (KeyError, ValueError, TypeError) as e:
        raise SpecError(f"Malformed network document: {str(e)}")


def load_graph(path: str) -> BlockGraph:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SpecError(f"Failed to read graph {path}: {str(e)}")
    if "layers" in doc:
        return load_relu_net(doc)
    return graph_from_dict(doc)


# ---------------------------------------------------------------------------
# Plotting


def plot_ranges(g: BlockGraph, target: str, path: str, exact: Optional[Range] = None,
                baseline: Optional[Interval] = None, samples: int = 41) -> str:
    """Draw the exact range, the interval baseline and simulated outputs over a grid of the first input"""
    inputs = g.input_blocks
    if not inputs or inputs[0].low is None or inputs[0].high is None:
        raise ContractViolation("Plotting needs a bounded first input")
    first = inputs[0]
    grid = np.linspace(float(first.low), float(first.high), samples)
    outputs = []
    for x in grid:
        point = {b.name: (Fraction(str(x)) if b is first else (b.low if b.low is not None else Fraction(0)))
                 for b in inputs}
        outputs.append(float(simulate(g, [point])[0][target]))
    try:
        fig, ax = plt.subplots(figsize=(8, 4))
        ax.scatter(grid, outputs, s=12, color="black", label="simulated", zorder=3)
        if baseline is not None and baseline.low is not None and baseline.high is not None:
            ax.axhspan(float(baseline.low), float(baseline.high), color="tab:orange", alpha=0.2,
                       label=f"interval {baseline}")
        if exact is not None and exact.low is not None and exact.high is not None:
            ax.axhspan(float(exact.low), float(exact.high), color="tab:blue", alpha=0.3, label=f"exact {exact}")
        ax.set_xlabel(first.name)
        ax.set_ylabel(target)
        ax.set_title(f"Range of {target} in {g.name}")
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    except Exception as e:
        raise RuntimeError(f"Failed to plot ranges: {str(e)}")
    logger.info(f"Saved range plot to {path}")
    return path
