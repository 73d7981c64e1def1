import os
import random
from fractions import Fraction

import pytest

from conftest import sample_path, term, var
from utils import qe_real
from utils.errors import ContractViolation, SpecError
from utils.formula import Absolute, LinearTerm, TimedVar, compare2, conj, disj, evaluate
from utils.rangeprop import (BlockGraph, Gain, Input, Interval, Output, Range, Sum, UnitDelay, Wire,
                             graph_from_dict, interval_union, io_composition, load_graph, load_relu_net,
                             naive_interval_range, output_range, pin_var, plot_ranges, range_interval, simulate,
                             validate_graph)


@pytest.fixture
def abs_graph() -> BlockGraph:
    return load_graph(sample_path("abs.json"))


def _range(g: BlockGraph, target: str) -> Range:
    return range_interval(output_range(g, target), pin_var(g.block(target)))


def test_abs_exact_range_beats_intervals(abs_graph) -> None:
    assert _range(abs_graph, "y") == Range(Fraction(0), Fraction(5))
    assert naive_interval_range(abs_graph, "y") == Interval(Fraction(-5), Fraction(5))


def test_relu_pair_is_absolute_value() -> None:
    g = load_graph(sample_path("relu_pair.json"))
    assert {b.name for b in g.blocks} >= {"x", "y", "L0N0_w0", "L0N1_relu", "L1N0_sum"}
    assert _range(g, "y") == Range(Fraction(0), Fraction(1))
    assert naive_interval_range(g, "y") == Interval(Fraction(0), Fraction(2))


def test_lag_relation_and_initial_condition() -> None:
    g = load_graph(sample_path("lag.json"))
    assert g.block("g39") == Gain("g39", Fraction(39))
    result = io_composition(g)
    expected = compare2(term("y", coef=41) - term("y", -1, coef=39), "=", term("x") + term("x", -1))
    assert qe_real.equivalent(result.ssp, expected)
    assert result.used_order_bound == 2
    assert result.pruned_order == 1
    y0, x0 = (LinearTerm.var(TimedVar(n, Absolute(0))) for n in ("y", "x"))
    assert qe_real.equivalent(result.init, compare2(y0.scale(41), "=", x0))


def test_lag_simulation_satisfies_the_relation() -> None:
    g = load_graph(sample_path("lag.json"))
    steps = simulate(g, [{"x": 41}, {"x": 0}])
    assert steps[0]["y"] == 1
    assert steps[1]["y"] == Fraction(80, 41)
    assert 41 * steps[1]["y"] - 39 * steps[0]["y"] - 0 - 41 == 0


def test_simulate_abs(abs_graph) -> None:
    assert [s["y"] for s in simulate(abs_graph, [{"x": -3}, {"x": 2}])] == [3, 2]


def test_ranges_need_a_static_graph() -> None:
    g = load_graph(sample_path("lag.json"))
    with pytest.raises(ContractViolation):
        output_range(g, "y")
    with pytest.raises(ContractViolation):
        naive_interval_range(g, "y")


def test_range_target_must_be_an_output(abs_graph) -> None:
    with pytest.raises(ContractViolation):
        output_range(abs_graph, "negate")


def test_range_interval_rejects_other_variables() -> None:
    f = compare2(term("y"), "<", term("z"))
    assert range_interval(f, pin_var(Output("y"))) is None


def test_undriven_and_doubly_driven_pins() -> None:
    g = BlockGraph("bad", (Input("x"), Gain("g", Fraction(2)), Output("y")),
                   (Wire("x", "y", "in"), Wire("g", "y", "in")))
    rules = {d.rule for d in validate_graph(g)}
    assert rules == {"UNDRIVEN_PIN", "MULTI_DRIVER"}


def test_algebraic_loop_detected() -> None:
    g = BlockGraph("loop", (Input("x"), Sum("s"), Gain("g", Fraction(1, 2)), Output("y")),
                   (Wire("x", "s", "in1"), Wire("g", "s", "in2"), Wire("s", "g", "in"), Wire("s", "y", "in")))
    loops = [d for d in validate_graph(g) if d.rule == "ALGEBRAIC_LOOP"]
    assert len(loops) == 1
    assert set(loops[0].subjects) == {"s", "g"}


def test_delay_breaks_the_loop() -> None:
    g = BlockGraph("acc", (Input("x"), Sum("s"), UnitDelay("d"), Output("y")),
                   (Wire("x", "s", "in1"), Wire("d", "s", "in2"), Wire("s", "d", "in"), Wire("s", "y", "in")))
    assert validate_graph(g) == []
    steps = simulate(g, [{"x": 1}, {"x": 2}, {"x": 3}])
    assert [s["y"] for s in steps] == [1, 3, 6]


def test_unknown_block_type() -> None:
    doc = {"blocks": [{"type": "integrator", "name": "i"}], "wires": []}
    with pytest.raises(SpecError):
        graph_from_dict(doc)


def test_malformed_document() -> None:
    with pytest.raises(SpecError):
        graph_from_dict({"blocks": [{"type": "input"}], "wires": []})


def test_plot_is_written(abs_graph, tmp_path) -> None:
    path = str(tmp_path / "abs.png")
    exact = _range(abs_graph, "y")
    assert plot_ranges(abs_graph, "y", path, exact, naive_interval_range(abs_graph, "y"), samples=5) == path
    assert os.path.getsize(path) > 0


def test_abs_range_is_a_single_interval(abs_graph) -> None:
    y = pin_var(Output("y"))
    f = output_range(abs_graph, "y")
    assert f == conj(compare2(LinearTerm.var(y), ">=", 0), compare2(LinearTerm.var(y), "<=", 5))
    assert range_interval(f, y) == Range(Fraction(0), Fraction(5))


def test_touching_pieces_merge() -> None:
    y = pin_var(Output("y"))
    f = disj(compare2(LinearTerm.var(y), "=", 0),
             conj(compare2(LinearTerm.var(y), ">", 0), compare2(LinearTerm.var(y), "<=", 1)))
    assert interval_union(f, y) == [Range(Fraction(0), Fraction(1))]


def test_open_gap_keeps_pieces_apart() -> None:
    y = pin_var(Output("y"))
    f = disj(compare2(LinearTerm.var(y), "<", 0), compare2(LinearTerm.var(y), ">", 0))
    assert interval_union(f, y) == [Range(None, Fraction(0), False, True), Range(Fraction(0), None, True, False)]
    assert range_interval(f, y) is None


def test_switch_between_constants_has_two_pieces() -> None:
    g = graph_from_dict({
        "name": "sign",
        "blocks": [
            {"type": "input", "name": "x", "range": [-5, 5]},
            {"type": "constant", "name": "hi", "value": 10},
            {"type": "constant", "name": "lo", "value": -10},
            {"type": "compare", "name": "nonneg", "op": ">=", "rhs": 0},
            {"type": "switch", "name": "select"},
            {"type": "output", "name": "y"},
        ],
        "wires": ["hi -> select.then", "x -> nonneg.in", "nonneg -> select.cond", "lo -> select.else",
                  "select -> y.in"],
    })
    y = pin_var(Output("y"))
    f = output_range(g, "y")
    assert interval_union(f, y) == [Range(Fraction(-10), Fraction(-10)), Range(Fraction(10), Fraction(10))]
    assert range_interval(f, y) is None


@pytest.mark.parametrize("x", [Fraction(i, 2) for i in range(-10, 11)])
def test_abs_simulation_stays_in_range(abs_graph, x: Fraction) -> None:
    r = _range(abs_graph, "y")
    value = simulate(abs_graph, [{"x": x}])[0]["y"]
    assert r.low <= value <= r.high


def _random_net(seed: int) -> dict:
    rng = random.Random(seed)
    width = rng.randint(1, 3)
    return {
        "name": f"net{seed}",
        "inputs": {"x": [-2, 2]},
        "layers": [
            {"weights": [[rng.choice([-2, -1, 1, 2])] for _ in range(width)],
             "biases": [rng.randint(-2, 2) for _ in range(width)], "activation": "relu"},
            {"weights": [[rng.randint(-2, 2) for _ in range(width)]], "biases": [rng.randint(-1, 1)],
             "activation": "linear"},
        ],
        "outputs": ["y"],
    }


@pytest.mark.parametrize("seed", range(12))
def test_relu_ranges_are_sound_and_tight(seed: int) -> None:
    doc = _random_net(seed)
    g = load_relu_net(doc)
    hidden = doc["layers"][0]
    # one hidden layer: the output is linear between the kinks, so its extremes sit on this grid
    kinks = {Fraction(-b, row[0]) for row, b in zip(hidden["weights"], hidden["biases"])}
    points = sorted({Fraction(i, 4) for i in range(-8, 9)} | {k for k in kinks if -2 <= k <= 2})
    outputs = [simulate(g, [{"x": x}])[0]["y"] for x in points]
    exact = _range(g, "y")
    assert exact == Range(min(outputs), max(outputs)), seed
    naive = naive_interval_range(g, "y")
    assert naive.low <= exact.low and exact.high <= naive.high


@pytest.mark.parametrize("seed", range(4))
def test_lag_recurrence_over_ten_steps(seed: int) -> None:
    rng = random.Random(seed)
    g = load_graph(sample_path("lag.json"))
    xs = [Fraction(rng.randint(-20, 20)) for _ in range(10)]
    ys = [s["y"] for s in simulate(g, [{"x": x} for x in xs])]
    assert 41 * ys[0] == xs[0]
    for k in range(1, 10):
        assert 41 * ys[k] - 39 * ys[k - 1] == xs[k] + xs[k - 1]
    result = io_composition(g)
    x0, y0 = TimedVar("x", Absolute(0)), TimedVar("y", Absolute(0))
    assert evaluate(result.init, {x0: xs[0], y0: ys[0]})
    for k in range(1, 10):
        window = {var("y"): ys[k], var("y", -1): ys[k - 1], var("x"): xs[k], var("x", -1): xs[k - 1]}
        assert evaluate(result.ssp, window)
