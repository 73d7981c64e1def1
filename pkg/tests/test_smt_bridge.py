import random
from fractions import Fraction

import pytest

from conftest import sample_path
from utils.errors import ContractViolation, SpecError, UnsupportedTheoryError
from utils.formula import Sort
from utils.smt_bridge import SatResult, check_sat, format_model, parse_smtlib, tokenizer


def _load(name: str):
    with open(sample_path(name), "r", encoding="utf-8") as f:
        return parse_smtlib(f.read())


def test_tokenizer_tracks_positions() -> None:
    tokens = tokenizer("(assert\n  (< x |odd name|)) ; trailing")
    assert [t.text for t in tokens] == ["(", "assert", "(", "<", "x", "odd name", ")", ")"]
    assert (tokens[2].line, tokens[2].column) == (2, 3)


def test_real_sample_is_sat() -> None:
    problem = _load("bounds_real.smt2")
    assert problem.logic == "QF_LRA"
    assert problem.wants_model
    result = check_sat(problem)
    assert result.status == "sat"
    x, y = result.model["x"], result.model["y"]
    assert 0 < x < y and x + y <= 1
    assert result.exit_code == 0


def test_integer_parity_is_unsat() -> None:
    result = check_sat(_load("parity_int.smt2"))
    assert result == SatResult("unsat")
    assert result.exit_code == 1


def test_mixed_sample_is_sat() -> None:
    problem = _load("mixed.smt2")
    assert dict(problem.declarations) == {"n": Sort.INT, "r": Sort.REAL, "b": Sort.BOOL}
    result = check_sat(problem)
    assert result.status == "sat"
    n, r, b = result.model["n"], result.model["r"], result.model["b"]
    assert Fraction(n).denominator == 1
    assert Fraction(3, 2) < r < n <= 4
    assert (r == Fraction(7, 2)) if b else (r < 2)


def test_integer_tightening_between_bounds() -> None:
    script = """
    (declare-const n Int)
    (assert (< 1 (* 2 n)))
    (assert (< (* 2 n) 3))
    (check-sat)
    """
    result = check_sat(parse_smtlib(script))
    assert result.status == "sat"
    assert result.model["n"] == 1


def test_ite_over_numbers() -> None:
    script = """
    (declare-fun x () Real)
    (declare-fun p () Bool)
    (assert (= (ite p (+ x 1) (- x 1)) 5))
    (assert (not p))
    """
    result = check_sat(parse_smtlib(script))
    assert result.status == "sat"
    assert result.model == {"p": False, "x": Fraction(6)}


def test_distinct_over_pinned_integers() -> None:
    script = """
    (declare-const a Int)
    (declare-const b Int)
    (assert (distinct a b))
    (assert (and (<= 0 a) (<= a 0) (<= 0 b) (<= b 0)))
    """
    assert check_sat(parse_smtlib(script)).status == "unsat"


def test_unknown_command_is_a_parse_error() -> None:
    with pytest.raises(SpecError) as err:
        parse_smtlib("(declare-const x Real)\n(push 1)")
    assert err.value.line == 2


def test_undeclared_symbol() -> None:
    with pytest.raises(SpecError):
        parse_smtlib("(assert (< y 1))")


def test_nonlinear_product_is_unsupported() -> None:
    with pytest.raises(UnsupportedTheoryError):
        parse_smtlib("(declare-fun x () Real)\n(declare-fun y () Real)\n(assert (= (* x y) 1))")


def test_logic_option_must_match_declarations() -> None:
    with pytest.raises(ContractViolation):
        check_sat(_load("bounds_real.smt2"), logic="int")


def test_format_model() -> None:
    text = format_model({"x": Fraction(1, 3), "b": True, "n": Fraction(2)})
    assert text.splitlines() == ["x 1/3", "b true", "n 2/1"]


# ---------------------------------------------------------------------------
# Seeded scripts: every model satisfies the assertions, unsat has no grid point


def _num(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _random_script(rng, sorts):
    lits = [(rng.randint(-3, 3), rng.randint(-3, 3), rng.randint(-4, 4), rng.choice(["<", "<=", "=", ">=", ">"]))
            for _ in range(rng.randint(1, 4))]
    (a_name, a_sort), (b_name, b_sort) = sorts
    lines = [f"(declare-fun {a_name} () {a_sort})", f"(declare-fun {b_name} () {b_sort})"]
    for a, b, c, op in lits:
        lines.append(f"(assert ({op} (+ (* {_num(a)} {a_name}) (* {_num(b)} {b_name})) {_num(c)}))")
    lines.append("(check-sat)")
    return lits, "\n".join(lines)


def _satisfied(lits, u: Fraction, v: Fraction) -> bool:
    ops = {"<": lambda s, c: s < c, "<=": lambda s, c: s <= c, "=": lambda s, c: s == c,
           ">=": lambda s, c: s >= c, ">": lambda s, c: s > c}
    return all(ops[op](a * u + b * v, c) for a, b, c, op in lits)


@pytest.mark.parametrize("seed", range(20))
def test_real_models_are_sound(seed: int) -> None:
    lits, script = _random_script(random.Random(seed), [("x", "Real"), ("y", "Real")])
    result = check_sat(parse_smtlib(script))
    assert result.status in ("sat", "unsat"), script
    if result.status == "sat":
        assert _satisfied(lits, Fraction(result.model.get("x", 0)), Fraction(result.model.get("y", 0))), script
    else:
        grid = [Fraction(i, 2) for i in range(-12, 13)]
        assert not any(_satisfied(lits, u, v) for u in grid for v in grid), script


@pytest.mark.parametrize("seed", range(20))
def test_integer_models_are_sound(seed: int) -> None:
    lits, script = _random_script(random.Random(100 + seed), [("m", "Int"), ("n", "Int")])
    result = check_sat(parse_smtlib(script))
    assert result.status in ("sat", "unsat"), script
    if result.status == "sat":
        m, n = Fraction(result.model.get("m", 0)), Fraction(result.model.get("n", 0))
        assert m.denominator == 1 and n.denominator == 1
        assert _satisfied(lits, m, n), script
    else:
        grid = [Fraction(i) for i in range(-12, 13)]
        assert not any(_satisfied(lits, u, v) for u in grid for v in grid), script


@pytest.mark.parametrize("seed", range(12))
def test_mixed_models_are_sound(seed: int) -> None:
    lits, script = _random_script(random.Random(200 + seed), [("n", "Int"), ("r", "Real")])
    result = check_sat(parse_smtlib(script), logic="mixed")
    if result.status == "sat":
        n, r = Fraction(result.model.get("n", 0)), Fraction(result.model.get("r", 0))
        assert n.denominator == 1
        assert _satisfied(lits, n, r), script
    elif result.status == "unsat":
        grid = [Fraction(i, 2) for i in range(-12, 13)]
        assert not any(_satisfied(lits, Fraction(u), v) for u in range(-12, 13) for v in grid), script
