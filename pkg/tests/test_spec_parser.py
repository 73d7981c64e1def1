import random
from fractions import Fraction

import pytest

from conftest import sample_path, term
from utils import qe_real
from utils.compose import strongest_property_static, strongest_property_timed
from utils.errors import SortError, SpecError
from utils.expr import Binary, BoolLit, Divisible, Num, Prev, Ref, Unary
from utils.formula import TRUE, Sort, compare2, divides, neg
from utils.spec_parser import (build_model, composed_spec, load_spec, parse_expr, parse_formula, parse_spec,
                               print_expr, print_spec, tokenize)


def test_tokenize_skips_comments() -> None:
    tokens = tokenize("x <= 1 -- bound\n# note\ny")
    assert [t.text for t in tokens] == ["x", "<=", "1", "y", ""]
    assert tokens[3].line == 3


def test_expression_precedence() -> None:
    e = parse_expr("a + 2 * b[k-1] < prev(c, 0.5)")
    assert e == Binary("<", Binary("+", Ref("a"), Binary("*", Num(Fraction(2)), Ref("b", -1))),
                       Prev(Ref("c"), Num(Fraction(1, 2))))


def test_absolute_reference() -> None:
    assert parse_expr("y[0]") == Ref("y", 0, absolute=True)


def test_parse_formula_with_sorts() -> None:
    f = parse_formula("2 * n < 3", {"n": Sort.INT})
    assert f == compare2(term("n", sort=Sort.INT), "<=", 1)


def test_sample_document_shape() -> None:
    doc = load_spec(sample_path("vehicle.rlc"))
    assert doc.name == "vehicle"
    assert [c.name for c in doc.components] == ["CNTRL", "THROT"]
    assert doc.connections[0] == ("CNTRL", "ActuatorInput", "THROT", "ActuatorInput")
    assert [name for name, _ in doc.defines] == ["constTargetSpeed"]
    assert len(doc.postulates) == 1


def test_print_then_parse_preserves_the_document() -> None:
    doc = load_spec(sample_path("vehicle.rlc"))
    assert parse_spec(print_spec(doc)) == doc


def test_error_reports_line_and_column() -> None:
    text = "system s {\n  component A {\n    in x;\n    guarantee x < ;\n  }\n}\n"
    with pytest.raises(SpecError) as err:
        parse_spec(text)
    assert err.value.line == 4
    assert err.value.column == 19


def test_unknown_port_in_connection() -> None:
    text = "system s {\n  component A { out y; }\n  connect A.y -> B.u;\n}\n"
    with pytest.raises(SpecError):
        build_model(parse_spec(text))


def test_validation_failures_carry_diagnostics() -> None:
    text = """
    system s {
      component A { out y; }
      component B { out u; }
      connect A.y -> B.u;
    }
    """
    with pytest.raises(SpecError) as err:
        build_model(parse_spec(text))
    assert "DIRECTION" in {d.rule for d in err.value.diagnostics}


def test_sort_errors_in_guarantees_name_the_line() -> None:
    text = "system s {\n  component A {\n    in p: bool;\n    out y;\n    guarantee y = p + 1;\n  }\n}\n"
    with pytest.raises(SpecError) as err:
        build_model(parse_spec(text))
    assert err.value.line == 5


def test_boolean_misuse_in_a_formula() -> None:
    with pytest.raises(SortError):
        parse_formula("p + 1 < 2", {"p": Sort.BOOL})


def test_composed_spec_reparses_to_the_same_property(load_sample) -> None:
    model, _ = load_sample("shifted_sum.rlc")
    ssp = strongest_property_timed(model).ssp
    text = composed_spec(model, ssp, TRUE)
    again, _ = build_model(parse_spec(text))
    assert again.name == "shifted_sum_composed"
    assert {p.name for p in again.externals} == {"u", "w", "z"}
    assert qe_real.equivalent(again.properties[0].body, ssp)


def test_composed_static_spec(load_sample) -> None:
    model, _ = load_sample("cascade.rlc")
    ssp = strongest_property_static(model)
    again, _ = build_model(parse_spec(composed_spec(model, ssp, TRUE)))
    assert qe_real.equivalent(strongest_property_static(again), ssp)


def test_divisibility_atom() -> None:
    assert parse_expr("divides(2, x + 1)") == Divisible(2, Binary("+", Ref("x"), Num(Fraction(1))))
    n = term("n", sort=Sort.INT)
    assert parse_formula("not divides(3, n - 1)", {"n": Sort.INT}) == neg(divides(3, n - 1))


def test_divisibility_needs_integers() -> None:
    with pytest.raises(SortError):
        parse_formula("divides(2, x)")
    with pytest.raises(SpecError):
        parse_expr("divides(0, x)")


def test_composed_integer_spec_reparses(load_sample) -> None:
    model, _ = load_sample("abc_int.rlc")
    ssp = strongest_property_static(model)
    text = composed_spec(model, ssp, TRUE)
    again, _ = build_model(parse_spec(text))
    assert again.domain is Sort.INT
    assert qe_real.equivalent(strongest_property_static(again), ssp)


@pytest.mark.parametrize("sample", ["abc.rlc", "abc_int.rlc", "cascade.rlc", "delay.rlc", "delay_init.rlc",
                                    "feedback.rlc", "shifted_sum.rlc", "vehicle.rlc"])
def test_samples_survive_print_and_parse(sample: str) -> None:
    doc = load_spec(sample_path(sample))
    assert parse_spec(print_spec(doc)) == doc


def _random_expr(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        choice = rng.randint(0, 3)
        if choice == 0:
            return Num(Fraction(rng.randint(0, 9), rng.choice([1, 2, 4])))
        if choice == 1:
            return Ref(rng.choice(["x", "y", "u"]), rng.randint(-2, 0))
        if choice == 2:
            return Ref(rng.choice(["x", "y"]), rng.randint(0, 2), absolute=True)
        return BoolLit(rng.random() < 0.5)
    kind = rng.randint(0, 4)
    if kind == 0:
        return Unary(rng.choice(["-", "not"]), _random_expr(rng, depth - 1))
    if kind == 1:
        return Prev(_random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if kind == 2:
        return Divisible(rng.randint(1, 5), _random_expr(rng, depth - 1))
    op = rng.choice(["+", "-", "*", "/", "=", "!=", "<", "<=", ">", ">=", "and", "or", "=>", "<=>"])
    return Binary(op, _random_expr(rng, depth - 1), _random_expr(rng, depth - 1))


@pytest.mark.parametrize("seed", range(25))
def test_printed_expressions_parse_back(seed: int) -> None:
    e = _random_expr(random.Random(seed), 4)
    assert parse_expr(print_expr(e)) == e
