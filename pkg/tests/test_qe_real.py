import random
from fractions import Fraction

import pytest

from conftest import term, var
from utils import qe_real
from utils.errors import ContractViolation, UnsupportedTheoryError
from utils.formula import (FALSE, TRUE, LinearTerm, Sort, bool_var, compare, compare2, conj, disj, evaluate,
                           exists, forall, free_vars, holds, neg, substitute)
from utils.qe_real import Finite, FinitePlusEps, Hyper, NegInfinity, PosInfinity, Witness

X, Y = var("x"), var("y")


def lt(a, b):
    return compare2(a, "<", b)


def test_eliminate_between_two_bounds() -> None:
    f = conj(lt(term("y"), term("x")), lt(term("x"), term("z")))
    assert qe_real.equivalent(qe_real.eliminate_exists(X, f), lt(term("y"), term("z")))


def test_eliminate_by_equality() -> None:
    f = conj(compare2(term("x"), "=", term("y", coef=2)), lt(term("x"), 4))
    assert qe_real.equivalent(qe_real.eliminate_exists(X, f), lt(term("y"), 2))


def test_contradictory_bounds_eliminate_to_false() -> None:
    f = conj(lt(term("x"), term("y")), lt(term("y"), term("x")))
    assert qe_real.eliminate_exists(X, f) == FALSE


def test_unbounded_side_eliminates_to_true() -> None:
    assert qe_real.eliminate_exists(X, lt(term("y"), term("x"))) == TRUE


def test_boolean_elimination_by_cases() -> None:
    p = bool_var("p")
    f = disj(conj(p, lt(term("x"), 1)), conj(neg(p), lt(2, term("x"))))
    expected = disj(lt(term("x"), 1), lt(2, term("x")))
    assert qe_real.equivalent(qe_real.eliminate_exists(p.var, f), expected)


def test_eliminate_exists_rejects_quantified_body() -> None:
    with pytest.raises(ContractViolation):
        qe_real.eliminate_exists(X, exists([Y], lt(term("x"), term("y"))))


def test_nested_quantifiers() -> None:
    # for every y there is an x above it
    f = forall([Y], exists([X], lt(term("y"), term("x"))))
    assert qe_real.eliminate_all(f) == TRUE
    g = exists([X], forall([Y], lt(term("y"), term("x"))))
    assert qe_real.eliminate_all(g) == FALSE


def test_validity_and_satisfiability() -> None:
    assert qe_real.is_valid(disj(compare2(term("x"), "<=", term("y")), lt(term("y"), term("x"))))
    assert not qe_real.is_valid(lt(term("x"), term("y")))
    assert qe_real.is_satisfiable(conj(lt(0, term("x")), lt(term("x"), Fraction(1, 1000))))
    assert not qe_real.is_satisfiable(conj(lt(0, term("x")), lt(term("x"), 0)))


def test_simplify_drops_weaker_bound() -> None:
    f = conj(lt(term("x"), 1), lt(term("x"), 2))
    assert qe_real.simplify(f) == lt(term("x"), 1)


def test_simplify_preserves_meaning() -> None:
    f = disj(conj(lt(term("x"), 1), lt(term("y"), 0)), conj(lt(term("x"), 1), compare2(term("y"), ">=", 0)))
    s = qe_real.simplify(f)
    assert qe_real.equivalent(s, lt(term("x"), 1))


def test_hyper_ordering() -> None:
    eps = Hyper({-1: 1})
    assert eps.sign() == 1
    assert eps.is_infinitesimal()
    assert (Hyper.of(Finite(Fraction(1))) - eps).sign() == 1
    assert (Hyper.of(PosInfinity(1)) - Hyper.of(Fraction(10 ** 9))).sign() == 1
    with pytest.raises(ValueError):
        FinitePlusEps(Fraction(0), 0)


def test_strict_lower_bound_gives_eps_witness() -> None:
    f = conj(lt(0, term("x")), lt(term("x"), 1))
    w = qe_real.extract_witness(f, [X])
    assert w.values[X] == FinitePlusEps(Fraction(0), 1)
    assert qe_real.evaluate_nonstandard(f, w)
    model = qe_real.concretize_witness(w, f)
    assert model is not None and 0 < model[X] < 1


@pytest.mark.parametrize("op, expected", [(">", PosInfinity(1)), ("<", NegInfinity(1))])
def test_one_sided_bound_gives_infinite_witness(op: str, expected) -> None:
    f = compare2(term("x"), op, 3)
    w = qe_real.extract_witness(f, [X])
    assert w.values[X] == expected
    assert qe_real.evaluate_nonstandard(f, w)
    model = qe_real.concretize_witness(w, f)
    assert model is not None and evaluate(f, model)


def test_later_infinities_dominate_earlier_ones() -> None:
    f = conj(lt(0, term("y")), lt(term("y", coef=2), term("x")))
    w = qe_real.extract_witness(f, [X, Y])
    assert w.values == {Y: PosInfinity(1), X: PosInfinity(2)}
    assert qe_real.evaluate_nonstandard(f, w)
    model = qe_real.concretize_witness(w, f)
    assert model is not None and evaluate(f, model)


def test_scaled_infinity_falls_back_to_finite_values() -> None:
    f = conj(lt(0, term("y")), compare2(term("x"), "=", term("y", coef=2)))
    w = qe_real.extract_witness(f, [X, Y])
    assert w.is_standard() or all(isinstance(v, (Finite, FinitePlusEps)) for v in w.values.values())
    assert qe_real.evaluate_nonstandard(f, w)


def test_eps_counts_stay_integral() -> None:
    f = conj(lt(0, term("x")), lt(term("x"), term("y")), lt(term("y"), 1))
    w = qe_real.extract_witness(f, [X, Y])
    assert w.values == {X: FinitePlusEps(Fraction(0), 1), Y: FinitePlusEps(Fraction(0), 2)}
    assert qe_real.evaluate_nonstandard(f, w)
    with pytest.raises(ValueError):
        FinitePlusEps(Fraction(0), Fraction(1, 2))


def test_find_model_satisfies_formula() -> None:
    f = conj(lt(0, term("x")), lt(term("x"), term("y")), compare2(term("x") + term("y"), "<=", 1))
    witness, model = qe_real.find_model(f)
    assert witness is not None
    assert evaluate(f, model)


def test_find_model_unsat() -> None:
    assert qe_real.find_model(conj(lt(term("x"), 0), lt(0, term("x")))) == (None, None)


def test_nonstandard_evaluation_of_open_interval() -> None:
    w = Witness({X: FinitePlusEps(Fraction(1), 1)})
    assert qe_real.evaluate_nonstandard(lt(1, term("x")), w)
    assert not qe_real.evaluate_nonstandard(compare2(term("x"), "<=", 1), w)


def test_mixed_sorts_are_not_extracted() -> None:
    n = var("n", sort=Sort.INT)
    f = lt(LinearTerm.var(n), term("x"))
    with pytest.raises(UnsupportedTheoryError):
        qe_real.extract_witness(f, [n, X])


# ---------------------------------------------------------------------------
# Seeded comparison against a one-variable bound oracle


def _random_literal(rng: random.Random):
    return rng.randint(-2, 2), rng.randint(-2, 2), rng.randint(-3, 3), rng.choice(["<", "<=", "=", ">=", ">"])


def _literal_formula(a, b, c, op):
    return compare(LinearTerm.of({X: a, Y: b}, c), op)


def _clause_feasible(lits, y: Fraction) -> bool:
    """Is there an x with a*x + b*y + c op 0 for every literal?"""
    lo, lo_strict, hi, hi_strict = None, False, None, False
    for a, b, c, op in lits:
        rest = b * y + c
        if a == 0:
            if not holds(rest, op):
                return False
            continue
        bound = Fraction(-rest) / a
        if a < 0:
            op = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}[op]
        if op in ("<", "<=", "="):
            strict = op == "<"
            if hi is None or bound < hi or (bound == hi and strict):
                hi, hi_strict = bound, strict
        if op in (">", ">=", "="):
            strict = op == ">"
            if lo is None or bound > lo or (bound == lo and strict):
                lo, lo_strict = bound, strict
    if lo is None or hi is None:
        return True
    return lo < hi or (lo == hi and not lo_strict and not hi_strict)


@pytest.mark.parametrize("seed", range(30))
def test_projection_matches_oracle(seed: int) -> None:
    rng = random.Random(seed)
    clauses = [[_random_literal(rng) for _ in range(rng.randint(1, 4))] for _ in range(rng.randint(1, 3))]
    f = disj(*[conj(*[_literal_formula(*lit) for lit in c]) for c in clauses])
    projected = qe_real.eliminate_exists(X, f)
    assert X not in free_vars(projected)
    for i in range(-16, 17):
        y = Fraction(i, 4)
        expected = any(_clause_feasible(c, y) for c in clauses)
        assert evaluate(projected, {Y: y}) == expected, (seed, y)


# ---------------------------------------------------------------------------
# Seeded block elimination over three variables, checked on a grid


Z = var("z")
OPS = ["<", "<=", "=", "!=", ">=", ">"]


@pytest.mark.parametrize("seed", range(20))
def test_block_elimination_is_sound_and_complete(seed: int) -> None:
    rng = random.Random(1000 + seed)
    lits = [(rng.randint(-2, 2), rng.randint(-2, 2), rng.randint(-2, 2), rng.randint(-3, 3), rng.choice(OPS))
            for _ in range(rng.randint(2, 5))]
    f = conj(*[compare(LinearTerm.of({X: a, Y: b, Z: c}, d), op) for a, b, c, d, op in lits])
    projected = qe_real.eliminate_block([X, Y], f)
    assert free_vars(projected) <= {Z}
    grid = [Fraction(i, 2) for i in range(-6, 7)]
    for z in grid:
        holds_at_z = evaluate(projected, {Z: z})
        if any(evaluate(f, {X: x, Y: y, Z: z}) for x in grid for y in grid):
            assert holds_at_z, (seed, z)
        if holds_at_z:
            _, model = qe_real.find_model(substitute(f, Z, z), [X, Y])
            assert model is not None and evaluate(f, {**model, Z: z}), (seed, z)
