import random
from fractions import Fraction

import pytest

from conftest import var
from utils import qe_int, qe_real
from utils.errors import ContractViolation, ResourceLimitError, UnsupportedTheoryError
from utils.formula import (FALSE, TRUE, LinearTerm, Sort, compare, compare2, conj, disj, divides, evaluate,
                           exists, free_vars)

N, M = var("n", sort=Sort.INT), var("m", sort=Sort.INT)
n, m = LinearTerm.var(N), LinearTerm.var(M)


def test_even_projection_is_a_divisibility() -> None:
    f = compare2(n.scale(2), "=", m)
    projected = qe_int.eliminate_exists_int(N, f)
    assert qe_real.equivalent(projected, divides(2, m))


def test_strict_bounds_between_consecutive_integers() -> None:
    assert qe_int.decide_sentence_int(exists([N], conj(compare2(n.scale(2), ">", 3), compare2(n.scale(2), "<", 6))))
    assert not qe_int.decide_sentence_int(exists([N], conj(compare2(n.scale(2), ">", 1), compare2(n.scale(2), "<", 2))))


def test_real_relaxation_differs() -> None:
    # 1 < 2x < 2 holds for some real x
    x = LinearTerm.var(var("x"))
    assert qe_real.is_satisfiable(conj(compare2(x.scale(2), ">", 1), compare2(x.scale(2), "<", 2)))


def test_decide_needs_a_sentence() -> None:
    with pytest.raises(ContractViolation):
        qe_int.decide_sentence_int(compare2(n, "<", 0))


def test_int_witness_solves_linear_diophantine() -> None:
    f = conj(compare2(n.scale(2) + m.scale(3), "=", 7), compare2(n, ">=", 0), compare2(m, ">=", 0))
    model = qe_int.int_witness(f, [N, M])
    assert model is not None
    assert evaluate(f, model)
    assert (model[N], model[M]) == (Fraction(2), Fraction(1))


def test_int_witness_unsat() -> None:
    f = compare2(n.scale(2), "=", m.scale(2) + 1)
    assert f == FALSE or qe_int.int_witness(f, [N, M]) is None


def test_int_witness_rejects_reals() -> None:
    with pytest.raises(UnsupportedTheoryError):
        qe_int.int_witness(TRUE, [var("x")])


def test_candidate_cap_is_enforced() -> None:
    f = divides(7, n + m)
    with pytest.raises(ResourceLimitError):
        qe_int.eliminate_exists_int(N, f, cap=3)


def test_project_clause_without_variable_is_untouched() -> None:
    clause = (compare2(m, "<", 3),)
    assert qe_int.project_clause_int(clause, N) == [clause]


# ---------------------------------------------------------------------------
# Seeded comparison against enumeration


def _random_literal(rng: random.Random):
    a, b, c = rng.randint(-3, 3), rng.randint(-2, 2), rng.randint(-4, 4)
    kind = rng.choice(["<", "<=", "=", ">=", ">", "dvd"])
    return (kind, a, b, c, rng.choice([2, 3]))


def _literal_formula(lit):
    kind, a, b, c, d = lit
    t = LinearTerm.of({N: a, M: b}, c)
    if kind == "dvd":
        return divides(d, t)
    return compare(t, kind)


def _literal_holds(lit, nv: int, mv: int) -> bool:
    kind, a, b, c, d = lit
    value = a * nv + b * mv + c
    return {"<": value < 0, "<=": value <= 0, "=": value == 0, ">=": value >= 0, ">": value > 0,
            "dvd": value % d == 0}[kind]


@pytest.mark.parametrize("seed", range(30))
def test_cooper_matches_enumeration(seed: int) -> None:
    rng = random.Random(seed)
    clauses = [[_random_literal(rng) for _ in range(rng.randint(1, 3))] for _ in range(rng.randint(1, 2))]
    f = disj(*[conj(*[_literal_formula(lit) for lit in c]) for c in clauses])
    projected = qe_int.eliminate_exists_int(N, f)
    assert N not in free_vars(projected)
    for mv in range(-5, 6):
        expected = any(all(_literal_holds(lit, nv, mv) for lit in c) for c in clauses for nv in range(-40, 41))
        assert evaluate(projected, {M: Fraction(mv)}) == expected, (seed, mv)
