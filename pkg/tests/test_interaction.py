import itertools
import random

import pytest

from confwave.algebra import Rational
from confwave.interaction import (
    InteractionTable,
    build_table,
    m_func,
    s_coeff,
    s_quadrature_oracle,
)


def test_m_func_examples():
    assert m_func(0, 5) == 0
    assert m_func(3, -2) == Rational(-1)
    assert m_func(7, 7) == Rational(7, 2)


def test_s_coeff_closed_values():
    assert s_coeff(2, 2, 2, 2) == Rational(2)
    assert s_coeff(2, 2, 4, 4) == Rational(2)
    assert s_coeff(2, 2, 6, 2) == Rational(0)
    assert s_coeff(1, 1, 1, 2) == Rational(0)  # odd parity sum
    assert s_coeff(1, 1, 2, 2) == Rational(1)


def test_s_coeff_rejects_nonpositive_indices():
    with pytest.raises(ValueError):
        s_coeff(0, 1, 1, 2)


def test_quadrature_oracle_values():
    assert abs(s_quadrature_oracle(2, 2, 2, 2) - 2.0) < 1e-10
    assert abs(s_quadrature_oracle(1, 1, 1, 3)) < 1e-10  # above the support limit
    assert abs(s_quadrature_oracle(3, 5, 7, 9) - float(s_coeff(3, 5, 7, 9))) < 1e-10
    assert abs(s_quadrature_oracle(1, 1, 2, 2) - 1.0) < 1e-10


def test_permutation_symmetry_exact():
    rng = random.Random(5)
    for _ in range(20):
        idx = tuple(rng.randint(1, 12) for _ in range(4))
        value = s_coeff(*idx)
        for perm in itertools.permutations(idx):
            assert s_coeff(*perm) == value


def test_parity_vanishing_small_indices():
    for idx in itertools.product(range(1, 7), repeat=4):
        if sum(idx) % 2:
            assert s_coeff(*idx) == 0


def test_upper_limit_vanishing():
    for j, k, l in itertools.product(range(1, 7), repeat=3):
        for m in range(j + k + l - 1, j + k + l + 4):
            assert s_coeff(j, k, l, m) == 0


def test_closed_forms_small():
    for n in range(1, 13):
        assert s_coeff(n, n, n, n) == Rational(n)
        for k in range(1, 13):
            if (n + k) % 2 == 0:
                assert s_coeff(n, n, k, k) == Rational(min(n, k))


def test_build_table_populates_canonical_entries():
    table = build_table(4)
    assert table.values[(2, 2, 2, 2)] == Rational(2)
    assert table.values[(1, 2, 3, 2)] == s_coeff(1, 2, 3, 2)
    # canonical keys only: first three indices sorted
    assert all(a <= b <= c for (a, b, c, _m) in table.values)


def test_table_lookup_sorts_and_bounds():
    table = build_table(4)
    assert table.value(3, 1, 2, 2) == s_coeff(1, 2, 3, 2)
    assert table.value(2, 2, 2, 99) == 0  # beyond the support limit
    with pytest.raises(KeyError):
        table.value(1, 1, 5, 1)


def test_lazy_table_matches_eager():
    eager = build_table(5)
    lazy = InteractionTable(5)
    for key, value in eager.values.items():
        assert lazy.value(*key) == value
