import math
import random

import numpy as np
import pytest
from scipy.integrate import quad

from confwave.algebra import (
    EpsPolynomial,
    Rational,
    TrigPoly,
    divide_by_sin_sq,
    cross_product,
    pair_product,
    parse_rational,
    poly_eval,
    resonant_split,
    series_sqrt,
    trig_add,
    trig_triple_product,
    triple_product_over_sin_sq,
)
from confwave.interaction import InteractionTable


def random_rational(rng, span=40):
    num = rng.randint(-span, span)
    den = rng.randint(1, span)
    return Rational(num, den)


def random_trigpoly(rng, n_terms=4, j_max=5, k_max=6):
    terms = {}
    for _ in range(n_terms):
        j = rng.randint(0, j_max)
        k = rng.randint(1, k_max)
        c = random_rational(rng)
        if c:
            terms[(j, k)] = c
    return TrigPoly(terms)


def test_rational_arithmetic_is_exact():
    rng = random.Random(7)
    for _ in range(200):
        a, b = random_rational(rng), random_rational(rng)
        assert (a + b) - b == a
        if b:
            assert (a / b) * b == a


def test_poly_eval_zero_polynomial():
    assert poly_eval(EpsPolynomial(), 3.7) == 0.0


def test_poly_eval_linear_root():
    assert poly_eval(EpsPolynomial([2, -1]), 2.0) == 0.0


def test_poly_eval_matches_lowest_mode_frequency_expansion():
    # squared-frequency series for the lowest mode starts 1 + 3/4 eps
    p = EpsPolynomial([1, Rational(3, 4)])
    for eps in (1e-3, 1e-2):
        omega = math.sqrt(poly_eval(p, eps))
        assert abs(omega - (1 + 3 * eps / 8)) < 1e-4


def test_eps_polynomial_normalization_and_degree():
    assert EpsPolynomial([0, 0]).degree == -1
    assert EpsPolynomial([1, 0, 0]).degree == 0
    p = EpsPolynomial([1, 2]) * EpsPolynomial([1, -2])
    assert p == EpsPolynomial([1, 0, -4])


def test_trig_add_identity_and_cancellation():
    p = TrigPoly({(1, 2): Rational(1, 2), (3, 8): Rational(1, 3)})
    assert trig_add(p, TrigPoly()) == p
    q = TrigPoly({(1, 2): Rational(-1)})
    assert trig_add(TrigPoly({(1, 2): Rational(1)}), q) == TrigPoly()
    r = trig_add(TrigPoly({(1, 2): Rational(1, 2)}), TrigPoly({(3, 8): Rational(1, 3)}))
    assert len(r) == 2


def test_resonant_split_definition():
    N = 3
    res, non = resonant_split(TrigPoly({(1, 3): Rational(5)}), N)
    assert res.terms == {(1, 3): Rational(5)} and not non
    res, non = resonant_split(
        TrigPoly({(3, 9): Rational(2), (3, 3): Rational(7)}), N
    )
    assert res.terms == {(3, 9): Rational(2)}
    assert non.terms == {(3, 3): Rational(7)}
    res, _ = resonant_split(TrigPoly({(1, 2): Rational(1)}), 3)
    assert not res


def test_resonant_split_is_projection():
    rng = random.Random(11)
    for _ in range(25):
        p = random_trigpoly(rng)
        res, non = resonant_split(p, 2)
        assert trig_add(res, non) == p
        res2, non2 = resonant_split(res, 2)
        assert res2 == res and not non2


def test_triple_product_single_mode_cascade():
    # (cos tau sin Nx)^3 / sin^2 x for N=2 spreads over the first four modes
    table = InteractionTable(20)
    p = TrigPoly.single(1, 2)
    out = trig_triple_product(p, p, p, table)
    expected = {
        (1, 2): Rational(3, 2),  # 3/4 * S(2,2,2,2)
        (1, 4): Rational(3, 4),  # 3/4 * S(2,2,2,4)
        (3, 2): Rational(1, 2),
        (3, 4): Rational(1, 4),
    }
    assert out.terms == expected


def test_triple_product_zero_argument():
    table = InteractionTable(10)
    p = TrigPoly.single(1, 2)
    assert trig_triple_product(p, p, TrigPoly(), table) == TrigPoly()


def test_triple_product_lowest_mode_closure_against_quadrature():
    # (cos tau sin x)^3 / sin^2 x = (3 cos tau + cos 3tau)/4 * sin x
    table = InteractionTable(10)
    p = TrigPoly.single(1, 1)
    out = trig_triple_product(p, p, p, table)
    assert out.terms == {(1, 1): Rational(3, 4), (3, 1): Rational(1, 4)}
    # quadrature oracle for each retained projection
    for (j, k), coeff in out.terms.items():
        spatial, _ = quad(
            lambda x: np.sin(x) ** 3 / np.sin(x) ** 2 * np.sin(k * x), 0, np.pi,
            epsabs=1e-13,
        )
        temporal, _ = quad(lambda t: np.cos(t) ** 3 * np.cos(j * t), 0, 2 * np.pi)
        projected = (2 / np.pi) * spatial * (temporal / np.pi)
        assert abs(projected - float(coeff)) < 1e-10


def test_triple_product_symmetric_in_arguments():
    rng = random.Random(3)
    table = InteractionTable(40)
    for _ in range(10):
        p, q, r = (random_trigpoly(rng, 3) for _ in range(3))
        base = trig_triple_product(p, q, r, table)
        assert trig_triple_product(q, r, p, table) == base
        assert trig_triple_product(r, q, p, table) == base


def test_triple_product_spatial_support_bound():
    rng = random.Random(5)
    table = InteractionTable(40)
    for _ in range(10):
        p, q, r = (random_trigpoly(rng, 3) for _ in range(3))
        out = trig_triple_product(p, q, r, table)
        if out:
            bound = p.max_spatial() + q.max_spatial() + r.max_spatial() - 2
            assert out.max_spatial() <= bound


def test_triple_product_missing_table_entry_faults():
    table = InteractionTable(3)
    p = TrigPoly.single(1, 5)
    with pytest.raises(KeyError):
        trig_triple_product(p, p, p, table)


def test_product_routes_agree():
    # interaction-table convolution vs pair products with exact division
    rng = random.Random(17)
    table = InteractionTable(60)
    for _ in range(12):
        p, q, r = (random_trigpoly(rng, 4) for _ in range(3))
        assert triple_product_over_sin_sq(p, q, r) == trig_triple_product(p, q, r, table)


def test_divide_by_sin_sq_rejects_non_divisible():
    with pytest.raises(ValueError):
        divide_by_sin_sq({(1, 1): Rational(1)})


def test_divide_by_sin_sq_inverts_multiplication():
    rng = random.Random(23)
    for _ in range(20):
        p = random_trigpoly(rng, 5)
        sin_sq = {(0, 0): Rational(1, 2), (0, 2): Rational(-1, 2)}
        numerator = cross_product(sin_sq, p)
        assert divide_by_sin_sq(numerator) == p


def test_pair_product_against_samples():
    rng = random.Random(31)
    for _ in range(8):
        p, q = random_trigpoly(rng, 3), random_trigpoly(rng, 3)
        w = pair_product(p, q)
        for tau, x in [(0.31, 0.7), (1.9, 2.2)]:
            direct = _eval_trig(p, tau, x) * _eval_trig(q, tau, x)
            mixed = sum(
                float(c) * math.cos(j * tau) * math.cos(k * x) for (j, k), c in w.items()
            )
            assert abs(direct - mixed) < 1e-10


def _eval_trig(p: TrigPoly, tau: float, x: float) -> float:
    return sum(float(c) * math.cos(j * tau) * math.sin(k * x) for (j, k), c in p.terms.items())


def test_trigpoly_serialization_round_trip():
    p = TrigPoly({(3, 8): Rational(-7, 11), (1, 2): Rational(5)})
    lines = p.to_lines()
    assert lines == ["1 2 5/1", "3 8 -7/11"]  # sorted lexicographically
    assert TrigPoly.from_lines(lines) == p
    assert parse_rational("5/1") == Rational(5)


def test_series_sqrt_round_trip():
    p = EpsPolynomial([Rational(9, 4), 3, 1, Rational(1, 5)])
    r = series_sqrt(p, 6)
    square = (r * r).truncate(6)
    assert square == p.truncate(6)
    with pytest.raises(ValueError):
        series_sqrt(EpsPolynomial([2, 1]), 3)  # 2 is not a rational square
