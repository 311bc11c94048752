"""Finite and infinite q-shifted factorials.

Oracles here are deliberately naive: signed subset-sum DP for products of
(1 - q^k), and a plain partition-counting DP for their reciprocals.
"""

import pytest

from qident.qfactorial import (
    INF,
    FactorSpec,
    NotTruncatable,
    ProductSpec,
    ZeroDivisor,
    expand_product_spec,
    poch_finite,
    poch_infinite,
    poch_recip_finite,
)
from qident.qring import Monomial, Series

A = Monomial(1, 0, (("a", 1),))
X = Monomial(1, 0, (("x", 1),))
XQ = Monomial(1, 1, (("x", 1),))
Q = Monomial(1, 1, ())


def oracle_euler_product(parts, upto):
    """Coefficients of prod_{p in parts} (1 - q^p) up to q^upto."""
    coeffs = [0] * (upto + 1)
    coeffs[0] = 1
    for p in parts:
        if p > upto:
            continue
        for v in range(upto, p - 1, -1):
            coeffs[v] -= coeffs[v - p]
    return coeffs


def oracle_partitions(parts, upto):
    """Partition counts with parts drawn (with repetition) from `parts`."""
    counts = [0] * (upto + 1)
    counts[0] = 1
    for p in sorted(parts):
        for v in range(p, upto + 1):
            counts[v] += counts[v - p]
    return counts


# ---------------------------------------------------------------- finite


def test_finite_small_example():
    s = poch_finite(Q, 1, 3)
    assert s == Series.from_qcoeffs([1, -1, -1, 0, 1, 1, -1])
    assert s.exact


def test_finite_empty_product_is_one():
    assert poch_finite(A, 1, 0) == Series.one()


def test_finite_vanishing_argument():
    # (1;q)_n picks up the factor 1 - 1 immediately
    one = Monomial(1, 0, ())
    assert poch_finite(one, 1, 4).is_zero()


def test_finite_negative_subscript_zero_divisor():
    with pytest.raises(ZeroDivisor):
        poch_finite(Q, 1, -1, order=10)


def test_finite_negative_subscript_is_laurent():
    # (a;q)_{-1} = 1/(1 - a/q) = -(q/a) - (q/a)^2 - ..., expanded upward
    s = poch_finite(A, 1, -1, order=6)
    assert s.coeff(0, ()) == 0
    assert s.coeff(1, (("a", -1),)) == -1
    assert s.coeff(2, (("a", -2),)) == -1
    assert s.coeff(2, (("a", -1),)) == 0


def test_finite_negative_subscript_unrepresentable():
    # (xq;q)_{-1} = 1/(1-x) has no Laurent-polynomial q-levels
    from qident.qring import NotInvertible

    with pytest.raises(NotInvertible):
        poch_finite(XQ, 1, -1, order=6)


def test_recip_positive_subscript():
    s = poch_recip_finite(Q, 1, 1, order=3)
    assert s == Series.from_qcoeffs([1, 1, 1, 1])


def test_recip_negative_subscript_collapses_to_zero():
    assert poch_recip_finite(Q, 1, -2, order=8).is_zero()
    assert poch_recip_finite(Q, 1, -1, order=8).is_zero()


def test_recip_negative_subscript_exact_polynomial():
    assert poch_recip_finite(XQ, 1, -1) == Series.poly(
        {(0, ()): 1, (0, (("x", 1),)): -1})


def test_recip_of_vanishing_factorial_is_infinite():
    one = Monomial(1, 0, ())
    with pytest.raises(ZeroDivisor):
        poch_recip_finite(one, 1, 2, order=4)


def test_recurrence_all_subscripts():
    # (a;q)_{n+1} = (a;q)_n * (1 - a q^n), across the bilateral range
    binom_at = lambda n: Series.poly(
        {(0, ()): 1, (n, (("a", 1),)): -1})
    for n in range(-10, 11):
        lhs = poch_finite(A, 1, n + 1, order=24)
        rhs = poch_finite(A, 1, n, order=24) * binom_at(n)
        assert lhs.truncate(8) == rhs.truncate(8), f"n={n}"


def test_recip_is_reciprocal():
    # whenever neither side flags, the two must multiply back to 1
    from qident.qring import NotInvertible

    checked = 0
    for arg in (Q, XQ, A):
        for n in range(-6, 7):
            try:
                # order must clear the inverse's q-valuation (21 at n = -6)
                p = poch_finite(arg, 1, n, order=48)
                r = poch_recip_finite(arg, 1, n, order=48)
            except (NotInvertible, ZeroDivisor):
                continue
            assert (p * r).truncate(6) == Series.one(6), f"{arg.text()} n={n}"
            checked += 1
    assert checked >= 20


def test_negative_subscript_matches_shifted_inverse():
    # (a;q)_{-n} against an inversion assembled by hand from binomials
    for n in range(1, 7):
        expected = Series.one()
        for k in range(1, n + 1):
            expected = expected * Series.poly(
                {(0, ()): 1, (-k, (("a", 1),)): -1})
        expected = expected.invert(10)
        got = poch_finite(A, 1, -n, order=10)
        assert got.truncate(6) == expected.truncate(6), f"n={n}"


def test_top_variable_coefficient():
    # the a^n slice of (a;q)_n is (-1)^n q^{n(n-1)/2}
    for n in range(13):
        s = poch_finite(A, 1, n)
        assert s.coeff(n * (n - 1) // 2, (("a", n),)) == (-1) ** n
        for qe, vars in s.terms:
            if vars == (("a", n),):
                assert qe == n * (n - 1) // 2


# -------------------------------------------------------------- infinite


def test_infinite_euler_product():
    s = poch_infinite(Q, 1, 5)
    assert s.qcoeffs(5) == [1, -1, -1, 0, 0, 1]
    assert s.qcoeffs(5) == oracle_euler_product(range(1, 6), 5)


def test_infinite_odd_parts():
    s = poch_infinite(Monomial(-1, 1, ()), 2, 4)
    assert s.qcoeffs(4) == [1, 1, 0, 1, 1]


def test_infinite_matches_oracle_deeper():
    s = poch_infinite(Q, 1, 40)
    assert s.qcoeffs(40) == oracle_euler_product(range(1, 41), 40)


def test_infinite_needs_positive_weight():
    with pytest.raises(NotTruncatable):
        poch_infinite(X, 1, order=10)


def test_infinite_reciprocal_counts_partitions():
    s = poch_infinite(Q, 1, 30).invert(30)
    assert s.qcoeffs(30) == oracle_partitions(range(1, 31), 30)


# ---------------------------------------------------------- product specs


def test_empty_spec_is_one():
    assert expand_product_spec(ProductSpec(), 6) == Series.one(6)


def test_spec_mod_five_partitions():
    # 1/((q;q^5)_inf (q^4;q^5)_inf): partitions into parts = 1,4 mod 5
    spec = ProductSpec((
        FactorSpec(Monomial(1, 1, ()), 5, INF, -1),
        FactorSpec(Monomial(1, 4, ()), 5, INF, -1),
    ))
    parts = [p for p in range(1, 31) if p % 5 in (1, 4)]
    got = expand_product_spec(spec, 30)
    assert got.qcoeffs(30) == oracle_partitions(parts, 30)
    assert got.qcoeffs(6) == [1, 1, 1, 1, 2, 2, 3]


def test_spec_double_sum_product_side():
    # (-q;q^2)_inf^2 (q^2;q^2)_inf / (q;q)_inf, frozen low-order window
    spec = ProductSpec((
        FactorSpec(Monomial(-1, 1, ()), 2, INF, 2),
        FactorSpec(Monomial(1, 2, ()), 2, INF, 1),
        FactorSpec(Monomial(1, 1, ()), 1, INF, -1),
    ))
    got = expand_product_spec(spec, 8)
    assert got.qcoeffs(8) == [1, 3, 4, 7, 13, 19, 29, 43, 62]


def test_spec_squared_exponent():
    # explicit expo instead of listing a factor twice
    twice = ProductSpec((FactorSpec(Q, 1, 2, 2),))
    listed = ProductSpec((FactorSpec(Q, 1, 2, 1), FactorSpec(Q, 1, 2, 1)))
    assert expand_product_spec(twice, 10) == expand_product_spec(listed, 10)


def test_spec_prefactor():
    spec = ProductSpec((FactorSpec(Q, 1, INF, -1),),
                       prefactor=Monomial(1, 2, (("x", 1),)))
    got = expand_product_spec(spec, 8)
    assert got.coeff(2, (("x", 1),)) == 1
    assert got.coeff(3, (("x", 1),)) == 1
    assert got.coeff(3, ()) == 0


def test_spec_rejects_negative_valuation():
    from qident.qring import QSeriesError

    spec = ProductSpec((), prefactor=Monomial(1, -1, ()))
    with pytest.raises(QSeriesError):
        expand_product_spec(spec, 5)
