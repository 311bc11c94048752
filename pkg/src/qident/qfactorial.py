"""q-shifted factorials and symbolic product sides.

(a; q^b)_n is the finite product prod_{k=0}^{n-1} (1 - a q^{bk}); the
infinite version runs k over all of N and is truncatable exactly when the
argument carries at least q^1.  Negative subscripts follow
(a; q^b)_{-n} = 1 / (a q^{-nb}; q^b)_n, which also produces this kernel's
zero convention: the reciprocal of a factorial with a vanishing factor is
the zero series, used to collapse bilateral sums onto N.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .qring import Monomial, NotInvertible, QSeriesError, Series

INF = None  # sentinel for an infinite product count


class NotTruncatable(QSeriesError):
    """An infinite product has infinitely many factors at or below q^0."""


class ZeroDivisor(QSeriesError):
    """A factorial with a vanishing factor: the value is infinite.

    Its reciprocal is the zero series, which poch_recip_finite returns
    instead of raising.
    """


@dataclass(frozen=True)
class FactorSpec:
    """One factor (arg; q^basepow)_count ^ expo of a product side."""

    arg: Monomial
    basepow: int = 1
    count: int | None = INF
    expo: int = 1

    def __post_init__(self):
        if self.basepow < 1:
            raise ValueError("basepow must be a positive integer")
        if self.expo == 0:
            raise ValueError("factor exponent must be nonzero")


@dataclass(frozen=True)
class ProductSpec:
    factors: tuple[FactorSpec, ...] = ()
    prefactor: Monomial = Monomial.unit()


@lru_cache(maxsize=None)
def _finite_poly(arg: Monomial, basepow: int, n: int) -> Series:
    """(arg; q^basepow)_n for n >= 0, as an exact Laurent polynomial."""
    if n == 0:
        return Series.one()
    shifted = Monomial(-arg.coeff, arg.qexp + basepow * (n - 1), arg.vars)
    terms = {(0, ()): 1}
    # additive merge: the shift can land on q^0 itself (e.g. (1;q)_n)
    terms[shifted.key()] = terms.get(shifted.key(), 0) + shifted.coeff
    binomial = Series.poly(terms)
    return _finite_poly(arg, basepow, n - 1) * binomial


def _vanishing_factor(arg: Monomial, basepow: int, n: int) -> bool:
    """Does (arg; q^basepow)_n contain a factor 1 - 1 (n >= 0)?"""
    if arg.vars or arg.coeff != 1 or arg.qexp % basepow:
        return False
    j = arg.qexp // basepow
    return -j in range(n)  # factor k = -j satisfies arg * q^{bk} = 1


@lru_cache(maxsize=None)
def poch_finite(arg: Monomial, basepow: int = 1, n: int = 0,
                order: int | None = None) -> Series:
    """(arg; q^basepow)_n.

    For n >= 0 this is the exact polynomial.  For n < 0 it is
    1/(arg q^{n*basepow}; q^basepow)_{-n}: an inverse series (to `order`)
    when that polynomial is a unit, and ZeroDivisor when it has a
    vanishing factor -- e.g. (q;q)_{-1} divides by 1 - 1.
    """
    if n >= 0:
        return _finite_poly(arg, basepow, n)
    m = -n
    shifted = Monomial(arg.coeff, arg.qexp - m * basepow, arg.vars)
    if _vanishing_factor(shifted, basepow, m):
        raise ZeroDivisor(
            f"({arg.text()}; q^{basepow})_{n} has a vanishing factor; "
            "the value is infinite (its reciprocal is the zero series)")
    poly = _finite_poly(shifted, basepow, m)
    if order is None:
        raise ValueError("negative subscripts need an explicit truncation order")
    return poly.invert(order)


@lru_cache(maxsize=None)
def poch_recip_finite(arg: Monomial, basepow: int = 1, n: int = 0,
                      order: int | None = None) -> Series:
    """1/(arg; q^basepow)_n for any integer n.

    n >= 0 inverts the exact polynomial (NotInvertible if it is not a
    unit).  n < 0 is the exact Laurent polynomial
    (arg q^{-|n| basepow}; q^basepow)_{|n|}, and the zero series when that
    polynomial vanishes -- the convention that collapses bilateral sums.
    """
    if n >= 0:
        if order is None:
            raise ValueError("reciprocal factorials need a truncation order")
        if _vanishing_factor(arg, basepow, n):
            raise ZeroDivisor(
                f"1/({arg.text()}; q^{basepow})_{n} divides by a vanishing factor")
        return _finite_poly(arg, basepow, n).invert(order)
    m = -n
    shifted = Monomial(arg.coeff, arg.qexp - m * basepow, arg.vars)
    if _vanishing_factor(shifted, basepow, m):
        return Series({}, order if order is not None else 0, 0, exact=True)
    return _finite_poly(shifted, basepow, m)


@lru_cache(maxsize=None)
def poch_infinite(arg: Monomial, basepow: int = 1, order: int = 32) -> Series:
    """(arg; q^basepow)_inf expanded exactly to `order`.

    Requires arg.qexp >= 1: then factor k sits at q-weight
    arg.qexp + basepow*k and only finitely many factors touch the window.
    Anything else would put infinitely many terms at or below q^0.
    """
    if arg.qexp < 1:
        raise NotTruncatable(
            f"({arg.text()}; q^{basepow})_inf: argument carries no positive "
            "q-weight, the product never stabilizes below the order")
    acc = Series({(0, ()): 1}, order)
    k = 0
    while arg.qexp + basepow * k <= order:
        shifted = Monomial(-arg.coeff, arg.qexp + basepow * k, arg.vars)
        acc = acc * Series.poly({(0, ()): 1, shifted.key(): shifted.coeff})
        k += 1
    return acc


def expand_product_spec(spec: ProductSpec, order: int) -> Series:
    """prefactor * prod factor^expo, exactly to `order`.

    Deterministic and independent of factor ordering (the arithmetic is
    exact).  Raises if the result would dip below q^0, which a
    well-formed product side never does.
    """
    acc = Series({(0, ()): 1}, order)
    acc = acc * Series.from_monomial(spec.prefactor)
    for f in spec.factors:
        for _ in range(abs(f.expo)):
            if f.expo > 0:
                if f.count is INF:
                    piece = poch_infinite(f.arg, f.basepow, order)
                else:
                    piece = poch_finite(f.arg, f.basepow, f.count, order)
            else:
                if f.count is INF:
                    piece = poch_infinite(f.arg, f.basepow, order).invert(order)
                else:
                    piece = poch_recip_finite(f.arg, f.basepow, f.count, order)
            acc = acc * piece
    val = acc.valuation
    if val is not None and val < 0:
        raise QSeriesError(
            f"product expansion has negative q-valuation {val}; "
            "not a power series")
    return acc.truncate(min(acc.order, order))
