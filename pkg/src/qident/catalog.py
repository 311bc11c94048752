"""Curated corpus of verifiable identities with parameterized builders.

Every entry carries a statement tree (exported as canonical text) plus
whatever the verifier needs at runtime.  Series-mode entries lower both
sides through `validate_identity`, so the statement text is the single
source of truth.  z-coefficient entries compare one z-power at a time:
their left side is a closed-form coefficient function and their right
side a ZSeries builder.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from .ctengine import ZFactor, ZSeries, binom2, expand_zfactors, jtp_zseries, \
    verify_zcoeff_identity, zmul
from .qfactorial import (
    INF,
    FactorSpec,
    NotTruncatable,
    ProductSpec,
    ZeroDivisor,
    expand_product_spec,
    poch_finite,
    poch_recip_finite,
)
from .qring import Monomial, QSeriesError, Series
from .report import VerificationReport, compare_series
from .speclang import (
    ExpPoly,
    Expr,
    Group,
    IdentityAST,
    IntAtom,
    MonoPow,
    Mul,
    PochCall,
    SumCall,
    normalize_mono,
    serialize_identity,
    validate_identity,
)
from .summation import (
    DomainError,
    EnumerationCapped,
    NegativeValuationResidual,
    SumSpec,
    enumerate_support,
    eval_sum,
    eval_sum_over,
)


class UnknownKey(Exception):
    """No catalog entry under that key."""


class ParamOutOfRange(Exception):
    """A parameter is missing, unexpected, or outside its valid range."""


# ------------------------------------------------------------- entry objects


@dataclass(frozen=True)
class ZParts:
    """Runtime pieces for identities checked one z-power at a time."""

    coeff_fn: Callable[[int, int], Series]        # (zexp, order) -> lhs coeff
    rhs_fn: Callable[[int, object], ZSeries]      # (order, zwindow) -> rhs
    zwindow: tuple[int, int]                      # default window


@dataclass(eq=False)
class Identity:
    key: str
    params: tuple[tuple[str, int], ...]
    mode: str                                     # "series" | "zcoeff"
    ast: IdentityAST
    provenance: str
    lhs: object | None = None                     # SumSpec | ProductSpec
    rhs: object | None = None
    zparts: ZParts | None = None

    @property
    def name(self) -> str:
        return self.ast.name

    @property
    def text(self) -> str:
        return serialize_identity(self.ast)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lo: int
    hi: int | None = None           # inclusive upper bound, None = unbounded
    upper_param: str | None = None  # bound given by another parameter


@dataclass(frozen=True)
class CatalogEntry:
    key: str
    summary: str
    provenance: str
    mode: str
    params: tuple[ParamSpec, ...]
    defaults: tuple[tuple[tuple[str, int], ...], ...]
    builder: Callable = field(compare=False)


# ------------------------------------------------------- statement shorthand


_EV = ExpPoly.var
_EC = ExpPoly.const


def _poly(e) -> ExpPoly:
    return e if isinstance(e, ExpPoly) else ExpPoly.const(e)


def _m(name: str, exp=1) -> MonoPow:
    return MonoPow(name, _poly(exp))


def _pc(arg, base, count, sign: int = 1) -> PochCall:
    c = None if count is None else _poly(count)
    return PochCall(normalize_mono(arg), normalize_mono(base), c, sign)


def _mul(num, den=()) -> Mul:
    factors = [(1, f) for f in num] + [(-1, f) for f in den]
    if not factors:
        factors = [(1, IntAtom(1))]
    if factors[0][0] < 0:
        factors.insert(0, (1, IntAtom(1)))
    return Mul(tuple(factors))


def _expr(num, den=()) -> Expr:
    return Expr(((1, _mul(num, den)),))


def _sum(decls, num, den=()) -> SumCall:
    return SumCall(tuple(decls), _expr(num, den))


_MINUS_ONE = Expr(((-1, Mul(((1, IntAtom(1)),))),))


def _sign(exp) -> Group:
    """(-1) raised to an index expression."""
    return Group(_MINUS_ONE, _poly(exp))


def _name_for(key: str, params) -> str:
    bits = "".join(f"_{n}{v}" for n, v in params)
    return key.replace("-", "_") + bits


def _ast(key, params, vars_, lhs: Expr, rhs: Expr) -> IdentityAST:
    return IdentityAST(_name_for(key, params), tuple(vars_), (), lhs, rhs)


Q1 = (("q", 1),)


def _series(key, params, provenance, vars_, lhs, rhs) -> Identity:
    ast = _ast(key, params, vars_, lhs, rhs)
    lowered = validate_identity(ast)
    return Identity(key, tuple(params), "series", ast, provenance,
                    lowered.lhs, lowered.rhs)


# --------------------------------------------------------- series-mode builders


def _build_rr(key: str, shift: int, moduli: tuple[int, int]) -> Identity:
    n = _EV("n")
    lhs = _expr([_sum((("n", "N"),),
                      [_m("q", n * n + n.scale(shift))],
                      [_pc(Q1, Q1, n)])])
    rhs = _expr([IntAtom(1)],
                [_pc((("q", moduli[0]),), (("q", 5),), None),
                 _pc((("q", moduli[1]),), (("q", 5),), None)])
    provenance = "classical Rogers-Ramanujan pair"
    return _series(key, (), provenance, (), lhs, rhs)


def _staircase_quad(k: int, i: int) -> tuple[ExpPoly, list[str]]:
    """N_1^2 + .. + N_{k-1}^2 + N_i + .. + N_{k-1} in n_1..n_{k-1}."""
    names = [f"n{t}" for t in range(1, k)]
    tails = []
    for j in range(k - 1):
        s = ExpPoly()
        for t in range(j, k - 1):
            s = s + _EV(names[t])
        tails.append(s)
    quad = ExpPoly()
    for s in tails:
        quad = quad + s * s
    for j in range(i - 1, k - 1):
        quad = quad + tails[j]
    return quad, names


def _build_staircase(key: str, k: int, i: int, last_base: int) -> Identity:
    quad, names = _staircase_quad(k, i)
    dens = [_pc(Q1, Q1, _EV(nm)) for nm in names]
    if last_base == 2:
        dens[-1] = _pc((("q", 2),), (("q", 2),), _EV(names[-1]))
    decls = [(nm, "N") for nm in names]
    modulus = 2 * k + 1 if last_base == 1 else 2 * k
    lhs = _expr([_sum(decls, [_m("q", quad)], dens)])
    rhs = _expr([_pc((("q", i),), (("q", modulus),), None),
                 _pc((("q", modulus - i),), (("q", modulus),), None),
                 _pc((("q", modulus),), (("q", modulus),), None)],
                [_pc(Q1, Q1, None)])
    provenance = ("Andrews-Gordon family" if last_base == 1
                  else "Bressoud even-modulus family")
    return _series(key, (("i", i), ("k", k)), provenance, (), lhs, rhs)


def _hex_quad(a: str, b: str) -> ExpPoly:
    i, j = _EV(a), _EV(b)
    return i * i - i * j + j * j


def _double_product_rhs() -> Expr:
    return _expr([_pc((("q", 1),), (("q", 2),), None, -1),
                  _pc((("q", 1),), (("q", 2),), None, -1),
                  _pc((("q", 2),), (("q", 2),), None)],
                 [_pc(Q1, Q1, None)])


def _build_main() -> Identity:
    i, j = _EV("i"), _EV("j")
    lhs = _expr([_sum((("i", "Z"), ("j", "Z")),
                      [_m("x", i), _m("y", j), _m("q", _hex_quad("i", "j"))],
                      [_pc((("x", 1), ("q", 1)), Q1, i),
                       _pc((("y", 1), ("q", 1)), Q1, j)])])
    rhs = _expr([_pc(Q1, Q1, None),
                 _pc((("x", 1), ("y", 1), ("q", 1)), (("q", 2),), None, -1),
                 _pc((("x", -1), ("y", -1), ("q", 1)), (("q", 2),), None, -1),
                 _pc((("q", 2),), (("q", 2),), None)],
                [_pc((("x", 1), ("q", 1)), Q1, None),
                 _pc((("y", 1), ("q", 1)), Q1, None)])
    return _series("main", (), "bilateral double-sum product identity",
                   ("x", "y"), lhs, rhs)


def _build_cor_double() -> Identity:
    lhs = _expr([_sum((("i", "N"), ("j", "N")),
                      [_m("q", _hex_quad("i", "j"))],
                      [_pc(Q1, Q1, _EV("i")), _pc(Q1, Q1, _EV("j"))])])
    return _series("cor-double", (),
                   "x = y = 1 slice of the bilateral double sum",
                   (), lhs, _double_product_rhs())


def _build_cor_triple() -> Identity:
    i, j, k = _EV("i"), _EV("j"), _EV("k")
    quad = i * i + j * j + k * k + i * k + j * k
    lhs = _expr([_sum((("i", "N"), ("j", "N"), ("k", "N")),
                      [_m("q", quad)],
                      [_pc(Q1, Q1, i), _pc(Q1, Q1, j), _pc(Q1, Q1, k)])])
    return _series("cor-triple", (),
                   "triple sum sharing the double-sum product side",
                   (), lhs, _double_product_rhs())


def _build_cor_multi(ell: int) -> Identity:
    names = [f"n{t}" for t in range(1, ell + 1)]

    def tail(first: int) -> ExpPoly:
        s = ExpPoly()
        for t in range(first, ell + 1):
            s = s + _EV(f"n{t}")
        return s

    n1, n2 = _EV("n1"), _EV("n2")
    u, v = n1 + tail(3), n2 + tail(3)
    quad = u * u - u * v + v * v
    for t in range(4, ell + 1):
        quad = quad + (n1 + tail(t)) * (n2 + tail(t))
    quad = quad + n1 * n2
    lhs = _expr([_sum([(nm, "N") for nm in names],
                      [_m("q", quad)],
                      [_pc(Q1, Q1, _EV(nm)) for nm in names])])
    return _series("cor-multi", (("ell", ell),),
                   "ell-fold sum sharing the double-sum product side",
                   (), lhs, _double_product_rhs())


def _cao_wang_quad(a: int, i: ExpPoly, j: ExpPoly) -> ExpPoly:
    return (i.binom2() + (j + _EC(1)).binom2()
            + (j - i).binom2().scale(a))


def _build_cao_wang(a: int) -> Identity:
    i, j = _EV("i"), _EV("j")
    lhs = _expr([_sum((("i", "N"), ("j", "N")),
                      [_m("u", i - j), _m("q", _cao_wang_quad(a, i, j))],
                      [_pc(Q1, Q1, i), _pc(Q1, Q1, j)])])
    base = (("q", a + 1),)
    rhs = _expr([_pc((("u", 1), ("q", a)), base, None, -1),
                 _pc((("u", -1), ("q", 1)), base, None, -1),
                 _pc((("q", a + 1),), base, None)],
                [_pc(Q1, Q1, None)])
    return _series("cao-wang", (("a", a),),
                   "two-parameter double-sum family with weight u^(i-j)",
                   ("u",), lhs, rhs)


def _build_remark_ua1() -> Identity:
    i, j = _EV("i"), _EV("j")
    lhs = _expr([_sum((("i", "N"), ("j", "N")),
                      [_m("q", _cao_wang_quad(1, i, j))],
                      [_pc(Q1, Q1, i), _pc(Q1, Q1, j)])])
    return _series("remark-ua1", (),
                   "u = a = 1 slice of the two-parameter family",
                   (), lhs, _double_product_rhs())


def _build_andrews_p20(i: int, j: int) -> Identity:
    k = _EV("k")
    lhs = _expr([IntAtom(1)], [_pc(Q1, Q1, i), _pc(Q1, Q1, j)])
    quad = k * k - k.scale(i + j) + _EC(i * j)
    rhs = _expr([_sum((("k", "N"),),
                      [_m("q", quad)],
                      [_pc(Q1, Q1, k),
                       _pc(Q1, Q1, _EC(i) - k),
                       _pc(Q1, Q1, _EC(j) - k)])])
    return _series("andrews-p20", (("i", i), ("j", j)),
                   "finite splitting of a double factorial denominator",
                   (), lhs, rhs)


# -------------------------------------------------------- zcoeff-mode builders


def _scale_product(factors) -> Callable[[int], Series]:
    spec = ProductSpec(tuple(factors))
    return lambda order: expand_product_spec(spec, order)


def _build_q_binomial() -> Identity:
    kk = _EV("k")
    lhs = _expr([_sum((("k", "N"),),
                      [_pc((("a", 1),), Q1, kk), _m("z", kk)],
                      [_pc(Q1, Q1, kk)])])
    rhs = _expr([_pc((("a", 1), ("z", 1)), Q1, None)],
                [_pc((("z", 1),), Q1, None)])
    ast = _ast("q-binomial", (), ("a", "z"), lhs, rhs)

    def coeff(k: int, order: int) -> Series:
        if k < 0:
            return Series.zero(order)
        return (poch_finite(Monomial.var("a"), 1, k, order)
                * poch_recip_finite(Monomial.q(), 1, k, order))

    def rhs_fn(order: int, zwindow) -> ZSeries:
        return expand_zfactors(
            [ZFactor(Monomial.var("a")),
             ZFactor(Monomial.unit(), 1, 1, -1)], order, zwindow)

    return Identity("q-binomial", (), "zcoeff", ast,
                    "classical q-binomial theorem",
                    zparts=ZParts(coeff, rhs_fn, (0, 6)))


def _build_1psi1(m: int) -> Identity:
    kk = _EV("k")
    a = Monomial.var("a")
    lhs = _expr([_sum((("k", "Z"),),
                      [_pc((("a", 1),), Q1, kk), _m("z", kk)],
                      [_pc((("q", m),), Q1, kk)])])
    rhs = _expr([_pc(Q1, Q1, None),
                 _pc((("a", 1), ("z", 1)), Q1, None),
                 _pc((("a", -1), ("z", -1), ("q", 1)), Q1, None),
                 _pc((("a", -1), ("q", m)), Q1, None)],
                [_pc((("q", m),), Q1, None),
                 _pc((("z", 1),), Q1, None),
                 _pc((("a", -1), ("z", -1), ("q", m)), Q1, None),
                 _pc((("a", -1), ("q", 1)), Q1, None)])
    ast = _ast("ramanujan-1psi1", (("m", m),), ("a", "z"), lhs, rhs)
    scale = _scale_product([
        FactorSpec(Monomial.q(), 1, INF, 1),
        FactorSpec(Monomial.var("a", -1, m), 1, INF, 1),
        FactorSpec(Monomial.q(m), 1, INF, -1),
        FactorSpec(Monomial.var("a", -1, 1), 1, INF, -1)])

    def coeff(k: int, order: int) -> Series:
        num = poch_finite(a, 1, k, order)
        den = poch_recip_finite(Monomial.q(m), 1, k, order)
        return num * den

    def rhs_fn(order: int, zwindow) -> ZSeries:
        zs = expand_zfactors(
            [ZFactor(a),
             ZFactor(Monomial.var("a", -1, 1), -1),
             ZFactor(Monomial.var("a", -1, m), -1, 1, -1),
             ZFactor(Monomial.unit(), 1, 1, -1)], order, zwindow)
        return zs.scale_series(scale(order))

    return Identity("ramanujan-1psi1", (("m", m),), "zcoeff", ast,
                    "bilateral series summation with b = q^m",
                    zparts=ZParts(coeff, rhs_fn, (-5, 5)))


def _build_bilateral_euler(m: int) -> Identity:
    kk = _EV("k")
    lhs = _expr([_sum((("k", "Z"),),
                      [_sign(kk), _m("z", kk), _m("q", kk.binom2())],
                      [_pc((("q", m),), Q1, kk)])])
    rhs = _expr([_pc(Q1, Q1, None), _pc((("z", 1),), Q1, None),
                 _pc((("z", -1), ("q", 1)), Q1, None)],
                [_pc((("q", m),), Q1, None),
                 _pc((("z", -1), ("q", m)), Q1, None)])
    ast = _ast("bilateral-euler", (("m", m),), ("z",), lhs, rhs)
    scale = _scale_product([FactorSpec(Monomial.q(m), 1, INF, -1)])

    def coeff(k: int, order: int) -> Series:
        sgn = Monomial(-1 if k % 2 else 1, binom2(k))
        return poch_recip_finite(Monomial.q(m), 1, k, order).mul_monomial(sgn)

    def rhs_fn(order: int, zwindow) -> ZSeries:
        zs = zmul(jtp_zseries(Monomial.unit(), order),
                  expand_zfactors([ZFactor(Monomial.q(m), -1, 1, -1)], order))
        return zs.scale_series(scale(order))

    return Identity("bilateral-euler", (("m", m),), "zcoeff", ast,
                    "signed bilateral expansion over (q^m; q)_k",
                    zparts=ZParts(coeff, rhs_fn, (-4, 4)))


def _build_circle_x() -> Identity:
    ii = _EV("i")
    xq = Monomial.var("x", qexp=1)
    lhs = _expr([_sum((("i", "Z"),),
                      [_sign(ii), _m("x", ii), _m("z", ii),
                       _m("q", ii.binom2())],
                      [_pc((("x", 1), ("q", 1)), Q1, ii)])])
    rhs = _expr([_pc(Q1, Q1, None),
                 _pc((("x", 1), ("z", 1)), Q1, None),
                 _pc((("x", -1), ("z", -1), ("q", 1)), Q1, None)],
                [_pc((("x", 1), ("q", 1)), Q1, None),
                 _pc((("z", -1), ("q", 1)), Q1, None)])
    ast = _ast("circle-x", (), ("x", "z"), lhs, rhs)
    scale = _scale_product([FactorSpec(Monomial.q(), 1, INF, 1),
                            FactorSpec(xq, 1, INF, -1)])

    def coeff(k: int, order: int) -> Series:
        mono = Monomial(-1 if k % 2 else 1, binom2(k), (("x", k),))
        return poch_recip_finite(xq, 1, k, order).mul_monomial(mono)

    def rhs_fn(order: int, zwindow) -> ZSeries:
        zs = expand_zfactors(
            [ZFactor(Monomial.var("x")),
             ZFactor(Monomial.var("x", -1, 1), -1),
             ZFactor(Monomial.q(), -1, 1, -1)], order)
        return zs.scale_series(scale(order))

    return Identity("circle-x", (), "zcoeff", ast,
                    "kernel factor paired with z on the unit circle",
                    zparts=ZParts(coeff, rhs_fn, (-4, 4)))


def _build_circle_y() -> Identity:
    jj = _EV("j")
    yq = Monomial.var("y", qexp=1)
    lhs = _expr([_sum((("j", "Z"),),
                      [_sign(jj), _m("y", jj), _m("z", -jj),
                       _m("q", jj.binom2() + jj)],
                      [_pc((("y", 1), ("q", 1)), Q1, jj)])])
    rhs = _expr([_pc(Q1, Q1, None),
                 _pc((("y", 1), ("z", -1), ("q", 1)), Q1, None),
                 _pc((("y", -1), ("z", 1)), Q1, None)],
                [_pc((("y", 1), ("q", 1)), Q1, None),
                 _pc((("z", 1),), Q1, None)])
    ast = _ast("circle-y", (), ("y", "z"), lhs, rhs)
    scale = _scale_product([FactorSpec(Monomial.q(), 1, INF, 1),
                            FactorSpec(yq, 1, INF, -1)])

    def coeff(k: int, order: int) -> Series:
        j = -k
        mono = Monomial(-1 if j % 2 else 1, binom2(j) + j, (("y", j),))
        return poch_recip_finite(yq, 1, j, order).mul_monomial(mono)

    def rhs_fn(order: int, zwindow) -> ZSeries:
        zs = expand_zfactors(
            [ZFactor(yq, -1),
             ZFactor(Monomial.var("y", -1)),
             ZFactor(Monomial.unit(), 1, 1, -1)], order, zwindow)
        return zs.scale_series(scale(order))

    return Identity("circle-y", (), "zcoeff", ast,
                    "kernel factor paired with 1/z on the unit circle",
                    zparts=ZParts(coeff, rhs_fn, (-4, 4)))


# ------------------------------------------------------------------ registry


def _instances(*dicts) -> tuple:
    return tuple(tuple(sorted(d.items())) for d in dicts)


def _span(lo_k=2, hi_k=4):
    out = []
    for k in range(lo_k, hi_k + 1):
        for i in range(1, k + 1):
            out.append({"i": i, "k": k})
    return out


_REGISTRY: dict[str, CatalogEntry] = {}


def _register(key, summary, provenance, mode, params, defaults, builder):
    _REGISTRY[key] = CatalogEntry(key, summary, provenance, mode,
                                  tuple(params), _instances(*defaults),
                                  builder)


_register(
    "rr1", "single sum q^(n^2)/(q;q)_n against the modulus-5 product",
    "classical Rogers-Ramanujan pair", "series", (), [{}],
    lambda: _build_rr("rr1", 0, (1, 4)))
_register(
    "rr2", "single sum q^(n^2+n)/(q;q)_n against the modulus-5 product",
    "classical Rogers-Ramanujan pair", "series", (), [{}],
    lambda: _build_rr("rr2", 1, (2, 3)))
_register(
    "andrews-gordon",
    "odd-modulus staircase family in k-1 unilateral indices",
    "Andrews-Gordon family", "series",
    (ParamSpec("k", 2), ParamSpec("i", 1, upper_param="k")),
    _span(),
    lambda k, i: _build_staircase("andrews-gordon", k, i, 1))
_register(
    "bressoud",
    "even-modulus staircase family ending in a base-q^2 factor",
    "Bressoud even-modulus family", "series",
    (ParamSpec("k", 2), ParamSpec("i", 1, upper_param="k")),
    _span(),
    lambda k, i: _build_staircase("bressoud", k, i, 2))
_register(
    "ramanujan-1psi1",
    "bilateral z-series with numerator parameter a and b = q^m",
    "bilateral series summation with b = q^m", "zcoeff",
    (ParamSpec("m", 1),),
    [{"m": 1}, {"m": 2}, {"m": 3}],
    _build_1psi1)
_register(
    "q-binomial", "unilateral z-series (a;q)_k z^k/(q;q)_k",
    "classical q-binomial theorem", "zcoeff", (), [{}],
    _build_q_binomial)
_register(
    "cao-wang",
    "double sum with weight u^(i-j) and modulus a+1 product side",
    "two-parameter double-sum family", "series",
    (ParamSpec("a", 1),),
    [{"a": 1}, {"a": 2}, {"a": 3}],
    _build_cao_wang)
_register(
    "main",
    "bilateral double sum with hexagonal exponent i^2-ij+j^2",
    "bilateral double-sum product identity", "series", (), [{}],
    _build_main)
_register(
    "cor-double", "unilateral double sum with exponent i^2-ij+j^2",
    "x = y = 1 slice of the bilateral double sum", "series", (), [{}],
    _build_cor_double)
_register(
    "cor-triple", "unilateral triple sum with the same product side",
    "triple-sum companion of the double sum", "series", (), [{}],
    _build_cor_triple)
_register(
    "cor-multi", "ell-fold unilateral sum with the same product side",
    "multi-sum companion family", "series",
    (ParamSpec("ell", 4),),
    [{"ell": 4}, {"ell": 5}],
    _build_cor_multi)
_register(
    "bilateral-euler",
    "signed bilateral z-series over (q^m;q)_k, one z-power at a time",
    "signed bilateral expansion over (q^m; q)_k", "zcoeff",
    (ParamSpec("m", 1),),
    [{"m": 1}, {"m": 2}, {"m": 3}],
    _build_bilateral_euler)
_register(
    "circle-x", "bilateral kernel factor carrying x and z",
    "kernel factor for the constant-term replay", "zcoeff", (), [{}],
    _build_circle_x)
_register(
    "circle-y", "bilateral kernel factor carrying y and 1/z",
    "kernel factor for the constant-term replay", "zcoeff", (), [{}],
    _build_circle_y)
_register(
    "andrews-p20",
    "finite splitting of 1/((q;q)_i (q;q)_j) into a k-sum",
    "finite splitting lemma for factorial denominators", "series",
    (ParamSpec("i", 0), ParamSpec("j", 0)),
    [{"i": 4, "j": 5}],
    _build_andrews_p20)
_register(
    "remark-ua1",
    "u = a = 1 slice of the two-parameter double-sum family",
    "specialization remark for the two-parameter family", "series",
    (), [{}],
    _build_remark_ua1)


# ----------------------------------------------------------------- public API


def list_identities() -> list[dict]:
    """Stable, registration-ordered inventory of catalog entries."""
    out = []
    for entry in _REGISTRY.values():
        params = [{"name": p.name, "min": p.lo,
                   "max": p.upper_param or p.hi}
                  for p in entry.params]
        out.append({"key": entry.key, "summary": entry.summary,
                    "provenance": entry.provenance, "mode": entry.mode,
                    "params": params,
                    "defaults": [dict(d) for d in entry.defaults]})
    return out


def default_instances() -> list[tuple[str, dict]]:
    """Every entry with its default parameter choices, in catalog order."""
    out = []
    for entry in _REGISTRY.values():
        for inst in entry.defaults:
            out.append((entry.key, dict(inst)))
    return out


def get_identity(key: str, **params) -> Identity:
    entry = _REGISTRY.get(key)
    if entry is None:
        raise UnknownKey(f"no identity under key {key!r}; see list_identities()")
    expected = [p.name for p in entry.params]
    extra = sorted(set(params) - set(expected))
    if extra:
        raise ParamOutOfRange(
            f"{key} does not take parameter(s) {', '.join(extra)}")
    missing = sorted(set(expected) - set(params))
    if missing:
        raise ParamOutOfRange(
            f"{key} needs parameter(s) {', '.join(missing)}")
    for p in entry.params:
        v = params[p.name]
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParamOutOfRange(f"{key}: {p.name} must be an integer")
        hi = params[p.upper_param] if p.upper_param else p.hi
        if v < p.lo or (hi is not None and v > hi):
            top = hi if hi is not None else "inf"
            raise ParamOutOfRange(
                f"{key}: {p.name}={v} outside [{p.lo}, {top}]")
    return entry.builder(**params)


def specialize_to_one(ident: Identity, names) -> Identity:
    """Set formal variables to 1 at the statement level and re-lower.

    Bilateral sums may collapse to unilateral ones this way: vanishing
    reciprocals (q;q)_n with n < 0 kill the new negative terms.
    """
    names = set(names)
    if ident.mode != "series":
        raise ValueError("can only specialize series-mode identities")

    def walk_expr(e: Expr) -> Expr:
        return Expr(tuple((s, walk_mul(m)) for s, m in e.addends))

    def walk_mul(m: Mul) -> Mul:
        out = []
        for op, f in m.factors:
            g = walk_factor(f)
            if g is not None:
                out.append((op, g))
        if not out:
            out = [(1, IntAtom(1))]
        if out[0][0] < 0:
            out.insert(0, (1, IntAtom(1)))
        return Mul(tuple(out))

    def walk_factor(f):
        if isinstance(f, MonoPow):
            return None if f.name in names else f
        if isinstance(f, PochCall):
            arg = tuple((n, e) for n, e in f.arg if n not in names)
            return PochCall(arg, f.base, f.count, f.coeff)
        if isinstance(f, SumCall):
            return SumCall(f.decls, walk_expr(f.body))
        if isinstance(f, Group):
            return Group(walk_expr(f.inner), f.exp)
        return f

    ast = IdentityAST(
        ident.ast.name + "_at_" + "_".join(f"{n}1" for n in sorted(names)),
        tuple(v for v in ident.ast.vars if v not in names),
        ident.ast.params, walk_expr(ident.ast.lhs), walk_expr(ident.ast.rhs))
    lowered = validate_identity(ast)
    return Identity(ident.key, ident.params, "series", ast,
                    ident.provenance, lowered.lhs, lowered.rhs)


def _eval_spec(spec, order: int, shell_cap=None) -> Series:
    if isinstance(spec, SumSpec):
        return eval_sum(spec, order, shell_cap=shell_cap)
    return expand_product_spec(spec, order)


def _eval_spec_counted(spec, order: int, shell_cap):
    """Like _eval_spec but reports support size for sum sides."""
    if isinstance(spec, SumSpec):
        sup = enumerate_support(spec, order, shell_cap)
        series = eval_sum_over(spec, sup.points, order)
        return series, {"points": len(sup.points),
                        "shells": sup.shells_scanned}
    return expand_product_spec(spec, order), None


def verify_identity(ident: Identity, order: int, zwindow=None,
                    shell_cap=None) -> VerificationReport:
    """Check one catalog identity coefficientwise up to `order`."""
    info: dict = {"key": ident.key}
    if ident.params:
        info["params"] = dict(ident.params)
    start = time.perf_counter()
    try:
        if ident.mode == "series":
            lhs, sup_l = _eval_spec_counted(ident.lhs, order, shell_cap)
            rhs, sup_r = _eval_spec_counted(ident.rhs, order, shell_cap)
            support = {side: s for side, s
                       in (("lhs", sup_l), ("rhs", sup_r)) if s}
            if support:
                info["support"] = support
            report = compare_series(ident.name, lhs, rhs, order, details=info)
            if report.passed:
                try:
                    report.details["qcoeffs"] = lhs.qcoeffs(min(order, 12))
                except ValueError:
                    pass        # formal variables present; no linear preview
        else:
            zw = zwindow if zwindow is not None else ident.zparts.zwindow
            rhs = ident.zparts.rhs_fn(order, zw)
            report = verify_zcoeff_identity(
                ident.name, lambda k: ident.zparts.coeff_fn(k, order),
                rhs, zw, order)
            report.details = {**info, **report.details}
    except (QSeriesError, NotTruncatable, ZeroDivisor, DomainError,
            EnumerationCapped, NegativeValuationResidual) as exc:
        report = VerificationReport(ident.name, order, "error",
                                    error=f"{type(exc).__name__}: {exc}",
                                    details=info)
    report.elapsed = time.perf_counter() - start
    return report
