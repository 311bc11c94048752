"""Truncated multivariate Laurent series over the integers.

The distinguished variable ``q`` is graded: a series is stored term-exactly
up to a truncation order N in q, and every operation tracks how far the
result is still trustworthy.  Additional formal variables (``x``, ``y``,
``u``, ...) carry no q-weight; the coefficient of each power of q is a
Laurent polynomial in them with exact integer coefficients.

Terms are kept sparsely in a dict keyed by ``(qexp, vars)`` where ``vars``
is a tuple of ``(name, exponent)`` pairs sorted by name with zero exponents
dropped.  Nothing in this module touches floats.

Negative q-exponents are allowed only inside *exact* series (finite Laurent
polynomials assembled term by term, flagged ``exact=True``); truncated
series keep a ``floor`` recording the lowest q-exponent their window
admits.  Multiplication computes the largest sound truncation order from
the operands' orders and valuations rather than silently pretending.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

VKey = tuple[tuple[str, int], ...]
TermKey = tuple[int, VKey]

RESERVED_BASE = "q"


class QSeriesError(Exception):
    """Base class for everything raised by the q-series kernel."""


class NotInvertible(QSeriesError):
    """The lowest q-level of a series is not a single unit monomial."""


class QueryBeyondOrder(QSeriesError):
    """A coefficient past the truncation order was requested."""


class TruncationUnsound(QSeriesError):
    """An operation cannot deliver the requested order exactly."""


def _normalize_vars(vars: Mapping[str, int] | Iterable[tuple[str, int]] | VKey) -> VKey:
    if isinstance(vars, Mapping):
        items = vars.items()
    else:
        items = vars
    cleaned = []
    for name, exp in items:
        if exp == 0:
            continue
        if not name or name == RESERVED_BASE:
            raise ValueError(f"bad formal variable name {name!r}")
        cleaned.append((name, int(exp)))
    cleaned.sort()
    names = [n for n, _ in cleaned]
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable in monomial")
    return tuple(cleaned)


def _vmul(a: VKey, b: VKey) -> VKey:
    """Merge two sorted exponent tuples, summing exponents."""
    if not a:
        return b
    if not b:
        return a
    out: dict[str, int] = dict(a)
    for name, exp in b:
        e = out.get(name, 0) + exp
        if e:
            out[name] = e
        else:
            del out[name]
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class Monomial:
    """A single exact term ``coeff * q^qexp * prod(var^exp)``."""

    coeff: int = 1
    qexp: int = 0
    vars: VKey = ()

    def __post_init__(self):
        object.__setattr__(self, "vars", _normalize_vars(self.vars))

    @classmethod
    def unit(cls) -> "Monomial":
        return cls(1, 0, ())

    @classmethod
    def q(cls, e: int = 1, coeff: int = 1) -> "Monomial":
        return cls(coeff, e, ())

    @classmethod
    def var(cls, name: str, e: int = 1, qexp: int = 0, coeff: int = 1) -> "Monomial":
        return cls(coeff, qexp, ((name, e),))

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.coeff * other.coeff, self.qexp + other.qexp,
                        _vmul(self.vars, other.vars))

    def __pow__(self, n: int) -> "Monomial":
        if n < 0:
            return self.inverse() ** (-n)
        out = Monomial.unit()
        for _ in range(n):
            out = out * self
        return out

    def inverse(self) -> "Monomial":
        if self.coeff not in (1, -1):
            raise NotInvertible(f"monomial coefficient {self.coeff} is not a unit")
        return Monomial(self.coeff, -self.qexp, tuple((n, -e) for n, e in self.vars))

    @property
    def is_unit_one(self) -> bool:
        return self.coeff == 1 and self.qexp == 0 and not self.vars

    def key(self) -> TermKey:
        return (self.qexp, self.vars)

    def text(self) -> str:
        return _term_text(self.qexp, self.vars, self.coeff)


def _term_text(qexp: int, vars: VKey, coeff: int) -> str:
    out = f"{coeff}*q^{qexp}"
    for name, exp in vars:
        out += f"*{name}^{exp}"
    return out


class Series:
    """A Laurent series in q (with formal variables), exact up to `order`.

    ``terms`` maps ``(qexp, vars)`` to a nonzero int.  ``order`` is the last
    q-exponent whose coefficient is complete.  ``floor`` (<= 0) is the lower
    edge of the admitted window.  ``exact`` marks finite Laurent polynomials
    known in full, for which ``order`` is just ``max(0, top exponent)``.
    """

    __slots__ = ("terms", "order", "floor", "exact")

    def __init__(self, terms: dict[TermKey, int], order: int, floor: int = 0,
                 exact: bool = False):
        clean: dict[TermKey, int] = {}
        for (qe, vk), c in terms.items():
            if c == 0 or qe > order:
                continue
            if qe < floor:
                raise ValueError(f"term q^{qe} below declared floor {floor}")
            clean[(qe, vk)] = c
        self.terms = clean
        self.order = order
        self.floor = floor
        self.exact = exact

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, order: int = 0) -> "Series":
        return cls({}, order, 0, exact=True)

    @classmethod
    def one(cls, order: int = 0) -> "Series":
        return cls({(0, ()): 1}, order, 0, exact=True)

    @classmethod
    def poly(cls, terms: Mapping[TermKey, int]) -> "Series":
        """Exact Laurent polynomial; order/floor derived from the support."""
        keys = [k for k, c in terms.items() if c != 0]
        top = max((qe for qe, _ in keys), default=0)
        bottom = min((qe for qe, _ in keys), default=0)
        return cls(dict(terms), max(0, top), min(0, bottom), exact=True)

    @classmethod
    def from_monomial(cls, m: Monomial) -> "Series":
        return cls.poly({m.key(): m.coeff})

    @classmethod
    def from_qcoeffs(cls, coeffs: Iterable[int], order: int | None = None) -> "Series":
        """Build a pure-q series from a coefficient list starting at q^0."""
        coeffs = list(coeffs)
        if order is None:
            order = max(0, len(coeffs) - 1)
        return cls({(i, ()): c for i, c in enumerate(coeffs) if c}, order)

    # -- inspection --------------------------------------------------------

    @property
    def valuation(self) -> int | None:
        """Least q-exponent with a nonzero term, or None for the zero series."""
        if not self.terms:
            return None
        return min(qe for qe, _ in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, qexp: int, vars: Mapping[str, int] | VKey = ()) -> int:
        if qexp > self.order and not self.exact:
            raise QueryBeyondOrder(f"coefficient of q^{qexp} beyond order {self.order}")
        return self.terms.get((qexp, _normalize_vars(vars)), 0)

    def qcoeffs(self, upto: int | None = None) -> list[int]:
        """Coefficient list [q^0 .. q^upto] for a series free of formal variables."""
        n = self.order if upto is None else upto
        if not self.exact and n > self.order:
            raise QueryBeyondOrder(f"order {self.order} < requested {n}")
        out = [0] * (n + 1)
        for (qe, vk), c in self.terms.items():
            if vk:
                raise ValueError("series has formal variables; no flat q-coefficient list")
            if 0 <= qe <= n:
                out[qe] = c
            elif qe < 0:
                raise ValueError("negative q-exponent present")
        return out

    def variables(self) -> set[str]:
        names: set[str] = set()
        for (_, vk) in self.terms:
            names.update(n for n, _ in vk)
        return names

    # -- structural helpers ------------------------------------------------

    def truncate(self, order: int, floor: int | None = None) -> "Series":
        """Drop knowledge above `order` (and optionally raise the floor)."""
        if not self.exact and order > self.order:
            raise TruncationUnsound(f"cannot extend order {self.order} to {order}")
        fl = self.floor if floor is None else floor
        kept = {k: c for k, c in self.terms.items() if fl <= k[0] <= order}
        still_exact = self.exact and kept == self.terms
        return Series(kept, order, fl, exact=still_exact)

    def mul_monomial(self, m: Monomial) -> "Series":
        terms = {(qe + m.qexp, _vmul(vk, m.vars)): c * m.coeff
                 for (qe, vk), c in self.terms.items()}
        if self.exact:
            return Series.poly(terms)
        return Series(terms, self.order + m.qexp, self.floor + m.qexp)

    def scale(self, c: int) -> "Series":
        if c == 0:
            return Series({}, self.order, self.floor, exact=self.exact)
        return Series({k: c * v for k, v in self.terms.items()},
                      self.order, self.floor, exact=self.exact)

    def rename_vars(self, mapping: Mapping[str, str]) -> "Series":
        """Bijectively rename formal variables (used e.g. for symmetry checks)."""
        terms = {}
        for (qe, vk), c in self.terms.items():
            nk = _normalize_vars(tuple((mapping.get(n, n), e) for n, e in vk))
            terms[(qe, nk)] = c
        return Series(terms, self.order, self.floor, exact=self.exact)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "Series") -> "Series":
        if self.exact and other.exact:
            terms = dict(self.terms)
            for k, c in other.terms.items():
                terms[k] = terms.get(k, 0) + c
            return Series.poly(terms)
        order = min(s.order for s in (self, other) if not s.exact)
        floor = min(self.floor, other.floor)
        terms = {k: c for k, c in self.terms.items() if k[0] <= order}
        for k, c in other.terms.items():
            if k[0] <= order:
                terms[k] = terms.get(k, 0) + c
        return Series(terms, order, floor)

    def __neg__(self) -> "Series":
        return self.scale(-1)

    def __sub__(self, other: "Series") -> "Series":
        return self + (-other)

    def __mul__(self, other: "Series") -> "Series":
        if self.is_zero() or other.is_zero():
            if self.exact and other.exact:
                return Series({}, 0, 0, exact=True)
            order = min(s.order for s in (self, other) if not s.exact)
            return Series({}, order, 0)
        if self.exact and other.exact:
            terms = _convolve(self.terms, other.terms, None)
            return Series.poly(terms)
        caps = []
        if not self.exact:
            caps.append(self.order + other.valuation)
        if not other.exact:
            caps.append(other.order + self.valuation)
        cap = min(caps)
        if cap < 0:
            raise TruncationUnsound(
                "product of truncated series with negative valuations retains "
                f"no sound coefficients (cap {cap})")
        terms = _convolve(self.terms, other.terms, cap)
        return Series(terms, cap, min(0, self.floor + other.floor))

    def __pow__(self, n: int) -> "Series":
        if n < 0:
            return self.invert() ** (-n)
        if n == 0:
            return Series.one()
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def invert(self, order: int | None = None) -> "Series":
        """Multiplicative inverse, sound to `order`.

        The lowest q-level of the series must consist of a single monomial
        with coefficient +-1 (the unit-monomial factoring rule); otherwise
        the inverse has no representation with Laurent-polynomial
        q-coefficients and NotInvertible is raised.
        """
        if self.is_zero():
            raise NotInvertible("zero series has no inverse")
        v = self.valuation
        level = [(vk, c) for (qe, vk), c in self.terms.items() if qe == v]
        if len(level) != 1:
            raise NotInvertible(
                f"lowest q-level (q^{v}) holds {len(level)} monomials; "
                "need a single unit monomial")
        vk, c = level[0]
        if c not in (1, -1):
            raise NotInvertible(f"leading coefficient {c} is not a unit")
        m = Monomial(c, v, vk)
        if order is None:
            order = self.order if self.exact else self.order - 2 * v
        if not self.exact and order > self.order - 2 * v:
            raise TruncationUnsound(
                f"inverse sound only to order {self.order - 2 * v}, "
                f"requested {order}")
        # u = self / m has constant term exactly 1 at q^0.
        u = self.mul_monomial(m.inverse())
        depth = order + v  # inverse of u is needed to this q-grade
        if depth < 0:
            return Series({}, order, min(0, -v))
        grades: dict[int, dict[VKey, int]] = {}
        for (qe, vk2), c2 in u.terms.items():
            if qe == 0:
                continue
            if qe <= depth:
                grades.setdefault(qe, {})[vk2] = c2
        inv: dict[int, dict[VKey, int]] = {0: {(): 1}}
        for g in range(1, depth + 1):
            acc: dict[VKey, int] = {}
            for h, level_h in grades.items():
                if h > g:
                    continue
                prev = inv.get(g - h)
                if not prev:
                    continue
                for vk1, c1 in level_h.items():
                    for vk2, c2 in prev.items():
                        k = _vmul(vk1, vk2)
                        acc[k] = acc.get(k, 0) - c1 * c2
            acc = {k: c for k, c in acc.items() if c}
            if acc:
                inv[g] = acc
        terms: dict[TermKey, int] = {}
        minv = m.inverse()
        for g, level_g in inv.items():
            for vk2, c2 in level_g.items():
                terms[(g + minv.qexp, _vmul(vk2, minv.vars))] = c2 * minv.coeff
        return Series(terms, order, min(0, -v))

    def rescale_base(self, d: int) -> "Series":
        """Substitute q -> q^d, stretching exponents, order and floor by d."""
        if d < 1:
            raise ValueError("rescale factor must be a positive integer")
        terms = {(qe * d, vk): c for (qe, vk), c in self.terms.items()}
        return Series(terms, self.order * d, self.floor * d, exact=self.exact)

    def rescale_down(self, d: int) -> "Series":
        """Inverse of rescale_base; every q-exponent must be divisible by d."""
        if d < 1:
            raise ValueError("rescale factor must be a positive integer")
        terms = {}
        for (qe, vk), c in self.terms.items():
            if qe % d:
                raise ValueError(f"exponent q^{qe} not divisible by {d}")
            terms[(qe // d, vk)] = c
        return Series(terms, self.order // d, self.floor // d, exact=self.exact)

    # -- comparison / text ---------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def sorted_terms(self) -> list[tuple[TermKey, int]]:
        """Terms graded by q-exponent, then lexicographically by variables."""
        return sorted(self.terms.items())

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(_term_text(qe, vk, c) for (qe, vk), c in self.sorted_terms())

    def __repr__(self) -> str:
        tail = "" if self.exact else f" + O(q^{self.order + 1})"
        return f"<Series {self.to_text()}{tail}>"


def _convolve(a: dict[TermKey, int], b: dict[TermKey, int],
              cap: int | None) -> dict[TermKey, int]:
    """Dict convolution; drops products above the q-exponent cap."""
    if len(a) > len(b):
        a, b = b, a
    bitems = sorted(b.items())  # ordered by qexp first, enables early break
    out: dict[TermKey, int] = {}
    for (qa, va), ca in a.items():
        limit = None if cap is None else cap - qa
        for (qb, vb), cb in bitems:
            if limit is not None and qb > limit:
                break
            k = (qa + qb, _vmul(va, vb))
            s = out.get(k, 0) + ca * cb
            if s:
                out[k] = s
            elif k in out:
                del out[k]
    return out


def _clamp(s: Series, window: int) -> Series:
    """Downgrade a series to an order-`window` truncation (keep exact ones
    whole when they already fit)."""
    if s.exact:
        if s.is_zero() or max(qe for qe, _ in s.terms) <= window:
            return s
        kept = {k: c for k, c in s.terms.items() if k[0] <= window}
        bottom = min((k[0] for k in kept), default=0)
        return Series(kept, window, min(0, bottom))
    order = min(s.order, window)
    kept = {k: c for k, c in s.terms.items() if k[0] <= order}
    return Series(kept, order, s.floor)


def product_capped(factors: list[Series], cap: int) -> Series:
    """Product of exact/truncated factors, truncated at q-order `cap`.

    Intermediate results are trimmed using the exact valuations of the
    factors still to come, which keeps deep-Laurent assemblies (negative
    q-exponents) small: a term dropped above an intermediate window can
    only land above `cap` once the remaining factors are multiplied in.
    """
    vals = [f.valuation for f in factors]
    if any(v is None for v in vals):
        return Series({}, cap, 0)
    if sum(vals) > cap:
        return Series({}, cap, 0)
    acc: Series = Series.one()
    for i, f in enumerate(factors):
        acc = _clamp(acc, cap - sum(vals[i:]))
        acc = acc * f
        if acc.is_zero() and not acc.exact:
            return Series({}, cap, 0)
    return _clamp(acc, cap)


# -- spec-level operation names ------------------------------------------


def series_add(s1: Series, s2: Series) -> Series:
    return s1 + s2


def series_mul(s1: Series, s2: Series) -> Series:
    """Product with the truncation-soundness contract enforced.

    If an operand carries negative q-exponents and the other is truncated
    too tightly to absorb them, the requested order cannot be met and
    TruncationUnsound is raised (by __mul__'s cap computation when nothing
    is representable, or here when the usual min-order contract fails).
    """
    res = s1 * s2
    targets = [s.order for s in (s1, s2) if not s.exact]
    if targets and res.order < min(targets):
        raise TruncationUnsound(
            f"product sound only to order {res.order}, below operand order "
            f"{min(targets)}; widen the truncated operand first")
    return res


def series_invert(s: Series, order: int | None = None) -> Series:
    return s.invert(order)


def series_coeff(s: Series, qexp: int, vars: Mapping[str, int] | VKey = ()) -> int:
    return s.coeff(qexp, vars)


def series_rescale_base(s: Series, d: int) -> Series:
    return s.rescale_base(d)


def parse_series(text: str) -> Series:
    """Parse the canonical serialization back into an exact Series.

    Inverse of Series.to_text on its output; accepts surrounding whitespace
    but nothing fancier.
    """
    text = text.strip()
    if text == "0":
        return Series({}, 0, 0, exact=True)
    terms: dict[TermKey, int] = {}
    for chunk in text.split(" + "):
        pieces = chunk.strip().split("*")
        if len(pieces) < 2:
            raise ValueError(f"malformed term {chunk!r}")
        coeff = int(pieces[0])
        if not pieces[1].startswith("q^"):
            raise ValueError(f"term {chunk!r} lacks its q-power")
        qe = int(pieces[1][2:])
        vars = []
        for piece in pieces[2:]:
            name, _, exp = piece.partition("^")
            if not _:
                raise ValueError(f"malformed variable power {piece!r}")
            vars.append((name, int(exp)))
        key = (qe, _normalize_vars(vars))
        terms[key] = terms.get(key, 0) + coeff
    return Series.poly(terms)
