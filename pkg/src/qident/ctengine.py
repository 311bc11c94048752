"""Constant-term engine: Laurent expansion in an auxiliary variable z.

Bilateral product sides are handled by expanding every z-carrying
Pochhammer symbol into a `ZSeries` (a Laurent polynomial in z whose
coefficients are truncated q-series), multiplying them out, and reading
off single z-powers.  Pairing two Jacobi triple products and extracting
the constant term replays the double-sum product formula mechanically;
`prove_main_theorem` runs that replay end to end.

Window invariant
----------------
A z-power absent from a ZSeries is not claimed to be zero: its true
coefficient has q-valuation above the series' `order`, so skipping it in
products and extractions loses nothing at or below the working order.
Every constructor below is careful to keep that invariant, because it is
what makes multiplication of two ZSeries sound without tracking infinite
windows.
"""

from __future__ import annotations

from dataclasses import dataclass

from .qfactorial import (
    INF,
    FactorSpec,
    NotTruncatable,
    ProductSpec,
    expand_product_spec,
)
from .qring import Monomial, NotInvertible, QSeriesError, QueryBeyondOrder, Series
from .report import VerificationReport, find_first_mismatch
from .summation import (
    AffineForm,
    DenomFactor,
    QuadForm,
    SumSpec,
    eval_sum,
    make_sum_spec,
)


class ProofReplayError(QSeriesError):
    """Two expansion routes that must agree produced different series."""


def binom2(n: int) -> int:
    """n(n-1)/2, nonnegative for every integer n."""
    return n * (n - 1) // 2


# ------------------------------------------------------------------ ZSeries


class ZSeries:
    """Laurent polynomial in z over truncated q-series coefficients.

    ``coeffs`` maps a z-exponent to its coefficient Series.  ``order`` is
    the q-order to which the object as a whole is sound (see the module
    docstring for the window invariant).  When ``bounds`` is set the
    invariant holds only for z-powers inside ``[lo, hi]`` — such series
    come out of folding an open factor over a requested window — and
    extraction outside that window raises instead of guessing.
    """

    __slots__ = ("coeffs", "order", "bounds")

    def __init__(self, coeffs: dict[int, Series], order: int,
                 bounds: tuple[int, int] | None = None):
        self.coeffs = {k: s for k, s in coeffs.items() if not s.is_zero()}
        self.order = order
        self.bounds = bounds

    @classmethod
    def unit(cls, order: int) -> "ZSeries":
        return cls({0: Series.one()}, order)

    @property
    def window(self) -> tuple[int, int] | None:
        """Span of retained z-powers, or None when no coefficient survives."""
        if not self.coeffs:
            return None
        return (min(self.coeffs), max(self.coeffs))

    def extract(self, k: int) -> Series:
        """Coefficient of z^k; an inexact zero when the window skipped it."""
        if self.bounds is not None and not (self.bounds[0] <= k <= self.bounds[1]):
            raise QueryBeyondOrder(
                f"z^{k} lies outside the computed window {self.bounds}")
        return self.coeffs.get(k, Series({}, self.order, 0))

    def scale_series(self, s: Series) -> "ZSeries":
        """Multiply every coefficient by a z-free series."""
        v = s.valuation
        if v is None:
            return ZSeries({}, self.order, self.bounds)
        order = self.order + min(0, v)
        return ZSeries({k: c * s for k, c in self.coeffs.items()},
                       order, self.bounds)

    def substitute(self, mono: Monomial | None = None,
                   invert: bool = False) -> "ZSeries":
        """Replace z by mono*z, or by mono/z when `invert` is set.

        Only monomials free of q are allowed: a q-shift moves valuations
        by k-dependent amounts and the absent z-powers near the window
        edge would silently stop satisfying the window invariant.  (For
        triple products the q-shifted substitution z -> q/z is never
        needed: it reproduces another triple product, see jtp_zseries.)
        """
        mono = Monomial.unit() if mono is None else mono
        if mono.qexp != 0:
            raise NotTruncatable(
                "substituting a q-carrying monomial for z shifts the window "
                "edge unsoundly; rebuild the expansion instead")
        out: dict[int, Series] = {}
        for k, s in self.coeffs.items():
            out[-k if invert else k] = s.mul_monomial(mono ** k)
        b = self.bounds
        if b is not None and invert:
            b = (-b[1], -b[0])
        return ZSeries(out, self.order, b)

    def __repr__(self) -> str:
        w = self.window
        return f"ZSeries(window={w}, order={self.order}, bounds={self.bounds})"


def zmul(f: ZSeries, g: ZSeries) -> ZSeries:
    """Cauchy product in z; coefficient products cap their own q-orders."""
    if f.bounds is not None or g.bounds is not None:
        raise NotTruncatable(
            "cannot multiply a window-clipped ZSeries; clip after multiplying")
    order = min(f.order, g.order)
    # A coefficient with negative q-valuation would let a skipped
    # (above-order) partner fall back below the order: tighten for that.
    neg = min((s.valuation for s in (*f.coeffs.values(), *g.coeffs.values())
               if s.valuation is not None and s.valuation < 0), default=0)
    order += neg
    out: dict[int, Series] = {}
    for a, sa in f.coeffs.items():
        for b, sb in g.coeffs.items():
            prod = sa * sb
            if prod.is_zero():
                continue
            k = a + b
            out[k] = out[k] + prod if k in out else prod
    return ZSeries(out, order)


def z_extract(f: ZSeries, k: int) -> Series:
    return f.extract(k)


# ------------------------------------------------------ Jacobi triple product


def jtp_zseries(m: Monomial, order: int, basepow: int = 1) -> ZSeries:
    """The triple product (q^b, m*z, q^b/(m*z); q^b)_inf as a ZSeries.

    The coefficient of z^n is exactly (-1)^n q^(b*binom(n,2)) m^n; the
    window keeps every n whose q-weight b*binom(n,2) fits under `order`,
    which is symmetric apart from the extra n=1 entry at weight zero.
    """
    if m.coeff not in (1, -1):
        raise NotInvertible(
            f"companion monomial coefficient {m.coeff} is not a unit")
    if m.qexp != 0:
        raise NotTruncatable(
            "fold the companion's q-power into the z-substitution; a "
            "q-carrying companion breaks the window invariant")
    coeffs: dict[int, Series] = {}
    n = 0
    while basepow * binom2(n) <= order:
        sign = -1 if n % 2 else 1
        coeffs[n] = Series.from_monomial(
            Monomial(sign, basepow * binom2(n), ()) * m ** n)
        n += 1
    n = -1
    while basepow * binom2(n) <= order:
        sign = -1 if n % 2 else 1
        coeffs[n] = Series.from_monomial(
            Monomial(sign, basepow * binom2(n), ()) * m ** n)
        n -= 1
    return ZSeries(coeffs, order)


# ------------------------------------------------------- z-carrying products


@dataclass(frozen=True)
class ZFactor:
    """One z-carrying infinite Pochhammer, (mon * z^zexp; q^basepow)_inf^expo."""

    mon: Monomial
    zexp: int = 1
    basepow: int = 1
    expo: int = 1

    def __post_init__(self):
        if self.zexp == 0:
            raise ValueError("z exponent must be nonzero")
        if self.basepow < 1:
            raise ValueError(f"base power {self.basepow} must be >= 1")
        if self.expo not in (1, -1):
            raise ValueError("only first powers and reciprocals are supported")

    @property
    def is_open(self) -> bool:
        """A reciprocal whose k=0 binomial sits at q-weight zero.

        Its geometric expansion puts every power of z at the same
        q-weight, so no finite window is sound; the factor must be folded
        lazily over an explicitly requested window instead.
        """
        return self.expo == -1 and self.mon.qexp == 0


def _downgraded(coeffs: dict[int, Series], order: int) -> dict[int, Series]:
    """Re-mark coefficients as inexact at `order`.

    The builders below multiply finitely many binomials, so their exact
    flags would claim completeness the omitted above-order factors do not
    deliver.
    """
    return {k: Series({key: c for key, c in s.terms.items() if key[0] <= order},
                      order, min(0, s.floor))
            for k, s in coeffs.items()}


def _zbinomials(f: ZFactor, order: int) -> ZSeries:
    """Expand (mon*z^e; q^b)_inf by multiplying its binomials under `order`."""
    coeffs: dict[int, Series] = {0: Series.one()}
    k = 0
    while f.mon.qexp + k * f.basepow <= order:
        term = Monomial(-f.mon.coeff, f.mon.qexp + k * f.basepow, f.mon.vars)
        new = dict(coeffs)
        for j, s in coeffs.items():
            shifted = s.mul_monomial(term)
            key = j + f.zexp
            new[key] = new[key] + shifted if key in new else shifted
        # Later binomials only add q-weight, so a coefficient already
        # above the order stays above it: prune as we go.
        coeffs = {j: s.truncate(min(order, s.order)) for j, s in new.items()
                  if s.valuation is not None and s.valuation <= order}
        k += 1
    return ZSeries(_downgraded(coeffs, order), order)


def _zgeometric(f: ZFactor, order: int) -> ZSeries:
    """Expand 1/(mon*z^e; q^b)_inf, sound only when mon carries q."""
    out = ZSeries.unit(order)
    k = 0
    while f.mon.qexp + k * f.basepow <= order:
        weight = f.mon.qexp + k * f.basepow
        geo: dict[int, Series] = {0: Series.one()}
        t = 1
        while t * weight <= order:
            geo[t * f.zexp] = Series.from_monomial(
                f.mon ** t * Monomial.q(k * f.basepow * t))
            t += 1
        out = zmul(out, ZSeries(geo, order))
        k += 1
    return ZSeries(_downgraded(out.coeffs, order), order)


def _normalize_zwindow(zwindow) -> tuple[int, int]:
    if isinstance(zwindow, int):
        if zwindow < 0:
            raise ValueError(f"window half-width {zwindow} must be >= 0")
        return (-zwindow, zwindow)
    lo, hi = zwindow
    if lo > hi:
        raise ValueError(f"empty z-window {zwindow}")
    return (lo, hi)


def expand_zfactors(factors, order: int, zwindow=None) -> ZSeries:
    """Multiply out a list of ZFactors to a ZSeries sound at `order`.

    At most one factor may be "open" (reciprocal with q-free argument,
    such as 1/(z;q)_inf): its window is unbounded at every order, so it
    is folded lazily against the finite closed product, over the z-range
    the caller asks for.  `zwindow` is an int K for [-K, K] or an
    explicit (lo, hi) pair, and is required exactly when an open factor
    is present.
    """
    closed = ZSeries.unit(order)
    opens: list[ZFactor] = []
    for f in factors:
        if f.expo == 1:
            if f.mon.qexp < 0:
                raise NotTruncatable(
                    f"argument {f.mon.text()} has negative q-weight; the "
                    "binomial expansion never settles")
            closed = zmul(closed, _zbinomials(f, order))
        elif f.is_open:
            # Split off the weight-zero geometric 1/(1 - mon z^e); the
            # q-shifted remainder of the product is an ordinary closed
            # reciprocal and joins the others.
            opens.append(f)
            tail = ZFactor(f.mon * Monomial.q(f.basepow), f.zexp,
                           f.basepow, -1)
            closed = zmul(closed, _zgeometric(tail, order))
        elif f.mon.qexp > 0:
            closed = zmul(closed, _zgeometric(f, order))
        else:
            raise NotTruncatable(
                f"reciprocal argument {f.mon.text()} has negative q-weight")
    if not opens:
        return closed
    if len(opens) > 1:
        raise NotTruncatable(
            f"{len(opens)} open factors leave every z-power at q-weight "
            "zero; no window is sound")
    if zwindow is None:
        raise NotTruncatable(
            "an open factor makes the z-window unbounded; pass zwindow")
    lo, hi = _normalize_zwindow(zwindow)
    open_f = opens[0]
    folded: dict[int, Series] = {}
    for k in range(lo, hi + 1):
        acc = Series({}, order, 0)
        for a, s in closed.coeffs.items():
            d = k - a
            if d % open_f.zexp == 0 and d // open_f.zexp >= 0:
                acc = acc + s.mul_monomial(open_f.mon ** (d // open_f.zexp))
        folded[k] = acc
    return ZSeries(folded, order, bounds=(lo, hi))


# --------------------------------------------------------- per-z verification


def verify_zcoeff_identity(name: str, lhs_coeff, rhs: ZSeries, zwindow,
                           order: int) -> VerificationReport:
    """Compare a z-indexed family of coefficients against a ZSeries.

    `lhs_coeff` maps a z-exponent to the left side's coefficient Series.
    Each pair is compared termwise up to `order`; the first discrepancy
    (tagged with its z-power) turns the report into a mismatch.
    """
    lo, hi = _normalize_zwindow(zwindow)
    for k in range(lo, hi + 1):
        lhs = lhs_coeff(k)
        rhs_k = rhs.extract(k)
        for side, s in (("lhs", lhs), ("rhs", rhs_k)):
            if not s.exact and s.order < order:
                return VerificationReport(
                    name, order, "error",
                    error=f"{side} at z^{k} only sound to order {s.order}")
        diff = find_first_mismatch(lhs, rhs_k, order, zexp=k)
        if diff is not None:
            return VerificationReport(
                name, order, "mismatch", first_mismatch=diff,
                details={"zwindow": [lo, hi]})
    return VerificationReport(name, order, "pass",
                              details={"zwindow": [lo, hi],
                                       "zcoeffs_checked": hi - lo + 1})


# ------------------------------------------------------------ the main replay


def bilateral_double_spec(quad: QuadForm) -> SumSpec:
    """The bilateral double sum over Z^2 with weights x^i y^j q^Q(i,j)
    over (xq;q)_i (yq;q)_j, for a caller-chosen exponent form."""
    i = AffineForm.index(0, 2)
    j = AffineForm.index(1, 2)
    return make_sum_spec(
        2, "ZZ", quad,
        varweights={"x": (1, 0), "y": (0, 1)},
        denoms=(DenomFactor(Monomial.var("x", qexp=1), 1, i),
                DenomFactor(Monomial.var("y", qexp=1), 1, j)))


def hexagonal_quadform() -> QuadForm:
    """i^2 - ij + j^2 as a rational quadratic form on Z^2."""
    i = AffineForm.index(0, 2)
    j = AffineForm.index(1, 2)
    return (QuadForm.square(i) + QuadForm.square(j)
            + QuadForm.product(i, j).scale(-1))


def paired_quadform() -> QuadForm:
    """binom(i,2) + binom(j+1,2) + binom(j-i,2), the exponent produced by
    pairing two triple products and taking the z-constant term."""
    i = AffineForm.index(0, 2)
    j = AffineForm.index(1, 2)
    return (QuadForm.binom2(i) + QuadForm.binom2(j.shift(1))
            + QuadForm.binom2(j - i))


@dataclass
class MainProof:
    """Outcome of the constant-term replay of the double-sum identity.

    All three series agree coefficientwise up to `order` (the replay
    raises otherwise): `constant_term` is the product side assembled from
    [z^0] of the paired triple products, `paired_sum` re-evaluates the
    double sum with the exponent in its paired binomial form, and
    `direct_sum` evaluates it as stated.
    """

    order: int
    constant_term: Series
    paired_sum: Series
    direct_sum: Series
    grid_points: int


def _require_match(name: str, lhs: Series, rhs: Series, order: int) -> None:
    diff = find_first_mismatch(lhs, rhs, order)
    if diff is not None:
        e = diff["exponents"]
        mono = " ".join(f"{v}^{e[v]}" for v in e)
        raise ProofReplayError(
            f"{name}: first differing monomial {mono}: "
            f"{diff['lhs']} != {diff['rhs']}")


def prove_main_theorem(order: int = 24, grid: int = 10) -> MainProof:
    """Replay the constant-term proof of the bilateral double-sum identity.

    Steps, in the order the argument runs:

    1. check the exponent bookkeeping binom(i,2) + binom(j+1,2) +
       binom(j-i,2) = i^2 - ij + j^2 pointwise on [-grid, grid]^2;
    2. pair the triple products in z for the companions x and 1/y (the
       latter is exactly the z -> q/z image of the companion y), extract
       the z-constant term, and multiply by the z-free prefactor
       (q;q)_inf / ((xq;q)_inf (yq;q)_inf);
    3. evaluate the double sum with the paired exponent form, and again
       with the quadratic as stated;
    4. demand the three series agree coefficientwise up to `order`.
    """
    q_paired = paired_quadform()
    q_direct = hexagonal_quadform()
    points = 0
    for a in range(-grid, grid + 1):
        for b in range(-grid, grid + 1):
            lhs = q_paired.evaluate((a, b))
            rhs = q_direct.evaluate((a, b))
            if lhs != rhs:
                raise ProofReplayError(
                    f"exponent bookkeeping fails at (i, j) = ({a}, {b}): "
                    f"{lhs} != {rhs}")
            points += 1

    pair = zmul(jtp_zseries(Monomial.var("x"), order),
                jtp_zseries(Monomial.var("y", -1), order))
    ct = z_extract(pair, 0)
    prefactor = expand_product_spec(ProductSpec((
        FactorSpec(Monomial.q(), 1, INF, 1),
        FactorSpec(Monomial.var("x", qexp=1), 1, INF, -1),
        FactorSpec(Monomial.var("y", qexp=1), 1, INF, -1))), order)
    constant_term = prefactor * ct

    paired_sum = eval_sum(bilateral_double_spec(q_paired), order)
    direct_sum = eval_sum(bilateral_double_spec(q_direct), order)

    _require_match("constant term vs paired sum", constant_term, paired_sum,
                   order)
    _require_match("paired sum vs direct sum", paired_sum, direct_sum, order)
    return MainProof(order, constant_term, paired_sum, direct_sum, points)
