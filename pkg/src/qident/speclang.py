"""Statement files for identities: lexer, parser, canonical writer, lowering.

The format is deliberately small: one or more ``identity`` blocks, each
with optional ``vars``/``params`` sections and an ``lhs``/``rhs`` pair of
expressions built from integers, named monomials, ``poch(arg; base; n)``
symbols and ``sum(decls; body)`` nodes.  ``#`` starts a line comment and
whitespace never matters.  ``serialize_identity`` emits a canonical
rendering that parses back to an equal tree and is a byte-level fixed
point, which is what the round-trip tests pin down.

Parsing is purely syntactic; ``validate_identity`` lowers the tree onto
the evaluation types (`SumSpec` / `ProductSpec`) and is where divisions,
domains and truncatability get checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .qfactorial import INF, FactorSpec, ProductSpec
from .qring import Monomial
from .summation import (
    AffineForm,
    DenomFactor,
    QuadForm,
    SumSpec,
    _bilateral_positive_definite,
    make_sum_spec,
)


class ParseError(Exception):
    """Syntax violation, located at a line and column of the source text."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class LoweringError(Exception):
    """Structurally valid text that does not describe an evaluable identity."""


RESERVED = frozenset(
    ["identity", "vars", "params", "lhs", "rhs", "sum", "poch", "inf",
     "binom", "in", "Z"])


# ----------------------------------------------------------------- exponents


def _frac_text(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


class ExpPoly:
    """Polynomial exponent with rational coefficients in named symbols.

    Keys are sorted ``((name, power), ...)`` tuples; the empty key is the
    constant term.  Everything is normalized on construction so that
    equality and the canonical text are stable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean: dict[tuple, Fraction] = {}
        for key, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[tuple(sorted(key))] = clean.get(tuple(sorted(key)), 0) + c
        self.terms = {k: c for k, c in clean.items() if c}

    @classmethod
    def const(cls, c) -> "ExpPoly":
        return cls({(): Fraction(c)})

    @classmethod
    def var(cls, name: str) -> "ExpPoly":
        return cls({((name, 1),): Fraction(1)})

    @property
    def degree(self) -> int:
        return max((sum(e for _, e in k) for k in self.terms), default=0)

    @property
    def is_constant(self) -> bool:
        return all(not k for k in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise LoweringError(f"exponent {self.text()} is not constant")
        return self.terms.get((), Fraction(0))

    def names(self) -> set[str]:
        return {n for k in self.terms for n, _ in k}

    def coefficient(self, key) -> Fraction:
        return self.terms.get(tuple(sorted(key)), Fraction(0))

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0) + c
        return ExpPoly(terms)

    def __neg__(self) -> "ExpPoly":
        return ExpPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def scale(self, r) -> "ExpPoly":
        r = Fraction(r)
        return ExpPoly({k: r * c for k, c in self.terms.items()})

    def __mul__(self, other: "ExpPoly") -> "ExpPoly":
        out: dict[tuple, Fraction] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                merged: dict[str, int] = {}
                for n, e in (*k1, *k2):
                    merged[n] = merged.get(n, 0) + e
                key = tuple(sorted(merged.items()))
                out[key] = out.get(key, 0) + c1 * c2
        return ExpPoly(out)

    def __pow__(self, n: int) -> "ExpPoly":
        out = ExpPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def binom2(self) -> "ExpPoly":
        """binom(self, 2) = (self^2 - self) / 2."""
        return (self * self - self).scale(Fraction(1, 2))

    def substitute(self, bindings) -> "ExpPoly":
        if not bindings:
            return self
        out = ExpPoly()
        for k, c in self.terms.items():
            piece = ExpPoly({(): c})
            for n, e in k:
                if n in bindings:
                    piece = piece.scale(Fraction(bindings[n]) ** e)
                else:
                    piece = piece * ExpPoly({((n, e),): Fraction(1)})
            out = out + piece
        return out

    def _key(self):
        return tuple(sorted(self.terms.items()))

    def __eq__(self, other):
        return isinstance(other, ExpPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(self._key())

    def text(self) -> str:
        """Canonical rendering: graded terms, rationals as num/den."""
        if not self.terms:
            return "0"
        items = sorted(
            self.terms.items(),
            key=lambda kv: (-sum(e for _, e in kv[0]),
                            tuple((n, -e) for n, e in kv[0])))
        out = ""
        for key, c in items:
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in key)
            mag = _frac_text(abs(c))
            if not key:
                piece = mag
            elif abs(c) == 1:
                piece = mono
            else:
                piece = f"{mag}*{mono}"
            if not out:
                out = ("-" if c < 0 else "") + piece
            else:
                out += f" {'-' if c < 0 else '+'} {piece}"
        return out

    def __repr__(self):
        return f"ExpPoly({self.text()!r})"


_ONE_EXP = ExpPoly.const(1)


# ----------------------------------------------------------------------- AST


MonoKey = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class MonoPow:
    """A named base raised to a polynomial exponent, e.g. q^(n^2) or x^i."""

    name: str
    exp: ExpPoly


@dataclass(frozen=True)
class IntAtom:
    value: int


@dataclass(frozen=True)
class PochCall:
    """poch(coeff * arg; base; count); count None stands for `inf`."""

    arg: MonoKey
    base: MonoKey
    count: ExpPoly | None
    coeff: int = 1


@dataclass(frozen=True)
class SumCall:
    decls: tuple[tuple[str, str], ...]        # (index name, 'N' | 'Z')
    body: "Expr"


@dataclass(frozen=True)
class Group:
    inner: "Expr"
    exp: ExpPoly | None = None


@dataclass(frozen=True)
class Mul:
    factors: tuple[tuple[int, object], ...]   # (+1 for *, -1 for /)


@dataclass(frozen=True)
class Expr:
    addends: tuple[tuple[int, Mul], ...]      # (+1 for +, -1 for -)


@dataclass(frozen=True)
class IdentityAST:
    name: str
    vars: tuple[str, ...]
    params: tuple[tuple[str, int], ...]
    lhs: Expr
    rhs: Expr


# --------------------------------------------------------------------- lexer


@dataclass(frozen=True)
class Token:
    kind: str      # NAME | INT | PUNCT | EOF
    text: str
    line: int
    col: int
    offset: int


_PUNCT = set("{}();:,+-*/^=")


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
        elif ch.isspace():
            col, i = col + 1, i + 1
        elif ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(Token("INT", text[i:j], line, col, i))
            col += j - i
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            out.append(Token("NAME", text[i:j], line, col, i))
            col += j - i
            i = j
        elif ch == ">" and i + 1 < n and text[i + 1] == "=":
            out.append(Token("PUNCT", ">=", line, col, i))
            col += 2
            i += 2
        elif ch in _PUNCT:
            out.append(Token("PUNCT", ch, line, col, i))
            col += 1
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    out.append(Token("EOF", "", line, col, n))
    return out


# -------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.last = tokens[0]

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
            self.last = tok
        return tok

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        if tok.kind == "EOF":
            # Report truncation at the last real token, not past the end.
            tok = self.last
        raise ParseError(message, tok.line, tok.col)

    def at_punct(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "PUNCT" and t.text in texts

    def expect_punct(self, text: str) -> Token:
        if not self.at_punct(text):
            self.fail(f"expected {text!r}, found {self.peek().text!r}")
        return self.advance()

    def at_word(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "NAME" and t.text == word

    def expect_word(self, word: str) -> Token:
        if not self.at_word(word):
            self.fail(f"expected {word!r}, found {self.peek().text!r}")
        return self.advance()

    def expect_name(self, what: str) -> str:
        t = self.peek()
        if t.kind != "NAME":
            self.fail(f"expected {what}, found {t.text!r}")
        if t.text in RESERVED:
            self.fail(f"{t.text!r} is reserved and cannot name {what}")
        return self.advance().text

    def expect_int(self) -> int:
        t = self.peek()
        if t.kind != "INT":
            self.fail(f"expected an integer, found {t.text!r}")
        return int(self.advance().text)

    # -- identities ---------------------------------------------------------

    def parse_file(self) -> list[IdentityAST]:
        out = [self.parse_identity_block()]
        while not self.peek().kind == "EOF":
            out.append(self.parse_identity_block())
        return out

    def parse_identity_block(self) -> IdentityAST:
        self.expect_word("identity")
        name = self.expect_name("an identity")
        self.expect_punct("{")
        vars_: tuple[str, ...] = ()
        params: tuple[tuple[str, int], ...] = ()
        if self.at_word("vars"):
            self.advance()
            self.expect_punct(":")
            names = [self.expect_name("a variable")]
            while self.at_punct(","):
                self.advance()
                names.append(self.expect_name("a variable"))
            self.expect_punct(";")
            vars_ = tuple(names)
        if self.at_word("params"):
            self.advance()
            self.expect_punct(":")
            bindings = [self._param_binding()]
            while self.at_punct(","):
                self.advance()
                bindings.append(self._param_binding())
            self.expect_punct(";")
            params = tuple(bindings)
        self.expect_word("lhs")
        self.expect_punct(":")
        lhs = self.parse_expr()
        self.expect_punct(";")
        self.expect_word("rhs")
        self.expect_punct(":")
        rhs = self.parse_expr()
        self.expect_punct(";")
        self.expect_punct("}")
        return IdentityAST(name, vars_, params, lhs, rhs)

    def _param_binding(self) -> tuple[str, int]:
        name = self.expect_name("a parameter")
        self.expect_punct("=")
        sign = 1
        if self.at_punct("-"):
            self.advance()
            sign = -1
        return (name, sign * self.expect_int())

    # -- expressions --------------------------------------------------------

    def parse_expr(self) -> Expr:
        sign = 1
        if self.at_punct("-"):
            self.advance()
            sign = -1
        addends = [(sign, self.parse_term())]
        while self.at_punct("+", "-"):
            op = 1 if self.advance().text == "+" else -1
            addends.append((op, self.parse_term()))
        return Expr(tuple(addends))

    def parse_term(self) -> Mul:
        factors = [(1, self.parse_factor())]
        while self.at_punct("*", "/"):
            op = 1 if self.advance().text == "*" else -1
            factors.append((op, self.parse_factor()))
        return Mul(tuple(factors))

    def parse_factor(self):
        atom = self.parse_atom()
        if not self.at_punct("^"):
            return atom
        self.advance()
        exp = self._caret_exponent()
        if isinstance(atom, MonoPow):
            return MonoPow(atom.name, exp)
        if isinstance(atom, IntAtom) and atom.value == 1:
            return atom
        if isinstance(atom, Group):
            return Group(atom.inner, exp)
        return Group(Expr(((1, Mul(((1, atom),))),)), exp)

    def _caret_exponent(self) -> ExpPoly:
        if self.at_punct("("):
            self.advance()
            poly = self.parse_iexpr()
            self.expect_punct(")")
            return poly
        t = self.peek()
        if t.kind == "INT":
            return ExpPoly.const(self.expect_int())
        if t.kind == "NAME" and t.text not in RESERVED:
            return ExpPoly.var(self.advance().text)
        self.fail(f"expected an exponent, found {t.text!r}")

    def parse_atom(self):
        t = self.peek()
        if t.kind == "INT":
            return IntAtom(self.expect_int())
        if self.at_word("poch"):
            return self.parse_poch()
        if self.at_word("sum"):
            return self.parse_sum()
        if t.kind == "NAME":
            if t.text in RESERVED:
                self.fail(f"{t.text!r} is reserved")
            return MonoPow(self.advance().text, _ONE_EXP)
        if self.at_punct("("):
            self.advance()
            inner = self.parse_expr()
            self.expect_punct(")")
            return Group(inner)
        self.fail(f"expected a value, found {t.text!r}")

    def parse_poch(self) -> PochCall:
        self.expect_word("poch")
        self.expect_punct("(")
        coeff = 1
        if self.at_punct("-"):
            self.advance()
            coeff = -1
        arg = self.parse_monoexpr()
        self.expect_punct(";")
        base = self.parse_monoexpr()
        self.expect_punct(";")
        if self.at_word("inf"):
            self.advance()
            count = None
        else:
            count = self.parse_iexpr()
        self.expect_punct(")")
        return PochCall(arg, base, count, coeff)

    def parse_monoexpr(self) -> MonoKey:
        parts = [self._monofactor()]
        while self.at_punct("*"):
            self.advance()
            parts.append(self._monofactor())
        merged: dict[str, int] = {}
        for name, e in parts:
            merged[name] = merged.get(name, 0) + e
        return normalize_mono(merged)

    def _monofactor(self) -> tuple[str, int]:
        t = self.peek()
        if t.kind != "NAME" or (t.text in RESERVED):
            self.fail(f"expected a monomial name, found {t.text!r}")
        name = self.advance().text
        if not self.at_punct("^"):
            return (name, 1)
        self.advance()
        if self.at_punct("("):
            self.advance()
            sign = 1
            if self.at_punct("-"):
                self.advance()
                sign = -1
            e = sign * self.expect_int()
            self.expect_punct(")")
            return (name, e)
        return (name, self.expect_int())

    def parse_sum(self) -> SumCall:
        self.expect_word("sum")
        self.expect_punct("(")
        decls = [self._index_decl()]
        while self.at_punct(","):
            self.advance()
            decls.append(self._index_decl())
        self.expect_punct(";")
        body = self.parse_expr()
        self.expect_punct(")")
        return SumCall(tuple(decls), body)

    def _index_decl(self) -> tuple[str, str]:
        name = self.expect_name("an index")
        if self.at_punct(">="):
            self.advance()
            tok = self.peek()
            if tok.kind != "INT" or tok.text != "0":
                self.fail(f"expected 0 after '>=', found {tok.text!r}")
            self.advance()
            return (name, "N")
        if self.at_word("in"):
            self.advance()
            self.expect_word("Z")
            return (name, "Z")
        self.fail(f"expected '>= 0' or 'in Z', found {self.peek().text!r}")

    # -- exponent arithmetic -------------------------------------------------

    def _check_degree(self, poly: ExpPoly, tok: Token) -> ExpPoly:
        if poly.degree > 2:
            raise ParseError(
                f"exponent degree {poly.degree} exceeds 2", tok.line, tok.col)
        return poly

    def parse_iexpr(self) -> ExpPoly:
        sign = 1
        if self.at_punct("-"):
            self.advance()
            sign = -1
        poly = self.parse_iterm()
        if sign < 0:
            poly = -poly
        while self.at_punct("+", "-"):
            op = self.advance().text
            rhs = self.parse_iterm()
            poly = poly + rhs if op == "+" else poly - rhs
        return poly

    def parse_iterm(self) -> ExpPoly:
        poly = self.parse_ifactor()
        while self.at_punct("*", "/"):
            tok = self.advance()
            rhs = self.parse_ifactor()
            if tok.text == "*":
                poly = self._check_degree(poly * rhs, tok)
            else:
                if not rhs.is_constant or rhs.constant_value() == 0:
                    self.fail("division in exponents needs a nonzero constant",
                              tok)
                poly = poly.scale(1 / rhs.constant_value())
        return poly

    def parse_ifactor(self) -> ExpPoly:
        poly = self.parse_iatom()
        if self.at_punct("^"):
            tok = self.advance()
            n = self.expect_int()
            return self._check_degree(poly ** n, tok)
        return poly

    def parse_iatom(self) -> ExpPoly:
        t = self.peek()
        if t.kind == "INT":
            return ExpPoly.const(self.expect_int())
        if self.at_word("binom"):
            tok = self.advance()
            self.expect_punct("(")
            inner = self.parse_iexpr()
            self.expect_punct(",")
            two = self.peek()
            if two.kind != "INT" or two.text != "2":
                self.fail(f"only binom(e, 2) is supported, found {two.text!r}")
            self.advance()
            self.expect_punct(")")
            return self._check_degree(inner.binom2(), tok)
        if t.kind == "NAME" and t.text not in RESERVED:
            return ExpPoly.var(self.advance().text)
        if self.at_punct("("):
            self.advance()
            poly = self.parse_iexpr()
            self.expect_punct(")")
            return poly
        self.fail(f"expected an exponent term, found {t.text!r}")


def normalize_mono(parts) -> MonoKey:
    """Sorted monomial key with q last and zero powers dropped."""
    if isinstance(parts, dict):
        items = parts.items()
    else:
        items = parts
    merged: dict[str, int] = {}
    for name, e in items:
        merged[name] = merged.get(name, 0) + e
    return tuple(sorted(((n, e) for n, e in merged.items() if e),
                        key=lambda it: (it[0] == "q", it[0])))


def parse_file(text: str) -> list[IdentityAST]:
    return _Parser(tokenize(text)).parse_file()


def parse_identity(text: str) -> IdentityAST:
    parser = _Parser(tokenize(text))
    ast = parser.parse_identity_block()
    trailing = parser.peek()
    if trailing.kind != "EOF":
        parser.fail(f"unexpected trailing {trailing.text!r}")
    return ast


def parse_expression(text: str) -> Expr:
    """One standalone side expression (a sum or a product), no block."""
    parser = _Parser(tokenize(text))
    expr = parser.parse_expr()
    trailing = parser.peek()
    if trailing.kind != "EOF":
        parser.fail(f"unexpected trailing {trailing.text!r}")
    return expr


# ---------------------------------------------------------------- serializer


def _mono_text(parts: MonoKey) -> str:
    pieces = []
    for name, e in parts:
        if e == 1:
            pieces.append(name)
        elif e >= 0:
            pieces.append(f"{name}^{e}")
        else:
            pieces.append(f"{name}^({e})")
    return "*".join(pieces) if pieces else "1"


def _exp_suffix(poly: ExpPoly) -> str:
    if poly == _ONE_EXP:
        return ""
    if poly.is_constant:
        c = poly.constant_value()
        if c.denominator == 1 and c >= 0:
            return f"^{c.numerator}"
    if len(poly.terms) == 1:
        ((key, c),) = poly.terms.items()
        if c == 1 and len(key) == 1 and key[0][1] == 1:
            return f"^{key[0][0]}"
    return f"^({poly.text()})"


def _factor_text(factor) -> str:
    if isinstance(factor, IntAtom):
        return str(factor.value)
    if isinstance(factor, MonoPow):
        return factor.name + _exp_suffix(factor.exp)
    if isinstance(factor, PochCall):
        sign = "-" if factor.coeff < 0 else ""
        count = "inf" if factor.count is None else factor.count.text()
        return (f"poch({sign}{_mono_text(factor.arg)}; "
                f"{_mono_text(factor.base)}; {count})")
    if isinstance(factor, SumCall):
        decls = ", ".join(f"{n} >= 0" if d == "N" else f"{n} in Z"
                          for n, d in factor.decls)
        return f"sum({decls}; {_expr_text(factor.body)})"
    if isinstance(factor, Group):
        out = f"({_expr_text(factor.inner)})"
        if factor.exp is not None:
            out += _exp_suffix(factor.exp) or "^1"
        return out
    raise TypeError(f"unknown factor {factor!r}")


def _mul_text(mul: Mul) -> str:
    out = ""
    for op, factor in mul.factors:
        if not out:
            if op < 0:
                out = "1 / " + _factor_text(factor)
            else:
                out = _factor_text(factor)
        else:
            out += f" {'*' if op > 0 else '/'} {_factor_text(factor)}"
    return out


def _expr_text(expr: Expr) -> str:
    out = ""
    for sign, mul in expr.addends:
        if not out:
            out = ("-" if sign < 0 else "") + _mul_text(mul)
        else:
            out += f" {'+' if sign > 0 else '-'} {_mul_text(mul)}"
    return out


def serialize_identity(ast: IdentityAST) -> str:
    lines = [f"identity {ast.name} {{"]
    if ast.vars:
        lines.append("  vars: " + ", ".join(ast.vars) + ";")
    if ast.params:
        lines.append("  params: "
                     + ", ".join(f"{n}={v}" for n, v in ast.params) + ";")
    lines.append(f"  lhs: {_expr_text(ast.lhs)};")
    lines.append(f"  rhs: {_expr_text(ast.rhs)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ lowering


@dataclass(frozen=True)
class LoweredIdentity:
    """An identity lowered to evaluation specs.

    ``rescale`` is 1 when both sides live in integer q-powers; otherwise
    it is the least d for which substituting q^(1/d) -> q clears every
    exponent (callers must then expand at d times the order).
    """

    name: str
    vars: tuple[str, ...]
    lhs: SumSpec | ProductSpec
    rhs: SumSpec | ProductSpec
    rescale: int = 1


def _unwrap_factors(mul: Mul):
    """Flatten harmless grouping so plain products lower uniformly."""
    out = []
    for op, factor in mul.factors:
        if isinstance(factor, Group) and factor.exp is None:
            inner = factor.inner
            if len(inner.addends) == 1 and inner.addends[0][0] == 1:
                for iop, ifac in _unwrap_factors(inner.addends[0][1]):
                    out.append((op * iop, ifac))
                continue
        out.append((op, factor))
    return out


def _single_term(expr: Expr, what: str) -> Mul:
    if len(expr.addends) != 1:
        raise LoweringError(f"{what} must be a single product, not a sum of "
                            f"{len(expr.addends)} terms")
    sign, mul = expr.addends[0]
    if sign < 0:
        raise LoweringError(f"{what} must not carry an overall sign")
    return mul


def _monomial_from_key(parts: MonoKey, coeff: int = 1) -> Monomial:
    qexp = 0
    vars_: list[tuple[str, int]] = []
    for name, e in parts:
        if name == "q":
            qexp += e
        else:
            vars_.append((name, e))
    return Monomial(coeff, qexp, tuple(sorted(vars_)))


def _base_qexp(base: MonoKey) -> int:
    if len(base) != 1 or base[0][0] != "q" or base[0][1] < 1:
        raise LoweringError(
            f"Pochhammer base must be a positive power of q, got "
            f"{_mono_text(base)}")
    return base[0][1]


def _as_affine(poly: ExpPoly, indices: list[str], what: str) -> AffineForm:
    coeffs = []
    for name in indices:
        c = poly.coefficient(((name, 1),))
        if c.denominator != 1:
            raise LoweringError(f"{what} has non-integer coefficient {c}")
        coeffs.append(int(c))
    const = poly.coefficient(())
    if const.denominator != 1:
        raise LoweringError(f"{what} has non-integer constant {const}")
    rebuilt = ExpPoly({((n, 1),): c for n, c in zip(indices, coeffs)})
    rebuilt = rebuilt + ExpPoly.const(const)
    if rebuilt != poly:
        raise LoweringError(f"{what} must be affine in the sum indices, got "
                            f"{poly.text()}")
    return AffineForm.make(coeffs, int(const))


def _as_quadform(poly: ExpPoly, indices: list[str]) -> QuadForm:
    free = poly.names() - set(indices)
    if free:
        raise LoweringError(
            f"q-exponent mentions {sorted(free)} which are not sum indices")
    dim = len(indices)
    pos = {n: i for i, n in enumerate(indices)}
    A = [[Fraction(0)] * dim for _ in range(dim)]
    B = [Fraction(0)] * dim
    C = Fraction(0)
    for key, c in poly.terms.items():
        flat: list[str] = []
        for n, e in key:
            flat.extend([n] * e)
        if len(flat) == 0:
            C += c
        elif len(flat) == 1:
            B[pos[flat[0]]] += c
        elif len(flat) == 2:
            i, j = pos[flat[0]], pos[flat[1]]
            if i == j:
                A[i][i] += 2 * c
            else:
                A[i][j] += c
                A[j][i] += c
        else:
            raise LoweringError(f"q-exponent degree exceeds 2: {poly.text()}")
    return QuadForm(tuple(tuple(row) for row in A), tuple(B), C)


def _try_sign_base(factor) -> bool:
    """Recognize (-1) as a Group, the only non-monomial base allowed."""
    if not isinstance(factor, Group) or factor.exp is None:
        return False
    inner = factor.inner
    if len(inner.addends) != 1 or inner.addends[0][0] != -1:
        return False
    mul = inner.addends[0][1]
    return (len(mul.factors) == 1 and mul.factors[0][0] == 1
            and mul.factors[0][1] == IntAtom(1))


def _lower_sum(node: SumCall, formal: set[str], params: dict) -> SumSpec:
    indices = [n for n, _ in node.decls]
    domains = "".join(d for _, d in node.decls)
    if len(set(indices)) != len(indices):
        raise LoweringError(f"duplicate sum index in {indices}")
    for n in indices:
        if n == "q" or n in formal or n in params:
            raise LoweringError(f"index {n!r} collides with another symbol")
    quad = ExpPoly()
    signform: AffineForm | None = None
    weights: dict[str, list[int]] = {}
    denoms: list[DenomFactor] = []
    for op, factor in _unwrap_factors(_single_term(node.body, "a summand")):
        if isinstance(factor, IntAtom):
            if factor.value != 1:
                raise LoweringError(
                    f"constant factor {factor.value} has no home in a sum")
        elif isinstance(factor, MonoPow):
            poly = factor.exp.substitute(params)
            if op < 0:
                poly = -poly
            if factor.name == "q":
                quad = quad + poly
            elif factor.name in indices:
                raise LoweringError(
                    f"sum index {factor.name!r} cannot be a base")
            else:
                aff = _as_affine(poly, indices,
                                 f"exponent of {factor.name!r}")
                if aff.const != 0:
                    raise LoweringError(
                        f"exponent of {factor.name!r} has constant part "
                        f"{aff.const}; fold it out of the sum")
                w = weights.setdefault(factor.name, [0] * len(indices))
                for i, c in enumerate(aff.coeffs):
                    w[i] += int(c)
        elif isinstance(factor, PochCall):
            if op > 0:
                raise LoweringError(
                    "Pochhammer factors in a summand numerator are not "
                    "lowerable; only reciprocals are")
            if factor.count is None:
                raise LoweringError(
                    "infinite products do not belong inside a sum")
            count = _as_affine(factor.count.substitute(params), indices,
                               "Pochhammer subscript")
            denoms.append(DenomFactor(
                _monomial_from_key(factor.arg, factor.coeff),
                _base_qexp(factor.base), count))
        elif _try_sign_base(factor):
            aff = _as_affine(factor.exp.substitute(params), indices,
                             "sign exponent")
            signform = aff if signform is None else signform + aff
        elif isinstance(factor, SumCall):
            raise LoweringError("nested sums are not supported")
        else:
            raise LoweringError(f"cannot lower factor {_factor_text(factor)}")
    quadform = _as_quadform(quad.substitute(params), indices)
    spec = make_sum_spec(
        len(indices), domains, quadform, signform,
        {n: tuple(w) for n, w in weights.items() if any(w)}, tuple(denoms))
    if "Z" in domains and not _bilateral_positive_definite(spec):
        raise LoweringError(
            "bilateral sum with an indefinite quadratic part cannot be "
            "enumerated soundly")
    return spec


def _lower_product(factors, params: dict) -> ProductSpec:
    prefactor = Monomial.unit()
    out: list[FactorSpec] = []
    for op, factor in factors:
        if isinstance(factor, IntAtom):
            if factor.value == 0:
                raise LoweringError("a zero factor makes the side degenerate")
            if factor.value != 1:
                if op < 0:
                    raise LoweringError(
                        f"cannot divide by {factor.value}: coefficients "
                        "stay in the integers")
                prefactor = prefactor * Monomial(factor.value, 0, ())
        elif isinstance(factor, MonoPow):
            c = factor.exp.substitute(params)
            if not c.is_constant or c.constant_value().denominator != 1:
                raise LoweringError(
                    f"exponent of {factor.name!r} must be a constant integer "
                    "outside a sum")
            e = op * int(c.constant_value())
            base = (Monomial.q(1) if factor.name == "q"
                    else Monomial.var(factor.name))
            prefactor = prefactor * base ** e
        elif isinstance(factor, PochCall):
            count = INF
            if factor.count is not None:
                cp = factor.count.substitute(params)
                if not cp.is_constant or cp.constant_value().denominator != 1:
                    raise LoweringError(
                        "Pochhammer subscripts outside a sum must be "
                        "constant integers")
                count = int(cp.constant_value())
            out.append(FactorSpec(
                _monomial_from_key(factor.arg, factor.coeff),
                _base_qexp(factor.base), count, op))
        elif isinstance(factor, Group) and factor.exp is not None:
            inner = _unwrap_factors(_single_term(factor.inner, "a grouped factor"))
            ep = factor.exp.substitute(params)
            if (len(inner) != 1 or inner[0][0] != 1
                    or not isinstance(inner[0][1], PochCall)
                    or not ep.is_constant
                    or ep.constant_value().denominator != 1
                    or ep.constant_value() == 0):
                raise LoweringError(
                    "only Pochhammer symbols take constant nonzero powers")
            poch = inner[0][1]
            count = INF
            if poch.count is not None:
                cp = poch.count.substitute(params)
                if not cp.is_constant or cp.constant_value().denominator != 1:
                    raise LoweringError(
                        "Pochhammer subscripts outside a sum must be "
                        "constant integers")
                count = int(cp.constant_value())
            out.append(FactorSpec(
                _monomial_from_key(poch.arg, poch.coeff),
                _base_qexp(poch.base), count,
                op * int(ep.constant_value())))
        else:
            raise LoweringError(
                f"cannot lower factor {_factor_text(factor)} in a product")
    return ProductSpec(tuple(out), prefactor)


def _lower_side(expr: Expr, formal: set[str], params: dict):
    factors = _unwrap_factors(_single_term(expr, "each side"))
    sums = [f for _, f in factors if isinstance(f, SumCall)]
    if sums:
        if len(factors) != 1 or factors[0][0] != 1:
            raise LoweringError(
                "a sum must stand alone on its side; prefactors are not "
                "supported")
        return _lower_sum(sums[0], formal, params)
    return _lower_product(factors, params)


def _clearing_factor(spec) -> int:
    """Least d with d*Q integral on the lattice, from the basis values."""
    if not isinstance(spec, SumSpec):
        return 1
    dim = spec.dim
    points = [tuple([0] * dim)]
    for i in range(dim):
        e = [0] * dim
        e[i] = 1
        points.append(tuple(e))
        for j in range(i + 1, dim):
            ee = list(e)
            ee[j] = 1
            points.append(tuple(ee))
    return lcm(*(spec.quad.evaluate(p).denominator for p in points))


def validate_identity(ast: IdentityAST) -> LoweredIdentity:
    """Lower both sides onto evaluation specs, checking evaluability."""
    params = dict(ast.params)
    formal = set(ast.vars)
    lhs = _lower_side(ast.lhs, formal, params)
    rhs = _lower_side(ast.rhs, formal, params)
    rescale = lcm(_clearing_factor(lhs), _clearing_factor(rhs))
    return LoweredIdentity(ast.name, ast.vars, lhs, rhs, rescale)


def lower_expression(expr: Expr) -> tuple:
    """Evaluable spec for one standalone expression plus its base scale.

    Free names act as formal variables.  Returns (spec, d); as with
    LoweredIdentity, d > 1 means q in the returned spec stands for q^(1/d).
    """
    spec = _lower_side(expr, set(), {})
    return spec, _clearing_factor(spec)
