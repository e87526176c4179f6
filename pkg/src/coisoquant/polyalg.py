"""Exact multivariate polynomial arithmetic over the rationals.

Everything downstream reduces to this module: sparse polynomials with
Fraction coefficients, ideals with cached reduced Groebner bases under a
fixed lexicographic order, quotient-ring elements in canonical normal form,
and free modules over the quotient.  No floating point anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Monomial = tuple[int, ...]

MONOMIAL_ORDER = "lex"  # global order: lex with variable 0 largest


class ResourceLimitError(Exception):
    """Buchberger exceeded its step or degree budget."""


class OrderMismatchError(Exception):
    """A cached Groebner basis was computed under a different monomial order."""


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"rational coefficient expected, got {type(c).__name__}")


class Poly:
    """Sparse polynomial in Q[x_0..x_{nvars-1}], keyed by exponent multi-index.

    Instances are immutable by convention; all operations return fresh values.
    Invariant: no stored zero coefficients, all keys have length nvars.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Monomial, Fraction]):
        self.nvars = nvars
        self.terms = {m: c for m, c in terms.items() if c}

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> Poly:
        return cls(nvars, {})

    @classmethod
    def const(cls, nvars: int, c) -> Poly:
        c = _as_fraction(c)
        return cls(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def variable(cls, i: int, nvars: int) -> Poly:
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> Poly:
        return cls(len(exps), {tuple(exps): _as_fraction(c)})

    # -- ring structure -----------------------------------------------

    def _check(self, other: Poly) -> None:
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")

    def __add__(self, other: Poly) -> Poly:
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Poly(self.nvars, out)

    def __sub__(self, other: Poly) -> Poly:
        return self + (-other)

    def __neg__(self) -> Poly:
        return Poly(self.nvars, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(m, Fraction(0)) + c1 * c2
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly(self.nvars, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, c) -> Poly:
        c = _as_fraction(c)
        if not c:
            return Poly.zero(self.nvars)
        return Poly(self.nvars, {m: c * v for m, v in self.terms.items()})

    def __pow__(self, n: int) -> Poly:
        if n < 0:
            raise ValueError("negative power")
        out = Poly.const(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Poly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    __hash__ = None  # mutable-ish container semantics; never used as a key

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- calculus and substitution ------------------------------------

    def diff(self, i: int, k: int = 1) -> Poly:
        p = self
        for _ in range(k):
            out = {}
            for m, c in p.terms.items():
                if m[i]:
                    mm = list(m)
                    mm[i] -= 1
                    out[tuple(mm)] = c * m[i]
            p = Poly(self.nvars, out)
        return p

    def diff_multi(self, multi: Monomial) -> Poly:
        p = self
        for i, k in enumerate(multi):
            if k:
                p = p.diff(i, k)
            if p.is_zero():
                break
        return p

    def subst_zero(self, vars_to_kill: frozenset[int]) -> Poly:
        """Set the given variables to zero (coordinate-aligned reduction)."""
        out = {}
        for m, c in self.terms.items():
            if all(m[i] == 0 for i in vars_to_kill):
                out[m] = out.get(m, Fraction(0)) + c
        return Poly(self.nvars, {m: c for m, c in out.items() if c})

    def involves(self, i: int) -> bool:
        return any(m[i] for m in self.terms)

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def coefficient(self, m: Monomial) -> Fraction:
        return self.terms.get(tuple(m), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    # -- lex order helpers --------------------------------------------

    def leading_monomial(self) -> Monomial:
        if not self.terms:
            raise ValueError("zero polynomial has no leading monomial")
        return max(self.terms, key=_lex_key)

    def leading_coeff(self) -> Fraction:
        return self.terms[self.leading_monomial()]

    def monic(self) -> Poly:
        if self.is_zero():
            return self
        return self.scale(1 / self.leading_coeff())

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self.terms.items(), key=lambda t: _lex_key(t[0]), reverse=True)

    # -- display ------------------------------------------------------

    def to_string(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = []
            for i, e in enumerate(m):
                if e == 1:
                    factors.append(names[i])
                elif e > 1:
                    factors.append(f"{names[i]}^{e}")
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(abs(c))] + factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Poly({self.to_string([f'x{i}' for i in range(self.nvars)])})"


def _lex_key(m: Monomial) -> Monomial:
    return m  # tuple comparison is exactly lex with variable 0 largest


def _divides(m: Monomial, n: Monomial) -> bool:
    return all(a <= b for a, b in zip(m, n))


def _mono_sub(m: Monomial, n: Monomial) -> Monomial:
    return tuple(a - b for a, b in zip(m, n))


def _mono_lcm(m: Monomial, n: Monomial) -> Monomial:
    return tuple(max(a, b) for a, b in zip(m, n))


def divmod_basis(p: Poly, basis: Sequence[Poly]) -> Poly:
    """Full remainder of p on division by basis (each divisor nonzero)."""
    rem: dict[Monomial, Fraction] = {}
    work = Poly(p.nvars, dict(p.terms))
    lms = [(g.leading_monomial(), g.leading_coeff(), g) for g in basis]
    while work.terms:
        m = work.leading_monomial()
        c = work.terms[m]
        for lm, lc, g in lms:
            if _divides(lm, m):
                shift = _mono_sub(m, lm)
                work = work - g * Poly.monomial(shift, c / lc)
                break
        else:
            rem[m] = c
            work = Poly(work.nvars, {k: v for k, v in work.terms.items() if k != m})
    return Poly(p.nvars, rem)


class Ideal:
    """Polynomial ideal with a cached reduced Groebner basis.

    Ideals generated by a subset of the variables are flagged
    coordinate_aligned and bypass Buchberger: the normal form is the
    substitution of zero for those variables, which also fixes the canonical
    splitting of the conormal sequence used by the deformation solvers.
    """

    def __init__(self, nvars: int, generators: Iterable[Poly]):
        gens = tuple(g for g in generators if not g.is_zero())
        self.nvars = nvars
        self.generators = gens
        for g in gens:
            if g.nvars != nvars:
                raise ValueError("generator variable count mismatch")
        self._groebner: tuple[Poly, ...] | None = None
        self._order = MONOMIAL_ORDER
        self.coordinate_vars = self._aligned_vars()
        self.coordinate_aligned = self.coordinate_vars is not None

    def _aligned_vars(self) -> frozenset[int] | None:
        vs = set()
        for g in self.generators:
            if len(g.terms) != 1:
                return None
            (m, c), = g.terms.items()
            if sum(m) != 1:
                return None
            vs.add(m.index(1))
        return frozenset(vs)

    @property
    def groebner(self) -> tuple[Poly, ...] | None:
        return self._groebner

    def ensure_groebner(self, max_steps: int = 10_000, max_degree: int = 60) -> tuple[Poly, ...]:
        if self._order != MONOMIAL_ORDER:
            raise OrderMismatchError(
                f"cached basis uses order {self._order!r}, global order is {MONOMIAL_ORDER!r}"
            )
        if self._groebner is None:
            if self.coordinate_aligned:
                basis = tuple(
                    sorted(
                        (Poly.variable(i, self.nvars) for i in self.coordinate_vars),
                        key=lambda p: _lex_key(p.leading_monomial()),
                        reverse=True,
                    )
                )
                self._groebner = basis
            else:
                self._groebner = buchberger(
                    list(self.generators), max_steps=max_steps, max_degree=max_degree
                ).groebner
        return self._groebner

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return (
            isinstance(other, Ideal)
            and self.nvars == other.nvars
            and self.generators == other.generators
        )

    __hash__ = None

    def __repr__(self) -> str:
        names = [f"x{i}" for i in range(self.nvars)]
        return "Ideal(" + ", ".join(g.to_string(names) for g in self.generators) + ")"


def normal_form(p: Poly, ideal: Ideal) -> Poly:
    """Unique remainder of p modulo the ideal; zero iff p is a member."""
    if p.nvars != ideal.nvars:
        raise ValueError("variable count mismatch")
    if not ideal.generators:
        return p
    if ideal.coordinate_aligned:
        return p.subst_zero(ideal.coordinate_vars)
    return divmod_basis(p, ideal.ensure_groebner())


def ideal_member(p: Poly, ideal: Ideal) -> bool:
    return normal_form(p, ideal).is_zero()


def buchberger(gens: list[Poly], max_steps: int = 10_000, max_degree: int = 60) -> Ideal:
    """Reduced Groebner basis of the ideal generated by gens (lex order).

    Deterministic for a fixed input order.  Raises ResourceLimitError when
    the step budget or an intermediate total degree cap is exceeded.
    """
    if not gens:
        raise ValueError("nonempty generator list required")
    nvars = gens[0].nvars
    basis = [g.monic() for g in gens if not g.is_zero()]
    if not basis:
        raise ValueError("all generators are zero")
    pairs = sorted(
        ((i, j) for i in range(len(basis)) for j in range(i + 1, len(basis))),
        key=lambda ij: _pair_key(basis, *ij),
    )
    steps = 0
    while pairs:
        pairs.sort(key=lambda ij: _pair_key(basis, *ij))
        i, j = pairs.pop(0)
        steps += 1
        if steps > max_steps:
            raise ResourceLimitError(f"Buchberger exceeded {max_steps} S-pair steps")
        fi, fj = basis[i], basis[j]
        lmi, lmj = fi.leading_monomial(), fj.leading_monomial()
        lcm = _mono_lcm(lmi, lmj)
        if lcm == tuple(a + b for a, b in zip(lmi, lmj)):
            continue  # coprime leading monomials: S-polynomial reduces to zero
        s = fi * Poly.monomial(_mono_sub(lcm, lmi)) - fj * Poly.monomial(_mono_sub(lcm, lmj))
        r = divmod_basis(s, basis)
        if r.is_zero():
            continue
        if r.total_degree() > max_degree:
            raise ResourceLimitError(
                f"Buchberger intermediate degree {r.total_degree()} exceeds cap {max_degree}"
            )
        r = r.monic()
        basis.append(r)
        k = len(basis) - 1
        pairs.extend((i2, k) for i2 in range(k))
    reduced = _reduce_basis(basis)
    out = Ideal(nvars, tuple(gens))
    out._groebner = tuple(reduced)
    return out


def _pair_key(basis: list[Poly], i: int, j: int):
    lcm = _mono_lcm(basis[i].leading_monomial(), basis[j].leading_monomial())
    return (sum(lcm), _lex_key(lcm), i, j)


def _reduce_basis(basis: list[Poly]) -> list[Poly]:
    # minimalize: drop elements whose leading monomial another one divides
    minimal: list[Poly] = []
    lms = [g.leading_monomial() for g in basis]
    for idx, g in enumerate(basis):
        lm = lms[idx]
        if any(
            k != idx
            and _divides(lms[k], lm)
            and (lms[k] != lm or k < idx)
            for k in range(len(basis))
        ):
            continue
        minimal.append(g)
    # autoreduce every element against the others
    reduced = []
    for idx, g in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1 :]
        r = divmod_basis(g, others) if others else g
        if not r.is_zero():
            reduced.append(r.monic())
    reduced.sort(key=lambda p: _lex_key(p.leading_monomial()), reverse=True)
    return reduced


class QuotientPoly:
    """Element of the quotient ring, stored as its canonical normal form."""

    __slots__ = ("rep", "ideal")

    def __init__(self, rep: Poly, ideal: Ideal, reduced: bool = False):
        self.ideal = ideal
        self.rep = rep if reduced else normal_form(rep, ideal)

    def _check(self, other: QuotientPoly) -> None:
        if self.ideal is not other.ideal and self.ideal != other.ideal:
            raise ValueError("quotient ring mismatch")

    def __add__(self, other: QuotientPoly) -> QuotientPoly:
        self._check(other)
        return QuotientPoly(self.rep + other.rep, self.ideal, reduced=True)

    def __sub__(self, other: QuotientPoly) -> QuotientPoly:
        self._check(other)
        return QuotientPoly(self.rep - other.rep, self.ideal, reduced=True)

    def __neg__(self) -> QuotientPoly:
        return QuotientPoly(-self.rep, self.ideal, reduced=True)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuotientPoly(self.rep.scale(other), self.ideal, reduced=True)
        self._check(other)
        return QuotientPoly(self.rep * other.rep, self.ideal)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QuotientPoly)
            and self.ideal == other.ideal
            and self.rep == other.rep
        )

    __hash__ = None

    def is_zero(self) -> bool:
        return self.rep.is_zero()

    def __repr__(self) -> str:
        return f"QuotientPoly({self.rep!r})"


class FreeModule:
    """Free module of finite rank over the quotient ring O_Y = A/I."""

    def __init__(self, rank: int, base: Ideal):
        if rank < 1:
            raise ValueError("rank must be positive")
        self.rank = rank
        self.base = base

    def zero(self) -> tuple[QuotientPoly, ...]:
        z = QuotientPoly(Poly.zero(self.base.nvars), self.base, reduced=True)
        return (z,) * self.rank

    def element(self, entries: Sequence[Poly]) -> tuple[QuotientPoly, ...]:
        if len(entries) != self.rank:
            raise ValueError("entry count must equal rank")
        return tuple(QuotientPoly(p, self.base) for p in entries)

    def basis_vector(self, i: int) -> tuple[QuotientPoly, ...]:
        out = list(self.zero())
        out[i] = QuotientPoly(Poly.const(self.base.nvars, 1), self.base, reduced=True)
        return tuple(out)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FreeModule)
            and self.rank == other.rank
            and self.base == other.base
        )

    __hash__ = None


# -- polynomial text grammar ------------------------------------------


class PolyParseError(ValueError):
    """Parse error in the polynomial grammar, carrying line/column info."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


_TOKEN_CHARS = set("+-*^()")


def tokenize_poly(text: str, line_offset: int = 1, col_offset: int = 1):
    """Tokens: ('num', Fraction), ('name', str), ('op', ch); position-tagged."""
    tokens = []
    i, line, col = 0, line_offset, col_offset
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch in _TOKEN_CHARS:
            tokens.append(("op", ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            num = int(text[i:j])
            adv = j - i
            if j < n and text[j] == "/":
                k = j + 1
                while k < n and text[k].isdigit():
                    k += 1
                if k == j + 1:
                    raise PolyParseError("malformed rational literal", line, col)
                tokens.append(("num", Fraction(num, int(text[j + 1 : k])), line, col))
                adv = k - i
            else:
                tokens.append(("num", Fraction(num), line, col))
            i += adv
            col += adv
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise PolyParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(("end", "", line, col))
    return tokens


class _PolyParser:
    def __init__(self, tokens, names: Sequence[str], nvars: int):
        self.tokens = tokens
        self.pos = 0
        self.index = {name: i for i, name in enumerate(names)}
        self.nvars = nvars

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, msg: str, tok) -> PolyParseError:
        return PolyParseError(msg, tok[2], tok[3])

    def parse(self) -> Poly:
        p = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected trailing input {tok[1]!r}", tok)
        return p

    def expr(self) -> Poly:
        kind, val, *_ = self.peek()
        negate = False
        if kind == "op" and val in "+-":
            self.next()
            negate = val == "-"
        p = self.term()
        if negate:
            p = -p
        while True:
            kind, val, *_ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                q = self.term()
                p = p - q if val == "-" else p + q
            else:
                return p

    def term(self) -> Poly:
        p = self.factor()
        while True:
            kind, val, *_ = self.peek()
            if kind == "op" and val == "*":
                self.next()
                p = p * self.factor()
            else:
                return p

    def factor(self) -> Poly:
        p = self.atom()
        while True:
            kind, val, *_ = self.peek()
            if kind == "op" and val == "^":
                self.next()
                tok = self.next()
                if tok[0] != "num" or tok[1].denominator != 1 or tok[1] < 0:
                    raise self.error("exponent must be a nonnegative integer", tok)
                p = p ** int(tok[1])
            else:
                return p

    def atom(self) -> Poly:
        tok = self.next()
        kind, val = tok[0], tok[1]
        if kind == "num":
            return Poly.const(self.nvars, val)
        if kind == "name":
            if val not in self.index:
                raise self.error(f"undeclared variable {val!r}", tok)
            return Poly.variable(self.index[val], self.nvars)
        if kind == "op" and val == "(":
            p = self.expr()
            closing = self.next()
            if closing[:2] != ("op", ")"):
                raise self.error("expected ')'", closing)
            return p
        if kind == "op" and val == "-":
            return -self.atom()
        raise self.error(f"unexpected token {val!r}", tok)


def parse_poly(text: str, names: Sequence[str], line: int = 1, col: int = 1) -> Poly:
    """Parse the polynomial grammar: rationals, declared variables, + - * ^, parens."""
    tokens = tokenize_poly(text, line_offset=line, col_offset=col)
    return _PolyParser(tokens, names, len(names)).parse()
