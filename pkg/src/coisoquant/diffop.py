"""Polydifferential operators: star-product terms, module actions, cochains.

A Cochain of arity k is a k-linear polydifferential operator
A^(x)k (x) E -> E over the quotient O_Y, stored in a flat normal form so that
equality of operators on the polynomial ring is structural equality of the
stored tables.  RingCochain is the scalar analogue A^(x)k -> A used for star
products.  All coefficients are exact rationals.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Sequence

from .polyalg import Ideal, Poly, normal_form

Monomial = tuple[int, ...]
Matrix = tuple[tuple[Poly, ...], ...]


# -- multi-index combinatorics -----------------------------------------


def iter_multi_indices(nvars: int, max_total: int, support: Iterable[int] | None = None):
    """All exponent tuples with total degree <= max_total, zero off the support."""
    supp = sorted(support) if support is not None else list(range(nvars))
    for total in range(max_total + 1):
        for combo in _compositions(total, len(supp)):
            m = [0] * nvars
            for pos, e in zip(supp, combo):
                m[pos] = e
            yield tuple(m)


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def multi_binom(d: Monomial, g: Monomial) -> int:
    out = 1
    for a, b in zip(d, g):
        out *= comb(a, b)
    return out


def sub_multis(d: Monomial):
    """All g <= d together with the product-of-binomials coefficient."""
    ranges = [range(a + 1) for a in d]
    for g in itertools.product(*ranges):
        yield tuple(g), multi_binom(d, g)


def split_multi(d: Monomial, parts: int):
    """Ordered splittings d = h_1 + ... + h_parts with multinomial coefficient."""
    per_var = []
    for a in d:
        opts = []
        for combo in _compositions(a, parts):
            coeff = 1
            rem = a
            for e in combo:
                coeff *= comb(rem, e)
                rem -= e
            opts.append((combo, coeff))
        per_var.append(opts)
    for chosen in itertools.product(*per_var):
        coeff = 1
        for _, c in chosen:
            coeff *= c
        hs = tuple(
            tuple(chosen[v][0][p] for v in range(len(d))) for p in range(parts)
        )
        yield hs, coeff


def multi_add(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def multi_sub(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x - y for x, y in zip(a, b))


# -- matrices over the quotient ring ------------------------------------


def mzero(r: int, nvars: int) -> Matrix:
    z = Poly.zero(nvars)
    return tuple((z,) * r for _ in range(r))


def meye(r: int, nvars: int) -> Matrix:
    one = Poly.const(nvars, 1)
    z = Poly.zero(nvars)
    return tuple(tuple(one if i == j else z for j in range(r)) for i in range(r))


def madd(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mneg(a: Matrix) -> Matrix:
    return tuple(tuple(-x for x in row) for row in a)


def mscale(a: Matrix, c) -> Matrix:
    """Scale by an exact rational; polynomial scaling goes through mscale_poly."""
    return tuple(tuple(x * c for x in row) for row in a)


def mscale_poly(a: Matrix, q: Poly, ideal: Ideal) -> Matrix:
    return tuple(tuple(normal_form(x * q, ideal) for x in row) for row in a)


def mmul(a: Matrix, b: Matrix, ideal: Ideal) -> Matrix:
    r = len(a)
    nvars = ideal.nvars
    out = []
    for i in range(r):
        row = []
        for j in range(r):
            s = Poly.zero(nvars)
            for k in range(r):
                s = s + a[i][k] * b[k][j]
            row.append(normal_form(s, ideal))
        out.append(tuple(row))
    return tuple(out)


def mdiff(a: Matrix, multi: Monomial) -> Matrix:
    return tuple(tuple(x.diff_multi(multi) for x in row) for row in a)


def mreduce(a: Matrix, ideal: Ideal) -> Matrix:
    return tuple(tuple(normal_form(x, ideal) for x in row) for row in a)


def mis_zero(a: Matrix) -> bool:
    return all(x.is_zero() for row in a for x in row)


def mat_from_rows(rows: Sequence[Sequence[Poly]]) -> Matrix:
    r = len(rows)
    for row in rows:
        if len(row) != r:
            raise ValueError("matrix must be square")
    return tuple(tuple(row) for row in rows)


# -- scalar differential operators --------------------------------------


class ScalarDiffOp:
    """Finite-order scalar differential operator with polynomial coefficients.

    `allowed` restricts both derivatives and coefficients to a variable
    subset; module-slot operators use the Y-coordinates, ring-level operators
    leave it as None (the full ring).
    """

    __slots__ = ("nvars", "allowed", "terms")

    def __init__(self, nvars: int, terms: dict[Monomial, Poly], allowed: frozenset[int] | None = None):
        self.nvars = nvars
        self.allowed = allowed
        clean: dict[Monomial, Poly] = {}
        for d, c in terms.items():
            if c.is_zero():
                continue
            if allowed is not None:
                banned = set(range(nvars)) - set(allowed)
                if any(d[i] for i in banned) or any(c.involves(i) for i in banned):
                    raise ValueError("operator leaves its declared variable subset")
            clean[tuple(d)] = c
        self.terms = clean

    @classmethod
    def zero(cls, nvars: int, allowed=None) -> ScalarDiffOp:
        return cls(nvars, {}, allowed)

    @classmethod
    def partial(cls, i: int, nvars: int, coeff=1, allowed=None) -> ScalarDiffOp:
        d = [0] * nvars
        d[i] = 1
        c = coeff if isinstance(coeff, Poly) else Poly.const(nvars, coeff)
        return cls(nvars, {tuple(d): c}, allowed)

    @classmethod
    def mult(cls, q: Poly, allowed=None) -> ScalarDiffOp:
        return cls(q.nvars, {(0,) * q.nvars: q}, allowed)

    def apply(self, p: Poly) -> Poly:
        out = Poly.zero(self.nvars)
        for d, c in self.terms.items():
            out = out + c * p.diff_multi(d)
        return out

    def __add__(self, other: ScalarDiffOp) -> ScalarDiffOp:
        terms = dict(self.terms)
        for d, c in other.terms.items():
            s = terms.get(d, Poly.zero(self.nvars)) + c
            if s.is_zero():
                terms.pop(d, None)
            else:
                terms[d] = s
        return ScalarDiffOp(self.nvars, terms, self.allowed)

    def __neg__(self) -> ScalarDiffOp:
        return ScalarDiffOp(self.nvars, {d: -c for d, c in self.terms.items()}, self.allowed)

    def scale(self, c) -> ScalarDiffOp:
        return ScalarDiffOp(self.nvars, {d: v.scale(c) for d, v in self.terms.items()}, self.allowed)

    def compose(self, other: ScalarDiffOp) -> ScalarDiffOp:
        """Operator composition self after other (Leibniz expansion)."""
        out: dict[Monomial, Poly] = {}
        for d1, c1 in self.terms.items():
            for d2, c2 in other.terms.items():
                for (h0, h1), coeff in split_multi(d1, 2):
                    c = c1 * c2.diff_multi(h0) * coeff
                    if c.is_zero():
                        continue
                    key = multi_add(h1, d2)
                    acc = out.get(key, Poly.zero(self.nvars)) + c
                    if acc.is_zero():
                        out.pop(key, None)
                    else:
                        out[key] = acc
        return ScalarDiffOp(self.nvars, out, self.allowed)

    def commutator(self, other: ScalarDiffOp) -> ScalarDiffOp:
        return self.compose(other) + (-other.compose(self))

    def order(self) -> int:
        return max((sum(d) for d in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ScalarDiffOp)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    __hash__ = None

    def __repr__(self) -> str:
        names = [f"x{i}" for i in range(self.nvars)]
        if not self.terms:
            return "ScalarDiffOp(0)"
        bits = []
        for d, c in sorted(self.terms.items()):
            ds = "*".join(
                f"d[{names[i]}]" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(d)
                if e
            )
            bits.append(f"({c.to_string(names)})" + (f"*{ds}" if ds else ""))
        return "ScalarDiffOp(" + " + ".join(bits) + ")"


# -- module-level cochains ----------------------------------------------


CochainKey = tuple[tuple[Monomial, ...], Monomial]


class Cochain:
    """k-ary polydifferential operator A^(x)k (x) E -> E in flat normal form.

    A term keyed by ((D_1..D_k), F) with matrix value M evaluates as
        M . prod_i (d^{D_i} a_i)|_Y . d^F e   (reduced mod I),
    where d^F differentiates entrywise along Y-coordinates only.  Equality of
    such operators on the polynomial ring equals equality of the tables.
    """

    __slots__ = ("arity", "ideal", "rank", "nvars", "terms")

    def __init__(self, arity: int, ideal: Ideal, rank: int, terms: dict[CochainKey, Matrix]):
        if not ideal.coordinate_aligned:
            raise ValueError("module cochains require a coordinate-aligned ideal")
        self.arity = arity
        self.ideal = ideal
        self.rank = rank
        self.nvars = ideal.nvars
        yvars = self.yvars
        clean: dict[CochainKey, Matrix] = {}
        for (ds, f), mat in terms.items():
            if len(ds) != arity:
                raise ValueError("ring-slot count must equal arity")
            if any(f[i] for i in range(self.nvars) if i not in yvars):
                raise ValueError("module-slot derivatives must stay on Y-coordinates")
            if mis_zero(mat):
                continue
            clean[(tuple(tuple(d) for d in ds), tuple(f))] = mat
        self.terms = clean

    @property
    def yvars(self) -> frozenset[int]:
        return frozenset(range(self.nvars)) - self.ideal.coordinate_vars

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, arity: int, ideal: Ideal, rank: int) -> Cochain:
        return cls(arity, ideal, rank, {})

    @classmethod
    def from_matrix(cls, mat: Matrix, ideal: Ideal) -> Cochain:
        """Arity-0, order-0 cochain: multiplication by a matrix."""
        rank = len(mat)
        z = (0,) * ideal.nvars
        return cls(0, ideal, rank, {((), z): mreduce(mat, ideal)})

    @classmethod
    def identity(cls, ideal: Ideal, rank: int) -> Cochain:
        return cls.from_matrix(meye(rank, ideal.nvars), ideal)

    @classmethod
    def from_terms(
        cls,
        arity: int,
        ideal: Ideal,
        rank: int,
        raw_terms: Iterable[tuple[Matrix, Sequence[Monomial], ScalarDiffOp]],
    ) -> Cochain:
        """Assemble from (matrix, ring-slot exponents, module ScalarDiffOp) triples."""
        acc: dict[CochainKey, Matrix] = {}
        for mat, ds, op in raw_terms:
            for f, coeff in op.terms.items():
                key = (tuple(tuple(d) for d in ds), tuple(f))
                add = mscale_poly(mreduce(mat, ideal), normal_form(coeff, ideal), ideal)
                _acc_add(acc, key, add, ideal)
        return cls(arity, ideal, rank, acc)

    @classmethod
    def from_scalar_module_op(cls, op: ScalarDiffOp, ideal: Ideal, rank: int) -> Cochain:
        """Arity-0 cochain acting as a scalar operator times the identity."""
        eye = meye(rank, ideal.nvars)
        return cls.from_terms(0, ideal, rank, [(eye, (), op)])

    # -- basic algebra ----------------------------------------------------

    def _compat(self, other: Cochain) -> None:
        if self.ideal != other.ideal or self.rank != other.rank:
            raise ValueError("cochain context mismatch (ideal or rank)")

    def __add__(self, other: Cochain) -> Cochain:
        self._compat(other)
        if self.arity != other.arity:
            raise ValueError("arity mismatch in cochain addition")
        acc = dict(self.terms)
        for key, mat in other.terms.items():
            _acc_add(acc, key, mat, self.ideal)
        return Cochain(self.arity, self.ideal, self.rank, acc)

    def __sub__(self, other: Cochain) -> Cochain:
        return self + other.scale(-1)

    def __neg__(self) -> Cochain:
        return self.scale(-1)

    def scale(self, c) -> Cochain:
        if isinstance(c, (int, Fraction)) and not c:
            return Cochain.zero(self.arity, self.ideal, self.rank)
        return Cochain(
            self.arity,
            self.ideal,
            self.rank,
            {k: mscale(m, c) for k, m in self.terms.items()},
        )

    def scale_poly(self, q: Poly) -> Cochain:
        return Cochain(
            self.arity,
            self.ideal,
            self.rank,
            {k: mscale_poly(m, q, self.ideal) for k, m in self.terms.items()},
        )

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Cochain)
            and self.arity == other.arity
            and self.rank == other.rank
            and self.ideal == other.ideal
            and self.terms == other.terms
        )

    __hash__ = None

    def sorted_items(self) -> list[tuple[CochainKey, Matrix]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0])

    # -- evaluation -------------------------------------------------------

    def apply(self, args: Sequence[Poly], e: Sequence[Poly]) -> tuple[Poly, ...]:
        """Evaluate on ring arguments and a module vector (canonical reps)."""
        if len(args) != self.arity:
            raise ValueError(f"expected {self.arity} ring arguments, got {len(args)}")
        if len(e) != self.rank:
            raise ValueError(f"module vector must have length {self.rank}")
        nv = self.nvars
        out = [Poly.zero(nv) for _ in range(self.rank)]
        for (ds, f), mat in self.terms.items():
            scalar = Poly.const(nv, 1)
            for d, a in zip(ds, args):
                scalar = scalar * a.diff_multi(d)
                if scalar.is_zero():
                    break
            if scalar.is_zero():
                continue
            de = [entry.diff_multi(f) for entry in e]
            for i in range(self.rank):
                acc = Poly.zero(nv)
                for j in range(self.rank):
                    acc = acc + mat[i][j] * de[j]
                out[i] = out[i] + scalar * acc
        return tuple(normal_form(v, self.ideal) for v in out)

    # -- structural operations ---------------------------------------------

    def compose_module(self, inner: Cochain) -> Cochain:
        """Feed `inner` (arity l) into this operator's module slot.

        Result has arity k+l and satisfies
        (self o inner)(a_1..a_{k+l}, e) = self(a_1..a_k, inner(a_{k+1}..a_{k+l}, e)).
        """
        self._compat(inner)
        acc: dict[CochainKey, Matrix] = {}
        k, l = self.arity, inner.arity
        for (ds1, f1), m1 in self.terms.items():
            for (ds2, f2), m2 in inner.terms.items():
                for parts, coeff in split_multi(f1, l + 2):
                    g0, gmid, glast = parts[0], parts[1 : l + 1], parts[l + 1]
                    mat = mmul(m1, mdiff(m2, g0), self.ideal)
                    if coeff != 1:
                        mat = mscale(mat, coeff)
                    if mis_zero(mat):
                        continue
                    new_ds = ds1 + tuple(multi_add(d, g) for d, g in zip(ds2, gmid))
                    key = (new_ds, multi_add(f2, glast))
                    _acc_add(acc, key, mat, self.ideal)
        return Cochain(k + l, self.ideal, self.rank, acc)

    def prepend_mult(self) -> Cochain:
        """(a_0, a_1..a_k, e) -> a_0 . self(a_1..a_k, e)."""
        z = (0,) * self.nvars
        terms = {((z,) + ds, f): m for (ds, f), m in self.terms.items()}
        return Cochain(self.arity + 1, self.ideal, self.rank, terms)

    def append_module_mult(self) -> Cochain:
        """(a_1..a_k, a_{k+1}, e) -> self(a_1..a_k, a_{k+1} . e)."""
        acc: dict[CochainKey, Matrix] = {}
        for (ds, f), m in self.terms.items():
            for g, coeff in sub_multis(f):
                key = (ds + (g,), multi_sub(f, g))
                _acc_add(acc, key, mscale(m, coeff) if coeff != 1 else m, self.ideal)
        return Cochain(self.arity + 1, self.ideal, self.rank, acc)

    def merge_ring_slots(self, i: int) -> Cochain:
        """(.., a_i, a_{i+1}, ..) -> self(.., a_i . a_{i+1}, ..), arity k+1; slot i 0-based."""
        acc: dict[CochainKey, Matrix] = {}
        for (ds, f), m in self.terms.items():
            d = ds[i]
            for g, coeff in sub_multis(d):
                new_ds = ds[:i] + (g, multi_sub(d, g)) + ds[i + 1 :]
                _acc_add(acc, (new_ds, f), mscale(m, coeff) if coeff != 1 else m, self.ideal)
        return Cochain(self.arity + 1, self.ideal, self.rank, acc)

    def insert_ring_cochain(self, s: RingCochain, j: int) -> Cochain:
        """Feed s(a_j..a_{j+m-1}) into ring slot j (0-based); arity k+m-1."""
        if s.nvars != self.nvars:
            raise ValueError("variable count mismatch")
        m_ar = s.arity
        acc: dict[CochainKey, Matrix] = {}
        for (ds, f), mat in self.terms.items():
            d = ds[j]
            for (w_ds, w) in s.terms.items():
                for parts, coeff in split_multi(d, m_ar + 1):
                    h0, hs = parts[0], parts[1:]
                    c = normal_form(w.diff_multi(h0), self.ideal)
                    if c.is_zero():
                        continue
                    new_mat = mscale_poly(mat, c.scale(coeff), self.ideal)
                    if mis_zero(new_mat):
                        continue
                    mid = tuple(multi_add(g, h) for g, h in zip(w_ds, hs))
                    new_ds = ds[:j] + mid + ds[j + 1 :]
                    _acc_add(acc, (new_ds, f), new_mat, self.ideal)
        return Cochain(self.arity + m_ar - 1, self.ideal, self.rank, acc)

    def mult_ring_slot_by(self, j: int, q: Poly) -> Cochain:
        """(.., a_j, ..) -> self(.., q . a_j, ..): same arity."""
        acc: dict[CochainKey, Matrix] = {}
        for (ds, f), mat in self.terms.items():
            d = ds[j]
            for h, coeff in sub_multis(d):
                c = normal_form(q.diff_multi(h), self.ideal)
                if c.is_zero():
                    continue
                new_mat = mscale_poly(mat, c.scale(coeff), self.ideal)
                if mis_zero(new_mat):
                    continue
                new_ds = ds[:j] + (multi_sub(d, h),) + ds[j + 1 :]
                _acc_add(acc, (new_ds, f), new_mat, self.ideal)
        return Cochain(self.arity, self.ideal, self.rank, acc)

    def plug_poly(self, j: int, q: Poly) -> Cochain:
        """Evaluate ring slot j at the fixed polynomial q; arity k-1."""
        acc: dict[CochainKey, Matrix] = {}
        for (ds, f), mat in self.terms.items():
            c = normal_form(q.diff_multi(ds[j]), self.ideal)
            if c.is_zero():
                continue
            new_mat = mscale_poly(mat, c, self.ideal)
            if mis_zero(new_mat):
                continue
            new_ds = ds[:j] + ds[j + 1 :]
            _acc_add(acc, (new_ds, f), new_mat, self.ideal)
        return Cochain(self.arity - 1, self.ideal, self.rank, acc)

    def permute_ring_slots(self, perm: Sequence[int]) -> Cochain:
        """Precompose the ring arguments with a permutation: result(a_i) = self(a_perm(i))."""
        terms = {}
        for (ds, f), mat in self.terms.items():
            new_ds = tuple(ds[perm[i]] for i in range(self.arity))
            terms[(new_ds, f)] = mat
        return Cochain(self.arity, self.ideal, self.rank, terms)

    # -- metrics -----------------------------------------------------------

    def max_ring_order(self) -> int:
        return max((sum(d) for (ds, _f) in self.terms for d in ds), default=0)

    def max_module_order(self) -> int:
        return max((sum(f) for (_ds, f) in self.terms), default=0)

    def max_coeff_degree(self) -> int:
        return max(
            (x.total_degree() for m in self.terms.values() for row in m for x in row if not x.is_zero()),
            default=0,
        )

    def __repr__(self) -> str:
        return f"Cochain(arity={self.arity}, rank={self.rank}, terms={len(self.terms)})"


def _acc_add(acc: dict, key, mat: Matrix, ideal: Ideal) -> None:
    if key in acc:
        s = madd(acc[key], mat)
        if mis_zero(s):
            del acc[key]
        else:
            acc[key] = s
    else:
        if not mis_zero(mat):
            acc[key] = mat


# -- ring-level cochains -------------------------------------------------


class RingCochain:
    """k-ary scalar polydifferential operator A^(x)k -> A (full-ring coefficients)."""

    __slots__ = ("arity", "nvars", "terms")

    def __init__(self, arity: int, nvars: int, terms: dict[tuple[Monomial, ...], Poly]):
        self.arity = arity
        self.nvars = nvars
        clean = {}
        for ds, c in terms.items():
            if len(ds) != arity:
                raise ValueError("slot count must equal arity")
            if not c.is_zero():
                clean[tuple(tuple(d) for d in ds)] = c
        self.terms = clean

    @classmethod
    def zero(cls, arity: int, nvars: int) -> RingCochain:
        return cls(arity, nvars, {})

    def evaluate(self, args: Sequence[Poly]) -> Poly:
        if len(args) != self.arity:
            raise ValueError("argument count mismatch")
        out = Poly.zero(self.nvars)
        for ds, c in self.terms.items():
            prod = c
            for d, a in zip(ds, args):
                prod = prod * a.diff_multi(d)
                if prod.is_zero():
                    break
            out = out + prod
        return out

    def __add__(self, other: RingCochain) -> RingCochain:
        acc = dict(self.terms)
        for ds, c in other.terms.items():
            s = acc.get(ds, Poly.zero(self.nvars)) + c
            if s.is_zero():
                acc.pop(ds, None)
            else:
                acc[ds] = s
        return RingCochain(self.arity, self.nvars, acc)

    def __sub__(self, other: RingCochain) -> RingCochain:
        return self + other.scale(-1)

    def __neg__(self) -> RingCochain:
        return self.scale(-1)

    def scale(self, c) -> RingCochain:
        return RingCochain(self.arity, self.nvars, {d: v.scale(c) for d, v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RingCochain)
            and self.arity == other.arity
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    __hash__ = None

    def prepend_mult(self) -> RingCochain:
        z = (0,) * self.nvars
        return RingCochain(
            self.arity + 1, self.nvars, {(z,) + ds: c for ds, c in self.terms.items()}
        )

    def append_mult(self) -> RingCochain:
        z = (0,) * self.nvars
        return RingCochain(
            self.arity + 1, self.nvars, {ds + (z,): c for ds, c in self.terms.items()}
        )

    def merge_slots(self, i: int) -> RingCochain:
        acc: dict = {}
        for ds, c in self.terms.items():
            d = ds[i]
            for g, coeff in sub_multis(d):
                new_ds = ds[:i] + (g, multi_sub(d, g)) + ds[i + 1 :]
                s = acc.get(new_ds, Poly.zero(self.nvars)) + c.scale(coeff)
                if s.is_zero():
                    acc.pop(new_ds, None)
                else:
                    acc[new_ds] = s
        return RingCochain(self.arity + 1, self.nvars, acc)

    def insert(self, s: RingCochain, j: int) -> RingCochain:
        """Feed s into slot j (full-ring Leibniz composition)."""
        m_ar = s.arity
        acc: dict = {}
        for ds, c in self.terms.items():
            d = ds[j]
            for w_ds, w in s.terms.items():
                for parts, coeff in split_multi(d, m_ar + 1):
                    h0, hs = parts[0], parts[1:]
                    cc = c * w.diff_multi(h0).scale(coeff)
                    if cc.is_zero():
                        continue
                    mid = tuple(multi_add(g, h) for g, h in zip(w_ds, hs))
                    new_ds = ds[:j] + mid + ds[j + 1 :]
                    acc2 = acc.get(new_ds, Poly.zero(self.nvars)) + cc
                    if acc2.is_zero():
                        acc.pop(new_ds, None)
                    else:
                        acc[new_ds] = acc2
        return RingCochain(self.arity + m_ar - 1, self.nvars, acc)

    def transpose_slots(self, i: int, j: int) -> RingCochain:
        terms = {}
        for ds, c in self.terms.items():
            lst = list(ds)
            lst[i], lst[j] = lst[j], lst[i]
            terms[tuple(lst)] = c
        return RingCochain(self.arity, self.nvars, terms)

    def antisymmetrize_pair(self, i: int, j: int) -> RingCochain:
        return self - self.transpose_slots(i, j)

    def hochschild_differential(self) -> RingCochain:
        """Bar differential for the algebra acting on itself on both sides."""
        k = self.arity
        out = self.prepend_mult()
        for i in range(k):
            sign = -1 if (i + 1) % 2 else 1
            out = out + self.merge_slots(i).scale(sign)
        sign = -1 if (k + 1) % 2 else 1
        out = out + self.append_mult().scale(sign)
        return out

    def max_slot_order(self) -> int:
        return max((sum(d) for ds in self.terms for d in ds), default=0)

    def __repr__(self) -> str:
        return f"RingCochain(arity={self.arity}, terms={len(self.terms)})"


# -- truncated series of cochains ------------------------------------------


class CochainSeries:
    """Truncated eps-power series with Cochain coefficients (powers 0..order)."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: Sequence[Cochain]):
        if len(coeffs) != order + 1:
            raise ValueError("need one coefficient per eps power 0..order")
        self.order = order
        self.coeffs = tuple(coeffs)

    @classmethod
    def from_corrections(cls, order: int, corrections: Sequence[Cochain], ideal: Ideal, rank: int, arity: int) -> CochainSeries:
        """Series with zero constant term: corrections attach to eps^1, eps^2, ..."""
        coeffs = [Cochain.zero(arity, ideal, rank)]
        coeffs.extend(corrections)
        while len(coeffs) < order + 1:
            coeffs.append(Cochain.zero(arity, ideal, rank))
        return cls(order, coeffs[: order + 1])

    def __add__(self, other: CochainSeries) -> CochainSeries:
        if self.order != other.order:
            raise ValueError("series order mismatch")
        return CochainSeries(self.order, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: CochainSeries) -> CochainSeries:
        if self.order != other.order:
            raise ValueError("series order mismatch")
        return CochainSeries(self.order, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def scale(self, c) -> CochainSeries:
        return CochainSeries(self.order, [x.scale(c) for x in self.coeffs])

    def map(self, fn: Callable[[Cochain], Cochain]) -> CochainSeries:
        return CochainSeries(self.order, [fn(x) for x in self.coeffs])

    def convolve(self, other: CochainSeries, bilinear: Callable[[Cochain, Cochain], Cochain]) -> CochainSeries:
        """Truncated Cauchy product through a bilinear operation on coefficients."""
        if self.order != other.order:
            raise ValueError("series order mismatch")
        out = []
        for n in range(self.order + 1):
            acc = None
            for i in range(n + 1):
                piece = bilinear(self.coeffs[i], other.coeffs[n - i])
                acc = piece if acc is None else acc + piece
            out.append(acc)
        return CochainSeries(self.order, out)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CochainSeries)
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"CochainSeries(order={self.order})"
