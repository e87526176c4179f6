"""Connections along the conormal directions, curvature, and the normal complex.

A connection assigns to every conormal generator a first-order matrix
differential operator on E with scalar principal symbol; the pair of symbol
laws is indexed by (lambda, mu).  The curvature measures the failure to
intertwine the conormal bracket, and the normal complex carries the odd
derivation built from the connection and that bracket.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .diffop import (
    Cochain,
    Matrix,
    ScalarDiffOp,
    iter_multi_indices,
    madd,
    mat_from_rows,
    meye,
    mis_zero,
    mmul,
    mneg,
    mreduce,
    mscale,
    mscale_poly,
    mzero,
)
from .poisson import CheckResult, CoisotropicData, anchor_of_combo
from .polyalg import Ideal, Poly, normal_form


class OrderViolationError(Exception):
    """An operator that must be order zero retained derivative terms."""


@dataclass
class Connection:
    """(lambda, mu)-connection stored as per-generator operators.

    `source`, when present, is the arity-1 cochain the connection was derived
    from (the module action correction); it is what makes the lambda-symbol
    law a real check rather than a definition.
    """

    lam: Fraction
    mu: Fraction
    ops: dict[int, Cochain]
    source: Cochain | None = None

    def __post_init__(self):
        self.lam = Fraction(self.lam)
        self.mu = Fraction(self.mu)
        for op in self.ops.values():
            if op.arity != 0:
                raise ValueError("per-generator operators must have arity 0")

    @property
    def rank(self) -> int:
        return next(iter(self.ops.values())).rank

    @property
    def ideal(self) -> Ideal:
        return next(iter(self.ops.values())).ideal

    def op(self, g: int) -> Cochain:
        return self.ops[g]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Connection)
            and self.lam == other.lam
            and self.mu == other.mu
            and self.ops == other.ops
        )

    __hash__ = None


def symbol_split(op: Cochain) -> tuple[ScalarDiffOp, Matrix]:
    """Split a first-order operator with scalar symbol into (symbol, zero-order part)."""
    nv = op.nvars
    yvars = op.yvars
    sym_terms: dict[tuple[int, ...], Poly] = {}
    zero_part = mzero(op.rank, nv)
    for (ds, f), mat in op.terms.items():
        if sum(f) == 0:
            zero_part = madd(zero_part, mat)
        elif sum(f) == 1:
            c = mat[0][0]
            eye_scaled = mscale_poly(meye(op.rank, nv), c, op.ideal)
            if mat != eye_scaled:
                raise OrderViolationError("first-order part is not a scalar symbol")
            sym_terms[f] = c
        else:
            raise OrderViolationError("operator has order greater than one")
    return ScalarDiffOp(nv, sym_terms, allowed=yvars), zero_part


def connection_cochain(gamma: Connection, data: CoisotropicData) -> Cochain:
    """Canonical arity-1 cochain extending the per-generator operators.

    Vanishes on O_Y and on I^2 tensor E, restricts to the stored operators on
    the generators, and satisfies the lambda-symbol law by construction.  Used
    when no source cochain is available.
    """
    if gamma.source is not None:
        return gamma.source
    ideal = gamma.ideal
    rank = gamma.rank
    nv = ideal.nvars
    acc = Cochain.zero(1, ideal, rank)
    for g, op in gamma.ops.items():
        unit = _unit(nv, g)
        lifted = Cochain(
            1, ideal, rank, {((unit,), f): mat for (ds, f), mat in op.terms.items()}
        )
        acc = acc + lifted
    if gamma.lam:
        for g in data.gens:
            for j in sorted(data.yvars):
                coeff = normal_form(data.bivector.entry(g, j), ideal)
                if coeff.is_zero():
                    continue
                d2 = _unit2(nv, g, j)
                term = Cochain(
                    1,
                    ideal,
                    rank,
                    {((d2,), (0,) * nv): mscale_poly(meye(rank, nv), coeff.scale(gamma.lam), ideal)},
                )
                acc = acc + term
    return acc


def _unit(nv: int, i: int) -> tuple[int, ...]:
    m = [0] * nv
    m[i] = 1
    return tuple(m)


def _unit2(nv: int, i: int, j: int) -> tuple[int, ...]:
    m = [0] * nv
    m[i] += 1
    m[j] += 1
    return tuple(m)


def connection_from_cochain(
    alpha1: Cochain, lam: Fraction, mu: Fraction, data: CoisotropicData
) -> Connection:
    """Restrict an arity-1 cochain to the conormal generators."""
    ops = {g: alpha1.plug_poly(0, Poly.variable(g, alpha1.nvars)) for g in data.gens}
    return Connection(lam, mu, ops, source=alpha1)


def check_symbols(gamma: Connection, data: CoisotropicData, deg_cap: int = 2) -> CheckResult:
    """Verify both symbol laws; returns the first violating triple on failure.

    The mu-law is structural on the per-generator operators; the lambda-law is
    checked through the source cochain (or the canonical extension) evaluated
    on spanning monomials a with the generators and module basis vectors.
    """
    ideal = gamma.ideal
    rank = gamma.rank
    nv = ideal.nvars
    yv = sorted(data.yvars)
    ext = connection_cochain(gamma, data)
    monos = [
        Poly.monomial(m)
        for m in iter_multi_indices(nv, deg_cap, yv)
        if sum(m) >= 1
    ]
    basis = [
        tuple(Poly.const(nv, 1) if i == b else Poly.zero(nv) for i in range(rank))
        for b in range(rank)
    ]
    for g in data.gens:
        op = gamma.ops[g]
        try:
            sym, _low = symbol_split(op)
        except OrderViolationError:
            return CheckResult(False, witness=("mu", g, None, None))
        x_g = Poly.variable(g, nv)
        p_g = data.anchor[g]
        for a in monos:
            pa = p_g.apply(a)
            for bi, e in enumerate(basis):
                # mu-law: gamma(x, a e) - a gamma(x, e) = mu p(x)(a) e
                lhs = op.apply([], tuple(a * entry for entry in e))
                mid = tuple(normal_form(a * v, ideal) for v in op.apply([], e))
                want = tuple(
                    normal_form(pa.scale(gamma.mu) * entry, ideal) for entry in e
                )
                if tuple(x - y for x, y in zip(lhs, mid)) != want:
                    return CheckResult(False, witness=("mu", g, a, bi))
                # lambda-law: gamma(a x, e) - a gamma(x, e) = lambda p(x)(a) e
                lhs2 = ext.apply([a * x_g], e)
                mid2 = tuple(normal_form(a * v, ideal) for v in ext.apply([x_g], e))
                want2 = tuple(
                    normal_form(pa.scale(gamma.lam) * entry, ideal) for entry in e
                )
                if tuple(x - y for x, y in zip(lhs2, mid2)) != want2:
                    return CheckResult(False, witness=("lambda", g, a, bi))
        # the source must actually restrict to the stored operator
        if gamma.source is not None:
            if ext.plug_poly(0, x_g) != op:
                return CheckResult(False, witness=("restriction", g, None, None))
    return CheckResult(True)


def connection_on_combo(
    gamma: Connection, data: CoisotropicData, combo: dict[int, Poly]
) -> Cochain:
    """gamma applied to an O_Y-combination of generators via the symbol law."""
    ideal = gamma.ideal
    rank = gamma.rank
    acc = Cochain.zero(0, ideal, rank)
    for g, coeff in combo.items():
        c = normal_form(coeff, ideal)
        acc = acc + gamma.ops[g].scale_poly(c)
        if gamma.lam:
            shift = data.anchor[g].apply(c)
            shift = normal_form(shift.scale(gamma.lam), ideal)
            if not shift.is_zero():
                acc = acc + Cochain.from_matrix(
                    mscale_poly(meye(rank, ideal.nvars), shift, ideal), ideal
                )
    return acc


@dataclass
class Curvature:
    """Antisymmetric table c(x_g, x_h) of O_Y-linear endomorphisms."""

    gens: tuple[int, ...]
    table: dict[tuple[int, int], Matrix]
    rank: int
    ideal: Ideal

    def entry(self, g: int, h: int) -> Matrix:
        if g == h:
            return mzero(self.rank, self.ideal.nvars)
        if (g, h) in self.table:
            return self.table[(g, h)]
        return mneg(self.table.get((h, g), mzero(self.rank, self.ideal.nvars)))

    def is_zero(self) -> bool:
        return all(mis_zero(m) for m in self.table.values())


def _commutator_matrix(op: Cochain, mat: Matrix) -> Matrix:
    """[op, M] for a first-order op and an order-0 matrix; always order 0."""
    m_c = Cochain.from_matrix(mat, op.ideal)
    comm = op.compose_module(m_c) - m_c.compose_module(op)
    return _as_matrix(comm)


def _as_matrix(c: Cochain) -> Matrix:
    if c.arity != 0:
        raise ValueError("matrix extraction needs an arity-0 cochain")
    out = mzero(c.rank, c.nvars)
    for (_ds, f), mat in c.terms.items():
        if sum(f) != 0:
            raise OrderViolationError("operator is not order zero")
        out = madd(out, mat)
    return out


def curvature(gamma: Connection, data: CoisotropicData) -> Curvature:
    """c(x,y) = [gamma(x), gamma(y)] - gamma({x,y}_P); asserted order zero."""
    ideal = gamma.ideal
    table: dict[tuple[int, int], Matrix] = {}
    gens = tuple(sorted(gamma.ops))
    for a, g in enumerate(gens):
        for h in gens[a + 1 :]:
            comm = gamma.ops[g].compose_module(gamma.ops[h]) - gamma.ops[h].compose_module(
                gamma.ops[g]
            )
            combo = data.bracket_combo(g, h)
            ent = comm - connection_on_combo(gamma, data, combo)
            table[(g, h)] = _as_matrix(ent)
    return Curvature(gens, table, gamma.rank, ideal)


# -- the normal complex -------------------------------------------------


@dataclass
class NormalCochain:
    """Degree-n element of the normal complex: antisymmetric matrix tables."""

    degree: int
    gens: tuple[int, ...]
    rank: int
    ideal: Ideal
    entries: dict[tuple[int, ...], Matrix] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, mat in self.entries.items():
            if len(key) != self.degree:
                raise ValueError("entry key length must equal the degree")
            if tuple(sorted(key)) != tuple(key):
                raise ValueError("store entries on strictly increasing tuples")
            if len(set(key)) != len(key):
                raise ValueError("repeated generators vanish by antisymmetry")
            if not mis_zero(mat):
                clean[tuple(key)] = mreduce(mat, self.ideal)
        self.entries = clean

    @classmethod
    def zero(cls, degree: int, gens, rank: int, ideal: Ideal) -> NormalCochain:
        return cls(degree, tuple(gens), rank, ideal, {})

    def value(self, key: Sequence[int]) -> Matrix:
        """Evaluate on an arbitrary generator tuple via antisymmetry."""
        key = tuple(key)
        if len(set(key)) != len(key):
            return mzero(self.rank, self.ideal.nvars)
        order = tuple(sorted(key))
        sign = _perm_sign(key, order)
        mat = self.entries.get(order)
        if mat is None:
            return mzero(self.rank, self.ideal.nvars)
        return mat if sign == 1 else mneg(mat)

    def __add__(self, other: NormalCochain) -> NormalCochain:
        if self.degree != other.degree:
            raise ValueError("degree mismatch")
        acc = dict(self.entries)
        for k, m in other.entries.items():
            s = madd(acc.get(k, mzero(self.rank, self.ideal.nvars)), m)
            if mis_zero(s):
                acc.pop(k, None)
            else:
                acc[k] = s
        return NormalCochain(self.degree, self.gens, self.rank, self.ideal, acc)

    def __sub__(self, other: NormalCochain) -> NormalCochain:
        return self + other.scale(-1)

    def scale(self, c) -> NormalCochain:
        return NormalCochain(
            self.degree,
            self.gens,
            self.rank,
            self.ideal,
            {k: mscale(m, c) for k, m in self.entries.items()},
        )

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NormalCochain)
            and self.degree == other.degree
            and self.entries == other.entries
        )

    __hash__ = None


def _perm_sign(src: Sequence[int], dst: Sequence[int]) -> int:
    src = list(src)
    sign = 1
    for i in range(len(src)):
        if src[i] != dst[i]:
            j = src.index(dst[i], i + 1)
            src[i + 1 : j + 1] = src[i : j]
            src[i] = dst[i]
            sign = -sign
    return sign


def curvature_cochain(c: Curvature, gens, ideal: Ideal) -> NormalCochain:
    entries = {k: m for k, m in c.table.items() if not mis_zero(m)}
    return NormalCochain(2, tuple(gens), c.rank, ideal, entries)


def normal_differential(
    omega: NormalCochain, gamma: Connection, data: CoisotropicData
) -> NormalCochain:
    """The odd derivation of the normal complex.

    d omega(x_0..x_n) = sum_j (-1)^j [gamma(x_j), omega(..hat j..)]
                      + sum_{i<j} (-1)^{i+j} omega({x_i,x_j}_P, ..hat i hat j..).
    The bracket class is inserted into the first slot, literal reading.
    """
    n = omega.degree
    gens = omega.gens
    ideal = omega.ideal
    rank = omega.rank
    out: dict[tuple[int, ...], Matrix] = {}
    for key in itertools.combinations(gens, n + 1):
        acc = mzero(rank, ideal.nvars)
        for j in range(n + 1):
            rest = key[:j] + key[j + 1 :]
            mat = omega.value(rest)
            if not mis_zero(mat):
                term = _commutator_matrix(gamma.ops[key[j]], mat)
                acc = madd(acc, term if j % 2 == 0 else mneg(term))
        for i in range(n + 1):
            for j in range(i + 1, n + 1):
                combo = data.bracket_combo(key[i], key[j])
                if not combo:
                    continue
                rest = tuple(k for t, k in enumerate(key) if t not in (i, j))
                piece = mzero(rank, ideal.nvars)
                for g, coeff in combo.items():
                    val = omega.value((g,) + rest)
                    if mis_zero(val):
                        continue
                    piece = madd(piece, mscale_poly(val, normal_form(coeff, ideal), ideal))
                acc = madd(acc, piece if (i + j) % 2 == 0 else mneg(piece))
        if not mis_zero(acc):
            out[key] = mreduce(acc, ideal)
    return NormalCochain(n + 1, gens, rank, ideal, out)


def normal_wedge(a: NormalCochain, b: NormalCochain) -> NormalCochain:
    """Shuffle wedge with matrix multiplication as the coefficient product."""
    m, n = a.degree, b.degree
    gens = a.gens
    ideal = a.ideal
    rank = a.rank
    out: dict[tuple[int, ...], Matrix] = {}
    for key in itertools.combinations(gens, m + n):
        acc = mzero(rank, ideal.nvars)
        for left_pos in itertools.combinations(range(m + n), m):
            right_pos = tuple(i for i in range(m + n) if i not in left_pos)
            sign = _shuffle_sign(left_pos, right_pos)
            va = a.value(tuple(key[i] for i in left_pos))
            if mis_zero(va):
                continue
            vb = b.value(tuple(key[i] for i in right_pos))
            if mis_zero(vb):
                continue
            prod = mmul(va, vb, ideal)
            acc = madd(acc, prod if sign == 1 else mneg(prod))
        if not mis_zero(acc):
            out[key] = acc
    return NormalCochain(m + n, gens, rank, ideal, out)


def _shuffle_sign(left: Sequence[int], right: Sequence[int]) -> int:
    inv = 0
    for l in left:
        inv += sum(1 for r in right if r < l)
    return -1 if inv % 2 else 1


def normal_bracket(a: NormalCochain, b: NormalCochain) -> NormalCochain:
    """Graded commutator on the normal complex built from the shuffle wedge."""
    sign = -1 if (a.degree * b.degree) % 2 else 1
    return normal_wedge(a, b) - normal_wedge(b, a).scale(sign)


def mc_normal_check(
    zeta: NormalCochain, gamma: Connection, data: CoisotropicData
) -> CheckResult:
    """d zeta + [zeta, zeta] = 0, with [zeta,zeta](x,y) = zeta(x)zeta(y) - zeta(y)zeta(x).

    Also verifies the deformation identity c(gamma + zeta) =
    c(gamma) + d zeta + [zeta, zeta] along the way.
    """
    if zeta.degree != 1:
        raise ValueError("Maurer-Cartan elements of the normal complex have degree 1")
    ideal = zeta.ideal
    rank = zeta.rank
    gens = zeta.gens
    dz = normal_differential(zeta, gamma, data)
    sq_entries: dict[tuple[int, int], Matrix] = {}
    for g, h in itertools.combinations(gens, 2):
        zg, zh = zeta.value((g,)), zeta.value((h,))
        mat = madd(mmul(zg, zh, ideal), mneg(mmul(zh, zg, ideal)))
        if not mis_zero(mat):
            sq_entries[(g, h)] = mat
    square = NormalCochain(2, gens, rank, ideal, sq_entries)
    residual = dz + square
    shifted = Connection(
        gamma.lam,
        gamma.mu,
        {g: gamma.ops[g] + Cochain.from_matrix(zeta.value((g,)), ideal) for g in gamma.ops},
    )
    c_old = curvature_cochain(curvature(gamma, data), gens, ideal)
    c_new = curvature_cochain(curvature(shifted, data), gens, ideal)
    if c_new != c_old + residual:
        raise AssertionError("curvature shift identity c(g+z) = c(g) + dz + [z,z] failed")
    if residual.is_zero():
        return CheckResult(True)
    key = sorted(residual.entries)[0]
    return CheckResult(False, witness=(key, residual.entries[key]))


# -- tensor, dual, and reports ------------------------------------------


def _kron(a: Matrix, b: Matrix, ideal: Ideal) -> Matrix:
    ra, rb = len(a), len(b)
    rows = []
    for i in range(ra):
        for j in range(rb):
            row = []
            for k in range(ra):
                for l in range(rb):
                    row.append(normal_form(a[i][k] * b[j][l], ideal))
            rows.append(tuple(row))
    return tuple(rows)


def tensor_connection(
    gE: Connection, gF: Connection, data: CoisotropicData
) -> Connection:
    """Leibniz-rule connection on the tensor product; symbols add in lambda."""
    if gE.mu != gF.mu:
        raise ValueError("tensor requires matching mu-symbols")
    ideal = gE.ideal
    nv = ideal.nvars
    rE, rF = gE.rank, gF.rank
    ops: dict[int, Cochain] = {}
    for g in gE.ops:
        symE, lowE = symbol_split(gE.ops[g])
        symF, lowF = symbol_split(gF.ops[g])
        if symE.terms != symF.terms:
            raise ValueError("tensor requires equal scalar symbols per generator")
        eyeEF = meye(rE * rF, nv)
        mixed = madd(_kron(lowE, meye(rF, nv), ideal), _kron(meye(rE, nv), lowF, ideal))
        terms = {((), (0,) * nv): mixed} if not mis_zero(mixed) else {}
        op = Cochain(0, ideal, rE * rF, terms)
        for f, c in symE.terms.items():
            op = op + Cochain(0, ideal, rE * rF, {((), f): mscale_poly(eyeEF, c, ideal)})
        ops[g] = op
    return Connection(gE.lam + gF.lam, gE.mu, ops)


def dual_connection(gL: Connection, data: CoisotropicData) -> Connection:
    """Dual of a rank-1 connection via the Leibniz pairing rule; flips lambda."""
    if gL.rank != 1:
        raise ValueError("dual_connection requires rank 1")
    if gL.mu != 1:
        raise ValueError("the pairing rule forces mu = 1")
    ideal = gL.ideal
    ops = {}
    for g, op in gL.ops.items():
        sym, low = symbol_split(op)
        dual = Cochain(0, ideal, 1, {((), f): mat_from_rows([[c]]) for f, c in sym.terms.items()})
        if not mis_zero(low):
            dual = dual + Cochain.from_matrix(mneg(low), ideal)
        ops[g] = dual
    return Connection(-gL.lam, gL.mu, ops)


@dataclass
class SplittingReport:
    """Atiyah-sequence splitting verdicts for a nondegenerate anchor."""

    degenerate: bool
    splits: CheckResult | None = None
    flat: bool | None = None
    curvature: Curvature | None = None


def atiyah_splitting_check(gamma: Connection, data: CoisotropicData) -> SplittingReport:
    """Splitting (= (1/2,1)-symbols) and bracket (= flatness) verdicts.

    Degeneracy is decided by the rank of the anchor coefficient matrix over
    the fraction field, computed on O_Y representatives.
    """
    mat = data.anchor_matrix()
    if _poly_matrix_rank(mat) < len(data.gens):
        return SplittingReport(degenerate=True)
    splits = check_symbols(gamma, data)
    if gamma.lam != Fraction(1, 2) or gamma.mu != 1:
        splits = CheckResult(False, witness=("type", gamma.lam, gamma.mu))
    c = curvature(gamma, data)
    return SplittingReport(False, splits=splits, flat=c.is_zero(), curvature=c)


def _poly_matrix_rank(mat: Sequence[Sequence[Poly]]) -> int:
    """Rank over the fraction field via nonvanishing minors (desk-scale sizes)."""
    rows = len(mat)
    if rows == 0:
        return 0
    cols = len(mat[0])
    for size in range(min(rows, cols), 0, -1):
        for rsel in itertools.combinations(range(rows), size):
            for csel in itertools.combinations(range(cols), size):
                if not _det([[mat[r][c] for c in csel] for r in rsel]).is_zero():
                    return size
    return 0


def _det(mat: list[list[Poly]]) -> Poly:
    n = len(mat)
    if n == 1:
        return mat[0][0]
    out = None
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in mat[1:]]
        term = mat[0][j] * _det(minor)
        if j % 2:
            term = -term
        out = term if out is None else out + term
    return out


def weakly_obstructed(
    gamma: Connection, data: CoisotropicData, deg_cap: int = 2
) -> CheckResult:
    """[c(gamma), omega] = 0 for a bounded basis of normal cochains.

    The honest desk-scale rendering of the paper's unbounded condition: omega
    ranges over matrix units times Y-monomials of degree <= deg_cap in
    degrees 0..len(gens)-2 (higher degrees pair into nothing).
    """
    ideal = gamma.ideal
    rank = gamma.rank
    gens = tuple(sorted(gamma.ops))
    c = curvature_cochain(curvature(gamma, data), gens, ideal)
    monos = list(iter_multi_indices(ideal.nvars, deg_cap, sorted(data.yvars)))
    max_deg = max(len(gens) - 2, 0)
    for degree in range(max_deg + 1):
        for key in itertools.combinations(gens, degree):
            for i in range(rank):
                for j in range(rank):
                    for m in monos:
                        unit = [[Poly.zero(ideal.nvars)] * rank for _ in range(rank)]
                        unit[i][j] = Poly.monomial(m)
                        omega = NormalCochain(
                            degree, gens, rank, ideal, {key: mat_from_rows(unit)}
                        )
                        if not normal_bracket(c, omega).is_zero():
                            return CheckResult(False, witness=(degree, key, i, j, m))
    return CheckResult(True)
