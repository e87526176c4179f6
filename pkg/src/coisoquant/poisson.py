"""Poisson bivectors, coisotropy, the anchor map, and the conormal bracket."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .diffop import ScalarDiffOp
from .polyalg import Ideal, Poly, normal_form


class CheckResult:
    """Boolean verdict carrying a witness for failures (or extra data on success)."""

    __slots__ = ("ok", "witness")

    def __init__(self, ok: bool, witness=None):
        self.ok = ok
        self.witness = witness

    def __bool__(self) -> bool:
        return self.ok

    def __repr__(self) -> str:
        return f"CheckResult(ok={self.ok}, witness={self.witness!r})"


class Bivector:
    """Antisymmetric array of polynomials P^{ij}; {a,b} = P(da, db)."""

    __slots__ = ("nvars", "entries")

    def __init__(self, nvars: int, entries: dict[tuple[int, int], Poly]):
        self.nvars = nvars
        clean: dict[tuple[int, int], Poly] = {}
        for (i, j), p in entries.items():
            if i == j:
                if not p.is_zero():
                    raise ValueError("diagonal entries of a bivector must vanish")
                continue
            if p.is_zero():
                continue
            if i < j:
                clean[(i, j)] = clean.get((i, j), Poly.zero(nvars)) + p
            else:
                clean[(j, i)] = clean.get((j, i), Poly.zero(nvars)) - p
        self.entries = {k: v for k, v in clean.items() if not v.is_zero()}

    @classmethod
    def zero(cls, nvars: int) -> Bivector:
        return cls(nvars, {})

    def entry(self, i: int, j: int) -> Poly:
        """P^{ij} with antisymmetry built in."""
        if i == j:
            return Poly.zero(self.nvars)
        if i < j:
            return self.entries.get((i, j), Poly.zero(self.nvars))
        return -self.entries.get((j, i), Poly.zero(self.nvars))

    def bracket(self, a: Poly, b: Poly) -> Poly:
        """{a, b} = sum_{i<j} P^{ij} (d_i a d_j b - d_j a d_i b)."""
        out = Poly.zero(self.nvars)
        for (i, j), p in self.entries.items():
            out = out + p * (a.diff(i) * b.diff(j) - a.diff(j) * b.diff(i))
        return out

    def is_constant(self) -> bool:
        return all(p.total_degree() == 0 for p in self.entries.values())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Bivector)
            and self.nvars == other.nvars
            and self.entries == other.entries
        )

    __hash__ = None


def schouten_jacobi(P: Bivector) -> CheckResult:
    """Jacobi identity for {.,.} on all coordinate triples.

    The Jacobiator is a derivation in each slot, so vanishing on coordinates
    is equivalent to [P,P] = 0.  Returns the first failing triple with the
    nonzero cyclic sum as witness.
    """
    n = P.nvars
    coords = [Poly.variable(i, n) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                a, b, c = coords[i], coords[j], coords[k]
                jac = (
                    P.bracket(a, P.bracket(b, c))
                    + P.bracket(b, P.bracket(c, a))
                    + P.bracket(c, P.bracket(a, b))
                )
                if not jac.is_zero():
                    return CheckResult(False, witness=((i, j, k), jac))
    return CheckResult(True)


def coisotropy_check(P: Bivector, ideal: Ideal) -> CheckResult:
    """True iff {g_a, g_b} lies in the ideal for all generator pairs.

    The failure witness is the generator pair together with the nonzero
    normal form, the projection of P in the second exterior power of the
    normal bundle.
    """
    gens = ideal.generators
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            br = P.bracket(gens[a], gens[b])
            nf = normal_form(br, ideal)
            if not nf.is_zero():
                return CheckResult(False, witness=((a, b), nf))
    return CheckResult(True)


@dataclass
class CoisotropicData:
    """Anchor and conormal bracket data for a coordinate-aligned coisotropic Y.

    gens lists the conormal coordinate indices (sorted).  anchor[g] is the
    vector field p(x_g) = P(dx_g, .)|_Y on Y-coordinates.  brackets[(g,h)]
    expresses {x_g, x_h}_P in the conormal generator basis with O_Y
    coefficients.  The adjoint map p* is exposed as the transpose of the
    anchor coefficient array (rows = generators, columns = Y-coordinates);
    that transpose convention is ours, the sign pairing is not asserted.
    """

    bivector: Bivector
    ideal: Ideal
    gens: tuple[int, ...]
    anchor: dict[int, ScalarDiffOp]
    brackets: dict[tuple[int, int], dict[int, Poly]]

    @property
    def nvars(self) -> int:
        return self.ideal.nvars

    @property
    def yvars(self) -> frozenset[int]:
        return frozenset(range(self.nvars)) - self.ideal.coordinate_vars

    def anchor_matrix(self) -> list[list[Poly]]:
        """Rows = conormal generators, columns = Y-coordinates (sorted)."""
        cols = sorted(self.yvars)
        zero = Poly.zero(self.nvars)
        return [
            [self.anchor[g].terms.get(_unit(self.nvars, j), zero) for j in cols]
            for g in self.gens
        ]

    def adjoint_matrix(self) -> list[list[Poly]]:
        rows = self.anchor_matrix()
        return [list(col) for col in zip(*rows)] if rows else []

    def bracket_combo(self, g: int, h: int) -> dict[int, Poly]:
        """{x_g, x_h}_P as a generator combination, antisymmetric in (g, h)."""
        if g == h:
            return {}
        if (g, h) in self.brackets:
            return self.brackets[(g, h)]
        return {k: -v for k, v in self.brackets.get((h, g), {}).items()}


def _unit(nvars: int, j: int) -> tuple[int, ...]:
    m = [0] * nvars
    m[j] = 1
    return tuple(m)


def anchor(P: Bivector, ideal: Ideal) -> CoisotropicData:
    """Anchor and conormal bracket for a coordinate-aligned coisotropic ideal."""
    if not ideal.coordinate_aligned:
        raise ValueError("anchor requires a coordinate-aligned ideal")
    check = coisotropy_check(P, ideal)
    if not check:
        (a, b), nf = check.witness
        names = [f"x{i}" for i in range(P.nvars)]
        raise ValueError(
            "subvariety is not coisotropic: "
            f"{{gen{a}, gen{b}}} has nonzero normal form {nf.to_string(names)}"
        )
    gens = tuple(sorted(ideal.coordinate_vars))
    yvars = frozenset(range(P.nvars)) - ideal.coordinate_vars
    fields: dict[int, ScalarDiffOp] = {}
    for g in gens:
        terms = {}
        for j in sorted(yvars):
            coeff = normal_form(P.entry(g, j), ideal)
            if not coeff.is_zero():
                terms[_unit(P.nvars, j)] = coeff
        fields[g] = ScalarDiffOp(P.nvars, terms, allowed=yvars)
    brackets: dict[tuple[int, int], dict[int, Poly]] = {}
    for ai, g in enumerate(gens):
        for h in gens[ai + 1 :]:
            brackets[(g, h)] = conormal_class(P.entry(g, h), ideal)
    return CoisotropicData(P, ideal, gens, fields, brackets)


def conormal_class(rep: Poly, ideal: Ideal) -> dict[int, Poly]:
    """Class of an ideal element in I/I^2, in conormal generator coordinates.

    For a coordinate-aligned ideal each monomial of the representative either
    has conormal degree >= 2 (dies in I^2) or contains exactly one conormal
    variable to the first power; the latter contribute coefficient-by-
    generator.  Raises if the representative is not in the ideal.
    """
    if not ideal.coordinate_aligned:
        raise ValueError("conormal classes require a coordinate-aligned ideal")
    cvars = ideal.coordinate_vars
    out: dict[int, Poly] = {}
    for m, c in rep.terms.items():
        support = [(i, m[i]) for i in cvars if m[i]]
        cdeg = sum(e for _, e in support)
        if cdeg == 0:
            raise ValueError("representative is not in the ideal")
        if cdeg >= 2:
            continue
        (g, _), = support
        mm = list(m)
        mm[g] = 0
        coeff = Poly.monomial(tuple(mm), c)
        out[g] = out.get(g, Poly.zero(rep.nvars)) + coeff
    return {g: v for g, v in out.items() if not v.is_zero()}


def conormal_bracket(
    data: CoisotropicData, x: Poly, y: Poly
) -> dict[int, Poly]:
    """{x, y}_P in I/I^2 for ideal representatives x, y."""
    conormal_class(x, data.ideal)  # membership validation
    conormal_class(y, data.ideal)
    br = data.bivector.bracket(x, y)
    return conormal_class(br, data.ideal)


def anchor_of_combo(data: CoisotropicData, combo: dict[int, Poly]) -> ScalarDiffOp:
    """Anchor of an O_Y-combination of conormal generators (p is O_Y-linear)."""
    nv = data.nvars
    out = ScalarDiffOp.zero(nv, allowed=data.yvars)
    for g, coeff in combo.items():
        c = normal_form(coeff, data.ideal)
        scaled = ScalarDiffOp(
            nv,
            {d: normal_form(v * c, data.ideal) for d, v in data.anchor[g].terms.items()},
            allowed=data.yvars,
        )
        out = out + scaled
    return out
