"""The Hochschild complex of a deformed module: curved dg Lie structure,
twisting, Maurer-Cartan residuals, and bounded-degree cohomology.

Everything is symbolic: identities between operators are decided by the flat
normal form of cochains, so "exact" means exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import linalg
from .diffop import (
    Cochain,
    CochainSeries,
    RingCochain,
    iter_multi_indices,
    mat_from_rows,
    meye,
    mscale_poly,
)
from .poisson import CheckResult
from .polyalg import Ideal, Poly, normal_form


class CapEscapeError(Exception):
    """The differential maps the capped cochain space outside itself.

    Raised instead of silently truncating: silent truncation would fabricate
    cohomology.  Carries the offending coordinate for diagnosis.
    """

    def __init__(self, message: str, offender=None):
        super().__init__(message)
        self.offender = offender


# -- star-product residuals (ring level) ---------------------------------


def star_residuals(alpha1: RingCochain, alpha2: RingCochain | None):
    """Associativity residuals of a star product, order by order.

    Order one: the Hochschild cocycle condition on alpha1.  Order two: the
    cocycle defect of alpha2 minus the alpha1-composition term.  Both vanish
    iff the truncated product is associative.
    """
    r1 = alpha1.hochschild_differential()
    r2 = None
    if alpha2 is not None:
        rhs = alpha1.insert(alpha1, 0) - alpha1.insert(alpha1, 1)
        r2 = alpha2.hochschild_differential() - rhs
    return r1, r2


@dataclass
class HochschildComplex:
    """Hochschild cochains of (A, E) with an optional star product.

    `star` needs attributes alpha1/alpha2 (RingCochain) and order; its
    associativity residuals are verified at construction time through
    `with_star`.
    """

    ideal: Ideal
    rank: int
    star: object | None = None
    order: int = 2

    @classmethod
    def with_star(cls, ideal: Ideal, rank: int, star) -> "HochschildComplex":
        r1, r2 = star_residuals(star.alpha1, star.alpha2)
        if not r1.is_zero() or (r2 is not None and not r2.is_zero()):
            raise ValueError("star product fails its associativity residuals")
        return cls(ideal, rank, star, order=star.order)

    @property
    def nvars(self) -> int:
        return self.ideal.nvars

    def zero_cochain(self, arity: int) -> Cochain:
        return Cochain.zero(arity, self.ideal, self.rank)

    def zero_series(self, arity: int) -> CochainSeries:
        return CochainSeries(self.order, [self.zero_cochain(arity)] * (self.order + 1))

    def series(self, corrections: Sequence[Cochain], arity: int) -> CochainSeries:
        """eps-series with zero constant coefficient from corrections at eps^1.."""
        return CochainSeries.from_corrections(
            self.order, list(corrections), self.ideal, self.rank, arity
        )

    def star_component(self, i: int) -> RingCochain | None:
        if self.star is None:
            return None
        if i == 1:
            return self.star.alpha1
        if i == 2:
            return self.star.alpha2
        return None


def d_hoch(c: Cochain) -> Cochain:
    """The Hochschild differential on module cochains.

    d alpha(a_1..a_{k+1}, e) = a_1 alpha(a_2.., e)
    + sum_i (-1)^i alpha(.., a_i a_{i+1}, ..) + (-1)^{k+1} alpha(a_1..a_k, a_{k+1} e).
    """
    k = c.arity
    out = c.prepend_mult()
    for i in range(1, k + 1):
        piece = c.merge_ring_slots(i - 1)
        out = out + (piece.scale(-1) if i % 2 else piece)
    tail = c.append_module_mult()
    out = out + (tail.scale(-1) if (k + 1) % 2 else tail)
    return out


def gerstenhaber(c1: Cochain, c2: Cochain) -> Cochain:
    """[c1, c2]_G = c1 o c2 - (-1)^{kl} c2 o c1 with the module-slot insertion."""
    sign = -1 if (c1.arity * c2.arity) % 2 else 1
    return c1.compose_module(c2) - c2.compose_module(c1).scale(sign)


def ring_to_module(rc: RingCochain, ideal: Ideal, rank: int) -> Cochain:
    """(a_1..a_k, e) -> rc(a_1..a_k) . e as a module cochain."""
    eye = meye(rank, ideal.nvars)
    nv = ideal.nvars
    terms = {}
    for ds, c in rc.terms.items():
        red = normal_form(c, ideal)
        if red.is_zero():
            continue
        terms[(ds, (0,) * nv)] = mscale_poly(eye, red, ideal)
    return Cochain(rc.arity, ideal, rank, terms)


def star_insertions(c: Cochain, rc: RingCochain) -> Cochain:
    """sum_{j=1}^{k} (-1)^j c(a_1, .., rc(a_j, a_{j+1}), .., a_{k+1}, e)."""
    out = Cochain.zero(c.arity + 1, c.ideal, c.rank)
    for j in range(1, c.arity + 1):
        piece = c.insert_ring_cochain(rc, j - 1)
        out = out + (piece.scale(-1) if j % 2 else piece)
    return out


# -- the curved brackets -------------------------------------------------


def l0(h: HochschildComplex) -> CochainSeries:
    """l_0(1) = -alpha_X (x) id_E as an eps-series of arity-2 cochains."""
    coeffs = [h.zero_cochain(2)]
    for i in range(1, h.order + 1):
        rc = h.star_component(i)
        coeffs.append(
            ring_to_module(rc, h.ideal, h.rank).scale(-1) if rc is not None else h.zero_cochain(2)
        )
    return CochainSeries(h.order, coeffs)


def l1(h: HochschildComplex, s: CochainSeries) -> CochainSeries:
    """l_1 = d_Hoch + star insertions, eps-weighted by the star components."""
    out = []
    for n in range(h.order + 1):
        acc = d_hoch(s.coeffs[n])
        for i in (1, 2):
            rc = h.star_component(i)
            if rc is None or n - i < 0:
                continue
            base = s.coeffs[n - i]
            if base.arity >= 1 and not base.is_zero():
                acc = acc + star_insertions(base, rc)
        out.append(acc)
    return CochainSeries(h.order, out)


def l2(h: HochschildComplex, s1: CochainSeries, s2: CochainSeries) -> CochainSeries:
    return s1.convolve(s2, gerstenhaber)


def curved_brackets(h: HochschildComplex):
    """The three brackets of the curved dg Lie algebra as callables.

    Rejects a star failing its associativity residuals, returning the
    residual as witness.
    """
    if h.star is not None:
        r1, r2 = star_residuals(h.star.alpha1, h.star.alpha2)
        if not r1.is_zero():
            raise ValueError(f"star fails the order-1 associativity residual: {r1!r}")
        if r2 is not None and not r2.is_zero():
            raise ValueError(f"star fails the order-2 associativity residual: {r2!r}")
    return l0(h), (lambda s: l1(h, s)), (lambda a, b: l2(h, a, b))


def verify_curved_axioms(
    h: HochschildComplex, betas: Iterable[CochainSeries]
) -> CheckResult:
    """l1(l0) = 0 exactly, l1^2 = l2(l0, .) and the derivation law on betas."""
    curv = l0(h)
    if not l1(h, curv).is_zero():
        return CheckResult(False, witness="l1(l0) != 0")
    betas = list(betas)
    for b in betas:
        lhs = l1(h, l1(h, b))
        rhs = l2(h, curv, b)
        if lhs != rhs:
            return CheckResult(False, witness=("l1^2 != l2(l0,.)", b))
    for b1, b2 in itertools.combinations(betas, 2):
        lhs = l1(h, l2(h, b1, b2))
        sign = -1 if _series_arity(b1) % 2 else 1
        rhs = l2(h, l1(h, b1), b2) + l2(h, b1, l1(h, b2)).scale(sign)
        if lhs != rhs:
            return CheckResult(False, witness=("derivation law", b1, b2))
    return CheckResult(True)


def _series_arity(s: CochainSeries) -> int:
    return s.coeffs[0].arity


def mc_residual(h: HochschildComplex, alpha: CochainSeries) -> CochainSeries:
    """l_0 + l_1(alpha) + 1/2 l_2(alpha, alpha), order by order.

    Cross-validated against the appendix forms of the module equations: the
    order-1 residual is d alpha_1 - alpha_1^X (x) id, the order-2 residual is
    d alpha_2 - [alpha_2^X (x) id + alpha_1(alpha_1^X(a,b), e)
    - alpha_1(a, alpha_1(b, e))].
    """
    res = l0(h) + l1(h, alpha) + l2(h, alpha, alpha).scale(Fraction(1, 2))
    appendix = _appendix_residual(h, alpha)
    if appendix is not None and res != appendix:
        raise AssertionError("Maurer-Cartan residual disagrees with the appendix forms")
    return res


def _appendix_residual(h: HochschildComplex, alpha: CochainSeries) -> CochainSeries | None:
    if h.order != 2 or _series_arity(alpha) != 1:
        return None
    a1, a2 = alpha.coeffs[1], alpha.coeffs[2]
    zero2 = h.zero_cochain(2)
    out1 = d_hoch(a1)
    out2 = d_hoch(a2)
    s1 = h.star_component(1)
    s2 = h.star_component(2)
    if s1 is not None:
        out1 = out1 - ring_to_module(s1, h.ideal, h.rank)
        out2 = out2 - a1.insert_ring_cochain(s1, 0)
    if s2 is not None:
        out2 = out2 - ring_to_module(s2, h.ideal, h.rank)
    out2 = out2 + a1.compose_module(a1)
    return CochainSeries(2, [zero2, out1, out2])


@dataclass
class TwistedComplex:
    """The alpha-twisted complex: l0 dies, l1 gains a bracket term."""

    base: HochschildComplex
    alpha: CochainSeries

    def l1(self, s: CochainSeries) -> CochainSeries:
        return l1(self.base, s) + l2(self.base, self.alpha, s)

    def l2(self, a: CochainSeries, b: CochainSeries) -> CochainSeries:
        return l2(self.base, a, b)


def twist(h: HochschildComplex, alpha: CochainSeries) -> TwistedComplex:
    """Twist by a Maurer-Cartan element; rejects non-MC input."""
    res = mc_residual(h, alpha)
    if not res.is_zero():
        raise ValueError("twist requires a Maurer-Cartan element; residual is nonzero")
    return TwistedComplex(h, alpha)


# -- bounded-degree cohomology -------------------------------------------


@dataclass
class CohomologyResult:
    degree: int
    dim: int
    caps: tuple[int, int, int]
    representatives: list
    eps_order: int  # 0 for the flat rational case


def cochain_basis_keys(
    h: HochschildComplex, arity: int, ord_cap: int, deg_cap: int
) -> list:
    """Deterministic basis of the capped cochain space in one arity.

    A basis label is (ring multi-indices, module multi-index, (i, j), coeff
    monomial); each stands for the one-term cochain with coefficient matrix
    monomial * E_{ij}.  The derivative cap bounds the TOTAL order summed over
    all slots: d_Hoch preserves that grading, which is what keeps the capped
    complex an honest complex (graded pieces are exact where the full
    complex is).
    """
    nv = h.nvars
    yv = sorted(frozenset(range(nv)) - h.ideal.coordinate_vars)
    monos = sorted(iter_multi_indices(nv, deg_cap, yv))
    out = []
    for f in sorted(iter_multi_indices(nv, ord_cap, yv)):
        budget = ord_cap - sum(f)
        for ds in _ring_slot_tuples(nv, arity, budget):
            for i in range(h.rank):
                for j in range(h.rank):
                    for m in monos:
                        out.append((ds, f, (i, j), m))
    return sorted(out)


def _ring_slot_tuples(nv: int, arity: int, budget: int):
    if arity == 0:
        yield ()
        return
    for d in iter_multi_indices(nv, budget):
        for rest in _ring_slot_tuples(nv, arity - 1, budget - sum(d)):
            yield (tuple(d),) + rest


def basis_cochain(h: HochschildComplex, label) -> Cochain:
    ds, f, (i, j), m = label
    nv = h.nvars
    rows = [[Poly.zero(nv)] * h.rank for _ in range(h.rank)]
    rows[i][j] = Poly.monomial(m)
    return Cochain(len(ds), h.ideal, h.rank, {(tuple(ds), f): mat_from_rows(rows)})


def flatten_cochain(c: Cochain) -> dict:
    """Coordinates of a cochain in the monomial basis labelling."""
    out: dict = {}
    for (ds, f), mat in c.terms.items():
        for i, row in enumerate(mat):
            for j, entry in enumerate(row):
                for m, coeff in entry.terms.items():
                    out[(ds, f, (i, j), m)] = coeff
    return out


def _within_caps(label, ord_cap: int, deg_cap: int) -> bool:
    ds, f, _ij, m = label
    if sum(sum(d) for d in ds) + sum(f) > ord_cap:
        return False
    return sum(m) <= deg_cap


def bounded_cohomology(
    h: HochschildComplex,
    degree: int,
    caps: tuple[int, int, int],
    twisted: TwistedComplex | None = None,
) -> CohomologyResult:
    """Kernel-mod-image dimensions of the capped complex in one degree.

    Flat case (no star, no twist): the differential is d_Hoch over Q.  With a
    star or a twist the differential acts on eps-truncated coordinates.  Any
    differential image escaping the caps raises CapEscapeError.
    """
    arity_cap, ord_cap, deg_cap = caps
    if degree > arity_cap:
        raise ValueError("requested degree exceeds the arity cap")
    # flat case: d_Hoch over Q (Ext-style); twisted case: l1^alpha over the
    # eps-truncated ring.  The untwisted curved l1 is not square-zero and
    # defines no cohomology.
    use_eps = twisted is not None
    eps_order = h.order if use_eps else 0

    def diff(series_or_cochain):
        if twisted is not None:
            return twisted.l1(series_or_cochain)
        return d_hoch(series_or_cochain)

    def coords(obj) -> dict:
        if use_eps:
            out = {}
            for p, c in enumerate(obj.coeffs):
                for label, v in flatten_cochain(c).items():
                    out[(label, p)] = v
            return out
        return flatten_cochain(obj)

    def lift(label):
        if use_eps:
            lab, p = label
            co = basis_cochain(h, lab)
            coeffs = [
                co if t == p else h.zero_cochain(len(lab[0])) for t in range(h.order + 1)
            ]
            return CochainSeries(h.order, coeffs)
        return basis_cochain(h, label)

    def space(arity) -> list:
        base = cochain_basis_keys(h, arity, ord_cap, deg_cap)
        if use_eps:
            return [(lab, p) for lab in base for p in range(h.order + 1)]
        return base

    cols_n = space(degree)
    matrix_n: dict = {}  # rows of d_n, keyed by output coordinate
    for ci, label in enumerate(cols_n):
        img = diff(lift(label))
        for out_label, v in coords(img).items():
            matrix_n.setdefault(out_label, {})[ci] = v
    rank_n = linalg.rank(matrix_n.values())
    dim_ker = len(cols_n) - rank_n

    rank_im = 0
    image_rows = []
    if degree >= 1:
        cols_prev = space(degree - 1)
        cap_space = set(cols_n)
        image_cols: dict = {}
        for ci, label in enumerate(cols_prev):
            img = diff(lift(label))
            vec = coords(img)
            for out_label in vec:
                if out_label not in cap_space:
                    raise CapEscapeError(
                        "differential image leaves the capped space; raise caps",
                        offender=out_label,
                    )
            image_rows.append(vec)
        rank_im = linalg.rank(image_rows)

    dim = dim_ker - rank_im
    reps = _representatives(cols_n, matrix_n, image_rows, limit=5)
    return CohomologyResult(degree, dim, caps, reps, eps_order)


def _representatives(cols_n, matrix_n, image_rows, limit: int):
    """A few kernel vectors reduced against the image, for reporting."""
    kernel = linalg.kernel_basis(len(cols_n), matrix_n.values())
    span = linalg.span(image_rows)  # rows stay keyed by basis labels
    reps = []
    for vec in kernel:
        labelled = {cols_n[i]: v for i, v in vec.items()}
        red = linalg.reduce_mod_span(labelled, span)
        if red:
            reps.append(red)
        if len(reps) >= limit:
            break
    return reps


# -- Lemma A.2 style antisymmetrization check ------------------------------


def antisym_cocycle_check(beta: Cochain, ideal: Ideal) -> CheckResult:
    """Ring-linearity of the antisymmetrization on the ideal slots.

    Precondition: beta is a Hochschild cocycle (arity 2 or 3).  The first two
    ring slots are restricted to ideal multiples; linearity holds iff the
    restricted operator keeps no derivatives in those slots or the module
    slot, which is a structural test on the normal form.
    """
    if beta.arity not in (2, 3):
        raise ValueError("antisymmetrization check applies to arity 2 or 3")
    if not d_hoch(beta).is_zero():
        raise ValueError("beta is not a Hochschild cocycle")
    anti = beta - beta.permute_ring_slots((1, 0) + tuple(range(2, beta.arity)))
    gens = sorted(ideal.coordinate_vars)
    nv = ideal.nvars
    for g in gens:
        for hgen in gens:
            t = anti.mult_ring_slot_by(0, Poly.variable(g, nv)).mult_ring_slot_by(
                1, Poly.variable(hgen, nv)
            )
            for (ds, f), _mat in t.terms.items():
                if sum(ds[0]) or sum(ds[1]) or sum(f):
                    return CheckResult(False, witness=(g, hgen, (ds, f)))
    return CheckResult(True)
