"""Star products and the constructive module-deformation solvers.

First- and second-order module deformations are produced by solving the
local equations exactly: the defect of each order is checked against the
two solvability conditions (vanishing on ideal slots, cocycle identity) and
then resolved by a bounded-ansatz linear solve over the rationals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg
from .connection import (
    Connection,
    NormalCochain,
    check_symbols,
    connection_from_cochain,
    curvature,
    dual_connection,
    normal_differential,
    tensor_connection,
)
from .diffop import (
    Cochain,
    CochainSeries,
    Matrix,
    RingCochain,
    iter_multi_indices,
    mat_from_rows,
    meye,
    mis_zero,
    mneg,
    mscale_poly,
    mzero,
)
from .hochschild import (
    HochschildComplex,
    basis_cochain,
    cochain_basis_keys,
    d_hoch,
    flatten_cochain,
    mc_residual,
    ring_to_module,
)
from .poisson import Bivector, CheckResult, CoisotropicData, coisotropy_check
from .polyalg import FreeModule, Ideal, Poly, normal_form


class ObstructionError(Exception):
    """A mathematical obstruction: the deformation does not exist."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class CapExhaustedError(Exception):
    """No solution within the configured ansatz caps; raise the caps."""


class HKRConditionError(ObstructionError):
    """The defect violates a solvability condition of the division lemma."""


DEFAULT_CAPS = (4, 6)  # (max derivative order, max coefficient degree)


@dataclass
class StarProduct:
    """Second-order star product data; the gluing corrections are assumed zero.

    alpha2 may be None for an order-1 product.  symmetric2 records whether
    the order-2 term is symmetric, which is what makes the trivial line
    bundle an admissible default.
    """

    alpha1: RingCochain
    alpha2: RingCochain | None
    symmetric2: bool
    order: int = 2

    @property
    def nvars(self) -> int:
        return self.alpha1.nvars


def zero_star(nvars: int, order: int = 2) -> StarProduct:
    return StarProduct(
        RingCochain.zero(2, nvars), RingCochain.zero(2, nvars), True, order
    )


def moyal(P: Bivector, order: int = 2) -> StarProduct:
    """The Moyal product of a constant bivector, truncated at order two.

    alpha_1(a,b) = 1/2 P(da, db); alpha_2 = 1/8 P(x)P applied slotwise.  The
    associativity residuals are verified exactly before returning.
    """
    if order != 2:
        raise ValueError("only order-2 truncations are implemented")
    if not P.is_constant():
        raise ValueError("no quantization formula for nonconstant bivectors here")
    nv = P.nvars
    half = Fraction(1, 2)
    t1: dict = {}
    for i in range(nv):
        for j in range(nv):
            c = P.entry(i, j)
            if c.is_zero():
                continue
            key = (_unit(nv, i), _unit(nv, j))
            t1[key] = t1.get(key, Poly.zero(nv)) + c.scale(half)
    alpha1 = RingCochain(2, nv, t1)
    t2: dict = {}
    eighth = Fraction(1, 8)
    for i in range(nv):
        for j in range(nv):
            pij = P.entry(i, j)
            if pij.is_zero():
                continue
            for k in range(nv):
                for l in range(nv):
                    pkl = P.entry(k, l)
                    if pkl.is_zero():
                        continue
                    key = (_unit2(nv, i, k), _unit2(nv, j, l))
                    add = (pij * pkl).scale(eighth)
                    t2[key] = t2.get(key, Poly.zero(nv)) + add
    alpha2 = RingCochain(2, nv, t2)
    star = StarProduct(alpha1, alpha2, symmetric2=_is_symmetric(alpha2), order=2)
    ok = star_assoc_check(star)
    if not ok:
        raise AssertionError("Moyal construction failed its associativity residuals")
    return star


def _is_symmetric(rc: RingCochain) -> bool:
    return rc == rc.transpose_slots(0, 1)


def _unit(nv: int, i: int) -> tuple[int, ...]:
    m = [0] * nv
    m[i] = 1
    return tuple(m)


def _unit2(nv: int, i: int, j: int) -> tuple[int, ...]:
    m = [0] * nv
    m[i] += 1
    m[j] += 1
    return tuple(m)


def star_assoc_check(star: StarProduct) -> CheckResult:
    """Exact check of both associativity residuals; witness is the residual."""
    from .hochschild import star_residuals

    r1, r2 = star_residuals(star.alpha1, star.alpha2)
    if not r1.is_zero():
        return CheckResult(False, witness=("order1", r1))
    if r2 is not None and not r2.is_zero():
        return CheckResult(False, witness=("order2", r2))
    return CheckResult(True)


def antisymmetrization(star: StarProduct) -> RingCochain:
    """A_2(a,b) = alpha_2(a,b) - alpha_2(b,a); the order-2 obstruction cochain."""
    if star.alpha2 is None:
        return RingCochain.zero(2, star.nvars)
    return star.alpha2 - star.alpha2.transpose_slots(0, 1)


# -- the division-lemma solver -------------------------------------------


@dataclass
class HKRSolution:
    cochain: Cochain
    nullity: int
    caps_used: tuple[int, int]


def hkr_solve(
    defect: Cochain,
    data: CoisotropicData,
    caps: tuple[int, int] = DEFAULT_CAPS,
) -> HKRSolution:
    """Solve the division-lemma equations for an unknown one arity lower.

    Arity-1 defect R: find beta with beta(ae) - a beta(e) = R(a, e).
    Arity-2 defect G: find rho with a rho(b,e) - rho(ab,e) + rho(a,be) = G.
    (The first is -d_Hoch, the second +d_Hoch.)

    Checks the two solvability conditions first, exactly, on the normal
    forms: the defect must vanish on ideal slots (arity 1) or be symmetric
    on ideal pairs (arity 2), and must be a Hochschild cocycle.  The answer
    is produced at the defect's own grades with free variables pinned to
    zero, which is the gauge-fixing policy (d_Hoch preserves both the total
    derivative order and the coefficient degree).
    """
    if defect.arity not in (1, 2):
        raise ValueError("the solver handles arity-1 and arity-2 defects")
    if not d_hoch(defect).is_zero():
        raise HKRConditionError("defect is not a Hochschild cocycle", witness="cocycle")
    nv = defect.nvars
    gens = sorted(defect.ideal.coordinate_vars)
    if defect.arity == 1:
        for g in gens:
            bad = defect.mult_ring_slot_by(0, Poly.variable(g, nv))
            if not bad.is_zero():
                raise HKRConditionError(
                    "defect does not vanish on ideal slots", witness=("ideal-slot", g, bad)
                )
    else:
        for g in gens:
            for hgen in gens:
                u = defect.mult_ring_slot_by(0, Poly.variable(g, nv)).mult_ring_slot_by(
                    1, Poly.variable(hgen, nv)
                )
                v = defect.mult_ring_slot_by(0, Poly.variable(hgen, nv)).mult_ring_slot_by(
                    1, Poly.variable(g, nv)
                ).permute_ring_slots((1, 0))
                if u != v:
                    raise HKRConditionError(
                        "defect is not symmetric on ideal pairs",
                        witness=("ideal-symmetry", g, hgen, u - v),
                    )
    # d_Hoch is graded by total derivative order and by coefficient degree,
    # so the unknown can be found at exactly the defect's grades: any solution
    # projects grade-by-grade onto one supported there.
    total = max((sum(sum(d) for d in ds) + sum(f) for (ds, f) in defect.terms), default=0)
    deg = defect.max_coeff_degree()
    max_ord, max_deg = caps
    if total > max_ord or deg > max_deg:
        raise CapExhaustedError(
            f"defect needs derivative order {total} and degree {deg}, "
            f"caps allow ({max_ord}, {max_deg})"
        )
    h = HochschildComplex(defect.ideal, defect.rank)
    signed = defect.scale(-1) if defect.arity == 1 else defect
    rhs = flatten_cochain(signed)
    labels = cochain_basis_keys(h, defect.arity - 1, total, deg)
    rows: dict = {}
    for lab in labels:
        img = flatten_cochain(d_hoch(basis_cochain(h, lab)))
        for out_label, v in img.items():
            rows.setdefault(out_label, {})[lab] = v
    for out_label in rhs:
        rows.setdefault(out_label, {})
    equations = [
        (row, rhs.get(out_label, Fraction(0)))
        for out_label, row in sorted(rows.items())
    ]
    sol = linalg.solve(labels, equations)
    if sol is None:
        # the division lemma guarantees a solution once the conditions hold,
        # so an inconsistent graded system means the caps story cannot help
        raise CapExhaustedError(
            "graded system is inconsistent at the defect's own grades"
        )
    acc = Cochain.zero(defect.arity - 1, defect.ideal, defect.rank)
    for lab, v in sol.values.items():
        if v:
            acc = acc + basis_cochain(h, lab).scale(v)
    return HKRSolution(acc, sol.nullity, (total, deg))


# -- module deformations ---------------------------------------------------


@dataclass
class ModuleDeformation:
    """Order 1 or 2 module deformation with its derived connection."""

    order: int
    alpha1: Cochain
    alpha2: Cochain | None
    data: CoisotropicData
    rank: int
    star: StarProduct
    nullity: int = 0
    caps_used: tuple[int, int] = DEFAULT_CAPS

    @property
    def ideal(self) -> Ideal:
        return self.data.ideal

    def connection(self) -> Connection:
        return connection_from_cochain(
            self.alpha1, Fraction(1, 2), Fraction(1), self.data
        )

    def series(self, h: HochschildComplex) -> CochainSeries:
        corrections = [self.alpha1]
        if self.alpha2 is not None:
            corrections.append(self.alpha2)
        return h.series(corrections, arity=1)

    def shifted_by(self, zeta: NormalCochain) -> "ModuleDeformation":
        """First-order reshaping by an O_Y-linear normal cochain of degree 1."""
        if zeta.degree != 1:
            raise ValueError("shifts are degree-1 normal cochains")
        nv = self.ideal.nvars
        extra = Cochain.zero(1, self.ideal, self.rank)
        for (g,), mat in zeta.entries.items():
            extra = extra + Cochain(
                1, self.ideal, self.rank, {((_unit(nv, g),), (0,) * nv): mat}
            )
        return ModuleDeformation(
            1, self.alpha1 + extra, None, self.data, self.rank, self.star
        )


def solve_first_order(
    star: StarProduct,
    data: CoisotropicData,
    module: FreeModule,
    caps: tuple[int, int] = DEFAULT_CAPS,
) -> ModuleDeformation:
    """Construct the first-order module action correction.

    Raises ObstructionError with the coisotropy witness when the subvariety
    is not coisotropic (no deformation exists), CapExhaustedError when the
    ansatz caps are too small.
    """
    co = coisotropy_check(star_bivector_guard(star, data), data.ideal)
    if not co:
        raise ObstructionError("subvariety is not coisotropic", witness=co.witness)
    defect = ring_to_module(star.alpha1, data.ideal, module.rank)
    sol = hkr_solve(defect, data, caps)
    return ModuleDeformation(
        1, sol.cochain, None, data, module.rank, star, sol.nullity, sol.caps_used
    )


def star_bivector_guard(star: StarProduct, data: CoisotropicData) -> Bivector:
    """Bivector of the order-1 term: 2 alpha_1^X(x_i, x_j) on coordinates."""
    nv = star.nvars
    entries = {}
    coords = [Poly.variable(i, nv) for i in range(nv)]
    for i in range(nv):
        for j in range(i + 1, nv):
            val = star.alpha1.evaluate([coords[i], coords[j]]) - star.alpha1.evaluate(
                [coords[j], coords[i]]
            )
            if not val.is_zero():
                entries[(i, j)] = val
    return Bivector(nv, entries)


def second_order_obstruction(
    d1: ModuleDeformation, star: StarProduct, data: CoisotropicData
) -> dict[tuple[int, int], Matrix]:
    """c(gamma)(x,y) - A_2(x,y) id on generator pairs; empty means unobstructed."""
    gamma = d1.connection()
    c = curvature(gamma, data)
    a2 = antisymmetrization(star)
    nv = star.nvars
    out = {}
    for g, h in itertools.combinations(data.gens, 2):
        val = normal_form(
            a2.evaluate([Poly.variable(g, nv), Poly.variable(h, nv)]), data.ideal
        )
        want = mscale_poly(meye(d1.rank, nv), val, data.ideal)
        diff = tuple(
            tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(c.entry(g, h), want)
        )
        if not mis_zero(diff):
            out[(g, h)] = diff
    return out


def solve_second_order(
    d1: ModuleDeformation,
    star: StarProduct,
    data: CoisotropicData,
    line: "ModuleWithConnection | None" = None,
    caps: tuple[int, int] = DEFAULT_CAPS,
) -> ModuleDeformation:
    """Extend a first-order deformation to second order, or report why not.

    The displayed curvature identity A_2(x,y) e = [gamma(x),gamma(y)]e -
    gamma({x,y})e is normative; its failure table is the obstruction witness.
    When line data is supplied the (0,1)-connection on E (x) L-dual is formed
    and its curvature is reported through the returned deformation's
    `nabla_curvature` attribute.
    """
    if star.alpha2 is None:
        raise ValueError("second order needs an order-2 star product")
    obstruction = second_order_obstruction(d1, star, data)
    if obstruction:
        raise ObstructionError(
            "curvature does not match the star antisymmetrization", witness=obstruction
        )
    defect = ring_to_module(star.alpha2, data.ideal, d1.rank)
    defect = defect + d1.alpha1.insert_ring_cochain(star.alpha1, 0)
    defect = defect - d1.alpha1.compose_module(d1.alpha1)
    sol = hkr_solve(defect, data, caps)
    d2 = ModuleDeformation(
        2, d1.alpha1, sol.cochain, data, d1.rank, star, sol.nullity, sol.caps_used
    )
    h = HochschildComplex.with_star(data.ideal, d1.rank, star)
    if not mc_residual(h, d2.series(h)).is_zero():
        raise AssertionError("solver output fails the Maurer-Cartan residual")
    if line is not None:
        nabla = tensor_connection(
            d2.connection(), dual_connection(line.connection, data), data
        )
        d2.nabla_curvature = curvature(nabla, data)
    return d2


# -- quantization of flat modules ------------------------------------------


@dataclass
class ModuleWithConnection:
    rank: int
    connection: Connection


def default_line(data: CoisotropicData) -> ModuleWithConnection:
    """Trivial line bundle with the flat (1/2,1)-connection gamma_L = anchor."""
    ideal = data.ideal
    ops = {}
    for g in data.gens:
        ops[g] = Cochain.from_scalar_module_op(data.anchor[g], ideal, 1)
    return ModuleWithConnection(1, Connection(Fraction(1, 2), Fraction(1), ops))


def quant(
    m: ModuleWithConnection, line: ModuleWithConnection, data: CoisotropicData
) -> ModuleWithConnection:
    """Tensor with L: a foliation-flat (0,1)-module becomes quantizable."""
    if m.connection.lam != 0 or m.connection.mu != 1:
        raise ValueError("quant expects a (0,1)-connection")
    c = curvature(m.connection, data)
    if not c.is_zero():
        bad = sorted(k for k, v in c.table.items() if not mis_zero(v))[0]
        raise ObstructionError(
            "connection is not flat along the null foliation",
            witness=(bad, c.table[bad]),
        )
    return ModuleWithConnection(
        m.rank * line.rank, tensor_connection(m.connection, line.connection, data)
    )


def dequant(
    m: ModuleWithConnection, line: ModuleWithConnection, data: CoisotropicData
) -> ModuleWithConnection:
    """Tensor with the dual line: recovers the foliation-flat (0,1)-module."""
    if m.connection.lam != Fraction(1, 2) or m.connection.mu != 1:
        raise ValueError("dequant expects a (1/2,1)-connection")
    dual = dual_connection(line.connection, data)
    return ModuleWithConnection(m.rank, tensor_connection(m.connection, dual, data))


def boxtimes(
    e1: ModuleWithConnection,
    e2: ModuleWithConnection,
    line: ModuleWithConnection,
    data: CoisotropicData,
) -> ModuleWithConnection:
    """Monoidal product E1 (x) E2 (x) L-dual with the composite connection."""
    t = tensor_connection(e1.connection, e2.connection, data)
    dual = dual_connection(line.connection, data)
    return ModuleWithConnection(
        e1.rank * e2.rank * line.rank, tensor_connection(t, dual, data)
    )


def kron_swap(op: Cochain, r1: int, r2: int) -> Cochain:
    """Conjugate an operator on E1 (x) E2 by the factor swap to E2 (x) E1."""
    perm = [0] * (r1 * r2)
    for i in range(r1):
        for j in range(r2):
            perm[j * r1 + i] = i * r2 + j
    terms = {}
    for key, mat in op.terms.items():
        swapped = tuple(
            tuple(mat[perm[a]][perm[b]] for b in range(r1 * r2)) for a in range(r1 * r2)
        )
        terms[key] = swapped
    return Cochain(op.arity, op.ideal, op.rank, terms)


def boxtimes_symmetry_check(
    e1: ModuleWithConnection,
    e2: ModuleWithConnection,
    line: ModuleWithConnection,
    data: CoisotropicData,
) -> CheckResult:
    """E1 boxtimes E2 equals E2 boxtimes E1 under the Kronecker swap."""
    b12 = boxtimes(e1, e2, line, data)
    b21 = boxtimes(e2, e1, line, data)
    for g in data.gens:
        swapped = kron_swap_line(b21.connection.ops[g], e2.rank, e1.rank, line.rank)
        if swapped != b12.connection.ops[g]:
            return CheckResult(False, witness=g)
    return CheckResult(True)


def kron_swap_line(op: Cochain, r1: int, r2: int, rl: int) -> Cochain:
    """Swap the first two Kronecker factors of E1 (x) E2 (x) L."""
    n = r1 * r2 * rl
    perm = [0] * n
    for i in range(r1):
        for j in range(r2):
            for k in range(rl):
                perm[(j * r1 + i) * rl + k] = (i * r2 + j) * rl + k
    terms = {}
    for key, mat in op.terms.items():
        swapped = tuple(tuple(mat[perm[a]][perm[b]] for b in range(n)) for a in range(n))
        terms[key] = swapped
    return Cochain(op.arity, op.ideal, op.rank, terms)


def boxtimes_unit_check(
    e: ModuleWithConnection, line: ModuleWithConnection, data: CoisotropicData
) -> CheckResult:
    """E boxtimes L = E on the nose for the trivial line."""
    b = boxtimes(e, line, line, data)
    if b.rank != e.rank:
        return CheckResult(False, witness="rank")
    for g in data.gens:
        if b.connection.ops[g] != e.connection.ops[g]:
            return CheckResult(False, witness=g)
    return CheckResult(True)


# -- automorphisms and gauge ------------------------------------------------


def extend_automorphism(
    d2: ModuleDeformation,
    phi1: Matrix,
    caps: tuple[int, int] = DEFAULT_CAPS,
) -> tuple[Cochain, int]:
    """Second-order extension of the first-order automorphism 1 + eps phi1.

    Exists iff the normal differential of phi1 vanishes; the returned integer
    is the dimension of the extension torsor within the caps.
    """
    data = d2.data
    ideal = d2.ideal
    gamma = d2.connection()
    phi_norm = NormalCochain(0, data.gens, d2.rank, ideal, {(): phi1})
    dphi = normal_differential(phi_norm, gamma, data)
    if not dphi.is_zero():
        g = sorted(dphi.entries)[0]
        raise ObstructionError(
            "phi1 is not flat for the normal differential", witness=(g, dphi.entries[g])
        )
    phi_c = Cochain.from_matrix(phi1, ideal)
    defect = d2.alpha1.compose_module(phi_c) - phi_c.compose_module(d2.alpha1)
    sol = hkr_solve(defect, data, caps)
    return sol.cochain, sol.nullity


def mult_cochain(ideal: Ideal, rank: int) -> Cochain:
    """(a, e) -> a.e, the structural action as an arity-1 cochain."""
    nv = ideal.nvars
    return Cochain(1, ideal, rank, {(((0,) * nv,), (0,) * nv): meye(rank, nv)})


def _phi_list(d_order: int, phis: Sequence[Cochain], ideal: Ideal, rank: int) -> list[Cochain]:
    out = [Cochain.identity(ideal, rank)]
    out.extend(phis)
    while len(out) < d_order + 1:
        out.append(Cochain.zero(0, ideal, rank))
    return out


def _alpha_list(d: ModuleDeformation) -> list[Cochain]:
    out = [mult_cochain(d.ideal, d.rank), d.alpha1]
    if d.order >= 2:
        out.append(d.alpha2)
    return out


def gauge_check_module(
    d: ModuleDeformation,
    d_prime: ModuleDeformation,
    phis: Sequence[Cochain],
) -> CheckResult:
    """Order-by-order gauge compatibility of two deformations through phi.

    Verifies, symbolically in the cochain normal forms, the per-order
    condition phi_n(ae) + alpha_n(a,e) + sum phi_j(alpha_k(a,e)) =
    a phi_n(e) + alpha'_n(a,e) + sum alpha'_j(a, phi_k(e)) for n >= 1.
    """
    if d.order != d_prime.order:
        raise ValueError("gauge check requires matching orders")
    ideal, rank = d.ideal, d.rank
    phi = _phi_list(d.order, phis, ideal, rank)
    al = _alpha_list(d)
    alp = _alpha_list(d_prime)
    for n in range(1, d.order + 1):
        lhs = phi[n].append_module_mult() + al[n]
        rhs = phi[n].prepend_mult() + alp[n]
        for j in range(n):
            k = n - 1 - j
            lhs = lhs + phi[j].compose_module(al[k])
            rhs = rhs + alp[j].compose_module(phi[k])
        if lhs != rhs:
            return CheckResult(False, witness=(n, lhs - rhs))
    return CheckResult(True)


def conjugate_deformation(
    d: ModuleDeformation, phis: Sequence[Cochain]
) -> ModuleDeformation:
    """The deformation obtained by transporting d along 1 + eps phi_1 + ...

    Solves the gauge condition order by order for the new corrections.
    """
    ideal, rank = d.ideal, d.rank
    phi = _phi_list(d.order, phis, ideal, rank)
    al = _alpha_list(d)
    alp: list[Cochain] = [mult_cochain(ideal, rank)]
    for n in range(1, d.order + 1):
        acc = phi[n].append_module_mult() + al[n] - phi[n].prepend_mult()
        for j in range(n):
            k = n - 1 - j
            acc = acc + phi[j].compose_module(al[k])
        for j in range(1, n):
            k = n - 1 - j
            acc = acc - alp[j].compose_module(phi[k])
        # the j = 0 right-hand term is a . phi_{n-1}(e)
        acc = acc - phi[n - 1].prepend_mult()
        alp.append(acc)
    return ModuleDeformation(
        d.order,
        alp[1],
        alp[2] if d.order >= 2 else None,
        d.data,
        rank,
        d.star,
    )
