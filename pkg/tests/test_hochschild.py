"""Hochschild differential, Gerstenhaber bracket, curved axioms, cohomology."""

import random
from fractions import Fraction

import pytest

from coisoquant.diffop import Cochain, CochainSeries, RingCochain, mat_from_rows, meye
from coisoquant.hochschild import (
    CapEscapeError,
    HochschildComplex,
    antisym_cocycle_check,
    bounded_cohomology,
    cochain_basis_keys,
    curved_brackets,
    d_hoch,
    gerstenhaber,
    l0,
    l1,
    l2,
    mc_residual,
    ring_to_module,
    star_residuals,
    twist,
    verify_curved_axioms,
)
from coisoquant.poisson import Bivector, anchor
from coisoquant.polyalg import FreeModule, Ideal, Poly, parse_poly
from coisoquant.quantize import moyal, solve_first_order, solve_second_order, zero_star

from helpers import QP, lagrangian_ideal, poly_qp, random_cochain, random_poly, random_vector

XY = ["x", "y"]


def poly_xy(t):
    return parse_poly(t, XY)


def lagrangian_setup():
    P = Bivector(2, {(0, 1): poly_qp("1")})
    ideal = lagrangian_ideal()
    data = anchor(P, ideal)
    star = moyal(P)
    return data, star, HochschildComplex.with_star(ideal, 1, star)


def oracle_alpha1(ideal):
    """Hand-derived Moyal-Lagrangian module action at order one."""
    return Cochain(
        1,
        ideal,
        1,
        {
            (((0, 1),), (1, 0)): mat_from_rows([[poly_qp("-1")]]),
            (((1, 1),), (0, 0)): mat_from_rows([[Poly.const(2, Fraction(-1, 2))]]),
        },
    )


# -- differential and bracket -------------------------------------------


def test_d_hoch_arity_zero_formula():
    i = lagrangian_ideal()
    phi = Cochain.from_matrix(mat_from_rows([[poly_qp("q^2")]]), i)
    d = d_hoch(phi)
    rng = random.Random(2)
    for _ in range(10):
        a = random_poly(rng, 2)
        e = (random_poly(rng, 2, support=[0]),)
        lhs = d.apply([a], e)[0]
        a_red = a.subst_zero(frozenset({1}))
        want = (a_red * phi.apply([], e)[0] - phi.apply([], (a_red * e[0],))[0]).subst_zero(
            frozenset({1})
        )
        assert lhs == want


def test_d_hoch_squares_to_zero():
    rng = random.Random(5)
    i = lagrangian_ideal()
    for _ in range(8):
        c = random_cochain(rng, 1, i, 1, max_ord=2, max_deg=2)
        assert d_hoch(d_hoch(c)).is_zero()


def test_d_hoch_of_module_action_is_star_defect():
    # (A.5): d alpha_1 = alpha_1^X (x) id for the solved module action
    data, star, h = lagrangian_setup()
    a1 = oracle_alpha1(h.ideal)
    assert d_hoch(a1) == ring_to_module(star.alpha1, h.ideal, 1)


def test_gerstenhaber_square_of_odd_cochain():
    rng = random.Random(7)
    i = lagrangian_ideal()
    c = random_cochain(rng, 1, i, 1)
    assert gerstenhaber(c, c) == c.compose_module(c).scale(2)


def test_gerstenhaber_graded_antisymmetry():
    rng = random.Random(11)
    i = lagrangian_ideal()
    for k, l in ((0, 1), (1, 1), (1, 2), (2, 2)):
        c1 = random_cochain(rng, k, i, 1, max_ord=1, max_deg=1)
        c2 = random_cochain(rng, l, i, 1, max_ord=1, max_deg=1)
        sign = -1 if (k * l) % 2 else 1
        assert gerstenhaber(c1, c2) == gerstenhaber(c2, c1).scale(-sign)


def test_gerstenhaber_graded_jacobi():
    rng = random.Random(13)
    i = lagrangian_ideal()
    for _ in range(3):
        a = random_cochain(rng, 1, i, 1, max_ord=1, max_deg=1, nterms=1)
        b = random_cochain(rng, 2, i, 1, max_ord=1, max_deg=1, nterms=1)
        c = random_cochain(rng, 1, i, 1, max_ord=1, max_deg=1, nterms=1)
        ka, kb, kc = a.arity, b.arity, c.arity
        lhs = gerstenhaber(a, gerstenhaber(b, c))
        mid = gerstenhaber(gerstenhaber(a, b), c)
        sign = -1 if (ka * kb) % 2 else 1
        rhs = mid + gerstenhaber(b, gerstenhaber(a, c)).scale(sign)
        assert lhs == rhs


# -- star residuals and curved axioms -------------------------------------


def test_star_residuals_vanish_for_moyal():
    _data, star, _h = lagrangian_setup()
    r1, r2 = star_residuals(star.alpha1, star.alpha2)
    assert r1.is_zero() and r2.is_zero()


def test_with_star_rejects_corrupt_alpha2():
    data, star, _h = lagrangian_setup()
    bad = star.alpha2 + RingCochain(2, 2, {((1, 0), (0, 0)): poly_qp("1")})

    class BadStar:
        alpha1 = star.alpha1
        alpha2 = bad
        order = 2

    with pytest.raises(ValueError):
        HochschildComplex.with_star(lagrangian_ideal(), 1, BadStar())


def test_zero_star_flat_dgla():
    i = lagrangian_ideal()
    h = HochschildComplex.with_star(i, 1, zero_star(2))
    assert l0(h).is_zero()
    rng = random.Random(17)
    c = random_cochain(rng, 1, i, 1)
    s = h.series([c], arity=1)
    assert l1(h, s) == CochainSeries(2, [d_hoch(x) for x in s.coeffs])


def test_curved_axioms_on_moyal():
    _data, _star, h = lagrangian_setup()
    rng = random.Random(19)
    betas = []
    for arity in (1, 2):
        c1 = random_cochain(rng, arity, h.ideal, 1, max_ord=1, max_deg=2, nterms=1)
        c2 = random_cochain(rng, arity, h.ideal, 1, max_ord=1, max_deg=2, nterms=1)
        betas.append(CochainSeries(2, [c1, c2, random_cochain(rng, arity, h.ideal, 1, max_ord=1, max_deg=1, nterms=1)]))
    assert verify_curved_axioms(h, betas)


def test_curved_brackets_reject_bad_star():
    data, star, _h = lagrangian_setup()

    class BadStar:
        alpha1 = star.alpha1 + RingCochain(2, 2, {((1, 0), (0, 0)): poly_qp("q")})
        alpha2 = star.alpha2
        order = 2

    h = HochschildComplex(lagrangian_ideal(), 1, BadStar())
    with pytest.raises(ValueError):
        curved_brackets(h)


# -- Maurer-Cartan residual and twist -------------------------------------


def test_mc_residual_commutative_zero():
    i = lagrangian_ideal()
    h = HochschildComplex.with_star(i, 1, zero_star(2))
    alpha = h.series([Cochain.zero(1, i, 1)], arity=1)
    assert mc_residual(h, alpha).is_zero()


def test_mc_residual_vanishes_for_solved_module():
    data, star, h = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, h.ideal))
    d2 = solve_second_order(d1, star, data)
    assert mc_residual(h, d2.series(h)).is_zero()


def test_mc_residual_detects_corrupted_alpha2():
    data, star, h = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, h.ideal))
    d2 = solve_second_order(d1, star, data)
    junk = Cochain(1, h.ideal, 1, {(((1, 0),), (0, 0)): meye(1, 2)})
    bad = h.series([d2.alpha1, d2.alpha2 + junk], arity=1)
    res = mc_residual(h, bad)
    assert res.coeffs[1].is_zero()
    # the eps^2 residual is exactly the cocycle defect of the corruption
    assert res.coeffs[2] == d_hoch(junk)


def test_twist_requires_mc_and_squares_to_zero():
    data, star, h = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, h.ideal))
    d2 = solve_second_order(d1, star, data)
    alpha = d2.series(h)
    tw = twist(h, alpha)
    rng = random.Random(23)
    for arity in (0, 1):
        beta = h.series(
            [random_cochain(rng, arity, h.ideal, 1, max_ord=1, max_deg=1, nterms=1)],
            arity=arity,
        )
        assert tw.l1(tw.l1(beta)).is_zero()
    junk = Cochain(1, h.ideal, 1, {(((1, 0),), (0, 0)): meye(1, 2)})
    with pytest.raises(ValueError):
        twist(h, h.series([d2.alpha1 + junk, d2.alpha2], arity=1))


def test_twist_by_zero_is_identity():
    i = lagrangian_ideal()
    h = HochschildComplex.with_star(i, 1, zero_star(2))
    rng = random.Random(29)
    tw = twist(h, h.series([Cochain.zero(1, i, 1)], arity=1))
    beta = h.series([random_cochain(rng, 1, i, 1, max_ord=1, max_deg=1)], arity=1)
    assert tw.l1(beta) == l1(h, beta)


# -- bounded cohomology -----------------------------------------------------


def wedge_truncation_dims(n_gens: int, rank: int, deg_cap: int, yvars: int):
    """Independent enumeration of wedge^k N(E) truncation dimensions.

    Counts generators-choose-k times rank^2 times the monomials of degree
    <= deg_cap in the Y-coordinates; pure combinatorics, no cochains.
    """
    from math import comb

    monos = comb(deg_cap + yvars, yvars)  # monomials of degree <= cap in yvars vars

    def dim(k):
        return comb(n_gens, k) * rank * rank * monos

    return dim


def test_lemma_410_dimension_table_rank1():
    i = Ideal(2, [poly_xy("y")])
    h = HochschildComplex(i, 1)
    dim = wedge_truncation_dims(n_gens=1, rank=1, deg_cap=2, yvars=1)
    got = [bounded_cohomology(h, d, (2, 2, 2)).dim for d in (0, 1, 2)]
    assert got == [dim(0), dim(1), dim(2)] == [3, 3, 0]


def test_lemma_410_dimension_table_rank2():
    i = Ideal(2, [poly_xy("y")])
    h = HochschildComplex(i, 2)
    dim = wedge_truncation_dims(n_gens=1, rank=2, deg_cap=2, yvars=1)
    got = [bounded_cohomology(h, d, (2, 2, 2)).dim for d in (0, 1, 2)]
    assert got == [dim(0), dim(1), dim(2)] == [12, 12, 0]


def test_twisted_hp0_is_foliation_flat_sections():
    # HP^0 of the quantized Lagrangian module over k[eps]/eps^3: the
    # recursion forces phi_0, phi_1 flat along the foliation (kernel of
    # [gamma(pbar), .] = -d_q on sections), while the top eps power admits
    # any O_Y-linear section.  Oracle: count both spaces directly.
    data, star, h = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, h.ideal))
    d2 = solve_second_order(d1, star, data)
    tw = twist(h, d2.series(h))
    res = bounded_cohomology(h, 0, (2, 2, 2), twisted=tw)
    gamma_op = d2.connection().ops[1]
    flat_dim = 0
    linear_dim = 0
    for d in range(3):  # O_Y-linear sections = multiplication by q^d, d <= 2
        v = (Poly.monomial((d, 0)),)
        linear_dim += 1
        commutator = gamma_op.apply([], (v[0] * Poly.const(2, 1),))[0] - v[0] * gamma_op.apply(
            [], (Poly.const(2, 1),)
        )[0]
        if commutator.is_zero():
            flat_dim += 1
    assert flat_dim == 1 and linear_dim == 3
    assert res.dim == h.order * flat_dim + linear_dim == 5
    # every representative at eps powers below the top is a flat section
    for rep in res.representatives:
        for (label, power), _v in rep.items():
            if power < h.order:
                ds, f, _ij, m = label
                assert sum(m) == 0  # constants only


def test_cap_escape_detected_for_twisted_degree_one():
    data, star, h = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, h.ideal))
    d2 = solve_second_order(d1, star, data)
    tw = twist(h, d2.series(h))
    with pytest.raises(CapEscapeError):
        bounded_cohomology(h, 1, (2, 2, 2), twisted=tw)


def test_basis_keys_total_order_semantics():
    i = lagrangian_ideal()
    h = HochschildComplex(i, 1)
    keys = cochain_basis_keys(h, 2, 1, 0)
    for ds, f, _ij, m in keys:
        assert sum(sum(d) for d in ds) + sum(f) <= 1
        assert sum(m) == 0


# -- Lemma A.2 antisymmetrization -----------------------------------------


def test_antisym_check_symmetric_cocycle():
    i = lagrangian_ideal()
    # beta(a,b,e) = (d_q a)(d_q b) e is a symmetric cocycle
    beta = Cochain(2, i, 1, {(((1, 0), (1, 0)), (0, 0)): meye(1, 2)})
    assert antisym_cocycle_check(beta, i)


def test_antisym_check_star_defect():
    data, star, h = lagrangian_setup()
    beta = ring_to_module(star.alpha1, h.ideal, 1)
    assert antisym_cocycle_check(beta, h.ideal)


def test_antisym_check_rejects_non_cocycle():
    i = lagrangian_ideal()
    bad = Cochain(2, i, 1, {(((1, 0), (0, 0)), (1, 0)): mat_from_rows([[poly_qp("q")]])})
    assert not d_hoch(bad).is_zero()
    with pytest.raises(ValueError):
        antisym_cocycle_check(bad, i)
