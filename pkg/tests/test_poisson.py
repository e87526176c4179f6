"""Bivectors, Jacobi, coisotropy, anchor, and the conormal bracket."""

import random

import pytest

from coisoquant.diffop import ScalarDiffOp
from coisoquant.poisson import (
    Bivector,
    anchor,
    anchor_of_combo,
    coisotropy_check,
    conormal_bracket,
    conormal_class,
    schouten_jacobi,
)
from coisoquant.polyalg import Ideal, Poly, parse_poly

from helpers import QP, X4, poly_qp, poly_x4, lagrangian_ideal, rank2_ideal

X3 = ["x1", "x2", "x3"]


def poly_x3(text):
    return parse_poly(text, X3)


def qp_bivector():
    return Bivector(2, {(0, 1): poly_qp("1")})


def so3_bivector():
    # P^{12} = x3, P^{13} = -x2, P^{23} = x1
    return Bivector(
        3,
        {
            (0, 1): poly_x3("x3"),
            (0, 2): poly_x3("-x2"),
            (1, 2): poly_x3("x1"),
        },
    )


def test_bivector_antisymmetry_enforced():
    P = qp_bivector()
    assert P.entry(1, 0) == poly_qp("-1")
    assert P.entry(0, 0).is_zero()
    with pytest.raises(ValueError):
        Bivector(2, {(0, 0): poly_qp("q")})


def test_bracket_of_coordinates():
    P = qp_bivector()
    assert P.bracket(poly_qp("q"), poly_qp("p")) == poly_qp("1")
    assert P.bracket(poly_qp("p"), poly_qp("q")) == poly_qp("-1")


def test_schouten_jacobi_constant_and_so3():
    assert schouten_jacobi(qp_bivector())
    assert schouten_jacobi(so3_bivector())


def test_schouten_jacobi_failure_with_witness():
    P = Bivector(3, {(0, 1): poly_x3("x1"), (0, 2): poly_x3("x3^2")})
    res = schouten_jacobi(P)
    assert not res
    triple, jac = res.witness
    assert triple == (0, 1, 2)
    # frozen expansion of the cyclic sum on (x1, x2, x3)
    assert jac == poly_x3("-x3^2")


def test_coisotropy_lagrangian_true():
    assert coisotropy_check(qp_bivector(), lagrangian_ideal())


def test_coisotropy_constant_obstruction():
    P = Bivector(4, {(0, 1): poly_x4("1")})
    res = coisotropy_check(P, rank2_ideal())
    assert not res
    (a, b), nf = res.witness
    assert (a, b) == (0, 1)
    assert nf == poly_x4("1")


def test_coisotropy_disjoint_pairing_true():
    P = Bivector(4, {(0, 2): poly_x4("1")})
    assert coisotropy_check(P, Ideal(4, [poly_x4("x1"), poly_x4("x2")]))


def test_anchor_lagrangian():
    data = anchor(qp_bivector(), lagrangian_ideal())
    # p(pbar) = -d_q on Y
    assert data.anchor[1] == ScalarDiffOp(2, {(1, 0): poly_qp("-1")}, allowed=frozenset({0}))
    assert data.gens == (1,)


def test_anchor_zero_bivector():
    data = anchor(Bivector.zero(2), lagrangian_ideal())
    assert data.anchor[1].is_zero()


def test_anchor_rank2_example():
    P = Bivector(4, {(0, 2): poly_x4("1")})
    data = anchor(P, rank2_ideal())
    assert data.anchor[0] == ScalarDiffOp(4, {(0, 0, 1, 0): poly_x4("1")}, allowed=frozenset({2, 3}))
    assert data.anchor[1].is_zero()


def test_anchor_rejects_non_coisotropic():
    P = Bivector(4, {(0, 1): poly_x4("1")})
    with pytest.raises(ValueError):
        anchor(P, rank2_ideal())


def test_anchor_matrix_and_adjoint_convention():
    P = Bivector(4, {(0, 2): poly_x4("1"), (1, 3): poly_x4("1")})
    data = anchor(P, rank2_ideal())
    mat = data.anchor_matrix()
    assert mat[0][0] == poly_x4("1") and mat[1][1] == poly_x4("1")
    adj = data.adjoint_matrix()
    assert adj[0][0] == poly_x4("1") and adj[1][0].is_zero()


def test_conormal_bracket_antisymmetry_trivial_cases():
    data = anchor(qp_bivector(), lagrangian_ideal())
    assert conormal_bracket(data, poly_qp("p"), poly_qp("p")) == {}
    P = Bivector(4, {(0, 2): poly_x4("1")})
    d2 = anchor(P, rank2_ideal())
    assert conormal_bracket(d2, poly_x4("x1"), poly_x4("x2")) == {}


def test_conormal_bracket_log_canonical_class():
    # P^{12} = x1 on k[x1,x2,x3]: {x1bar, x2bar} = x1bar
    P = Bivector(3, {(0, 1): poly_x3("x1")})
    assert schouten_jacobi(P)
    ideal = Ideal(3, [poly_x3("x1"), poly_x3("x2")])
    data = anchor(P, ideal)
    combo = conormal_bracket(data, poly_x3("x1"), poly_x3("x2"))
    assert combo == {0: poly_x3("1")}


def test_conormal_bracket_rejects_non_members():
    data = anchor(qp_bivector(), lagrangian_ideal())
    with pytest.raises(ValueError):
        conormal_bracket(data, poly_qp("q"), poly_qp("p"))


def test_conormal_class_drops_square_terms():
    ideal = rank2_ideal()
    rep = poly_x4("x1*x3 + x1*x2 + x2^2")
    assert conormal_class(rep, ideal) == {0: poly_x4("x3")}


def test_conormal_jacobi_so3_origin():
    # I = (x1,x2,x3): the conormal bracket is the so(3) Lie algebra; Jacobi mod I^2
    P = so3_bivector()
    ideal = Ideal(3, [poly_x3("x1"), poly_x3("x2"), poly_x3("x3")])
    data = anchor(P, ideal)
    gens = [poly_x3("x1"), poly_x3("x2"), poly_x3("x3")]

    def as_rep(combo):
        out = Poly.zero(3)
        for g, c in combo.items():
            out = out + c * gens[g]
        return out

    for i in range(3):
        for j in range(3):
            for k in range(3):
                jac = {}
                for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
                    inner = conormal_bracket(data, gens[b], gens[c])
                    outer = conormal_bracket(data, gens[a], as_rep(inner)) if inner else {}
                    for g, v in outer.items():
                        jac[g] = jac.get(g, Poly.zero(3)) + v
                assert all(v.is_zero() for v in jac.values())


def test_anchor_is_lie_map_for_constant_bivector():
    # constant P: brackets vanish and constant vector fields commute
    P = Bivector(4, {(0, 2): poly_x4("1"), (1, 3): poly_x4("1")})
    data = anchor(P, rank2_ideal())
    for g in data.gens:
        for h in data.gens:
            if g >= h:
                continue
            combo = data.bracket_combo(g, h)
            lhs = anchor_of_combo(data, combo)
            rhs = data.anchor[g].commutator(data.anchor[h])
            assert lhs == rhs
