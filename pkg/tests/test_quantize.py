"""Star products, HKR solver, deformation solvers, quant/dequant, gauge."""

import random
from fractions import Fraction

import pytest

from coisoquant.connection import NormalCochain, check_symbols, curvature
from coisoquant.diffop import Cochain, RingCochain, mat_from_rows, meye
from coisoquant.hochschild import HochschildComplex, d_hoch, mc_residual, ring_to_module
from coisoquant.poisson import Bivector, anchor
from coisoquant.polyalg import FreeModule, Ideal, Poly, parse_poly
from coisoquant.quantize import (
    CapExhaustedError,
    HKRConditionError,
    ModuleWithConnection,
    ObstructionError,
    antisymmetrization,
    boxtimes,
    boxtimes_symmetry_check,
    boxtimes_unit_check,
    conjugate_deformation,
    default_line,
    dequant,
    extend_automorphism,
    gauge_check_module,
    hkr_solve,
    moyal,
    quant,
    solve_first_order,
    solve_second_order,
    star_assoc_check,
    zero_star,
)

from helpers import QP, X4, lagrangian_ideal, poly_qp, poly_x4, rank2_ideal

import weyl_oracle as wo


def lagrangian_setup():
    P = Bivector(2, {(0, 1): poly_qp("1")})
    ideal = lagrangian_ideal()
    return anchor(P, ideal), moyal(P), ideal


def rank2_setup():
    P = Bivector(4, {(0, 2): poly_x4("1"), (1, 3): poly_x4("1")})
    ideal = rank2_ideal()
    return anchor(P, ideal), moyal(P), ideal


def m_shift(d1, ideal, entry=1):
    x3 = Poly.variable(2, 4)
    z = Poly.zero(4)
    mat = mat_from_rows([[z, x3.scale(entry)], [z, z]])
    zeta = NormalCochain(1, (0, 1), 2, ideal, {(1,): mat})
    return d1.shifted_by(zeta)


# -- star products -----------------------------------------------------------


def test_moyal_zero_bivector_commutative():
    s = moyal(Bivector.zero(2))
    assert s.alpha1.is_zero() and s.alpha2.is_zero() and s.symmetric2


def test_moyal_qp_values():
    _data, star, _i = lagrangian_setup()
    assert star.alpha1.evaluate([poly_qp("q"), poly_qp("p")]) == Poly.const(2, Fraction(1, 2))
    assert star.symmetric2
    assert antisymmetrization(star).is_zero()
    assert star_assoc_check(star)


def test_moyal_rejects_nonconstant():
    P = Bivector(2, {(0, 1): poly_qp("q")})
    with pytest.raises(ValueError):
        moyal(P)


def test_star_assoc_check_detects_corruption():
    _data, star, _i = lagrangian_setup()
    star.alpha2 = star.alpha2 + RingCochain(2, 2, {((1, 0), (0, 0)): poly_qp("1")})
    res = star_assoc_check(star)
    assert not res
    stage, residual = res.witness
    assert stage == "order2" and not residual.is_zero()


# -- HKR solver --------------------------------------------------------------


def test_hkr_zero_defect():
    data, _star, ideal = lagrangian_setup()
    sol = hkr_solve(Cochain.zero(1, ideal, 1), data)
    assert sol.cochain.is_zero()


def test_hkr_leibniz_on_full_ring():
    # R(a, e) = (da/dx) e on A = k[x], E = A over the zero ideal: beta = d_x
    names = ["x"]
    ideal = Ideal(1, [])
    P = Bivector.zero(1)
    data = anchor(P, ideal)
    defect = Cochain(1, ideal, 1, {(((1,),), (0,)): meye(1, 1)})
    sol = hkr_solve(defect, data)
    assert sol.cochain == Cochain(0, ideal, 1, {((), (1,)): meye(1, 1)})


def test_hkr_condition_failure_ideal_slot():
    data, _star, ideal = lagrangian_setup()
    # R(a,e) = (d_p a)|_Y e is a derivation cocycle but R(p*a, e) = a|_Y e != 0
    defect = Cochain(1, ideal, 1, {(((0, 1),), (0, 0)): meye(1, 2)})
    assert d_hoch(defect).is_zero()
    with pytest.raises(HKRConditionError) as exc:
        hkr_solve(defect, data)
    assert exc.value.witness[0] == "ideal-slot"


def test_hkr_condition_failure_symmetry():
    data, star, ideal = rank2_setup()
    # G(a,b,e) = alpha_1^X(a,b) e for a NON-coisotropic pairing fails the
    # ideal-pair symmetry: use P with P^{12} = 1
    P_bad = Bivector(4, {(0, 1): poly_x4("1")})
    bad = moyal(P_bad)
    defect = ring_to_module(bad.alpha1, ideal, 1)
    with pytest.raises(HKRConditionError) as exc:
        hkr_solve(defect, data)
    assert exc.value.witness[0] == "ideal-symmetry"


def test_hkr_cap_exhaustion_reported():
    data, star, ideal = lagrangian_setup()
    defect = ring_to_module(star.alpha1, ideal, 1)  # needs total order 2
    with pytest.raises(CapExhaustedError):
        hkr_solve(defect, data, caps=(1, 6))


# -- first order --------------------------------------------------------------


def test_solve_first_order_zero_star():
    data, _star, ideal = lagrangian_setup()
    d1 = solve_first_order(zero_star(2), data, FreeModule(1, ideal))
    assert d1.alpha1.is_zero()


def test_solve_first_order_lagrangian_frozen_values():
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    # alpha_1(a, e) = -(d_p a) d_q e - 1/2 (d_q d_p a) e, from the left-ideal
    # reduction oracle; the gauge-fixed solver reproduces it on the nose.
    want = Cochain(
        1,
        ideal,
        1,
        {
            (((0, 1),), (1, 0)): mat_from_rows([[poly_qp("-1")]]),
            (((1, 1),), (0, 0)): mat_from_rows([[Poly.const(2, Fraction(-1, 2))]]),
        },
    )
    assert d1.alpha1 == want
    gamma = d1.connection()
    assert gamma.ops[1] == Cochain(0, ideal, 1, {((), (1, 0)): mat_from_rows([[poly_qp("-1")]])})
    assert check_symbols(gamma, data)


def test_solve_first_order_non_coisotropic_witness():
    X4n = ["x1", "x2", "x3", "x4"]
    P = Bivector(4, {(0, 1): poly_x4("1")})
    ideal = rank2_ideal()
    data_ok = anchor(Bivector.zero(4), ideal)  # placeholder geometry
    star = moyal(P)
    with pytest.raises(ObstructionError) as exc:
        solve_first_order(star, data_ok, FreeModule(1, ideal))
    (pair, nf) = exc.value.witness
    assert pair == (0, 1) and nf == poly_x4("1")


def test_first_order_gauge_dimension_matches_torsor():
    # Prop 2.5 content at the solver's own caps: the solution nullity equals
    # the dimension of capped coboundaries plus the capped sections of N(E).
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    total, deg = d1.caps_used
    h = HochschildComplex(ideal, 1)
    from coisoquant.hochschild import basis_cochain, cochain_basis_keys, flatten_cochain
    from coisoquant import linalg

    labels0 = cochain_basis_keys(h, 0, total, deg)
    rows = []
    for lab in labels0:
        rows.append(flatten_cochain(d_hoch(basis_cochain(h, lab))))
    coboundary_dim = linalg.rank(rows)
    n_truncation = 1  # sections of N(E) = O_Y with coefficient degree <= 0
    assert d1.nullity == coboundary_dim + n_truncation


# -- second order --------------------------------------------------------------


def test_solve_second_order_lagrangian_matches_oracle():
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    d2 = solve_second_order(d1, star, data)
    h = HochschildComplex.with_star(ideal, 1, star)
    assert mc_residual(h, d2.series(h)).is_zero()
    for qa in range(4):
        for pb in range(4 - qa):
            for qe in range(3):
                a = Poly.monomial((qa, pb))
                e = (Poly.monomial((qe, 0)),)
                red = wo.act(wo.q_monomial(qa, pb), wo.q_monomial(qe))
                got1 = {m[0]: c for m, c in d2.alpha1.apply([a], e)[0].terms.items()}
                got2 = {m[0]: c for m, c in d2.alpha2.apply([a], e)[0].terms.items()}
                assert got1 == wo.eps_component(red, 1)
                assert got2 == wo.eps_component(red, 2)


def test_second_order_obstruction_bidirectional():
    data, star, ideal = rank2_setup()
    d1 = solve_first_order(star, data, FreeModule(2, ideal))
    # M = 0: succeeds
    d2 = solve_second_order(d1, star, data)
    assert d2.alpha2 is not None
    # M != 0: fails with witness exactly M
    with pytest.raises(ObstructionError) as exc:
        solve_second_order(m_shift(d1, ideal), star, data)
    table = exc.value.witness
    assert list(table) == [(0, 1)]
    z = Poly.zero(4)
    assert table[(0, 1)] == mat_from_rows([[z, Poly.const(4, 1)], [z, z]])


def test_second_order_with_line_reports_flat_nabla():
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    line = default_line(data)
    d2 = solve_second_order(d1, star, data, line=line)
    assert d2.nabla_curvature.is_zero()


# -- quant / dequant / boxtimes -------------------------------------------------


def flat_m_module(data, ideal):
    """Rank-1 module with the flat (0,1)-connection along the foliation."""
    from coisoquant.connection import Connection
    from coisoquant.diffop import ScalarDiffOp

    ops = {}
    for g in data.gens:
        ops[g] = Cochain.from_scalar_module_op(data.anchor[g], ideal, 1)
    return ModuleWithConnection(1, Connection(Fraction(0), Fraction(1), ops))


def test_quant_dequant_roundtrip_lagrangian():
    data, star, ideal = lagrangian_setup()
    line = default_line(data)
    m = flat_m_module(data, ideal)
    q = quant(m, line, data)
    assert q.connection.lam == Fraction(1, 2)
    back = dequant(q, line, data)
    assert back.rank == m.rank
    assert back.connection == m.connection


def test_quant_of_flat_module_admits_second_order():
    data, star, ideal = lagrangian_setup()
    line = default_line(data)
    m = flat_m_module(data, ideal)
    q = quant(m, line, data)
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    # reshape the solved first order to carry the quant connection
    delta = q.connection.ops[1] - d1.connection().ops[1]
    from coisoquant.connection import _as_matrix

    zeta = NormalCochain(1, (1,), 1, ideal, {(1,): _as_matrix(delta)} if not delta.is_zero() else {})
    d1q = d1.shifted_by(zeta)
    d2 = solve_second_order(d1q, star, data)
    assert d2.alpha2 is not None


def test_quant_rejects_nonflat():
    data, star, ideal = rank2_setup()
    from coisoquant.connection import Connection
    from coisoquant.diffop import ScalarDiffOp

    x3 = Poly.variable(2, 4)
    z = Poly.zero(4)
    mat = mat_from_rows([[z, x3], [z, z]])
    ops = {
        0: Cochain.from_scalar_module_op(data.anchor[0], ideal, 2),
        1: Cochain.from_scalar_module_op(data.anchor[1], ideal, 2)
        + Cochain.from_matrix(mat, ideal),
    }
    m = ModuleWithConnection(2, Connection(Fraction(0), Fraction(1), ops))
    line = default_line(data)
    with pytest.raises(ObstructionError):
        quant(m, line, data)


def test_boxtimes_unit_symmetry_and_lambda():
    data, star, ideal = lagrangian_setup()
    line = default_line(data)
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    e1 = ModuleWithConnection(1, d1.connection())
    assert boxtimes_unit_check(e1, line, data)
    assert boxtimes_symmetry_check(e1, e1, line, data)
    b = boxtimes(e1, e1, line, data)
    assert b.connection.lam == Fraction(1, 2) and b.connection.mu == 1


# -- automorphisms and gauge ------------------------------------------------


def test_extend_automorphism_identity():
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    d2 = solve_second_order(d1, star, data)
    eta, ambiguity = extend_automorphism(d2, meye(1, 2))
    assert eta.is_zero()
    assert ambiguity >= 1  # at least the O_Y-linear torsor direction


def test_extend_automorphism_obstruction():
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    d2 = solve_second_order(d1, star, data)
    phi = mat_from_rows([[poly_qp("q")]])
    with pytest.raises(ObstructionError) as exc:
        extend_automorphism(d2, phi)
    g, mat = exc.value.witness
    # [gamma(pbar), q id] = [-d_q, q] = -1
    assert g == (1,) and mat == mat_from_rows([[Poly.const(2, -1)]])


def test_extend_automorphism_constant_matrix_rank2():
    data, star, ideal = rank2_setup()
    d1 = solve_first_order(star, data, FreeModule(2, ideal))
    d2 = solve_second_order(d1, star, data)
    phi = mat_from_rows(
        [
            [Poly.const(4, 2), Poly.const(4, 1)],
            [Poly.zero(4), Poly.const(4, 3)],
        ]
    )
    eta, _ambiguity = extend_automorphism(d2, phi)
    # constant matrices commute with the flat connection: defect is zero
    assert eta.is_zero()


def test_gauge_check_module_identity_and_conjugation():
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    d2 = solve_second_order(d1, star, data)
    ident = []
    assert gauge_check_module(d2, d2, ident)
    phi1 = Cochain.from_matrix(mat_from_rows([[poly_qp("q")]]), ideal)
    phi2 = Cochain.from_matrix(mat_from_rows([[poly_qp("q^2")]]), ideal)
    d2p = conjugate_deformation(d2, [phi1, phi2])
    assert gauge_check_module(d2, d2p, [phi1, phi2])
    # the conjugated action still satisfies Maurer-Cartan
    h = HochschildComplex.with_star(ideal, 1, star)
    assert mc_residual(h, d2p.series(h)).is_zero()


def test_gauge_check_module_detects_mismatch():
    data, star, ideal = lagrangian_setup()
    d1 = solve_first_order(star, data, FreeModule(1, ideal))
    d2 = solve_second_order(d1, star, data)
    phi1 = Cochain.from_matrix(mat_from_rows([[poly_qp("q")]]), ideal)
    phi2 = Cochain.from_matrix(mat_from_rows([[poly_qp("q^2")]]), ideal)
    d2p = conjugate_deformation(d2, [phi1, phi2])
    junk = Cochain(1, ideal, 1, {(((1, 0),), (0, 0)): meye(1, 2)})
    import dataclasses

    bad = dataclasses.replace(d2p, alpha2=d2p.alpha2 + junk)
    res = gauge_check_module(d2, bad, [phi1, phi2])
    assert not res
    assert res.witness[0] == 2
