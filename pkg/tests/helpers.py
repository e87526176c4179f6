"""Shared fixtures and random generators for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from coisoquant.diffop import Cochain, ScalarDiffOp, iter_multi_indices, mat_from_rows
from coisoquant.polyalg import Ideal, Poly, parse_poly

QP = ["q", "p"]
X4 = ["x1", "x2", "x3", "x4"]


def poly_qp(text: str) -> Poly:
    return parse_poly(text, QP)


def poly_x4(text: str) -> Poly:
    return parse_poly(text, X4)


def lagrangian_ideal() -> Ideal:
    """I = (p) in k[q, p]."""
    return Ideal(2, [poly_qp("p")])


def rank2_ideal() -> Ideal:
    """I = (x1, x2) in k[x1..x4]."""
    return Ideal(4, [poly_x4("x1"), poly_x4("x2")])


def random_poly(rng: random.Random, nvars: int, max_deg: int = 2, terms: int = 2,
                support: list[int] | None = None) -> Poly:
    out = Poly.zero(nvars)
    monos = list(iter_multi_indices(nvars, max_deg, support))
    for _ in range(terms):
        c = Fraction(rng.randint(-3, 3))
        if c:
            out = out + Poly.monomial(rng.choice(monos), c)
    return out


def random_matrix(rng: random.Random, rank: int, nvars: int, yvars, max_deg: int = 2):
    rows = []
    for _ in range(rank):
        rows.append([random_poly(rng, nvars, max_deg, terms=1, support=sorted(yvars))
                     for _ in range(rank)])
    return mat_from_rows(rows)


def random_cochain(rng: random.Random, arity: int, ideal: Ideal, rank: int,
                   max_ord: int = 2, max_deg: int = 2, nterms: int = 2) -> Cochain:
    nv = ideal.nvars
    yvars = sorted(frozenset(range(nv)) - ideal.coordinate_vars)
    ring_ds = list(iter_multi_indices(nv, max_ord))
    mod_ds = list(iter_multi_indices(nv, max_ord, yvars))
    acc = Cochain.zero(arity, ideal, rank)
    for _ in range(nterms):
        ds = tuple(rng.choice(ring_ds) for _ in range(arity))
        f = rng.choice(mod_ds)
        mat = random_matrix(rng, rank, nv, yvars, max_deg)
        term = Cochain(arity, ideal, rank, {(ds, f): mat})
        acc = acc + term
    return acc


def random_monomial(rng: random.Random, nvars: int, max_deg: int = 3) -> Poly:
    m = tuple(rng.randint(0, max_deg) for _ in range(nvars))
    return Poly.monomial(m, Fraction(rng.randint(1, 3)))


def random_vector(rng: random.Random, rank: int, nvars: int, yvars, max_deg: int = 3):
    return tuple(random_poly(rng, nvars, max_deg, terms=2, support=sorted(yvars))
                 for _ in range(rank))
