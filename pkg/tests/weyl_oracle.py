"""Independent left-ideal reduction oracle for the Moyal-Lagrangian module.

Works in the order-2 truncated Moyal algebra on k[q,p] with {q,p} = 1 and
reduces modulo the left ideal of right-multiples of p, using only the
rewriting rule g*p = gp + (eps/2) dq(g)  =>  gp == -(eps/2) dq(g).
Everything here is written directly against dict-of-monomial polynomials so
it shares no code path with the package solvers.
"""

from __future__ import annotations

from fractions import Fraction

# element: dict[(qexp, pexp, epsexp)] -> Fraction, eps truncated at order 2
Term = tuple[int, int, int]
Element = dict[Term, Fraction]


def poly(d: dict[Term, Fraction] | None = None) -> Element:
    return {k: Fraction(v) for k, v in (d or {}).items() if v}


def add(a: Element, b: Element) -> Element:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, Fraction(0)) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def scale(a: Element, c: Fraction) -> Element:
    return {k: v * c for k, v in a.items() if v * c}


def mul(a: Element, b: Element) -> Element:
    out: Element = {}
    for (qa, pa, ea), ca in a.items():
        for (qb, pb, eb), cb in b.items():
            if ea + eb > 2:
                continue
            k = (qa + qb, pa + pb, ea + eb)
            s = out.get(k, Fraction(0)) + ca * cb
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def dq(a: Element) -> Element:
    out = {}
    for (q, p, e), c in a.items():
        if q:
            out[(q - 1, p, e)] = c * q
    return out


def dp(a: Element) -> Element:
    out = {}
    for (q, p, e), c in a.items():
        if p:
            out[(q, p - 1, e)] = c * p
    return out


def eps_shift(a: Element, k: int) -> Element:
    return {(q, p, e + k): c for (q, p, e), c in a.items() if e + k <= 2}


def star(a: Element, b: Element) -> Element:
    """Order-2 Moyal product: ab + eps B1(a,b) + eps^2 B2(a,b)."""
    out = mul(a, b)
    b1 = add(mul(dq(a), dp(b)), scale(mul(dp(a), dq(b)), Fraction(-1)))
    out = add(out, eps_shift(scale(b1, Fraction(1, 2)), 1))
    b2 = add(
        mul(dq(dq(a)), dp(dp(b))),
        add(
            scale(mul(dq(dp(a)), dq(dp(b))), Fraction(-2)),
            mul(dp(dp(a)), dq(dq(b))),
        ),
    )
    out = add(out, eps_shift(scale(b2, Fraction(1, 8)), 2))
    return out


def reduce_left_ideal(a: Element) -> Element:
    """Canonical representative modulo A * p: eliminate all p powers."""
    work = dict(a)
    out: Element = {}
    while work:
        (q, p, e), c = next(iter(sorted(work.items())))
        del work[(q, p, e)]
        if p == 0:
            s = out.get((q, 0, e), Fraction(0)) + c
            if s:
                out[(q, 0, e)] = s
            else:
                out.pop((q, 0, e), None)
            continue
        # g p^m == -(eps/2) dq(g p^{m-1})
        g = {(q, p - 1, e): c}
        repl = eps_shift(scale(dq(g), Fraction(-1, 2)), 1)
        work = add(work, repl)
    return out


def act(a: Element, f: Element) -> Element:
    """The module action a * [f] for f a (possibly eps-weighted) q-polynomial."""
    return reduce_left_ideal(star(a, f))


def q_monomial(qexp: int, pexp: int = 0) -> Element:
    return {(qexp, pexp, 0): Fraction(1)}


def eps_component(a: Element, k: int) -> dict[int, Fraction]:
    """The q-polynomial at one eps power (requires no p left)."""
    out = {}
    for (q, p, e), c in a.items():
        if e == k:
            assert p == 0, "element is not reduced"
            out[q] = c
    return out
