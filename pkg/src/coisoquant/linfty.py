"""Finite curved L-infinity algebras over truncated power-series coefficients.

Brackets live internally as coderivation components on the shifted symmetric
coalgebra (one Koszul sign engine, keyed by shifted degrees); user-facing
tables are the unshifted graded-antisymmetric brackets, converted through the
classical decalage.  With that normalization the Maurer-Cartan residual reads
l0 + l1(b) + 1/2 [b,b] in user terms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Sequence

from . import linalg
from .poisson import CheckResult


class Trunc:
    """Element of Q[eps]/eps^(order+1)."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: Sequence[Fraction]):
        self.order = order
        cs = [Fraction(c) for c in coeffs][: order + 1]
        while len(cs) < order + 1:
            cs.append(Fraction(0))
        self.coeffs = tuple(cs)

    @classmethod
    def zero(cls, order: int) -> Trunc:
        return cls(order, [])

    @classmethod
    def of(cls, order: int, value, power: int = 0) -> Trunc:
        cs = [Fraction(0)] * (order + 1)
        if power <= order:
            cs[power] = Fraction(value)
        return cls(order, cs)

    def __add__(self, other: Trunc) -> Trunc:
        return Trunc(self.order, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: Trunc) -> Trunc:
        return Trunc(self.order, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> Trunc:
        return Trunc(self.order, [-a for a in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, Trunc):
            out = [Fraction(0)] * (self.order + 1)
            for i, a in enumerate(self.coeffs):
                if not a:
                    continue
                for j, b in enumerate(other.coeffs):
                    if i + j <= self.order and b:
                        out[i + j] += a * b
            return Trunc(self.order, out)
        return Trunc(self.order, [a * other for a in self.coeffs])

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def min_power(self) -> int:
        """Smallest eps power with nonzero coefficient (order+1 when zero)."""
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return self.order + 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Trunc) and self.coeffs == other.coeffs

    __hash__ = None

    def __repr__(self) -> str:
        bits = [
            (f"{c}" if i == 0 else f"{c}*eps^{i}")
            for i, c in enumerate(self.coeffs)
            if c
        ]
        return " + ".join(bits) if bits else "0"


@dataclass(frozen=True)
class GradedSpace:
    """Finite graded vector space with named basis elements."""

    labels: tuple[str, ...]
    degrees: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.degrees):
            raise ValueError("one degree per label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be distinct")

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def degree(self, i: int) -> int:
        return self.degrees[i]


class Element:
    """Vector with Trunc coordinates, keyed by basis index."""

    __slots__ = ("space", "order", "coords")

    def __init__(self, space: GradedSpace, order: int, coords: Mapping[int, Trunc]):
        self.space = space
        self.order = order
        self.coords = {i: c for i, c in coords.items() if not c.is_zero()}

    @classmethod
    def zero(cls, space: GradedSpace, order: int) -> Element:
        return cls(space, order, {})

    @classmethod
    def basis(cls, space: GradedSpace, order: int, label: str, value=1, power: int = 0) -> Element:
        return cls(space, order, {space.index(label): Trunc.of(order, value, power)})

    def __add__(self, other: Element) -> Element:
        out = dict(self.coords)
        for i, c in other.coords.items():
            s = out.get(i, Trunc.zero(self.order)) + c
            if s.is_zero():
                out.pop(i, None)
            else:
                out[i] = s
        return Element(self.space, self.order, out)

    def __sub__(self, other: Element) -> Element:
        return self + other.scale(Trunc.of(self.order, -1))

    def scale(self, c) -> Element:
        if not isinstance(c, Trunc):
            c = Trunc.of(self.order, c)
        return Element(self.space, self.order, {i: v * c for i, v in self.coords.items()})

    def is_zero(self) -> bool:
        return not self.coords

    def degrees_present(self) -> set[int]:
        return {self.space.degree(i) for i in self.coords}

    def min_eps_power(self) -> int:
        return min((c.min_power() for c in self.coords.values()), default=self.order + 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Element) and self.coords == other.coords

    __hash__ = None

    def __repr__(self) -> str:
        bits = [f"({c})*{self.space.labels[i]}" for i, c in sorted(self.coords.items())]
        return " + ".join(bits) if bits else "0"


# -- Koszul sign engine ----------------------------------------------------


def sort_word_shifted(word: Sequence[int], degrees: Sequence[int]):
    """Canonical sort of a shifted-symmetric word; returns (word, sign) or zero.

    Shifted degrees are unshifted minus one; swapping adjacent entries of
    shifted degrees s, t costs (-1)^(s t).  A repeated entry of odd shifted
    degree kills the word.
    """
    w = list(word)
    sign = 1
    for i in range(1, len(w)):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            s = (degrees[w[j - 1]] - 1) * (degrees[w[j]] - 1)
            if s % 2:
                sign = -sign
            w[j - 1], w[j] = w[j], w[j - 1]
            j -= 1
    for a, b in zip(w, w[1:]):
        if a == b and (degrees[a] - 1) % 2:
            return tuple(w), 0
    return tuple(w), sign


def sort_word_unshifted(word: Sequence[int], degrees: Sequence[int]):
    """Canonical sort in the graded-antisymmetric (unshifted) convention."""
    w = list(word)
    sign = 1
    for i in range(1, len(w)):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            s = degrees[w[j - 1]] * degrees[w[j]]
            sign = -sign if s % 2 == 0 else sign
            w[j - 1], w[j] = w[j], w[j - 1]
            j -= 1
    for a, b in zip(w, w[1:]):
        if a == b and degrees[a] % 2 == 0:
            return tuple(w), 0
    return tuple(w), sign


def decalage_sign(word: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign relating the unshifted bracket to the coderivation component.

    l-tilde_n(x_1 ... x_n) = (-1)^(n(n-1)/2) (-1)^(sum (n-i) d_i) l_n(x_1..x_n).
    """
    n = len(word)
    e = (n * (n - 1)) // 2
    for i, lab in enumerate(word):
        e += (n - 1 - i) * degrees[lab]
    return -1 if e % 2 else 1


class LInfty:
    """Curved L-infinity structure on a graded space, brackets up to n_max.

    `brackets[n]` maps canonical shifted words (sorted index tuples) to output
    coordinate dicts {index: Trunc}.  Off-canonical words are handled by the
    sign engine.  Jacobi is checked, not assumed: call jacobi_check.
    """

    def __init__(self, space: GradedSpace, order: int, n_max: int,
                 brackets: dict[int, dict[tuple[int, ...], dict[int, Trunc]]]):
        self.space = space
        self.order = order
        self.n_max = n_max
        self.brackets = brackets

    @classmethod
    def from_unshifted_brackets(
        cls,
        space: GradedSpace,
        order: int,
        tables: dict[int, dict[tuple, dict]],
        n_max: int = 3,
    ) -> LInfty:
        """Build from graded-antisymmetric tables l_n keyed by label words.

        Table values map output labels to rationals or Truncs.  Words may be
        given in any order; they are canonicalized with unshifted Koszul
        signs, then converted by the decalage.
        """
        degs = space.degrees
        shifted: dict[int, dict[tuple[int, ...], dict[int, Trunc]]] = {}
        for n, table in tables.items():
            tgt = shifted.setdefault(n, {})
            for word, value in table.items():
                idx = tuple(space.index(l) if isinstance(l, str) else l for l in word)
                canon, usign = sort_word_unshifted(idx, degs)
                if usign == 0:
                    raise ValueError(f"word {word} vanishes by antisymmetry")
                dsign = decalage_sign(canon, degs)
                out: dict[int, Trunc] = {}
                for lab, c in value.items():
                    i = space.index(lab) if isinstance(lab, str) else lab
                    t = c if isinstance(c, Trunc) else Trunc.of(order, c)
                    t = t * (usign * dsign)
                    if not t.is_zero():
                        out[i] = out.get(i, Trunc.zero(order)) + t
                key, ksign = sort_word_shifted(canon, degs)
                if ksign == 0:
                    continue
                if ksign == -1:
                    out = {i: -t for i, t in out.items()}
                cur = tgt.setdefault(key, {})
                for i, t in out.items():
                    s = cur.get(i, Trunc.zero(order)) + t
                    if s.is_zero():
                        cur.pop(i, None)
                    else:
                        cur[i] = s
        return cls(space, order, n_max, shifted)

    # -- bracket evaluation -------------------------------------------------

    def bracket_word(self, word: Sequence[int]) -> Element:
        """l-tilde_n on a word of basis indices (any order)."""
        n = len(word)
        table = self.brackets.get(n)
        if not table:
            return Element.zero(self.space, self.order)
        canon, sign = sort_word_shifted(word, self.space.degrees)
        if sign == 0:
            return Element.zero(self.space, self.order)
        out = table.get(canon)
        if not out:
            return Element.zero(self.space, self.order)
        coords = {i: (t if sign == 1 else -t) for i, t in out.items()}
        return Element(self.space, self.order, coords)

    def bracket(self, elements: Sequence[Element]) -> Element:
        """Multilinear extension of l-tilde over Trunc coordinates."""
        acc = Element.zero(self.space, self.order)
        supports = [sorted(e.coords.items()) for e in elements]
        for combo in itertools.product(*supports):
            coeff = Trunc.of(self.order, 1)
            word = []
            for i, (lab, t) in enumerate(combo):
                coeff = coeff * t
                word.append(lab)
            if coeff.is_zero():
                continue
            val = self.bracket_word(word)
            if not val.is_zero():
                acc = acc + val.scale(coeff)
        return acc

    def unshifted_bracket(self, elements: Sequence[Element]) -> Element:
        """l_n in the user convention on homogeneous basis-aligned input."""
        # evaluated through the decalage on each word
        acc = Element.zero(self.space, self.order)
        supports = [sorted(e.coords.items()) for e in elements]
        for combo in itertools.product(*supports):
            coeff = Trunc.of(self.order, 1)
            word = []
            for lab, t in combo:
                coeff = coeff * t
                word.append(lab)
            if coeff.is_zero():
                continue
            val = self.bracket_word(word)
            if val.is_zero():
                continue
            dsign = decalage_sign(word, self.space.degrees)
            acc = acc + val.scale(coeff * dsign)
        return acc

    def curvature(self) -> Element:
        return self.bracket_word(())

    # -- the coderivation and its square -------------------------------------

    def q_on_state(self, state: dict[tuple[int, ...], Trunc]) -> dict[tuple[int, ...], Trunc]:
        """One application of the codifferential to a sum of symmetric words."""
        degs = self.space.degrees
        out: dict[tuple[int, ...], Trunc] = {}
        for word, coeff in state.items():
            n = len(word)
            for k in range(0, min(self.n_max, n) + 1):
                for sel in itertools.combinations(range(n), k):
                    sub = tuple(word[i] for i in sel)
                    rest = tuple(word[i] for i in range(n) if i not in sel)
                    ksign = _extract_sign(word, sel, degs)
                    val = self.bracket_word(sub)
                    if val.is_zero():
                        continue
                    for lab, t in val.coords.items():
                        new_word, s2 = sort_word_shifted((lab,) + rest, degs)
                        if s2 == 0:
                            continue
                        c = coeff * t * (ksign * s2)
                        if c.is_zero():
                            continue
                        acc = out.get(new_word, Trunc.zero(self.order)) + c
                        if acc.is_zero():
                            out.pop(new_word, None)
                        else:
                            out[new_word] = acc
        return out


def _extract_sign(word: Sequence[int], sel: Sequence[int], degs: Sequence[int]) -> int:
    """Koszul sign for pulling the selected positions to the front (shifted)."""
    e = 0
    for pos in sel:
        for other in range(pos):
            if other not in sel:
                e += (degs[word[pos]] - 1) * (degs[word[other]] - 1)
    return -1 if e % 2 else 1


def jacobi_check(L: LInfty, up_to_arity: int = 3, word_filter=None) -> CheckResult:
    """Q^2 = 0 expanded on basis words through the arity bound.

    Returns the first failing word with the offending component as witness.
    `word_filter` restricts the checked words (used by the t-capped interval
    model, whose tables only represent a bounded t-degree window).
    """
    degs = L.space.degrees
    n = L.space.dim
    for length in range(up_to_arity + 1):
        for word in itertools.combinations_with_replacement(range(n), length):
            if word_filter is not None and not word_filter(word):
                continue
            canon, sign = sort_word_shifted(word, degs)
            if sign == 0:
                continue
            state = {canon: Trunc.of(L.order, 1)}
            qq = L.q_on_state(L.q_on_state(state))
            bad = {w: c for w, c in qq.items() if not c.is_zero()}
            if bad:
                labels = tuple(L.space.labels[i] for i in word)
                return CheckResult(False, witness=(labels, bad))
    return CheckResult(True)


# -- Maurer-Cartan over the truncated ring ----------------------------------


def mc_residual_linf(L: LInfty, b: Element) -> Element:
    """Sum over k of l_k(b,..,b)/k!; b must be degree 1 with eps-positive coords.

    For degree-1 arguments the shifted and unshifted expansions agree
    termwise, so this is the user-convention residual l0 + l1 b + [b,b]/2 + ...
    """
    _require_mc_shape(L, b)
    acc = Element.zero(L.space, L.order)
    for k in range(0, L.n_max + 1):
        if k and b.min_eps_power() * k > L.order:
            break
        term = L.bracket([b] * k)
        acc = acc + term.scale(Fraction(1, factorial(k)))
    return acc


def _require_mc_shape(L: LInfty, b: Element) -> None:
    for i in b.coords:
        if L.space.degree(i) != 1:
            raise ValueError("Maurer-Cartan candidates are concentrated in degree 1")
        if b.coords[i].coeffs[0]:
            raise ValueError("Maurer-Cartan coordinates must lie in the maximal ideal")


def mc_check(L: LInfty, b: Element) -> CheckResult:
    res = mc_residual_linf(L, b)
    if res.is_zero():
        return CheckResult(True)
    powers = {}
    for i, t in res.coords.items():
        for p, c in enumerate(t.coeffs):
            if c:
                powers.setdefault(p, {})[L.space.labels[i]] = c
    return CheckResult(False, witness=powers)


# -- twisting ----------------------------------------------------------------


def twist_linf(L: LInfty, b: Element) -> LInfty:
    """The b-twist: l^b_k(w) = sum_j l_{k+j}(b,..,b,w)/j!; kills the curvature."""
    if not mc_check(L, b):
        raise ValueError("twisting requires a Maurer-Cartan element")
    degs = L.space.degrees
    out: dict[int, dict[tuple[int, ...], dict[int, Trunc]]] = {}
    min_pow = max(b.min_eps_power(), 1)
    for k in range(0, L.n_max + 1):
        tgt: dict[tuple[int, ...], dict[int, Trunc]] = {}
        for word in itertools.combinations_with_replacement(range(L.space.dim), k):
            canon, sign = sort_word_shifted(word, degs)
            if sign == 0 or canon != word:
                continue
            acc = Element.zero(L.space, L.order)
            j = 0
            while k + j <= L.n_max and j * min_pow <= L.order:
                basis_elems = [Element(L.space, L.order, {i: Trunc.of(L.order, 1)}) for i in word]
                term = L.bracket([b] * j + basis_elems)
                acc = acc + term.scale(Fraction(1, factorial(j)))
                j += 1
            if not acc.is_zero():
                tgt[word] = dict(acc.coords)
        if tgt:
            out[k] = tgt
    return LInfty(L.space, L.order, L.n_max, out)


def twisted_cohomology_dims(L: LInfty) -> dict[int, int]:
    """ker/im dimensions of l1 over Q, eps-power coordinates flattened.

    Requires l0 = 0 (twisted or flat); degrees with no incoming or outgoing
    differential still appear with their kernel dimension.
    """
    if not L.curvature().is_zero():
        raise ValueError("cohomology needs a flat (twisted) structure")
    degs = sorted(set(L.space.degrees))
    dims: dict[int, int] = {}
    cols: dict[int, list] = {
        d: [
            (i, p)
            for i in range(L.space.dim)
            if L.space.degree(i) == d
            for p in range(L.order + 1)
        ]
        for d in degs
    }
    mats: dict[int, list] = {}
    for d in degs:
        rows: dict = {}
        for ci, (i, p) in enumerate(cols[d]):
            img = L.bracket([Element(L.space, L.order, {i: Trunc.of(L.order, 1, p)})])
            for j, t in img.coords.items():
                for pp, c in enumerate(t.coeffs):
                    if c:
                        rows.setdefault((j, pp), {})[ci] = c
        mats[d] = list(rows.values())
    for d in degs:
        kernel = len(cols[d]) - linalg.rank(mats[d])
        image_prev = 0
        if d - 1 in mats:
            # rank of the differential out of degree d-1
            image_prev = linalg.rank(mats[d - 1])
        dims[d] = kernel - image_prev
    return dims


# -- the interval model -------------------------------------------------------


@dataclass(frozen=True)
class IntervalSpace:
    """Basis labels of A (x) k[t, dt] up to a t-degree cap.

    Interval brackets preserve the total t-degree (the de Rham term lowers
    it), so any computation whose input words stay within the cap never meets
    a truncated table entry.  Callers enforce that budget.
    """

    base: GradedSpace
    t_cap: int

    def label(self, base_label: str, tpow: int, dt: bool) -> str:
        return f"{base_label}@t{tpow}{'dt' if dt else ''}"

    def t_power(self, index: int) -> int:
        _dt, rem = divmod(index, self.base.dim * (self.t_cap + 1))
        _i, a = divmod(rem, self.t_cap + 1)
        return a

    def word_in_budget(self, word: Sequence[int]) -> bool:
        return sum(self.t_power(i) for i in word) <= self.t_cap

    def graded_space(self) -> GradedSpace:
        labels = []
        degrees = []
        for dt in (False, True):
            for i, lab in enumerate(self.base.labels):
                for a in range(self.t_cap + 1):
                    labels.append(self.label(lab, a, dt))
                    degrees.append(self.base.degrees[i] + (1 if dt else 0))
        return GradedSpace(tuple(labels), tuple(degrees))


def interval_model(L: LInfty, t_cap: int = 3) -> tuple[LInfty, IntervalSpace]:
    """The path-object model on L (x) k[t, dt], t-degree capped.

    Brackets follow the base brackets t-polynomially; a dt in slot j carries
    the Koszul sign of moving it out past the preceding arguments, and the
    differential gains the de Rham term -(da/dt) dt.  Bracket outputs beyond
    the t-cap raise ValueError rather than truncating silently.
    """
    ispace = IntervalSpace(L.space, t_cap)
    gspace = ispace.graded_space()
    order = L.order
    n_max = L.n_max
    base_dim = L.space.dim

    def decode(idx: int) -> tuple[int, int, bool]:
        dt, rem = divmod(idx, base_dim * (t_cap + 1))
        i, a = divmod(rem, t_cap + 1)
        return i, a, bool(dt)

    def encode(i: int, a: int, dt: bool) -> int:
        if a > t_cap:
            raise ValueError(
                f"bracket output exceeds the t-degree cap {t_cap}; raise it"
            )
        return (base_dim * (t_cap + 1)) * (1 if dt else 0) + i * (t_cap + 1) + a

    brackets: dict[int, dict[tuple[int, ...], dict[int, Trunc]]] = {}

    def add_entry(n, word, out_idx, t: Trunc):
        canon, sign = sort_word_shifted(word, gspace.degrees)
        if sign == 0 or t.is_zero():
            return
        tgt = brackets.setdefault(n, {}).setdefault(canon, {})
        val = t * sign
        s = tgt.get(out_idx, Trunc.zero(order)) + val
        if s.is_zero():
            tgt.pop(out_idx, None)
        else:
            tgt[out_idx] = s

    # curvature: l0 + 0 dt at t^0
    curv = L.curvature()
    for i, t in curv.coords.items():
        add_entry(0, (), encode(i, 0, False), t)

    # the de Rham part of the differential: x t^a -> (-1)^{s(x)} a x t^(a-1) dt
    for i in range(base_dim):
        s_x = (L.space.degrees[i] - 1) % 2
        for a in range(1, t_cap + 1):
            add_entry(
                1,
                (encode(i, a, False),),
                encode(i, a - 1, True),
                Trunc.of(order, -a if s_x else a),
            )

    for n in range(1, n_max + 1):
        table = L.brackets.get(n)
        if not table:
            continue
        # base brackets extended t-polynomially; at most one dt slot survives
        for word_idx in itertools.combinations_with_replacement(range(gspace.dim), n):
            decoded = [decode(i) for i in word_idx]
            n_dt = sum(1 for _, _, dt in decoded if dt)
            if n_dt > 1:
                continue
            base_word = [i for i, _a, _dt in decoded]
            tpow = sum(a for _i, a, _dt in decoded)
            if tpow > t_cap:
                continue
            val = L.bracket_word(base_word)
            if val.is_zero():
                continue
            if n_dt == 0:
                for j, t in val.coords.items():
                    add_entry(n, word_idx, encode(j, tpow, False), t)
            else:
                dt_pos = next(k for k, (_i, _a, dt) in enumerate(decoded) if dt)
                # Koszul: move the odd dt out past the later arguments
                e = sum(
                    (L.space.degrees[decoded[k][0]] - 1)
                    for k in range(dt_pos + 1, n)
                )
                sgn = -1 if e % 2 else 1
                for j, t in val.coords.items():
                    add_entry(n, word_idx, encode(j, tpow, True), t * sgn)
    return LInfty(gspace, order, n_max, brackets), ispace


def interval_element(
    model_space: IntervalSpace,
    gspace: GradedSpace,
    order: int,
    a_coeffs: Mapping[int, Mapping[str, Trunc]],
    b_coeffs: Mapping[int, Mapping[str, Trunc]],
) -> Element:
    """Assemble a(t) + b(t) dt from per-t-power coordinate tables."""
    coords: dict[int, Trunc] = {}
    for tpow, table in a_coeffs.items():
        for lab, t in table.items():
            coords[gspace.index(model_space.label(lab, tpow, False))] = t
    for tpow, table in b_coeffs.items():
        for lab, t in table.items():
            coords[gspace.index(model_space.label(lab, tpow, True))] = t
    return Element(gspace, order, coords)


def eval_at(
    L: LInfty, ispace: IntervalSpace, gspace: GradedSpace, x: Element, t0: Fraction
) -> Element:
    """Evaluation homomorphism: drop dt, substitute t = t0."""
    out = Element.zero(L.space, L.order)
    base_dim = L.space.dim
    for idx, t in x.coords.items():
        dt, rem = divmod(idx, base_dim * (ispace.t_cap + 1))
        i, a = divmod(rem, ispace.t_cap + 1)
        if dt:
            continue
        scalar = Fraction(t0) ** a
        if scalar:
            out = out + Element(L.space, L.order, {i: t * scalar})
    return out


def gauge_equivalent(
    L: LInfty,
    b0: Element,
    b1: Element,
    path: Element,
    model: tuple[LInfty, IntervalSpace],
) -> CheckResult:
    """Verify a gauge-equivalence witness: path is model-MC with the endpoints.

    Endpoint mismatches are reported separately from Maurer-Cartan failure.
    """
    iL, ispace = model
    gspace = iL.space
    max_t = max((ispace.t_power(i) for i in path.coords), default=0)
    if max_t * max(iL.n_max, 1) > ispace.t_cap:
        raise ValueError(
            "path t-degree exceeds the model's budget; rebuild with a larger t_cap"
        )
    e0 = eval_at(L, ispace, gspace, path, Fraction(0))
    e1 = eval_at(L, ispace, gspace, path, Fraction(1))
    if e0 != b0 or e1 != b1:
        return CheckResult(False, witness=("endpoints", e0 - b0, e1 - b1))
    res = mc_check(iL, path)
    if not res:
        return CheckResult(False, witness=("maurer-cartan", res.witness))
    return CheckResult(True)


def gauge_path(
    L: LInfty, b0: Element, direction: Element, model: tuple[LInfty, IntervalSpace]
) -> Element:
    """The flow path out of b0 with constant gauge direction c in degree 0.

    The dt-part is -c and a(t) integrates the model's own dt-equation
    da/dt = sum_k l-tilde_k(c, a, .., a)/(k-1)!, whose leading term is
    l1(c); the series stops by eps-nilpotence.  Eval at t=1 is the gauge
    transport of b0.
    """
    iL, ispace = model
    gspace = iL.space
    for i in direction.coords:
        if L.space.degree(i) != 0:
            raise ValueError("gauge directions live in degree 0")
    if direction.min_eps_power() < 1:
        raise ValueError("gauge directions must lie in the maximal ideal")
    a_layers: list[Element] = [b0]
    m = 0
    while True:
        # coefficient of t^m in sum_k l_k(c, a(t)^{k-1})/(k-1)!
        drive = L.bracket([direction]) if m == 0 else Element.zero(L.space, L.order)
        for k in range(2, L.n_max + 1):
            for split in itertools.product(range(m + 1), repeat=k - 1):
                if sum(split) != m:
                    continue
                args = [direction]
                ok = True
                for s in split:
                    if s >= len(a_layers):
                        ok = False
                        break
                    args.append(a_layers[s])
                if ok:
                    drive = drive + L.bracket(args).scale(Fraction(1, factorial(k - 1)))
        nxt = drive.scale(Fraction(1, m + 1))
        if nxt.is_zero():
            break
        a_layers.append(nxt)
        m += 1
        if m > ispace.t_cap:
            raise ValueError("gauge path exceeds the t-degree cap")
    coords: dict[int, Trunc] = {}
    for tpow, layer in enumerate(a_layers):
        for i, t in layer.coords.items():
            lab = L.space.labels[i]
            coords[gspace.index(ispace.label(lab, tpow, False))] = t
    for i, t in direction.coords.items():
        lab = L.space.labels[i]
        coords[gspace.index(ispace.label(lab, 0, True))] = -t
    return Element(gspace, L.order, coords)
