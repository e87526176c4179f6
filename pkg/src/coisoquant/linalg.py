"""Exact sparse linear algebra over the rationals.

Rows are dicts keyed by column labels.  A fully reduced row echelon
accumulator keeps every stored row free of pivot columns, so reducing an
incoming sparse row is a single pass over its own support.  Pivoting follows
a fixed column order, making all results deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Sequence

Row = dict


class RREF:
    """Fully reduced sparse row echelon form accumulator.

    Stored pivot rows omit their pivot column (implicit coefficient 1) and
    contain no other pivot columns; that invariant is what makes single-pass
    reduction valid.
    """

    def __init__(self):
        self.pivots: dict = {}

    def reduce(self, row: Row) -> Row:
        out = dict(row)
        for col in [c for c in row if c in self.pivots]:
            c = out.pop(col, None)
            if not c:
                continue
            for k, v in self.pivots[col].items():
                s = out.get(k, Fraction(0)) - c * v
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
        return out

    def add_row(self, row: Row):
        """Insert a row; returns the new pivot column or None if dependent."""
        r = self.reduce(row)
        if not r:
            return None
        piv = min(r)
        inv = 1 / r.pop(piv)
        new = {k: v * inv for k, v in r.items()}
        for prow in self.pivots.values():
            c = prow.get(piv)
            if c is not None:
                del prow[piv]
                for k, v in new.items():
                    s = prow.get(k, Fraction(0)) - c * v
                    if s:
                        prow[k] = s
                    else:
                        prow.pop(k, None)
        self.pivots[piv] = new
        return piv

    @property
    def rank(self) -> int:
        return len(self.pivots)


def rank(rows: Iterable[Row]) -> int:
    """Rank of the matrix with the given sparse rows (labels must be orderable)."""
    acc = RREF()
    for row in rows:
        acc.add_row(row)
    return acc.rank


class LinearSolution:
    """Particular solution with nullity; free variables pinned to zero."""

    def __init__(self, values: dict, nullity: int):
        self.values = values
        self.nullity = nullity


_RHS = ("__rhs__",)


def solve(
    columns: Sequence[Hashable],
    equations: Iterable[tuple[Row, Fraction]],
) -> LinearSolution | None:
    """Solve sum_j A[i][j] x_j = b_i exactly; None when inconsistent.

    `columns` fixes the variable order; earlier columns are preferred pivots
    and free variables are set to zero, which makes the output deterministic
    and realizes the solvers' gauge-fixing policy.
    """
    pos = {c: i for i, c in enumerate(columns)}
    acc = RREF()
    for row, b in equations:
        work = {pos[c]: v for c, v in row.items() if v}
        if b:
            work[_RHS] = b
        r = acc.reduce(work)
        if not r:
            continue
        body = [k for k in r if k is not _RHS and not isinstance(k, tuple)]
        if not body:
            return None  # residual row is 0 = b with b nonzero
        piv = min(body)
        inv = 1 / r.pop(piv)
        new = {k: v * inv for k, v in r.items()}
        for prow in acc.pivots.values():
            c = prow.get(piv)
            if c is not None:
                del prow[piv]
                for k, v in new.items():
                    s = prow.get(k, Fraction(0)) - c * v
                    if s:
                        prow[k] = s
                    else:
                        prow.pop(k, None)
        acc.pivots[piv] = new
    values = {c: Fraction(0) for c in columns}
    npivots = 0
    for piv, prow in acc.pivots.items():
        npivots += 1
        # free variables are zero, so only the rhs column contributes
        values[columns[piv]] = prow.get(_RHS, Fraction(0))
    return LinearSolution(values, nullity=len(columns) - npivots)


def kernel_basis(ncols: int, rows: Iterable[Row]) -> list[dict]:
    """Kernel basis of an integer-position-keyed sparse matrix."""
    acc = RREF()
    for row in rows:
        acc.add_row(dict(row))
    pivot_cols = set(acc.pivots)
    basis = []
    for fc in range(ncols):
        if fc in pivot_cols:
            continue
        vec = {fc: Fraction(1)}
        for piv, prow in acc.pivots.items():
            c = prow.get(fc)
            if c:
                vec[piv] = -c
        basis.append(vec)
    return basis


def span(rows: Iterable[Row]) -> RREF:
    acc = RREF()
    for row in rows:
        acc.add_row(dict(row))
    return acc


def reduce_mod_span(vec: Row, acc: RREF) -> Row:
    return acc.reduce(vec)
