"""Exact linear solvers over the rationals.

Two independent routes are provided on purpose: a dense fraction-free
(Bareiss) elimination over integers, and a sparse symmetric elimination over
Fractions for the large, sparse absorption systems produced by strategy
evaluation.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

__all__ = ["SingularMatrixError", "solve_dense", "solve_sparse"]


class SingularMatrixError(ArithmeticError):
    pass


def _integer_row(row: Sequence[Fraction], rhs: Fraction) -> list[int]:
    entries = [Fraction(x) for x in row] + [Fraction(rhs)]
    m = lcm(*(x.denominator for x in entries))
    return [x.numerator * (m // x.denominator) for x in entries]


def solve_dense(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``a x = b`` by Bareiss elimination on the integer-scaled
    augmented matrix."""
    n = len(a)
    if len(b) != n or any(len(row) != n for row in a):
        raise ValueError("expected a square system")
    if n == 0:
        return []
    m = [_integer_row(a[i], b[i]) for i in range(n)]
    prev = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k] != 0), None)
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
        mk = m[k]
        akk = mk[k]
        for i in range(k + 1, n):
            mi = m[i]
            aik = mi[k]
            for j in range(k + 1, n + 1):
                mi[j] = (akk * mi[j] - aik * mk[j]) // prev
            mi[k] = 0
        prev = akk
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        mi = m[i]
        acc = Fraction(mi[n])
        for j in range(i + 1, n):
            if mi[j]:
                acc -= mi[j] * x[j]
        x[i] = acc / mi[i]
    return x


def solve_sparse(
    rows: Sequence[Mapping[int, Fraction]], rhs: Sequence[Fraction]
) -> list[Fraction]:
    """Solve a sparse square system by symmetric (diagonal-pivot) elimination.

    Variables are eliminated greedily by smallest fill estimate, ties to the
    lowest index.  Diagonal pivots are nonzero for every elimination order
    when the matrix is a nonsingular M-matrix, which is the case for
    ``I - P`` restricted to the transient states of an absorbing chain; any
    other system falling on a zero pivot is handed to :func:`solve_dense`.
    """
    n = len(rows)
    if len(rhs) != n:
        raise ValueError("expected a square system")
    a = [{j: Fraction(v) for j, v in row.items() if v} for row in rows]
    b = [Fraction(v) for v in rhs]
    cols: list[set[int]] = [set() for _ in range(n)]
    for i, row in enumerate(a):
        for j in row:
            if not 0 <= j < n:
                raise ValueError(f"column {j} out of range")
            cols[j].add(i)
    alive = set(range(n))
    order = []
    pivots = []
    while alive:
        v = min(alive, key=lambda k: ((len(a[k]) - 1) * (len(cols[k]) - 1), k))
        row_v = a[v]
        d = row_v.get(v)
        if not d:
            return _dense_fallback(rows, rhs)
        alive.discard(v)
        for j in row_v:
            cols[j].discard(v)
        for i in list(cols[v]):
            row_i = a[i]
            f = row_i.pop(v) / d
            cols[v].discard(i)
            for j, val in row_v.items():
                if j == v:
                    continue
                new = row_i.get(j, 0) - f * val
                if new:
                    if j not in row_i:
                        cols[j].add(i)
                    row_i[j] = new
                elif j in row_i:
                    del row_i[j]
                    cols[j].discard(i)
            b[i] -= f * b[v]
        order.append(v)
        pivots.append(row_v)
    x = [Fraction(0)] * n
    for v, row_v in zip(reversed(order), reversed(pivots)):
        acc = b[v]
        for j, val in row_v.items():
            if j != v:
                acc -= val * x[j]
        x[v] = acc / row_v[v]
    return x


def _dense_fallback(rows, rhs):
    n = len(rows)
    dense = [[Fraction(0)] * n for _ in range(n)]
    for i, row in enumerate(rows):
        for j, v in row.items():
            dense[i][j] = Fraction(v)
    return solve_dense(dense, rhs)
