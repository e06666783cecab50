"""Exact rational linear feasibility via phase-1 simplex with Bland's rule.

Solves: does x >= 0 with A x = b exist?  All arithmetic is Fraction, so
there are no tolerances and no cycling (Bland's rule guarantees
termination).  Sized for small instances; the joint-distribution
problems in this package have 16 variables and 17 rows.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence


def find_feasible(
    a_matrix: Sequence[Sequence[Fraction]], b_vector: Sequence[Fraction]
) -> Optional[list[Fraction]]:
    """Return some x >= 0 solving A x = b exactly, or None if infeasible."""
    m = len(a_matrix)
    if m == 0:
        return []
    n = len(a_matrix[0])

    # standardize to b >= 0, append one artificial per row
    rows: list[list[Fraction]] = []
    for i in range(m):
        row = [Fraction(v) for v in a_matrix[i]]
        rhs = Fraction(b_vector[i])
        if len(row) != n:
            raise ValueError("ragged constraint matrix")
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        rows.append(row + art + [rhs])
    basis = [n + i for i in range(m)]
    width = n + m

    # phase-1 objective: minimize the artificial sum; reduced costs after
    # pricing out the artificial basis
    zrow = [Fraction(0)] * (width + 1)
    for j in range(n):
        zrow[j] = -sum(rows[i][j] for i in range(m))
    zrow[width] = -sum(rows[i][width] for i in range(m))

    while True:
        entering = next((j for j in range(width) if zrow[j] < 0), None)
        if entering is None:
            break
        pivot_row = None
        best_ratio = None
        for i in range(m):
            coeff = rows[i][entering]
            if coeff > 0:
                ratio = rows[i][width] / coeff
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[pivot_row])
                ):
                    best_ratio = ratio
                    pivot_row = i
        if pivot_row is None:
            raise AssertionError("phase-1 objective is bounded; unbounded pivot is a bug")
        _pivot(rows, zrow, basis, pivot_row, entering, width)

    if zrow[width] != 0:
        return None
    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = rows[i][width]
    return x


def _pivot(rows, zrow, basis, pr: int, pc: int, width: int) -> None:
    piv = rows[pr][pc]
    rows[pr] = [v / piv for v in rows[pr]]
    for i in range(len(rows)):
        if i != pr and rows[i][pc] != 0:
            f = rows[i][pc]
            rows[i] = [v - f * p for v, p in zip(rows[i], rows[pr])]
    if zrow[pc] != 0:
        f = zrow[pc]
        for j in range(width + 1):
            zrow[j] -= f * rows[pr][j]
    basis[pr] = pc
