"""Sparse exact linear systems over the Gaussian rationals."""

from __future__ import annotations

from typing import Hashable, Mapping

from .polyalg import GaussianRational, ZERO


class InconsistentSystem(ValueError):
    pass


def solve_exact(rows: Mapping[Hashable, dict[int, GaussianRational]],
                rhs: Mapping[Hashable, GaussianRational],
                nunknowns: int) -> dict[int, GaussianRational]:
    """Solve ``sum_j rows[e][j] x_j = rhs[e]`` for every equation key ``e``.

    Pivots are taken in increasing unknown index, free unknowns are zero, so
    the caller controls tie-breaking through the unknown ordering. Returns
    the nonzero part of the solution.
    """
    keys = list(rows) + [k for k in rhs if k not in rows]
    work = []
    for key in keys:
        row = {j: c for j, c in rows.get(key, {}).items() if c}
        b = rhs.get(key, ZERO)
        if row or b:
            work.append((row, b))

    pivots: dict[int, tuple[dict, GaussianRational]] = {}
    order: list[int] = []
    for row, b in work:
        row = dict(row)
        # pivot rows are fully reduced, so one pass suffices
        for col in [c for c in row if c in pivots]:
            f = row.get(col)
            if not f:
                continue
            prow, pb = pivots[col]
            for j, c in prow.items():
                v = row.get(j, ZERO) - f * c
                if v:
                    row[j] = v
                else:
                    row.pop(j, None)
            b = b - f * pb
        if not row:
            if b:
                raise InconsistentSystem("no solution")
            continue
        col = min(row)
        inv = GaussianRational(1) / row[col]
        row = {j: c * inv for j, c in row.items()}
        b = b * inv
        # keep pivot rows mutually reduced so back substitution is trivial
        for pc in order:
            prow, pb = pivots[pc]
            if col in prow:
                f = prow[col]
                for j, c in row.items():
                    v = prow.get(j, ZERO) - f * c
                    if v:
                        prow[j] = v
                    else:
                        prow.pop(j, None)
                pivots[pc] = (prow, pb - f * b)
        pivots[col] = (row, b)
        order.append(col)

    solution = {}
    for col, (row, b) in pivots.items():
        if b:
            solution[col] = b
    if any(j >= nunknowns for j in solution):
        raise ValueError("solution index out of range")
    return solution
