"""Exact phase-1 simplex for small linear feasibility systems.

Used by the AdWords click-decomposition search, which must stay independent of
the aggregated-oracle membership test it is checked against.  Everything is
Fraction arithmetic; Bland's rule guarantees termination.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

ZERO = Fraction(0)
ONE = Fraction(1)

Row = Tuple[Dict[int, Fraction], Fraction]


def feasible_point(num_vars: int, eq_rows: Sequence[Row],
                   le_rows: Sequence[Row]) -> Optional[List[Fraction]]:
    """Find y >= 0 with E y = g and A y <= b, or None if infeasible.

    Rows are (sparse coefficient dict, rhs); every rhs must be >= 0, which the
    callers guarantee (polymatroid values and allocations are nonnegative).
    """
    for _, rhs in list(eq_rows) + list(le_rows):
        if rhs < 0:
            raise ValueError("feasible_point requires nonnegative right-hand sides")

    n_le, n_eq = len(le_rows), len(eq_rows)
    slack0 = num_vars
    art0 = num_vars + n_le
    width = num_vars + n_le + n_eq + 1       # final column is the rhs

    tableau: List[List[Fraction]] = []
    basis: List[int] = []
    for k, (coeffs, rhs) in enumerate(le_rows):
        row = [ZERO] * width
        for j, c in coeffs.items():
            row[j] = Fraction(c)
        row[slack0 + k] = ONE
        row[-1] = Fraction(rhs)
        tableau.append(row)
        basis.append(slack0 + k)
    for k, (coeffs, rhs) in enumerate(eq_rows):
        row = [ZERO] * width
        for j, c in coeffs.items():
            row[j] = Fraction(c)
        row[art0 + k] = ONE
        row[-1] = Fraction(rhs)
        tableau.append(row)
        basis.append(art0 + k)

    # Phase-1 objective: minimize the sum of artificials.  Reduced costs start
    # as minus the sum of the artificial rows.
    cost = [ZERO] * width
    for row in tableau[n_le:]:
        for j in range(width):
            cost[j] -= row[j]
    for k in range(n_eq):
        cost[art0 + k] = ZERO

    while True:
        entering = None
        for j in range(art0):                # artificials never re-enter
            if cost[j] < 0:
                entering = j
                break
        if entering is None:
            break
        pivot_row, best_ratio = None, None
        for i, row in enumerate(tableau):
            if row[entering] > 0:
                ratio = row[-1] / row[entering]
                if (best_ratio is None or ratio < best_ratio
                        or (ratio == best_ratio and basis[i] < basis[pivot_row])):
                    best_ratio, pivot_row = ratio, i
        if pivot_row is None:
            raise ArithmeticError("phase-1 objective unbounded; inconsistent input")
        _pivot(tableau, cost, pivot_row, entering)
        basis[pivot_row] = entering

    objective = -cost[-1]
    if objective != 0:
        return None
    solution = [ZERO] * num_vars
    for i, var in enumerate(basis):
        if var < num_vars:
            solution[var] = tableau[i][-1]
    return solution


def _pivot(tableau: List[List[Fraction]], cost: List[Fraction],
           pivot_row: int, pivot_col: int) -> None:
    row = tableau[pivot_row]
    factor = row[pivot_col]
    tableau[pivot_row] = row = [v / factor for v in row]
    for i, other in enumerate(tableau):
        if i != pivot_row and other[pivot_col] != 0:
            scale = other[pivot_col]
            tableau[i] = [a - scale * b for a, b in zip(other, row)]
    if cost[pivot_col] != 0:
        scale = cost[pivot_col]
        for j in range(len(cost)):
            cost[j] -= scale * row[j]
