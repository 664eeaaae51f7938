"""Self-contained two-phase dense simplex for min c'x s.t. Ax = b, x >= 0.

Kept deliberately independent of the package's LP layer so tests can compare
the two implementations against each other. Bland's rule everywhere, so the
method terminates without anti-cycling heuristics. Returns the optimum, the
primal point, and the duals y = c_B B^{-1}.
"""

from __future__ import annotations

import numpy as np


class SimplexError(Exception):
    pass


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _iterate(T: np.ndarray, basis: list[int], ncols: int, tol: float) -> None:
    while True:
        col = -1
        for j in range(ncols):
            if T[-1, j] < -tol:
                col = j
                break
        if col < 0:
            return
        row, best = -1, np.inf
        for r in range(T.shape[0] - 1):
            if T[r, col] > tol:
                ratio = T[r, -1] / T[r, col]
                if ratio < best - tol or (
                    abs(ratio - best) <= tol and (row < 0 or basis[r] < basis[row])
                ):
                    best, row = ratio, r
        if row < 0:
            raise SimplexError("unbounded")
        _pivot(T, basis, row, col)


def solve(c, A, b, tol: float = 1e-9):
    """Return (objective, x, duals). Raises SimplexError if infeasible/unbounded."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificials form the starting basis.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, n : n + m] = 1.0
    for r in range(m):
        T[-1] -= T[r]
    basis = list(range(n, n + m))
    _iterate(T, basis, n + m, tol)
    if T[-1, -1] < -1e-7:
        raise SimplexError("infeasible")
    for r in range(m):  # drive leftover artificials out of the basis
        if basis[r] >= n:
            col = next((j for j in range(n) if abs(T[r, j]) > tol), None)
            if col is not None:
                _pivot(T, basis, r, col)

    rows = [r for r in range(m) if basis[r] < n or abs(T[r, -1]) > tol]
    keep = [r for r in range(m) if basis[r] < n]
    if len(keep) != len(rows):
        raise SimplexError("degenerate artificial with nonzero value")

    # Phase 2 on the reduced tableau.
    T2 = np.zeros((len(keep) + 1, n + 1))
    T2[: len(keep), :n] = T[keep, :n]
    T2[: len(keep), -1] = T[keep, -1]
    basis2 = [basis[r] for r in keep]
    T2[-1, :n] = c
    for r, bcol in enumerate(basis2):
        T2[-1] -= T2[-1, bcol] * T2[r]
    _iterate(T2, basis2, n, tol)

    x = np.zeros(n)
    for r, bcol in enumerate(basis2):
        x[bcol] = T2[r, -1]
    objective = float(c @ x)

    # Duals from the original (full-rank subset of) rows: solve B'y = c_B.
    rows_kept = keep
    B = A[np.ix_(rows_kept, basis2)]
    try:
        y_part = np.linalg.solve(B.T, c[basis2])
    except np.linalg.LinAlgError as exc:
        raise SimplexError("singular basis") from exc
    y = np.zeros(m)
    for i, r in enumerate(rows_kept):
        y[r] = y_part[i] * (-1.0 if neg[r] else 1.0)
    return objective, x, y
