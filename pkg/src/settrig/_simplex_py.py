"""Pure numpy tableau pivoting, the fallback for ``_simplex_ext``.

The tableau ``T`` has shape ``(m + 1, ncols + 1)``: constraint rows first,
reduced costs in the last row, right-hand side in the last column.
``T[m, -1]`` holds minus the current objective value.
"""
import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2


def pivot(T, r, j):
    T[r, :] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r, :])
    T[:, j] = 0.0
    T[r, j] = 1.0


def iterate(T, basis, n_enter, tol, max_iter):
    """Run Bland's rule on ``T`` in place.

    Only columns ``0..n_enter-1`` may enter the basis. Returns
    ``(status, pivots)``.
    """
    m = T.shape[0] - 1
    rhs = T[:m, -1]
    for it in range(max_iter):
        cand = np.flatnonzero(T[m, :n_enter] < -tol)
        if cand.size == 0:
            return OPTIMAL, it
        j = cand[0]
        col = T[:m, j]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = rhs[rows] / col[rows]
        rmin = ratios.min()
        ties = rows[ratios <= rmin + tol * max(1.0, abs(rmin))]
        r = ties[np.argmin(basis[ties])]
        pivot(T, r, j)
        basis[r] = j
        np.maximum(rhs, 0.0, out=rhs, where=rhs > -tol)
    return ITERATION_LIMIT, max_iter
