"""Dense two-phase primal simplex with Bland's rule.

Self-contained solver for the small linear programs behind the minimax
polynomial fits.  Those LPs have very few variables once dualized (the
number of polynomial coefficients plus one), so a dense tableau over the
dual is cheap: every pivot is O(rows * cols) with rows <= ~20.

Bland's entering/leaving rule makes the solver deterministic and immune to
cycling; speed is irrelevant at these sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError

__all__ = ["SimplexSolution", "solve_standard_form", "minimize_over_polytope"]

_TOL = 1e-9


@dataclass(frozen=True)
class SimplexSolution:
    x: np.ndarray
    objective: float
    duals: np.ndarray  # one multiplier per constraint row of the input
    iterations: int


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    t[row] /= t[row, col]
    factors = t[:, col].copy()
    factors[row] = 0.0
    t -= np.outer(factors, t[row])


def _run_phase(
    t: np.ndarray, basis: np.ndarray, allowed: int, tol: float, max_iter: int
) -> int:
    """Pivot until the cost row (last) has no reduced cost below -tol.

    ``allowed`` bounds the columns eligible to enter (excludes artificials in
    phase 2).  Bland's rule: smallest eligible entering index; ratio-test ties
    broken by smallest basic variable index.
    """
    iterations = 0
    while True:
        reduced = t[-1, :allowed]
        entering_candidates = np.nonzero(reduced < -tol)[0]
        if entering_candidates.size == 0:
            return iterations
        col = int(entering_candidates[0])
        column = t[:-1, col]
        positive = np.nonzero(column > tol)[0]
        if positive.size == 0:
            raise NumericalFailureError("LP is unbounded; formulation bug")
        ratios = t[:-1, -1][positive] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + tol * max(1.0, abs(best))]
        row = int(ties[np.argmin(basis[ties])])
        _pivot(t, row, col)
        basis[row] = col
        iterations += 1
        if iterations > max_iter:
            raise NumericalFailureError(
                f"simplex exceeded {max_iter} iterations; suspected numerical trouble"
            )


def solve_standard_form(
    c: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    *,
    tol: float = _TOL,
    max_iter: int | None = None,
) -> SimplexSolution:
    """Solve ``min c.x  s.t.  a @ x = b,  x >= 0``.

    Two-phase dense tableau.  Returns the optimal x, objective, and the dual
    multipliers of the equality rows (redundant rows detected in phase 1 get
    multiplier 0).  Raises NumericalFailureError on infeasible/unbounded
    input, which for this package's internal LPs indicates a formulation bug.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).copy()
    c = np.asarray(c, dtype=np.float64)
    m, n = a.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    if max_iter is None:
        max_iter = 200 * (m + n) + 5000

    a_orig = a
    flip = b < 0
    a = np.where(flip[:, None], -a, a)
    b = np.where(flip, -b, b)

    # Phase 1 tableau: [a | I | b] with cost row for min(sum of artificials).
    t = np.zeros((m + 1, n + m + 1))
    t[:m, :n] = a
    t[:m, n : n + m] = np.eye(m)
    t[:m, -1] = b
    t[-1, :n] = -a.sum(axis=0)
    t[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)

    iters = _run_phase(t, basis, allowed=n + m, tol=tol, max_iter=max_iter)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -t[-1, -1] > 1e-7 * scale:
        raise NumericalFailureError("LP is infeasible; formulation bug")

    # Drive leftover artificials out of the basis; a row with no eligible
    # pivot is redundant and is dropped.
    keep = np.ones(m, dtype=bool)
    for row in range(m):
        if basis[row] < n:
            continue
        pivots = np.nonzero(np.abs(t[row, :n]) > 1e-8)[0]
        if pivots.size == 0:
            keep[row] = False
        else:
            col = int(pivots[0])
            _pivot(t, row, col)
            basis[row] = col

    # Phase 2 rebuilds its tableau from the surviving rows and final basis.
    row_index = np.nonzero(keep)[0]
    return _phase_two(a_orig, a, b, c, basis, keep, row_index, tol, max_iter, iters)


def _phase_two(
    a_orig: np.ndarray,
    a_flipped: np.ndarray,
    b_flipped: np.ndarray,
    c: np.ndarray,
    basis: np.ndarray,
    keep: np.ndarray,
    row_index: np.ndarray,
    tol: float,
    max_iter: int,
    phase1_iters: int,
) -> SimplexSolution:
    m_full, n = a_flipped.shape
    a2 = a_flipped[keep]
    b2 = b_flipped[keep]
    basis2 = basis[keep].astype(int)
    m2 = a2.shape[0]

    # Fresh tableau in the phase-1 basis: B^-1 [A | b], plus the reduced cost row.
    basis_cols = a2[:, basis2]
    try:
        binv_a = np.linalg.solve(basis_cols, np.concatenate([a2, b2[:, None]], axis=1))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("singular basis after phase 1") from exc
    t = np.zeros((m2 + 1, n + 1))
    t[:m2] = binv_a
    cb = c[basis2]
    t[-1, :n] = c - cb @ t[:m2, :n]
    t[-1, -1] = -float(cb @ t[:m2, -1])

    iters = _run_phase(t, basis2, allowed=n, tol=tol, max_iter=max_iter)

    x = np.zeros(n)
    x[basis2] = t[:m2, -1]
    x[np.abs(x) < tol] = 0.0
    objective = float(c @ x)

    # Duals against the original (unflipped) rows: solve B^T y = c_B.
    duals = np.zeros(a_orig.shape[0])
    try:
        y = np.linalg.solve(a_orig[row_index][:, basis2].T, c[basis2])
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("singular basis at optimum") from exc
    duals[row_index] = y
    return SimplexSolution(
        x=x, objective=objective, duals=duals, iterations=phase1_iters + iters
    )


def minimize_over_polytope(
    c: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
    *,
    nonneg: bool = False,
    tol: float = _TOL,
) -> tuple[np.ndarray, float]:
    """Solve ``min c.v  s.t.  a_ub @ v <= b_ub`` with v free (or v >= 0).

    Solved through the standard-form dual, whose row count equals the number
    of v-variables (tiny here); v is recovered as the dual multipliers.  The
    recovered point is verified against the constraints before returning.
    """
    a_ub = np.asarray(a_ub, dtype=np.float64)
    b_ub = np.asarray(b_ub, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    q, p = a_ub.shape

    if nonneg:
        mat = np.concatenate([a_ub.T, -np.eye(p)], axis=1)
        cost = np.concatenate([b_ub, np.zeros(p)])
    else:
        mat = a_ub.T
        cost = b_ub
    sol = solve_standard_form(cost, mat, -c, tol=tol)
    v = sol.duals
    if nonneg:
        v = np.where(v < 0.0, 0.0, v)
    value = float(c @ v)

    scale = max(1.0, float(np.abs(b_ub).max(initial=0.0)))
    slack_violation = float((a_ub @ v - b_ub).max(initial=0.0))
    gap = abs(value - (-sol.objective))
    if slack_violation > 1e-6 * scale or gap > 1e-6 * scale:
        raise NumericalFailureError(
            f"LP primal recovery failed (violation {slack_violation:.2e}, gap {gap:.2e})"
        )
    return v, value
