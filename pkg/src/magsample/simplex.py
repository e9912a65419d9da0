"""Dense tableau simplex for the small linear programs used in this package.

:func:`solve_inequality_lp` maximizes ``c @ x`` subject to ``A @ x <= b`` and
``x >= 0`` where ``b >= 0``, so the slack basis is an immediately feasible
start and no phase-one is needed. Pricing uses Dantzig's rule for speed and
switches permanently to Bland's rule (which cannot cycle) once the objective
stalls over many consecutive pivots; the leaving row always breaks ratio ties
by smallest basis index, Bland's anti-degeneracy choice.

The reported solution is never read off the tableau. After termination the
final basis is refactorized against the original data and the solution is
verified directly: primal feasibility, dual feasibility of the multipliers,
complementary slackness, and the duality gap. A failure of any check raises
:class:`~magsample.errors.SolverError` carrying the offending residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

try:  # BLAS rank-1 update halves the per-pivot memory traffic when available
    from scipy.linalg.blas import dger as _dger
except Exception:  # pragma: no cover - scipy is optional at runtime
    _dger = None

_STALL_PIVOTS = 200
_PIVOT_TOL = 1e-11
_COST_TOL = 1e-9
_PRIMAL_TOL = 1e-9
_DUAL_TOL = 1e-7
_GAP_TOL = 1e-6


@dataclass
class LpSolution:
    """Certified solution of an inequality-form LP."""

    x: np.ndarray          # primal variables, length n
    duals: np.ndarray      # multipliers of the <= rows, length m
    slacks: np.ndarray     # b - A @ x
    objective: float
    iterations: int
    basis: np.ndarray


def solve_inequality_lp(c, A, b, max_iter: int = 100000) -> LpSolution:
    """Maximize ``c @ x`` s.t. ``A @ x <= b``, ``x >= 0`` (requires ``b >= 0``)."""
    A = np.ascontiguousarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise SolverError("inconsistent LP dimensions")
    if np.any(b < 0):
        raise SolverError("slack start requires a nonnegative right-hand side")

    T = np.empty((m + 1, n + m + 1), order="F")
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    T[m, n:] = 0.0

    basis = np.arange(n, n + m)
    bland = False
    stall = 0
    last_obj = 0.0
    iterations = 0
    scratch = None if _dger is not None else np.empty_like(T)

    while True:
        red = T[m, : n + m]
        if bland:
            negs = np.flatnonzero(red < -_COST_TOL)
            if negs.size == 0:
                break
            j = int(negs[0])
        else:
            j = int(np.argmin(red))
            if red[j] >= -_COST_TOL:
                break
        if iterations >= max_iter:
            raise SolverError(
                f"simplex iteration budget ({max_iter}) exhausted",
                residual=float(max(0.0, -red.min())),
            )
        col = T[:m, j]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise SolverError(f"linear program is unbounded along variable {j}")
        ratios = T[rows, -1] / col[rows]
        rmin = ratios.min()
        ties = rows[ratios <= rmin]
        r = int(ties[np.argmin(basis[ties])])

        piv = T[r, j]
        T[r] /= piv
        colv = T[:, j].copy()
        colv[r] = 0.0
        if _dger is not None:
            # row r is safe from aliasing: colv[r] is zero
            T = _dger(-1.0, colv, T[r], a=T, overwrite_a=1, overwrite_x=1, overwrite_y=0)
        else:
            np.multiply(colv[:, None], T[r][None, :], out=scratch)
            np.subtract(T, scratch, out=T)
        T[:, j] = 0.0
        T[r, j] = 1.0
        basis[r] = j
        iterations += 1

        obj = T[m, -1]
        if obj <= last_obj + 1e-13:
            stall += 1
            if stall >= _STALL_PIVOTS:
                bland = True
        else:
            stall = 0
        last_obj = obj

    # Refactorize from the original data; the tableau only guided pivoting.
    full = np.concatenate([A, np.eye(m)], axis=1)
    cfull = np.concatenate([c, np.zeros(m)])
    B = full[:, basis]
    try:
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, cfull[basis])
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular final basis: {exc}") from exc
    xfull = np.zeros(n + m)
    xfull[basis] = xb

    objective = float(c @ xfull[:n])
    eq_residual = float(np.max(np.abs(full @ xfull - b))) if m else 0.0
    neg_residual = float(max(0.0, -xfull.min())) if xfull.size else 0.0
    reduced = cfull - full.T @ y
    dual_residual = float(max(0.0, reduced.max()))
    gap = abs(objective - float(b @ y))
    comp = float(np.max(np.abs(xfull * reduced))) if xfull.size else 0.0

    worst = max(eq_residual, neg_residual, dual_residual, comp)
    if (
        eq_residual > 1e-6
        or neg_residual > _PRIMAL_TOL
        or dual_residual > _DUAL_TOL
        or gap > _GAP_TOL * max(1.0, abs(objective))
        or comp > 1e-6 * max(1.0, abs(objective))
    ):
        raise SolverError(
            "final basis failed verification "
            f"(eq={eq_residual:.2e}, neg={neg_residual:.2e}, "
            f"dual={dual_residual:.2e}, gap={gap:.2e}, comp={comp:.2e})",
            residual=worst,
        )

    return LpSolution(
        x=xfull[:n],
        duals=y,
        slacks=xfull[n:],
        objective=objective,
        iterations=iterations,
        basis=basis.copy(),
    )
