"""Dense two-phase primal simplex for equality-form LPs: min c.x, Ax = b, x >= 0.

Pricing is steepest-edge flavored (reduced cost scaled by column norm), the
ratio test breaks ties by largest pivot magnitude, and a degenerate streak
switches to Bland's rule (lowest eligible index everywhere) until the
objective moves again, so cycling is impossible while ordinary progress stays
fast.  All choices are index-deterministic: identical inputs give identical
pivot sequences.  Intended for desk-scale belief LPs (up to roughly 1e4
columns); larger instances should be exported and solved externally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

TOL = 1e-9


@dataclass
class SimplexResult:
    status: str                 # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | None
    iterations: int


def solve(c, A, b, max_iter: int | None = None) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    if A.ndim != 2:
        A = A.reshape((len(b), -1))
    A, b = _independent_rows(A, b)
    m, n = A.shape
    if max_iter is None:
        max_iter = 5000 + 80 * (m + n)

    A = A.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificial basis.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :] = -T[:m, :].sum(axis=0)
    T[m, n:n + m] = 0.0
    basis = list(range(n, n + m))

    iters = _iterate(T, basis, limit=n + m, max_iter=max_iter)
    if iters < 0:
        raise SolverError("phase-1 unbounded: inconsistent tableau")
    if -T[m, -1] > 1e-7:
        return SimplexResult("infeasible", None, None, iters)

    keep_rows = _drive_out_artificials(T, basis, n)

    # Phase 2 over the original columns.
    rows = [i for i in range(m) if keep_rows[i]]
    T2 = np.zeros((len(rows) + 1, n + 1))
    basis2 = []
    for r, i in enumerate(rows):
        T2[r, :n] = T[i, :n]
        T2[r, -1] = T[i, -1]
        basis2.append(basis[i])
    obj = np.zeros(n + 1)
    obj[:n] = c
    for r, bi in enumerate(basis2):
        if abs(obj[bi]) > 0.0:
            obj -= obj[bi] * T2[r]
    T2[-1] = obj

    it2 = _iterate(T2, basis2, limit=n, max_iter=max_iter)
    if it2 < 0:
        return SimplexResult("unbounded", None, None, iters + (-it2))

    x = np.zeros(n)
    for r, bi in enumerate(basis2):
        if bi < n:
            x[bi] = T2[r, -1]
    np.clip(x, 0.0, None, out=x)
    return SimplexResult("optimal", x, float(c @ x), iters + it2)


def _iterate(T, basis, limit, max_iter) -> int:
    """Run pivots in place; returns iterations, or -iterations when unbounded."""
    m = T.shape[0] - 1
    iters = 0
    stall = 0
    stall_switch = 200
    while True:
        row_obj = T[-1, :limit]
        bland = stall > stall_switch
        if bland:
            cand = np.nonzero(row_obj < -TOL)[0]
            if len(cand) == 0:
                return iters
            j = int(cand[0])
        else:
            negs = row_obj < -TOL
            if not negs.any():
                return iters
            # steepest-edge flavor: scale reduced costs by column norms
            norms = np.sqrt(1.0 + np.square(T[:m, :limit][:, negs]).sum(axis=0))
            scores = row_obj[negs] / norms
            local = int(np.argmin(scores))
            j = int(np.nonzero(negs)[0][local])
        col = T[:m, j]
        pos = col > TOL
        if not pos.any():
            return -max(iters, 1)
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = np.min(ratios)
        if bland:
            ties = np.nonzero(ratios <= best + 1e-12)[0]
            r = int(min(ties, key=lambda i: basis[i]))
        else:
            # Harris flavor: among near-minimal ratios take the largest pivot
            window = best + 1e-9 + 1e-9 * abs(best)
            ties = np.nonzero(ratios <= window)[0]
            r = int(max(ties, key=lambda i: (abs(col[i]), -basis[i])))
        before = T[-1, -1]
        _pivot(T, r, j)
        basis[r] = j
        iters += 1
        if abs(T[-1, -1] - before) <= 1e-12:
            stall += 1
        else:
            stall = 0
        if iters > max_iter:
            raise SolverError(
                f"simplex iteration cap {max_iter} exceeded "
                f"({m} rows, {limit} columns, objective {-T[-1, -1]:.6g})"
            )


def _independent_rows(A, b):
    """Numerically independent row subsystem of [A|b] (Gram-Schmidt sweep).

    Our LPs carry many structurally implied equalities (marginalization
    chains); dropping them up front keeps phase 1 well conditioned.  A row
    kept despite a dependent coefficient part (inconsistent rhs) is caught by
    phase 1 as infeasibility.
    """
    m, n = A.shape
    if m == 0:
        return A, b
    M = np.hstack([A, b.reshape(-1, 1)])
    if m <= n + 1:
        # fast path: an unpivoted QR certifies full row rank
        r_diag = np.abs(np.diag(np.linalg.qr(M.T, mode="r")))
        scale = max(np.abs(M).max(), 1.0)
        if len(r_diag) == m and r_diag.min() > 1e-9 * scale:
            return A, b
    kept: list[int] = []
    Q = np.zeros((m, n + 1))
    k = 0
    for i in range(m):
        row = M[i]
        scale = np.linalg.norm(row)
        if scale <= 1e-12:
            continue
        resid = row.copy()
        if k:
            resid = resid - Q[:k].T @ (Q[:k] @ resid)
            resid = resid - Q[:k].T @ (Q[:k] @ resid)
        rnorm = np.linalg.norm(resid)
        if rnorm > 1e-9 * (1.0 + scale):
            kept.append(i)
            Q[k] = resid / rnorm
            k += 1
    return A[kept], b[kept]


def _pivot(T, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, j] = 0.0
    T[r, j] = 1.0


def _drive_out_artificials(T, basis, n) -> list[bool]:
    m = T.shape[0] - 1
    keep = [True] * m
    in_basis = set(basis)
    for i in range(m):
        if basis[i] < n:
            continue
        pivot_col = -1
        row = T[i, :n]
        cand = np.nonzero(np.abs(row) > 1e-7)[0]
        for j in cand:
            if int(j) not in in_basis:
                pivot_col = int(j)
                break
        if pivot_col >= 0:
            _pivot(T, i, pivot_col)
            in_basis.discard(basis[i])
            basis[i] = pivot_col
            in_basis.add(pivot_col)
        else:
            keep[i] = False  # redundant row
    return keep
