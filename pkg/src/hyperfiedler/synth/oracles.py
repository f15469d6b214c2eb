"""Slow, independent reference computations for cross-checking the fast paths.

Nothing here calls into the pipeline's numerical code: the eigen oracle is a
cyclic Jacobi sweep, the clique oracle scans every vertex subset, and the
regression oracle solves the normal equations by hand-rolled elimination.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import NonConvergence, Singular, TooLarge


def dense_eig_oracle(L, tol: float = 1e-12, max_sweeps: int = 100) -> list:
    """Sorted eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(getattr(L, "values", L), dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    A = 0.5 * (A + A.T)
    offdiag = ~np.eye(n, dtype=bool)

    def off_norm():
        return math.sqrt(float((A[offdiag] ** 2).sum()))

    off = off_norm()
    for _ in range(max_sweeps):
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                # rotation angle zeroing A[p, q] (Golub & Van Loan, alg. 8.4.1)
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = A[p].copy(), A[q].copy()
                A[p], A[q] = c * rp - s * rq, s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
                A[p, q] = A[q, p] = 0.0
        off = off_norm()
    if off <= tol:
        return sorted(float(x) for x in np.diag(A))
    raise NonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps",
                         {"sweeps": max_sweeps, "off_norm": off})


def brute_force_cliques(adj, min_size: int = 3, max_size: int = 12) -> set:
    """Every maximal clique with ``min_size <= size <= max_size``, as frozensets of indices.

    Accepts a boolean matrix or anything with an ``edges`` matrix attribute.
    """
    E = np.asarray(getattr(adj, "edges", adj), dtype=bool)
    n = E.shape[0]
    if n > 15:
        raise TooLarge(f"{n} vertices; exhaustive scan is limited to 15")
    nbr = [sum(1 << j for j in range(n) if E[i, j] and i != j) for i in range(n)]
    is_clique = bytearray(1 << n)
    is_clique[0] = 1
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << low)
        is_clique[mask] = is_clique[rest] and (nbr[low] & rest) == rest
    out = set()
    for mask in range(1, 1 << n):
        if not is_clique[mask]:
            continue
        size = bin(mask).count("1")
        if not min_size <= size <= max_size:
            continue
        extendable = any(not (mask >> v) & 1 and (nbr[v] & mask) == mask for v in range(n))
        if not extendable:
            out.add(frozenset(v for v in range(n) if (mask >> v) & 1))
    return out


def _gauss_solve(M: list, rhs: list) -> list:
    """Solve ``M x = rhs`` (rhs may have several columns) with partial pivoting."""
    n = len(M)
    m = len(rhs[0])
    A = [list(M[i]) + list(rhs[i]) for i in range(n)]
    scale = max(abs(v) for row in M for v in row) or 1.0
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(A[r][col]))
        if abs(A[piv][col]) <= 1e-14 * scale:
            raise Singular("normal equations are singular")
        A[col], A[piv] = A[piv], A[col]
        for r in range(col + 1, n):
            f = A[r][col] / A[col][col]
            if f:
                for c in range(col, n + m):
                    A[r][c] -= f * A[col][c]
    x = [[0.0] * m for _ in range(n)]
    for r in range(n - 1, -1, -1):
        for j in range(m):
            acc = A[r][n + j] - sum(A[r][c] * x[c][j] for c in range(r + 1, n))
            x[r][j] = acc / A[r][r]
    return x


def normal_equation_oracle(X, y) -> np.ndarray:
    """``(X'X)^-1 X'y`` by explicit elimination on the normal equations."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    xtx = (X.T @ X).tolist()
    xty = (X.T @ y).reshape(-1, 1).tolist()
    return np.array([row[0] for row in _gauss_solve(xtx, xty)])


def normal_equation_stats(X, y) -> dict:
    """Coefficients plus classical SEs, R^2 and overall F (intercept in column 0)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    xtx = (X.T @ X).tolist()
    inv = np.array(_gauss_solve(xtx, np.eye(p).tolist()))
    beta = normal_equation_oracle(X, y)
    e = y - X @ beta
    rss = float(e @ e)
    s2 = rss / (n - p)
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss
    f = ((tss - rss) / (p - 1)) / s2 if p > 1 else math.nan
    return {"params": beta, "bse": np.sqrt(np.diag(inv) * s2), "rsquared": r2, "fvalue": f,
            "rss": rss}
