"""Normalized (hyper)graph Laplacians and their algebraic connectivity."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraph, EmptyHypergraph, NonConvergence
from .netbuild import Adjacency, Hypergraph

PSD_TOL = 1e-10


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix with row/column labels."""

    values: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        a = np.array(self.values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"not square: {a.shape}")
        # mirror the upper triangle so symmetry is exact
        a = np.triu(a) + np.triu(a, 1).T
        a.setflags(write=False)
        object.__setattr__(self, "values", a)
        labels = tuple(self.labels) or tuple(range(a.shape[0]))
        if len(labels) != a.shape[0]:
            raise ValueError("label count does not match dimension")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SpectralResult:
    lambda2: float
    fiedler_vector: np.ndarray
    covered_vertices: tuple
    eigenvalues: np.ndarray = field(repr=False, default=None)
    iterations: int = 0
    residual_norm: float = 0.0
    degenerate: bool = False


def zhou_laplacian(hg: Hypergraph) -> SymMatrix:
    """``I - Dv^-1/2 H De^-1 H^T Dv^-1/2`` over the covered vertices."""
    if hg.empty or len(hg.vertices) == 0:
        raise EmptyHypergraph("hypergraph has no hyperedges")
    H = hg.incidence
    dv_isqrt = 1.0 / np.sqrt(hg.vertex_degrees)
    theta = (H.multiply(1.0 / hg.edge_sizes[None, :]) @ H.T).toarray()
    theta = dv_isqrt[:, None] * theta * dv_isqrt[None, :]
    return SymMatrix(np.eye(len(hg.vertices)) - theta, labels=hg.vertices)


def graph_laplacian(adj: Adjacency) -> SymMatrix:
    """Symmetric normalized Laplacian ``I - D^-1/2 A D^-1/2`` over non-isolated vertices."""
    A = np.asarray(adj.edges, dtype=float)
    deg = A.sum(axis=1)
    keep = np.flatnonzero(deg > 0)
    if keep.size < 2:
        raise EmptyGraph("graph has no edges")
    A = A[np.ix_(keep, keep)]
    d = 1.0 / np.sqrt(deg[keep])
    L = np.eye(keep.size) - d[:, None] * A * d[None, :]
    return SymMatrix(L, labels=tuple(adj.tickers[i] for i in keep))


def _orient(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def fiedler(L: SymMatrix) -> SpectralResult:
    """Second-smallest eigenpair of a Laplacian via a dense symmetric eigensolve."""
    n = L.dim
    if n < 2:
        return SpectralResult(0.0, np.ones(n), L.labels, np.zeros(n), degenerate=True)
    try:
        w, V = np.linalg.eigh(L.values)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigensolver failed on {n}x{n} Laplacian",
                             {"dim": n, "error": str(exc)}) from exc
    order = np.argsort(w, kind="stable")
    w, V = w[order], V[:, order]
    v = _orient(V[:, 1])
    lam = float(w[1])
    resid = float(np.linalg.norm(L.values @ v - lam * v))
    return SpectralResult(lambda2=max(lam, 0.0), fiedler_vector=v, covered_vertices=L.labels,
                          eigenvalues=w, iterations=1, residual_norm=resid)


def degenerate_result(labels=()) -> SpectralResult:
    """Stand-in for empty or single-vertex networks: disconnected, so 0."""
    n = len(labels)
    return SpectralResult(0.0, np.zeros(n), tuple(labels), np.zeros(n), degenerate=True)


def hypergraph_fiedler(hg: Hypergraph) -> SpectralResult:
    if hg.empty or len(hg.vertices) < 2:
        return degenerate_result(hg.vertices)
    return fiedler(zhou_laplacian(hg))


def graph_fiedler(adj: Adjacency) -> SpectralResult:
    try:
        L = graph_laplacian(adj)
    except EmptyGraph:
        return degenerate_result()
    return fiedler(L)
