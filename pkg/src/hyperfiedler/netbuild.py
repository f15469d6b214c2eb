"""From residual returns to hypergraphs, one event window at a time.

Per reference day ``t`` and horizon ``k`` the pre-window is trading days
``[t-k, t-1]`` and the post-window ``[t+1, t+k]``.  Each window's residuals
give a Pearson correlation matrix, which a sector-aware dual threshold turns
into an adjacency; maximal cliques of that graph become hyperedges.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyWindow
from .marketdata import UNKNOWN_SECTOR, Panel, SectorMap

log = logging.getLogger(__name__)

K_MIN, K_MAX = 5, 20


@dataclass(frozen=True)
class NetConfig:
    """Knobs for network construction.  Thresholds are echoed into all outputs."""

    theta_intra: float = 0.30
    theta_inter: float = 0.50
    absolute: bool = False
    min_size: int = 3
    max_size: int = 12
    max_cliques: Optional[int] = 400
    budget: int = 5_000_000
    wall_clock: Optional[float] = None  # seconds; replaces the step budget when set
    split_oversize: bool = False
    min_stock_obs: Optional[int] = None  # default ceil(0.8 k)
    min_pair_obs: Optional[int] = None  # default max(4, ceil(0.8 k))
    min_window_stocks: int = 30

    def stock_obs(self, k: int) -> int:
        return self.min_stock_obs if self.min_stock_obs is not None else math.ceil(0.8 * k)

    def pair_obs(self, k: int) -> int:
        return self.min_pair_obs if self.min_pair_obs is not None else max(4, math.ceil(0.8 * k))


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowSpec:
    reference_date: np.datetime64
    reference_index: int
    k: int
    side: str
    start: int  # first row, inclusive
    stop: int  # last row + 1

    @property
    def key(self):
        return (self.start, self.stop)


def make_windows(dates, k: int):
    """One ``(pre, post)`` pair per day with ``k`` full trading days either side."""
    if not K_MIN <= k <= K_MAX:
        raise ValueError(f"horizon k={k} outside [{K_MIN}, {K_MAX}]")
    dates = np.asarray(dates, dtype="datetime64[D]")
    n = len(dates)
    pairs = []
    for t in range(k, n - k):
        pairs.append((WindowSpec(dates[t], t, k, "pre", t - k, t),
                      WindowSpec(dates[t], t, k, "post", t + 1, t + k + 1)))
    skipped = n - len(pairs)
    if skipped:
        log.debug("k=%d: %d of %d days lack a full window pair", k, min(skipped, n), n)
    return pairs


# ---------------------------------------------------------------------------
# correlations and thresholds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrMatrix:
    tickers: tuple
    values: np.ndarray  # NaN where the pair lacks data
    counts: np.ndarray

    def __getitem__(self, pair):
        a, b = pair
        return self.values[self.tickers.index(a), self.tickers.index(b)]


def correlation_matrix(panel: Panel, window: WindowSpec, min_pair_obs: int | None = None,
                       min_stock_obs: int | None = None) -> CorrMatrix:
    """Pairwise-complete Pearson correlations over one window.

    Stocks with fewer than ``min_stock_obs`` valid days in the window are
    dropped; pairs with fewer than ``min_pair_obs`` joint days are NaN.
    """
    k = window.stop - window.start
    if min_stock_obs is None:
        min_stock_obs = math.ceil(0.8 * k)
    if min_pair_obs is None:
        min_pair_obs = max(4, math.ceil(0.8 * k))
    block = np.asarray(panel.values[window.start:window.stop], dtype=float)
    valid = ~np.isnan(block)
    keep = np.flatnonzero(valid.sum(axis=0) >= min_stock_obs)
    if keep.size < 2:
        raise EmptyWindow(f"window {window.side} of {window.reference_date}: "
                          f"{keep.size} stocks with >= {min_stock_obs} observations")
    block, valid = block[:, keep], valid[:, keep]
    tickers = tuple(panel.tickers[j] for j in keep)
    m = len(tickers)

    full = valid.all(axis=0)
    counts = valid.T.astype(np.int64) @ valid.astype(np.int64)
    corr = np.full((m, m), np.nan)

    fi = np.flatnonzero(full)
    if fi.size:
        x = block[:, fi]
        x = x - x.mean(axis=0)
        ss = np.sqrt((x * x).sum(axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (x.T @ x) / np.outer(ss, ss)
        corr[np.ix_(fi, fi)] = c

    partial = np.flatnonzero(~full)
    for a in partial:
        for b in range(m):
            if b == a or (not full[b] and b < a):
                continue
            ok = valid[:, a] & valid[:, b]
            if ok.sum() < 2:
                continue
            corr[a, b] = corr[b, a] = _pearson(block[ok, a], block[ok, b])

    corr[counts < min_pair_obs] = np.nan
    corr = np.clip(corr, -1.0, 1.0)
    corr = np.triu(corr, 1)
    corr = corr + corr.T
    np.fill_diagonal(corr, 1.0)
    return CorrMatrix(tickers=tickers, values=corr, counts=counts)


def _pearson(x, y):
    x = x - x.mean()
    y = y - y.mean()
    den = math.sqrt(float(x @ x) * float(y @ y))
    return float(x @ y) / den if den > 0 else math.nan


@dataclass(frozen=True)
class Adjacency:
    tickers: tuple
    edges: np.ndarray  # bool, symmetric, zero diagonal
    weights: np.ndarray  # correlation on retained edges, 0 elsewhere
    theta_intra: float = 0.30
    theta_inter: float = 0.50

    @property
    def n_edges(self) -> int:
        return int(np.triu(self.edges, 1).sum())

    def neighbor_bits(self) -> list:
        packed = np.packbits(np.asarray(self.edges, dtype=bool), axis=1, bitorder="little")
        return [int.from_bytes(row.tobytes(), "little") for row in packed]


def threshold_adjacency(corr: CorrMatrix, sectors: SectorMap, theta_intra: float = 0.30,
                        theta_inter: float = 0.50, absolute: bool = False) -> Adjacency:
    """Keep edge (i, j) iff its correlation clears the sector-specific threshold.

    Same-sector pairs need ``rho >= theta_intra``, all other pairs
    ``rho >= theta_inter``.  Tickers in the ``UNKNOWN`` sector always count as
    cross-sector.  With ``absolute`` the test is on ``|rho|``.
    """
    if not (0 < theta_intra < 1 and 0 < theta_inter < 1):
        raise ValueError("thresholds must lie in (0, 1)")
    if theta_intra > theta_inter:
        raise ValueError("theta_intra must not exceed theta_inter")
    labels = np.array([sectors[t] for t in corr.tickers], dtype=object)
    same = (labels[:, None] == labels[None, :]) & (labels[:, None] != UNKNOWN_SECTOR)
    thr = np.where(same, theta_intra, theta_inter)
    rho = np.abs(corr.values) if absolute else corr.values
    with np.errstate(invalid="ignore"):
        edges = np.nan_to_num(rho, nan=-np.inf) >= thr
    np.fill_diagonal(edges, False)
    edges &= edges.T
    weights = np.where(edges, np.nan_to_num(corr.values), 0.0)
    return Adjacency(tickers=corr.tickers, edges=edges, weights=weights,
                     theta_intra=theta_intra, theta_inter=theta_inter)


# ---------------------------------------------------------------------------
# cliques
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CliqueSet:
    tickers: tuple
    cliques: tuple  # sorted index tuples, in retention order
    truncated: bool = False
    fallback_used: bool = False
    oversize: int = 0
    steps: int = 0

    def __len__(self):
        return len(self.cliques)

    def members(self):
        return [tuple(self.tickers[i] for i in c) for c in self.cliques]

    def as_sets(self):
        return {frozenset(c) for c in self.cliques}


class _OutOfBudget(Exception):
    pass


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def _maximal_cliques(nbrs: list, min_size: int, budget: int, deadline: float | None):
    """Tomita-style pivoting Bron-Kerbosch over bitsets.

    Branches that cannot reach ``min_size`` vertices are pruned, so only
    maximal cliques of at least that size are reported.
    """
    found = []
    steps = 0

    def expand(r: tuple, p: int, x: int):
        nonlocal steps
        steps += 1
        if steps > budget:
            raise _OutOfBudget
        if deadline is not None and steps % 256 == 0 and time.perf_counter() > deadline:
            raise _OutOfBudget
        if not p:
            if not x and len(r) >= min_size:
                found.append(r)
            return
        np_ = p.bit_count()
        if len(r) + np_ < min_size:
            return
        # pivot: vertex of P | X with the most neighbours in P
        px = p | x
        best, pivot = -1, 0
        while px:
            low = px & -px
            u = low.bit_length() - 1
            c = (p & nbrs[u]).bit_count()
            if c > best:
                best, pivot = c, u
                if c == np_ - (p >> u & 1):
                    break
            px ^= low
        cand = p & ~nbrs[pivot]
        while cand:
            low = cand & -cand
            cand ^= low
            nv = nbrs[low.bit_length() - 1]
            expand(r + (low.bit_length() - 1,), p & nv, x & nv)
            p ^= low
            x |= low

    everything = (1 << len(nbrs)) - 1
    expand((), everything, 0)
    return [tuple(sorted(c)) for c in found], steps


def _triangles(nbrs: list):
    out = []
    for i, ni in enumerate(nbrs):
        higher = ni >> (i + 1) << (i + 1)
        for j in _bits(higher):
            for k in _bits(higher & nbrs[j] & ~((1 << (j + 1)) - 1)):
                out.append((i, j, k))
    return out


def _clique_weights(w: np.ndarray, cliques: list) -> np.ndarray:
    """Sum of in-clique edge weights for every clique at once."""
    if not cliques:
        return np.zeros(0)
    M = np.zeros((len(cliques), w.shape[0]))
    rows = np.repeat(np.arange(len(cliques)), [len(c) for c in cliques])
    M[rows, np.concatenate([np.asarray(c) for c in cliques])] = 1.0
    # rounded so that summation-order noise cannot reorder near-ties
    return np.round(0.5 * np.einsum("ij,ij->i", M @ w, M), 10)


def _trim_oversize(c: tuple, w: np.ndarray, max_size: int) -> tuple:
    # keep the max_size members with the largest in-clique strength, ties by index
    idx = np.asarray(c)
    strength = w[idx][:, idx].sum(axis=1)
    order = np.lexsort((idx, -strength))
    return tuple(sorted(int(i) for i in idx[order[:max_size]]))


def enumerate_cliques(adj: Adjacency, min_size: int = 3, max_size: int = 12,
                      max_cliques: int | None = 400, budget: int = 5_000_000,
                      wall_clock: float | None = None, split_oversize: bool = False) -> CliqueSet:
    """Maximal cliques of ``adj`` with sizes in ``[min_size, max_size]``.

    Cliques above ``max_size`` are trimmed to their ``max_size`` strongest
    members, or replaced by all their ``max_size``-subsets when
    ``split_oversize``.  If the search exceeds ``budget`` recursion steps (or
    ``wall_clock`` seconds when given) every triangle is returned instead and
    ``fallback_used`` is set.  At most ``max_cliques`` survive, ranked by size,
    then summed edge weight, then vertex tuple; ``None`` disables the cap.
    """
    nbrs = adj.neighbor_bits()
    w = adj.weights
    deadline = time.perf_counter() + wall_clock if wall_clock is not None else None
    fallback = False
    oversize = 0
    try:
        raw, steps = _maximal_cliques(nbrs, min_size, budget if wall_clock is None else 2**62,
                                      deadline)
        cliques = set()
        for c in raw:
            if len(c) <= max_size:
                cliques.add(c)
                continue
            oversize += 1
            if split_oversize:
                for sub in combinations(c, max_size):
                    cliques.add(sub)
                    steps += 1
                    if steps > budget and wall_clock is None:
                        raise _OutOfBudget
            else:
                cliques.add(_trim_oversize(c, w, max_size))
    except _OutOfBudget:
        log.debug("clique search over budget; falling back to triangles")
        fallback = True
        steps = budget
        cliques = set(_triangles(nbrs)) if min_size <= 3 <= max_size else set()
        oversize = 0

    cliques = sorted(cliques)
    weights = _clique_weights(w, cliques)
    order = sorted(range(len(cliques)), key=lambda i: (-len(cliques[i]), -weights[i], cliques[i]))
    ranked = [cliques[i] for i in order]
    truncated = max_cliques is not None and len(ranked) > max_cliques
    if truncated:
        ranked = ranked[:max_cliques]
    return CliqueSet(tickers=adj.tickers, cliques=tuple(ranked), truncated=truncated,
                     fallback_used=fallback, oversize=oversize, steps=steps)


# ---------------------------------------------------------------------------
# hypergraph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hypergraph:
    """Hyperedges over the covered vertices.

    ``incidence`` is the sparse ``|V| x |E|`` 0/1 matrix over ``vertices``
    (covered only); zero-degree tickers of the universe go to ``uncovered``.
    """

    vertices: tuple
    hyperedges: tuple
    incidence: sp.csr_matrix
    vertex_degrees: np.ndarray
    edge_sizes: np.ndarray
    uncovered: tuple = ()

    @property
    def empty(self) -> bool:
        return len(self.hyperedges) == 0


def build_hypergraph(cliques: CliqueSet | Sequence, universe: Sequence[str] | None = None) -> Hypergraph:
    """Assemble the incidence matrix and degree vectors from a clique list."""
    if isinstance(cliques, CliqueSet):
        if universe is None or tuple(universe) == cliques.tickers:
            return _from_indices(cliques.tickers, cliques.cliques)
        edges = cliques.members()
    else:
        edges = [tuple(c) for c in cliques]
        if universe is None:
            universe = sorted({v for c in edges for v in c})
    universe = tuple(universe)
    pos = {t: i for i, t in enumerate(universe)}
    for e in edges:
        missing = [v for v in e if v not in pos]
        if missing:
            raise ValueError(f"hyperedge vertices outside universe: {missing}")
    return _from_indices(universe, [tuple(sorted(pos[v] for v in e)) for e in edges])


def _from_indices(universe: tuple, edges) -> Hypergraph:
    covered = sorted({v for e in edges for v in e})
    remap = np.full(len(universe), -1)
    remap[covered] = np.arange(len(covered))
    sizes = [len(e) for e in edges]
    rows = remap[np.concatenate([np.asarray(e, dtype=int) for e in edges])] if edges else \
        np.zeros(0, dtype=int)
    cols = np.repeat(np.arange(len(edges)), sizes)
    H = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(covered), len(edges)))
    dv = np.asarray(H.sum(axis=1)).ravel()
    de = np.asarray(sizes, dtype=float)
    covered_set = set(covered)
    if not edges:
        log.debug("empty hypergraph over %d tickers", len(universe))
    return Hypergraph(vertices=tuple(universe[i] for i in covered),
                      hyperedges=tuple(tuple(universe[i] for i in e) for e in edges),
                      incidence=H, vertex_degrees=dv, edge_sizes=de,
                      uncovered=tuple(t for i, t in enumerate(universe) if i not in covered_set))


def window_debug_json(corr: CorrMatrix, adj: Adjacency, cs: CliqueSet) -> str:
    """Per-window diagnostic dump."""
    off = corr.values[np.triu_indices(len(corr.tickers), 1)]
    off = off[~np.isnan(off)]
    doc = {
        "n_stocks": len(corr.tickers),
        "corr_mean": float(off.mean()) if off.size else None,
        "corr_min": float(off.min()) if off.size else None,
        "corr_max": float(off.max()) if off.size else None,
        "n_edges": adj.n_edges,
        "n_cliques": len(cs),
        "fallback_used": cs.fallback_used,
        "truncated": cs.truncated,
        "theta_intra": adj.theta_intra,
        "theta_inter": adj.theta_inter,
    }
    return json.dumps(doc, sort_keys=True)
