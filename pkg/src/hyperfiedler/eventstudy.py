"""Event-study regressions of the change in algebraic connectivity.

For every reference day ``t`` the response is ``lambda2(post) - lambda2(pre)``.
The baseline model regresses it on an announcement dummy plus controls; the
tone model swaps the single dummy for hawkish/dovish/neutral dummies.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.linalg import solve_triangular

from .errors import CollinearDesign, DegenerateSample, EmptyWindow, HyperFiedlerError
from .marketdata import CONTROL_COLUMNS, TONES, ControlPanel, EventCalendar, Panel, SectorMap
from .netbuild import (
    NetConfig,
    WindowSpec,
    build_hypergraph,
    correlation_matrix,
    enumerate_cliques,
    make_windows,
    threshold_adjacency,
)
from .spectral import graph_fiedler, hypergraph_fiedler

log = logging.getLogger(__name__)

TONE_COLUMNS = {"hawkish": "Hawkish", "dovish": "Dovish", "neutral": "Neutral"}
EVENT_COLUMNS = {"baseline": ("FOMC",), "tone": tuple(TONE_COLUMNS[t] for t in TONES)}
MEASURES = ("hypergraph", "graph")


# ---------------------------------------------------------------------------
# per-window connectivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowStats:
    start: int
    stop: int
    n_stocks: int = 0
    n_edges: int = 0
    n_cliques: int = 0
    n_covered: int = 0
    fallback_used: bool = False
    truncated: bool = False
    lambda2_hypergraph: float = 0.0
    lambda2_graph: float = 0.0
    valid: bool = False
    reason: str = ""

    def lambda2(self, measure: str) -> float:
        return self.lambda2_hypergraph if measure == "hypergraph" else self.lambda2_graph


def window_connectivity(panel: Panel, start: int, stop: int, sectors: SectorMap,
                        config: NetConfig = NetConfig()) -> WindowStats:
    """Run correlation -> adjacency -> cliques -> Laplacians on rows ``[start, stop)``."""
    k = stop - start
    spec = WindowSpec(panel.dates[start], start, k, "window", start, stop)
    try:
        corr = correlation_matrix(panel, spec, config.pair_obs(k), config.stock_obs(k))
    except EmptyWindow as exc:
        return WindowStats(start, stop, reason=str(exc))
    adj = threshold_adjacency(corr, sectors, config.theta_intra, config.theta_inter, config.absolute)
    cs = enumerate_cliques(adj, config.min_size, config.max_size, config.max_cliques,
                           config.budget, config.wall_clock, config.split_oversize)
    hg = build_hypergraph(cs)
    h = hypergraph_fiedler(hg)
    g = graph_fiedler(adj)
    n = len(corr.tickers)
    valid = n >= config.min_window_stocks
    return WindowStats(start, stop, n_stocks=n, n_edges=adj.n_edges, n_cliques=len(cs),
                       n_covered=len(hg.vertices), fallback_used=cs.fallback_used,
                       truncated=cs.truncated, lambda2_hypergraph=h.lambda2,
                       lambda2_graph=g.lambda2, valid=valid,
                       reason="" if valid else f"{n} stocks < {config.min_window_stocks}")


_WORKER_STATE = {}


def _init_worker(panel, sectors, config):
    _WORKER_STATE["args"] = (panel, sectors, config)


def _work(keys):
    panel, sectors, config = _WORKER_STATE["args"]
    return [window_connectivity(panel, a, b, sectors, config) for a, b in keys]


def compute_windows(panel: Panel, keys, sectors: SectorMap, config: NetConfig,
                    workers: int = 1) -> dict:
    """Connectivity for each ``(start, stop)`` key; results keyed, so order-free."""
    keys = sorted(set(keys))
    if workers <= 1 or len(keys) < 2 * workers:
        return {key: window_connectivity(panel, *key, sectors, config) for key in keys}
    chunk = math.ceil(len(keys) / (workers * 4))
    batches = [keys[i:i + chunk] for i in range(0, len(keys), chunk)]
    out = {}
    with ProcessPoolExecutor(workers, initializer=_init_worker,
                             initargs=(panel, sectors, config)) as pool:
        for batch, res in zip(batches, pool.map(_work, batches)):
            out.update(zip(batch, res))
    return out


# ---------------------------------------------------------------------------
# delta series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeltaSeries:
    k: int
    measure: str
    dates: np.ndarray  # reference days
    delta: np.ndarray  # NaN where either window is invalid
    lambda_pre: np.ndarray
    lambda_post: np.ndarray
    valid_pre: np.ndarray
    valid_post: np.ndarray
    calendar: np.ndarray  # full trading calendar, for window arithmetic
    windows: dict = field(default_factory=dict, repr=False)

    def valid(self) -> np.ndarray:
        return self.valid_pre & self.valid_post


def delta_fiedler_series(panel: Panel, k: int, sectors: SectorMap, config: NetConfig = NetConfig(),
                         measure: str = "hypergraph", workers: int = 1) -> DeltaSeries:
    """``lambda2(post) - lambda2(pre)`` for every day with full windows on both sides.

    A window reused as another day's pre/post window is computed once.
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}")
    pairs = make_windows(panel.dates, k)
    keys = [w.key for pair in pairs for w in pair]
    stats_by_key = compute_windows(panel, keys, sectors, config, workers)
    n = len(pairs)
    pre_l, post_l = np.zeros(n), np.zeros(n)
    pre_ok, post_ok = np.zeros(n, bool), np.zeros(n, bool)
    for i, (pre, post) in enumerate(pairs):
        a, b = stats_by_key[pre.key], stats_by_key[post.key]
        pre_l[i], post_l[i] = a.lambda2(measure), b.lambda2(measure)
        pre_ok[i], post_ok[i] = a.valid, b.valid
    delta = np.where(pre_ok & post_ok, post_l - pre_l, np.nan)
    bad = int(n - (pre_ok & post_ok).sum())
    if bad:
        log.info("k=%d: %d of %d reference days have an invalid window", k, bad, n)
    return DeltaSeries(k=k, measure=measure,
                       dates=np.array([p.reference_date for p, _ in pairs], dtype="datetime64[D]"),
                       delta=delta, lambda_pre=pre_l, lambda_post=post_l,
                       valid_pre=pre_ok, valid_post=post_ok,
                       calendar=np.asarray(panel.dates, dtype="datetime64[D]"),
                       windows=stats_by_key)


# ---------------------------------------------------------------------------
# overlap exclusion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Exclusion:
    k: int
    excluded: frozenset
    log: tuple  # (event date, conflicting event date, k)


def _event_positions(events: EventCalendar, calendar: np.ndarray) -> list:
    cal = np.asarray(calendar, dtype="datetime64[D]")
    out = []
    for d, tone in events.entries:
        i = int(np.searchsorted(cal, d, side="left"))
        if i < len(cal):
            out.append((cal[i], tone, i))
    return out


def apply_overlap_exclusion(events: EventCalendar, calendar, k: int) -> Exclusion:
    """Drop every event whose ``[e-k, e+k]`` trading-day window meets another's.

    Two windows intersect iff the events are at most ``2k`` trading days apart.
    """
    pos = _event_positions(events, calendar)
    excluded, entries = set(), []
    for a in range(len(pos)):
        for b in range(a + 1, len(pos)):
            if pos[b][2] - pos[a][2] > 2 * k:
                break
            da, db = pos[a][0], pos[b][0]
            excluded.update((da, db))
            entries.append((da, db, k))
            entries.append((db, da, k))
    entries.sort()
    return Exclusion(k=k, excluded=frozenset(excluded), log=tuple(entries))


# ---------------------------------------------------------------------------
# design matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DesignMatrix:
    y: np.ndarray
    X: np.ndarray
    columns: tuple
    dates: np.ndarray
    mode: str
    k: int
    dropped: tuple = ()  # (date, reason)
    dropped_columns: tuple = ()

    @property
    def event_columns(self) -> tuple:
        return tuple(c for c in self.columns if c in EVENT_COLUMNS["baseline"] + EVENT_COLUMNS["tone"])

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]


def build_design(series: DeltaSeries, events: EventCalendar, controls: ControlPanel | None,
                 mode: str = "baseline", exclusion: Exclusion | None = None,
                 control_columns: Sequence[str] = CONTROL_COLUMNS,
                 strict_exclusion: bool = False) -> DesignMatrix:
    """Assemble ``y`` and ``X = [1, event dummies, controls]``.

    Event dates listed in ``exclusion`` are removed.  ``strict_exclusion``
    also removes non-event days inside any event's ``[e-k, e+k]`` window.
    Event dummies that are zero on every row are omitted rather than left to
    make the design singular.
    """
    if mode not in EVENT_COLUMNS:
        raise ValueError(f"mode must be one of {tuple(EVENT_COLUMNS)}")
    k = series.k
    if exclusion is None:
        exclusion = apply_overlap_exclusion(events, series.calendar, k)
    tone_of = {d: t for d, t, _ in _event_positions(events, series.calendar)}
    cal_index = {d: i for i, d in enumerate(series.calendar)}
    event_idx = sorted(cal_index[d] for d in tone_of)

    ctrl_lookup, ctrl_mat = None, None
    if controls is not None and control_columns:
        ctrl_lookup = {d: i for i, d in enumerate(controls.dates)}
        ctrl_mat = controls.matrix(control_columns)
        names_ctrl = tuple(control_columns)
    else:
        names_ctrl = ()

    ev_names = EVENT_COLUMNS[mode] if len(events) else ()
    dropped, rows, ys, ds = [], [], [], []
    for d, y in zip(series.dates, series.delta):
        if d in exclusion.excluded:
            dropped.append((d, "overlapping event window"))
            continue
        tone = tone_of.get(d)
        if strict_exclusion and tone is None:
            i = cal_index[d]
            j = np.searchsorted(event_idx, i)
            near = [event_idx[m] for m in (j - 1, j) if 0 <= m < len(event_idx)]
            if any(abs(i - e) <= k for e in near):
                dropped.append((d, "inside event window"))
                continue
        if not np.isfinite(y):
            dropped.append((d, "invalid window"))
            continue
        if mode == "baseline":
            dums = [1.0 if tone is not None else 0.0] if ev_names else []
        else:
            dums = [1.0 if tone == t else 0.0 for t in TONES] if ev_names else []
        if ctrl_lookup is not None:
            ci = ctrl_lookup.get(d)
            if ci is None or np.isnan(ctrl_mat[ci]).any():
                dropped.append((d, "missing control"))
                continue
            ctl = list(ctrl_mat[ci])
        else:
            ctl = []
        rows.append([1.0, *dums, *ctl])
        ys.append(y)
        ds.append(d)

    columns = ("const", *ev_names, *names_ctrl)
    X = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    keep = np.ones(len(columns), dtype=bool)
    for j, name in enumerate(columns):
        if name in ev_names and not X[:, j].any():
            keep[j] = False
    dropped_cols = tuple(c for c, kp in zip(columns, keep) if not kp)
    if dropped_cols:
        log.info("k=%d %s: no rows for %s, column omitted", k, mode, ", ".join(dropped_cols))
    X = X[:, keep]
    columns = tuple(c for c, kp in zip(columns, keep) if kp)
    design = DesignMatrix(y=np.array(ys, dtype=float), X=X, columns=columns,
                          dates=np.array(ds, dtype="datetime64[D]"), mode=mode, k=k,
                          dropped=tuple(dropped), dropped_columns=dropped_cols)
    _check_full_rank(design.X, design.columns)
    return design


def _check_full_rank(X: np.ndarray, columns) -> None:
    if X.shape[0] == 0:
        return
    tol_rank = np.linalg.matrix_rank(X)
    if tol_rank == X.shape[1]:
        return
    offending, basis = [], []
    for j, name in enumerate(columns):
        trial = basis + [j]
        if np.linalg.matrix_rank(X[:, trial]) == len(trial):
            basis = trial
        else:
            offending.append(name)
    raise CollinearDesign("design matrix is rank deficient", offending)


# ---------------------------------------------------------------------------
# OLS
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionResult:
    columns: tuple
    params: np.ndarray
    bse: np.ndarray
    tvalues: np.ndarray
    pvalues: np.ndarray
    fvalue: float
    f_pvalue: float
    rsquared: float
    rsquared_adj: float
    aic: float
    bic: float
    nobs: int
    df_resid: int
    rss: float
    cov_type: str = "classical"
    resid: np.ndarray = field(default=None, repr=False)

    def coef(self, name: str) -> float:
        return float(self.params[self.columns.index(name)])

    def pvalue(self, name: str) -> float:
        return float(self.pvalues[self.columns.index(name)])

    def to_dict(self) -> dict:
        coefs = {c: {"coef": float(b), "se": float(s), "t": float(t), "p": float(p)}
                 for c, b, s, t, p in zip(self.columns, self.params, self.bse,
                                          self.tvalues, self.pvalues)}
        return {
            "coefficients": coefs,
            "F": _num(self.fvalue),
            "F_pvalue": _num(self.f_pvalue),
            "R2": _num(self.rsquared),
            "adj_R2": _num(self.rsquared_adj),
            "AIC": _num(self.aic),
            "BIC": _num(self.bic),
            "n": int(self.nobs),
            "df_resid": int(self.df_resid),
            "cov_type": self.cov_type,
        }


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def ols_fit(design: DesignMatrix | None = None, cov_type: str = "classical", *,
            X=None, y=None, columns=None) -> RegressionResult:
    """Least squares through a QR factorisation.

    ``cov_type`` is ``"classical"`` (homoskedastic) or ``"HC1"``.  The F-test
    covers every regressor except the intercept.  AIC and BIC use the
    concentrated Gaussian log-likelihood without constants:
    ``n ln(RSS/n) + 2p`` and ``n ln(RSS/n) + p ln n``.
    """
    if design is not None:
        X, y, columns = design.X, design.y, design.columns
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if columns is None:
        columns = tuple(f"x{j}" for j in range(p))
    columns = tuple(columns)
    if n <= p + 2:
        raise DegenerateSample(f"{n} observations for {p} coefficients")
    if cov_type not in ("classical", "HC1"):
        raise ValueError(f"unknown cov_type {cov_type!r}")

    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * max(n, p) * np.finfo(float).eps:
        _check_full_rank(X, columns)
        raise CollinearDesign("design matrix is numerically rank deficient", columns)
    beta = solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    df = n - p
    Rinv = solve_triangular(R, np.eye(p))
    xtx_inv = Rinv @ Rinv.T
    if cov_type == "classical":
        cov = xtx_inv * (rss / df)
    else:
        meat = (X * resid[:, None] ** 2).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / df)
    bse = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = beta / bse
    pvals = 2.0 * stats.t.sf(np.abs(tvals), df)

    has_const = any(np.all(X[:, j] == 1.0) for j in range(p))
    ybar = y.mean() if has_const else 0.0
    tss = float(((y - ybar) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else math.nan
    dfm = p - 1 if has_const else p
    r2_adj = 1.0 - (1.0 - r2) * (n - (1 if has_const else 0)) / df

    slopes = [j for j in range(p) if not np.all(X[:, j] == 1.0)]
    if slopes:
        if cov_type == "classical":
            fval = ((tss - rss) / dfm) / (rss / df) if rss > 0 else math.inf
        else:
            b = beta[slopes]
            V = cov[np.ix_(slopes, slopes)]
            fval = float(b @ np.linalg.solve(V, b)) / len(slopes)
        f_p = float(stats.f.sf(fval, len(slopes), df))
    else:
        fval, f_p = math.nan, math.nan

    with np.errstate(divide="ignore"):
        llf_part = n * math.log(rss / n) if rss > 0 else -math.inf
    aic = llf_part + 2 * p
    bic = llf_part + p * math.log(n)
    return RegressionResult(columns=columns, params=beta, bse=bse, tvalues=tvals, pvalues=pvals,
                            fvalue=float(fval), f_pvalue=f_p, rsquared=r2, rsquared_adj=r2_adj,
                            aic=aic, bic=bic, nobs=n, df_resid=df, rss=rss, cov_type=cov_type,
                            resid=resid)


def stars(p: float) -> str:
    if p is None or not np.isfinite(p):
        return ""
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def regression_table(results: dict, variables: Sequence[str] | None = None) -> list:
    """Rows of a publication-style table, one column per horizon.

    ``results`` maps ``k -> RegressionResult``.  Each event variable gets a
    coefficient row (with significance stars) and a p-value row in
    parentheses, followed by the fit statistics.
    """
    ks = sorted(results)
    if variables is None:
        variables = []
        for k in ks:
            for c in results[k].columns:
                if c in EVENT_COLUMNS["baseline"] + EVENT_COLUMNS["tone"] and c not in variables:
                    variables.append(c)
    rows = [["Variable", *[f"k={k}" for k in ks]]]
    for v in variables:
        coef_row, p_row = [v], [""]
        for k in ks:
            r = results[k]
            if v in r.columns:
                p = r.pvalue(v)
                coef_row.append(f"{r.coef(v):.3f}{stars(p)}")
                p_row.append(f"({p:.3f})")
            else:
                coef_row.append("")
                p_row.append("")
        rows += [coef_row, p_row]

    def fmt(x, spec):
        return "" if x is None or not np.isfinite(x) else format(x, spec)

    rows.append(["F-statistic", *[fmt(results[k].fvalue, ".3f") for k in ks]])
    rows.append(["P-value", *[fmt(results[k].f_pvalue, ".3f") for k in ks]])
    rows.append(["R2", *[fmt(results[k].rsquared, ".3f") for k in ks]])
    rows.append(["Adj. R2", *[fmt(results[k].rsquared_adj, ".3f") for k in ks]])
    rows.append(["AIC", *[fmt(results[k].aic, ",.0f") for k in ks]])
    rows.append(["BIC", *[fmt(results[k].bic, ",.0f") for k in ks]])
    rows.append(["Observations", *[f"{results[k].nobs:,}" for k in ks]])
    return rows


# ---------------------------------------------------------------------------
# horizon sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepTable:
    results: dict = field(default_factory=dict)  # mode -> k -> RegressionResult
    errors: dict = field(default_factory=dict)  # mode -> k -> message
    series: dict = field(default_factory=dict)  # k -> DeltaSeries
    exclusions: dict = field(default_factory=dict)  # k -> Exclusion
    designs: dict = field(default_factory=dict)  # mode -> k -> DesignMatrix

    @property
    def ks(self) -> list:
        return sorted(self.series)

    def rows(self, mode: str) -> list:
        """One dict per k: coefficient, p-value and 5% flag per event variable."""
        out = []
        variables = EVENT_COLUMNS[mode]
        for k in self.ks:
            row = {"k": k}
            res = self.results.get(mode, {}).get(k)
            for v in variables:
                if res is not None and v in res.columns:
                    p = res.pvalue(v)
                    row[f"{v}_coef"] = res.coef(v)
                    row[f"{v}_p"] = p
                    row[f"{v}_signif"] = bool(p < 0.05)
            for m in self.results:
                r = self.results[m].get(k)
                row[f"r2_{m}"] = r.rsquared if r is not None else None
            out.append(row)
        return out


def k_sweep(panel: Panel, events: EventCalendar, controls: ControlPanel | None, sectors: SectorMap,
            k_range: Sequence[int] = range(5, 21), config: NetConfig = NetConfig(),
            modes: Sequence[str] = ("baseline", "tone"), measure: str = "hypergraph",
            cov_type: str = "classical", strict_exclusion: bool = False,
            control_columns: Sequence[str] = CONTROL_COLUMNS, workers: int = 1) -> SweepTable:
    """Fit every requested model at every horizon; a failing k is recorded and skipped."""
    table = SweepTable()
    for mode in modes:
        table.results[mode], table.errors[mode], table.designs[mode] = {}, {}, {}
    for k in k_range:
        series = delta_fiedler_series(panel, k, sectors, config, measure, workers)
        excl = apply_overlap_exclusion(events, series.calendar, k)
        table.series[k], table.exclusions[k] = series, excl
        for mode in modes:
            try:
                design = build_design(series, events, controls, mode, excl, control_columns,
                                      strict_exclusion)
                table.designs[mode][k] = design
                table.results[mode][k] = ols_fit(design, cov_type)
            except HyperFiedlerError as exc:
                log.warning("k=%d %s model failed: %s", k, mode, exc)
                table.errors[mode][k] = f"{type(exc).__name__}: {exc}"
    return table
