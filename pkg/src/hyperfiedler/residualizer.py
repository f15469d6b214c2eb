"""Strip market-wide moves from stock returns by OLS on factor returns."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RankDeficientFactors
from .marketdata import Panel, ReturnPanel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResidualPanel(Panel):
    """Per-stock OLS residuals with the fitted loadings kept alongside.

    ``betas`` has one row per ticker and one column per factor; ``intercepts``
    one entry per ticker.  In rolling mode these hold the last fitted window.
    """

    betas: np.ndarray = field(default=None)
    intercepts: np.ndarray = field(default=None)
    factor_names: tuple = ()
    excluded: tuple = ()

    def _replace(self, **changes):
        kw = {"dates": self.dates, "tickers": self.tickers, "values": self.values,
              "betas": self.betas, "intercepts": self.intercepts,
              "factor_names": self.factor_names, "excluded": self.excluded}
        if "tickers" in changes and self.betas is not None:
            idx = [self.tickers.index(t) for t in changes["tickers"]]
            kw["betas"] = self.betas[idx]
            kw["intercepts"] = self.intercepts[idx]
        kw.update(changes)
        return type(self)(**kw)


def _design(f: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(f)), f])


def _check_rank(X: np.ndarray, names) -> None:
    # scale-aware rank test; exact collinearity like SPY vs 2*SPY trips this
    s = np.linalg.svd(X, compute_uv=False)
    if s.size == 0 or s[-1] <= s[0] * max(X.shape) * np.finfo(float).eps * 16:
        raise RankDeficientFactors(f"factor matrix [1, {', '.join(names)}] is rank deficient")


def _qr_fit(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(X)
    return solve_triangular(r, q.T @ y)


def _fit_stock(y: np.ndarray, F: np.ndarray, fmask: np.ndarray, min_obs: int):
    ok = fmask & ~np.isnan(y)
    n = int(ok.sum())
    if n < min_obs:
        return None
    X = _design(F[ok])
    coef = _qr_fit(X, y[ok])
    resid = np.full(len(y), np.nan)
    resid[ok] = y[ok] - X @ coef
    return coef, resid


def residualize(returns: ReturnPanel, factors: ReturnPanel, min_beta_obs: int = 60,
                mode: str = "full", rolling_window: int = 252) -> ResidualPanel:
    """Regress every stock on ``[1, factors]`` and keep the residuals.

    ``mode="full"`` fits one regression per stock over the whole sample.
    ``mode="rolling"`` fits on the trailing ``rolling_window`` days ending at
    each date and keeps that date's residual; dates with fewer than
    ``min_beta_obs`` usable rows in their window stay missing.

    Stocks with fewer than ``min_beta_obs`` joint observations are dropped
    (listed in ``excluded``).
    """
    if not np.array_equal(returns.dates, factors.dates):
        factors = _align_dates(factors, returns.dates)
    F = np.asarray(factors.values, dtype=float)
    if F.ndim != 2 or F.shape[1] < 1:
        raise ValueError("need at least one factor column")
    fmask = ~np.isnan(F).any(axis=1)
    _check_rank(_design(F[fmask]), factors.tickers)

    if mode == "full":
        fitter = _fit_stock
    elif mode == "rolling":
        def fitter(y, F, fmask, min_obs):
            return _fit_rolling(y, F, fmask, min_obs, rolling_window)
    else:
        raise ValueError(f"unknown residualization mode {mode!r}")

    # each stock's fit is self-contained, so column order cannot affect results
    kept, cols, coefs, excluded = [], [], [], []
    for j, t in enumerate(returns.tickers):
        out = fitter(returns.values[:, j], F, fmask, min_beta_obs)
        if out is None:
            excluded.append(t)
            continue
        coef, resid = out
        kept.append(t)
        cols.append(resid)
        coefs.append(coef)
    if excluded:
        log.warning("%d stocks below %d joint observations, excluded: %s", len(excluded),
                    min_beta_obs, ", ".join(excluded[:10]))
    nf = F.shape[1]
    coefs = np.array(coefs).reshape(len(kept), nf + 1)
    values = np.column_stack(cols) if cols else np.empty((len(returns.dates), 0))
    return ResidualPanel(dates=returns.dates, tickers=tuple(kept), values=values,
                         betas=coefs[:, 1:], intercepts=coefs[:, 0],
                         factor_names=factors.tickers, excluded=tuple(excluded))


def _fit_rolling(y, F, fmask, min_obs, window):
    ok = fmask & ~np.isnan(y)
    if int(ok.sum()) < min_obs:
        return None
    resid = np.full(len(y), np.nan)
    coef = None
    for t in np.flatnonzero(ok):
        lo = max(0, t - window + 1)
        rows = np.flatnonzero(ok[lo:t + 1]) + lo
        if rows.size < min_obs:
            continue
        X = _design(F[rows])
        coef = _qr_fit(X, y[rows])
        resid[t] = y[t] - _design(F[t:t + 1])[0] @ coef
    if coef is None:
        return None
    return coef, resid


def _align_dates(factors: ReturnPanel, dates: np.ndarray) -> ReturnPanel:
    idx = {d: i for i, d in enumerate(factors.dates)}
    out = np.full((len(dates), len(factors.tickers)), np.nan)
    for i, d in enumerate(dates):
        j = idx.get(d)
        if j is not None:
            out[i] = factors.values[j]
    return ReturnPanel(dates=dates, tickers=factors.tickers, values=out)
