"""Seeded synthetic markets with sector blocks and event-driven correlation breaks."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidCovariance
from ..marketdata import TONES, ControlPanel, EventCalendar, PricePanel, SectorMap

log = logging.getLogger(__name__)

BREAKS = ("fragment", "consolidate", "none")


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic market layout.

    Returns are ``vol * (market_beta * m + z)`` where ``m`` is the market factor
    (what SPY tracks) and ``z`` carries the firm-specific block structure:
    correlation ``rho_in`` within a sector and ``rho_out`` across sectors.
    Residualizing on the factors therefore leaves ``z``.

    On days ``[e+1, e+break_horizon]`` after an event the cross-sector
    correlation moves to ``rho_out - delta`` (fragment: sectors decouple) or
    ``rho_out + delta`` (consolidate: the market moves as one block), clamped
    to ``[0, rho_in]``.

    ``event_days`` index the price calendar (row 0 is the base-100 row).
    ``event_breaks``, when given, overrides ``break_type`` per event.
    """

    n_stocks: int = 60
    n_sectors: int = 6
    n_days: int = 1000
    rho_in: float = 0.6
    rho_out: float = 0.3
    market_beta: float = 1.0
    event_days: tuple = ()
    event_tones: tuple = ()
    break_type: str = "fragment"
    event_breaks: tuple = ()
    delta: float = 0.0
    break_horizon: int = 7
    seed: int = 0
    vol: float = 0.015
    start_date: str = "2012-01-02"
    factor_tickers: tuple = ("SPY", "QQQ")

    def __post_init__(self):
        if self.n_stocks < 1 or self.n_sectors < 1 or self.n_sectors > self.n_stocks:
            raise ValueError("need 1 <= n_sectors <= n_stocks")
        if not (0.0 <= self.rho_out <= self.rho_in < 1.0):
            raise InvalidCovariance(
                f"need 0 <= rho_out <= rho_in < 1, got rho_out={self.rho_out}, rho_in={self.rho_in}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.break_type not in BREAKS:
            raise ValueError(f"break_type must be one of {BREAKS}")
        if self.event_breaks and len(self.event_breaks) != len(self.event_days):
            raise ValueError("event_breaks must match event_days in length")
        if any(b not in BREAKS for b in self.event_breaks):
            raise ValueError(f"event_breaks entries must be in {BREAKS}")
        if self.event_tones and len(self.event_tones) != len(self.event_days):
            raise ValueError("event_tones must match event_days in length")
        if any(t not in TONES for t in self.event_tones):
            raise ValueError(f"event_tones entries must be in {TONES}")
        if any(not 1 <= d <= self.n_days for d in self.event_days):
            raise ValueError("event_days must index return days 1..n_days")
        if len(set(self.event_days)) != len(self.event_days):
            raise ValueError("duplicate event day")

    @property
    def tickers(self) -> tuple:
        return tuple(f"S{i:03d}" for i in range(self.n_stocks))

    @property
    def sector_index(self) -> np.ndarray:
        return np.arange(self.n_stocks) * self.n_sectors // self.n_stocks

    def sector_map(self) -> SectorMap:
        return SectorMap({t: f"SEC{s}" for t, s in zip(self.tickers, self.sector_index)})

    def breaks(self) -> tuple:
        return self.event_breaks or (self.break_type,) * len(self.event_days)

    def tones(self) -> tuple:
        return self.event_tones or ("hawkish",) * len(self.event_days)

    def dates(self) -> np.ndarray:
        start = np.busday_offset(np.datetime64(self.start_date, "D"), 0, roll="forward")
        return np.busday_offset(start, np.arange(self.n_days + 1))

    def calendar(self) -> EventCalendar:
        d = self.dates()
        return EventCalendar(tuple((d[i], t) for i, t in zip(self.event_days, self.tones())))


def shifted_rho(config: SynthConfig, kind: str) -> float:
    """Cross-sector correlation in force during a break of the given kind."""
    if kind == "fragment":
        return max(0.0, config.rho_out - config.delta)
    if kind == "consolidate":
        return min(config.rho_in, config.rho_out + config.delta)
    return config.rho_out


def spaced_events(n_events: int, spacing: int, first: int = 40) -> tuple:
    """Event day indices ``first, first+spacing, ...``."""
    return tuple(first + i * spacing for i in range(n_events))


def _draws(config: SynthConfig):
    rng = np.random.default_rng(config.seed)
    n = config.n_days
    market = rng.standard_normal(n)
    common = rng.standard_normal(n)
    sector = rng.standard_normal((n, config.n_sectors))
    idio = rng.standard_normal((n, config.n_stocks))
    qqq_noise = rng.standard_normal(n)
    return market, common, sector, idio, qqq_noise


def gen_returns(config: SynthConfig):
    """Stock and factor returns, shape ``(n_days, n_stocks)`` and ``(n_days, 2)``.

    Row ``i`` is the return from price row ``i`` to ``i+1``.
    """
    market, common, sector, idio, qqq_noise = _draws(config)
    n = config.n_days
    rho_out = np.full(n, config.rho_out)
    for day, kind in zip(config.event_days, config.breaks()):
        if kind == "none" or config.delta == 0:
            continue
        # return rows day..day+h-1 are price moves into days day+1..day+h
        lo, hi = day, min(n, day + config.break_horizon)
        rho_out[lo:hi] = shifted_rho(config, kind)
    # closed-form square root of the compound-symmetric block correlation
    a = np.sqrt(rho_out)[:, None]
    b = np.sqrt(config.rho_in - rho_out)[:, None]
    c = np.sqrt(1.0 - config.rho_in)
    z = a * common[:, None] + b * sector[:, config.sector_index] + c * idio
    stocks = config.vol * (config.market_beta * market[:, None] + z)
    spy = config.vol * market
    qqq = config.vol * (0.8 * market + 0.6 * qqq_noise)
    return stocks, np.column_stack([spy, qqq])


def gen_panel(config: SynthConfig) -> PricePanel:
    """Prices integrated from :func:`gen_returns` at base 100, factor columns last."""
    stocks, factors = gen_returns(config)
    r = np.hstack([stocks, factors])
    prices = 100.0 * np.vstack([np.ones(r.shape[1]), np.cumprod(1.0 + r, axis=0)])
    return PricePanel(dates=config.dates(), tickers=config.tickers + tuple(config.factor_tickers),
                      values=prices)


def gen_controls(dates, spx_return, seed: int = 0) -> ControlPanel:
    """Plausible macro controls: mean-reverting VIX, random-walk yields and dollar index."""
    rng = np.random.default_rng(seed + 7919)
    n = len(dates)
    vix = np.empty(n)
    vix[0] = 18.0
    shocks = rng.standard_normal((n, 4))
    for t in range(1, n):
        vix[t] = vix[t - 1] + 0.05 * (18.0 - vix[t - 1]) + 0.8 * shocks[t, 0]
    vix = np.maximum(vix, 9.0)
    y2 = np.maximum(0.05, 1.5 + np.cumsum(0.03 * shocks[:, 1]))
    y10 = np.maximum(0.1, 2.5 + np.cumsum(0.03 * shocks[:, 2]))
    twi = 100.0 + np.cumsum(0.2 * shocks[:, 3])
    return ControlPanel(dates=dates, vix_level=np.round(vix, 4), spx_return=np.asarray(spx_return),
                        yield_2y=np.round(y2, 4), yield_10y=np.round(y10, 4), dollar_twi=np.round(twi, 4))


def demo_config(seed: int = 0) -> SynthConfig:
    """The bundle ``synth-demo`` writes: 60 stocks, 40 events with mixed tones."""
    n_events = 40
    days = spaced_events(n_events, spacing=24, first=80)
    tones = tuple(TONES[i % 3] for i in range(n_events))
    breaks = tuple({"hawkish": "fragment", "dovish": "consolidate", "neutral": "none"}[t] for t in tones)
    return SynthConfig(n_days=days[-1] + 60, event_days=days, event_tones=tones,
                       event_breaks=breaks, delta=0.3, seed=seed)


def write_bundle(out_dir, config: SynthConfig) -> dict:
    """Write prices/sectors/events/controls CSVs; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    panel = gen_panel(config)
    paths = {name: out / f"{name}.csv" for name in ("prices", "sectors", "events", "controls")}

    with paths["prices"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *panel.tickers])
        for d, row in zip(panel.dates, panel.values):
            w.writerow([str(d), *(f"{x:.6f}" for x in row)])

    with paths["sectors"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", "sector"])
        for t, s in config.sector_map().sectors.items():
            w.writerow([t, s])

    with paths["events"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "tone"])
        for d, tone in config.calendar().entries:
            w.writerow([str(d), tone])

    spy = panel.column(config.factor_tickers[0])
    spx = np.full(len(spy), np.nan)
    spx[1:] = spy[1:] / spy[:-1] - 1.0
    ctl = gen_controls(panel.dates, spx, config.seed)
    with paths["controls"].open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "vix", "spx_ret", "y2", "y10", "twi"])
        for i, d in enumerate(ctl.dates):
            vals = (ctl.vix_level[i], ctl.spx_return[i], ctl.yield_2y[i], ctl.yield_10y[i],
                    ctl.dollar_twi[i])
            w.writerow([str(d), *("" if np.isnan(v) else f"{v:.6f}" for v in vals)])
    return paths
