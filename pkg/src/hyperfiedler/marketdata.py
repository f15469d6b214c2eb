"""Loading, validation and alignment of the raw input series.

Four CSV inputs feed the pipeline:

* ``prices.csv``   wide layout ``date,TICK1,TICK2,...`` (empty cell = missing)
* ``sectors.csv``  ``ticker,sector``
* ``events.csv``   ``date,tone`` with tone in {hawkish, dovish, neutral}
* ``controls.csv`` ``date,vix,spx_ret,y2,y10,twi``

The trading calendar is always taken from the price file.
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import (
    AlignmentError,
    CalendarError,
    DegeneratePanel,
    MissingTickerSector,
    ParseError,
    UnknownTone,
)

log = logging.getLogger(__name__)

TONES = ("hawkish", "dovish", "neutral")
UNKNOWN_SECTOR = "UNKNOWN"
CONTROL_COLUMNS = ("vix_level", "vix_change", "spx_return", "yield_2y", "yield_10y", "dollar_twi")
_CONTROL_FILE_COLUMNS = {"vix": "vix_level", "spx_ret": "spx_return", "y2": "yield_2y",
                         "y10": "yield_10y", "twi": "dollar_twi"}
_MISSING_TOKENS = {"", "na", "nan", "null", "none"}


def _to_dates(values: Iterable) -> np.ndarray:
    return np.asarray([np.datetime64(d, "D") for d in values], dtype="datetime64[D]")


def _check_increasing(dates: np.ndarray, what: str) -> None:
    if len(dates) > 1:
        steps = np.diff(dates).astype(np.int64)
        bad = np.flatnonzero(steps <= 0)
        if bad.size:
            i = int(bad[0]) + 1
            kind = "duplicate" if steps[bad[0]] == 0 else "non-increasing"
            raise CalendarError(f"{what}: {kind} date {dates[i]} at position {i}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# panels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Panel:
    """Date x ticker matrix; ``NaN`` marks a missing cell."""

    dates: np.ndarray
    tickers: tuple
    values: np.ndarray

    def __post_init__(self):
        dates = _to_dates(self.dates)
        dates.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "tickers", tuple(str(t) for t in self.tickers))
        values = _frozen(self.values)
        if values.ndim != 2 or values.shape != (len(dates), len(self.tickers)):
            raise ValueError(f"values shape {values.shape} does not match "
                             f"{len(dates)} dates x {len(self.tickers)} tickers")
        object.__setattr__(self, "values", values)
        if len(set(self.tickers)) != len(self.tickers):
            raise ParseError("duplicate ticker in panel")
        _check_increasing(dates, type(self).__name__)

    @property
    def shape(self):
        return self.values.shape

    def column(self, ticker: str) -> np.ndarray:
        return self.values[:, self.tickers.index(ticker)]

    def select(self, tickers: Sequence[str]):
        idx = [self.tickers.index(t) for t in tickers]
        return self._replace(tickers=tuple(tickers), values=self.values[:, idx])

    def drop(self, tickers: Iterable[str]):
        gone = set(tickers)
        return self.select([t for t in self.tickers if t not in gone])

    def between(self, start=None, end=None):
        """Rows with ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self.dates), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return self._replace(dates=self.dates[mask], values=self.values[mask])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(np.array(self.values), index=pd.DatetimeIndex(self.dates, name="date"),
                            columns=list(self.tickers))

    def _replace(self, **changes):
        kw = {"dates": self.dates, "tickers": self.tickers, "values": self.values}
        kw.update(changes)
        return type(self)(**kw)


class PricePanel(Panel):
    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if np.any(v[~np.isnan(v)] < 0):
            raise ParseError("negative price in panel")
        empty = np.flatnonzero(np.all(np.isnan(v), axis=1)) if v.shape[1] else np.arange(len(v))
        if empty.size:
            raise ParseError(f"no prices on {self.dates[empty[0]]}", row=int(empty[0]) + 2)


class ReturnPanel(Panel):
    pass


def load_price_panel(path, format: str = "wide") -> PricePanel:
    """Read closing prices from CSV.

    ``format="wide"`` expects ``date,TICK1,TICK2,...``; ``format="long"``
    expects ``date,ticker,price`` rows and is pivoted to wide.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    if format == "long":
        return _load_long(rows, path)
    if format != "wide":
        raise ValueError(f"unknown price layout {format!r}")

    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise ParseError(f"{path}: header must name at least one ticker", row=1)
    tickers = header[1:]
    seen = set()
    for j, t in enumerate(tickers, start=2):
        if not t:
            raise ParseError(f"{path}: empty ticker name", row=1, col=j)
        if t in seen:
            raise ParseError(f"{path}: duplicate ticker {t!r}", row=1, col=j)
        seen.add(t)

    dates, values = [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} cells, got {len(row)}", row=i)
        dates.append(_parse_date(row[0], path, i, 1))
        values.append([_parse_float(c, path, i, j) for j, c in enumerate(row[1:], start=2)])
    if not dates:
        raise ParseError(f"{path}: no data rows")
    return PricePanel(dates=dates, tickers=tickers, values=np.array(values, dtype=float))


def _load_long(rows, path) -> PricePanel:
    header = [h.strip().lower() for h in rows[0]]
    if header[:3] != ["date", "ticker", "price"]:
        raise ParseError(f"{path}: long layout needs date,ticker,price header", row=1)
    records = {}
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        d = _parse_date(row[0], path, i, 1)
        key = (d, row[1].strip())
        if key in records:
            raise CalendarError(f"{path}: duplicate ({d}, {key[1]}) at row {i}")
        records[key] = _parse_float(row[2], path, i, 3)
    dates = sorted({d for d, _ in records})
    tickers = list(dict.fromkeys(t for _, t in records))
    values = np.full((len(dates), len(tickers)), np.nan)
    di = {d: n for n, d in enumerate(dates)}
    ti = {t: n for n, t in enumerate(tickers)}
    for (d, t), v in records.items():
        values[di[d], ti[t]] = v
    return PricePanel(dates=dates, tickers=tickers, values=values)


def _parse_date(cell: str, path, row: int, col: int) -> dt.date:
    try:
        return dt.date.fromisoformat(cell.strip())
    except ValueError:
        raise ParseError(f"{path}: bad date {cell!r}", row=row, col=col) from None


def _parse_float(cell: str, path, row: int, col: int) -> float:
    s = cell.strip()
    if s.lower() in _MISSING_TOKENS:
        return math.nan
    try:
        x = float(s)
    except ValueError:
        raise ParseError(f"{path}: bad number {cell!r}", row=row, col=col) from None
    if math.isinf(x):
        raise ParseError(f"{path}: infinite value", row=row, col=col)
    return x


def compute_returns(panel: PricePanel) -> ReturnPanel:
    """Simple returns ``(P_t - P_{t-1}) / P_{t-1}``; the first date is dropped."""
    if len(panel.dates) < 2:
        raise DegeneratePanel("need at least 2 dates to compute returns")
    prev = panel.values[:-1]
    cur = panel.values[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (cur - prev) / prev
    r[~np.isfinite(r)] = np.nan
    return ReturnPanel(dates=panel.dates[1:], tickers=panel.tickers, values=r)


def clean_returns(panel: ReturnPanel, policy: str = "winsorize", bound: float = 0.50) -> ReturnPanel:
    """Clamp (``winsorize``) or blank out (``drop``) returns beyond ``±bound``."""
    if not bound > 0:
        raise ValueError("bound must be positive")
    v = np.array(panel.values)
    with np.errstate(invalid="ignore"):
        if policy == "winsorize":
            v = np.clip(v, -bound, bound)
        elif policy == "drop":
            v[np.abs(v) > bound] = np.nan
        else:
            raise ValueError(f"unknown policy {policy!r}")
    return panel._replace(values=v)


def split_factors(returns: ReturnPanel, factor_tickers: Sequence[str]):
    """Separate factor columns (e.g. SPY, QQQ) from the stock universe."""
    missing = [f for f in factor_tickers if f not in returns.tickers]
    if missing:
        raise ParseError(f"factor columns not found in price file: {', '.join(missing)}")
    return returns.drop(factor_tickers), returns.select(list(factor_tickers))


# ---------------------------------------------------------------------------
# sectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SectorMap:
    sectors: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "sectors", dict(self.sectors))
        for t, s in self.sectors.items():
            if not str(s).strip():
                raise ParseError(f"empty sector label for {t!r}")

    def __getitem__(self, ticker: str) -> str:
        return self.sectors.get(ticker, UNKNOWN_SECTOR)

    def __contains__(self, ticker) -> bool:
        return ticker in self.sectors

    def labels(self, tickers: Sequence[str]) -> list:
        return [self[t] for t in tickers]

    def resolve(self, universe: Sequence[str], strict: bool = False) -> "SectorMap":
        """Total map over ``universe``; unlisted tickers go to ``UNKNOWN``."""
        missing = [t for t in universe if t not in self.sectors]
        if missing:
            if strict:
                raise MissingTickerSector(f"no sector for: {', '.join(missing)}")
            log.warning("%d tickers without sector, treated as %s: %s", len(missing),
                        UNKNOWN_SECTOR, ", ".join(missing[:10]))
        return SectorMap({t: self[t] for t in universe})


def load_sector_map(path) -> SectorMap:
    path = Path(path)
    out = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader, [])]
        if header[:2] != ["ticker", "sector"]:
            raise ParseError(f"{path}: header must be ticker,sector", row=1)
        for i, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2 or not row[1].strip():
                raise ParseError(f"{path}: missing sector label", row=i, col=2)
            t = row[0].strip()
            if t in out:
                raise ParseError(f"{path}: duplicate ticker {t!r}", row=i, col=1)
            out[t] = row[1].strip()
    return SectorMap(out)


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EventCalendar:
    """Dated announcements, each carrying exactly one tone label."""

    entries: tuple

    def __post_init__(self):
        entries = []
        for d, tone in self.entries:
            tone = str(tone).strip().lower()
            if tone not in TONES:
                raise UnknownTone(f"tone {tone!r} on {d} is not one of {TONES}")
            entries.append((np.datetime64(d, "D"), tone))
        entries.sort(key=lambda e: e[0])
        days = [d for d, _ in entries]
        if len(set(days)) != len(days):
            dup = next(d for d in days if days.count(d) > 1)
            raise CalendarError(f"duplicate event date {dup}")
        object.__setattr__(self, "entries", tuple(entries))

    def __len__(self):
        return len(self.entries)

    @property
    def dates(self) -> np.ndarray:
        return np.array([d for d, _ in self.entries], dtype="datetime64[D]")

    def dates_for(self, tone: str) -> np.ndarray:
        return np.array([d for d, t in self.entries if t == tone], dtype="datetime64[D]")

    def tone_of(self, date) -> str | None:
        d = np.datetime64(date, "D")
        for e, t in self.entries:
            if e == d:
                return t
        return None

    def on_calendar(self, trading_days) -> tuple["EventCalendar", list]:
        """Map off-calendar events to the next trading day.

        Returns the remapped calendar and a list of warning strings.  Events
        after the last trading day are dropped.
        """
        days = _to_dates(trading_days)
        warnings, out, taken = [], [], set()
        for d, tone in self.entries:
            i = int(np.searchsorted(days, d, side="left"))
            if i >= len(days):
                warnings.append(f"event {d} after last trading day, dropped")
                continue
            if days[i] != d:
                warnings.append(f"event {d} not a trading day, mapped to {days[i]}")
            if days[i] in taken:
                raise CalendarError(f"two events map to trading day {days[i]}")
            taken.add(days[i])
            out.append((days[i], tone))
        for w in warnings:
            log.warning(w)
        return EventCalendar(tuple(out)), warnings


def load_event_calendar(path) -> EventCalendar:
    path = Path(path)
    entries = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader, [])]
        if header[:2] != ["date", "tone"]:
            raise ParseError(f"{path}: header must be date,tone", row=1)
        for i, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise ParseError(f"{path}: missing tone", row=i, col=2)
            entries.append((_parse_date(row[0], path, i, 1), row[1]))
    return EventCalendar(tuple(entries))


# ---------------------------------------------------------------------------
# controls
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ControlPanel:
    """Macro controls on a date grid.  ``vix_change`` is always derived."""

    dates: np.ndarray
    vix_level: np.ndarray
    spx_return: np.ndarray
    yield_2y: np.ndarray
    yield_10y: np.ndarray
    dollar_twi: np.ndarray
    vix_change: np.ndarray = field(init=False)

    def __post_init__(self):
        dates = _to_dates(self.dates)
        _check_increasing(dates, "controls")
        dates.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        for name in ("vix_level", "spx_return", "yield_2y", "yield_10y", "dollar_twi"):
            a = _frozen(getattr(self, name))
            if a.shape != (len(dates),):
                raise ValueError(f"{name} has shape {a.shape}, expected ({len(dates)},)")
            object.__setattr__(self, name, a)
        change = np.full(len(dates), np.nan)
        change[1:] = self.vix_level[1:] - self.vix_level[:-1]
        object.__setattr__(self, "vix_change", _frozen(change))

    def matrix(self, columns: Sequence[str] = CONTROL_COLUMNS) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in columns]) if columns else \
            np.empty((len(self.dates), 0))

    def align(self, trading_days, ffill_limit: int = 3, strict: bool = False):
        """Re-index onto ``trading_days``, forward-filling gaps of up to ``ffill_limit`` days.

        Returns ``(ControlPanel, missing_dates)``.  Missing dates are reported,
        and only raise :class:`AlignmentError` when ``strict``.
        """
        days = pd.DatetimeIndex(_to_dates(trading_days))
        src = pd.DataFrame({c: getattr(self, c) for c in
                            ("vix_level", "spx_return", "yield_2y", "yield_10y", "dollar_twi")},
                           index=pd.DatetimeIndex(self.dates))
        union = src.index.union(days)
        filled = src.reindex(union)
        if ffill_limit > 0:
            filled = filled.ffill(limit=ffill_limit)
        filled = filled.reindex(days)
        missing = [d.date() for d in days[filled.isna().any(axis=1).to_numpy()]]
        not_covered = days.difference(src.index)
        if len(not_covered):
            log.info("%d trading days absent from controls file", len(not_covered))
        if missing:
            msg = f"controls missing on {len(missing)} trading days (first {missing[0]})"
            if strict:
                raise AlignmentError(msg)
            log.warning(msg)
        panel = ControlPanel(dates=days.values.astype("datetime64[D]"),
                             **{c: filled[c].to_numpy() for c in filled.columns})
        return panel, missing


def load_controls(path) -> ControlPanel:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    need = ["date", *_CONTROL_FILE_COLUMNS]
    absent = [c for c in need if c not in header]
    if absent:
        raise ParseError(f"{path}: missing columns {', '.join(absent)}", row=1)
    pos = {c: header.index(c) for c in need}
    dates, cols = [], {c: [] for c in _CONTROL_FILE_COLUMNS}
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise ParseError(f"{path}: short row", row=i)
        dates.append(_parse_date(row[pos["date"]], path, i, pos["date"] + 1))
        for c in _CONTROL_FILE_COLUMNS:
            cols[c].append(_parse_float(row[pos[c]], path, i, pos[c] + 1))
    return ControlPanel(dates=dates, **{_CONTROL_FILE_COLUMNS[c]: np.array(v) for c, v in cols.items()})
