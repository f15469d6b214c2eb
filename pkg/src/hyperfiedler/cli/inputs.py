"""Load every input named in a RunConfig and bring it onto one trading calendar."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..marketdata import (
    ControlPanel,
    EventCalendar,
    SectorMap,
    clean_returns,
    compute_returns,
    load_controls,
    load_event_calendar,
    load_price_panel,
    load_sector_map,
    split_factors,
)
from ..residualizer import ResidualPanel, residualize
from .config import RunConfig

log = logging.getLogger(__name__)


@dataclass
class Inputs:
    residuals: ResidualPanel
    sectors: SectorMap
    events: EventCalendar
    controls: ControlPanel
    warnings: list = field(default_factory=list)
    missing_controls: list = field(default_factory=list)


def load_inputs(cfg: RunConfig) -> Inputs:
    warnings = []
    prices = load_price_panel(cfg.prices)
    returns = clean_returns(compute_returns(prices), cfg.winsorize_policy, cfg.winsorize_bound)
    if cfg.start or cfg.end:
        returns = returns.between(cfg.start, cfg.end)
    stocks, factors = split_factors(returns, cfg.factors)
    residuals = residualize(stocks, factors, cfg.min_beta_obs, cfg.beta_mode, cfg.rolling_window)
    if residuals.excluded:
        warnings.append(f"{len(residuals.excluded)} stocks excluded for short history")

    sector_file = load_sector_map(cfg.sectors)
    unknown = [t for t in residuals.tickers if t not in sector_file]
    if unknown:
        warnings.append(f"{len(unknown)} tickers without sector, treated as UNKNOWN")
    sectors = sector_file.resolve(residuals.tickers)

    events, mapped = load_event_calendar(cfg.events).on_calendar(residuals.dates)
    warnings.extend(mapped)

    controls, missing = load_controls(cfg.controls).align(residuals.dates, cfg.ffill_limit)
    if missing:
        warnings.append(f"controls missing on {len(missing)} trading days after forward-fill")
    return Inputs(residuals=residuals, sectors=sectors, events=events, controls=controls,
                  warnings=warnings, missing_controls=missing)
