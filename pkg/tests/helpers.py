"""Shared builders for the pipeline-level tests."""
from __future__ import annotations

import numpy as np

from hyperfiedler.eventstudy import build_design, delta_fiedler_series, ols_fit
from hyperfiedler.marketdata import clean_returns, compute_returns, split_factors
from hyperfiedler.residualizer import residualize
from hyperfiedler.synth import SynthConfig, gen_controls, gen_panel, spaced_events


def power_config(seed: int, delta: float, n_events: int = 50, spacing: int = 16, **kw) -> SynthConfig:
    days = spaced_events(n_events, spacing, first=30)
    kw.setdefault("rho_in", 0.6)
    kw.setdefault("rho_out", 0.2)
    return SynthConfig(n_stocks=60, n_sectors=6, n_days=days[-1] + 30, event_days=days,
                       delta=delta, seed=seed, **kw)


def synthetic_fit(config: SynthConfig, k: int = 7, modes=("baseline",)):
    """Run the whole pipeline on a generated market; returns ``{mode: (design, result)}``."""
    returns = clean_returns(compute_returns(gen_panel(config)))
    stocks, factors = split_factors(returns, list(config.factor_tickers))
    resid = residualize(stocks, factors)
    controls = gen_controls(returns.dates, factors.column("SPY"), config.seed)
    series = delta_fiedler_series(resid, k, config.sector_map())
    out = {}
    for mode in modes:
        design = build_design(series, config.calendar(), controls, mode)
        out[mode] = (design, ols_fit(design))
    return out


def random_hypergraph_edges(rng: np.random.Generator, n: int, n_edges: int, min_size=3, max_size=6):
    edges = []
    for _ in range(n_edges):
        size = int(rng.integers(min_size, min(max_size, n) + 1))
        edges.append(tuple(sorted(rng.choice(n, size=size, replace=False).tolist())))
    return edges
