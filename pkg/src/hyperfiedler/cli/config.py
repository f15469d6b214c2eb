"""Run configuration: a flat TOML key/value file plus command-line overrides."""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..marketdata import CONTROL_COLUMNS
from ..netbuild import K_MAX, K_MIN, NetConfig

# keys that never change results; left out of the echo and the hash
_RUNTIME_KEYS = ("output_dir", "workers")


@dataclass
class RunConfig:
    prices: str = "prices.csv"
    sectors: str = "sectors.csv"
    events: str = "events.csv"
    controls: str = "controls.csv"
    factors: list = field(default_factory=lambda: ["SPY", "QQQ"])
    start: Optional[str] = None
    end: Optional[str] = None

    k: int = 7
    k_min: int = 5
    k_max: int = 20

    theta_intra: float = 0.30
    theta_inter: float = 0.50
    absolute: bool = False
    winsorize_policy: str = "winsorize"
    winsorize_bound: float = 0.50

    min_beta_obs: int = 60
    beta_mode: str = "full"
    rolling_window: int = 252
    min_stock_obs: Optional[int] = None
    min_pair_obs: Optional[int] = None
    min_window_stocks: int = 30

    min_clique_size: int = 3
    max_clique_size: int = 12
    max_cliques: int = 400
    clique_budget: int = 5_000_000
    wall_clock: Optional[float] = None
    split_oversize: bool = False

    measure: str = "hypergraph"
    inference: str = "classical"
    exclusion: str = "events"
    control_columns: list = field(default_factory=lambda: list(CONTROL_COLUMNS))
    ffill_limit: int = 3

    output_dir: str = "results"
    workers: int = 1
    seed: int = 0

    def validate(self) -> "RunConfig":
        def need(cond, msg):
            if not cond:
                raise ValueError(msg)

        for name in ("k", "k_min", "k_max"):
            v = getattr(self, name)
            need(K_MIN <= v <= K_MAX, f"{name}={v} outside [{K_MIN}, {K_MAX}]")
        need(self.k_min <= self.k_max, "k_min must not exceed k_max")
        need(0 < self.theta_intra < 1 and 0 < self.theta_inter < 1, "thresholds must lie in (0, 1)")
        need(self.theta_intra <= self.theta_inter, "theta_intra must not exceed theta_inter")
        need(self.winsorize_policy in ("winsorize", "drop"), "winsorize_policy: winsorize | drop")
        need(self.winsorize_bound > 0, "winsorize_bound must be positive")
        need(self.beta_mode in ("full", "rolling"), "beta_mode: full | rolling")
        need(self.min_beta_obs >= 2, "min_beta_obs must be at least 2")
        need(1 <= self.min_clique_size <= self.max_clique_size, "bad clique size range")
        need(self.max_cliques >= 1 and self.clique_budget >= 1, "clique limits must be positive")
        need(self.wall_clock is None or self.wall_clock > 0, "wall_clock must be positive")
        need(self.measure in ("hypergraph", "graph"), "measure: hypergraph | graph")
        need(self.inference in ("classical", "robust"), "inference: classical | robust")
        need(self.exclusion in ("events", "strict"), "exclusion: events | strict")
        unknown = [c for c in self.control_columns if c not in CONTROL_COLUMNS]
        need(not unknown, f"unknown control columns: {unknown}")
        need(len(self.factors) >= 1, "need at least one factor ticker")
        need(self.workers >= 1, "workers must be >= 1")
        return self

    # -- derived -------------------------------------------------------------

    def net_config(self) -> NetConfig:
        return NetConfig(theta_intra=self.theta_intra, theta_inter=self.theta_inter,
                         absolute=self.absolute, min_size=self.min_clique_size,
                         max_size=self.max_clique_size, max_cliques=self.max_cliques,
                         budget=self.clique_budget, wall_clock=self.wall_clock,
                         split_oversize=self.split_oversize, min_stock_obs=self.min_stock_obs,
                         min_pair_obs=self.min_pair_obs, min_window_stocks=self.min_window_stocks)

    @property
    def cov_type(self) -> str:
        return "HC1" if self.inference == "robust" else "classical"

    def resolve(self, base) -> "RunConfig":
        """Input paths made absolute relative to ``base``."""
        base = Path(base)
        out = RunConfig(**asdict(self))
        for name in ("prices", "sectors", "events", "controls"):
            p = Path(getattr(self, name))
            setattr(out, name, str(p if p.is_absolute() else (base / p)))
        return out

    # -- serialization -------------------------------------------------------

    def echo(self) -> dict:
        d = asdict(self)
        for key in _RUNTIME_KEYS:
            d.pop(key)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_toml(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_toml_value(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = sorted(set(d) - known)
        if extra:
            raise ValueError(f"unknown config keys: {', '.join(extra)}")
        return cls(**d)

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        return cls.from_toml(path.read_text()).resolve(path.parent)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")
