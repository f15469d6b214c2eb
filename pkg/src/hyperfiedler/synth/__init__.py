"""Synthetic markets and independent test oracles."""
from .generator import (
    SynthConfig,
    demo_config,
    gen_controls,
    gen_panel,
    gen_returns,
    shifted_rho,
    spaced_events,
    write_bundle,
)
from .oracles import (
    brute_force_cliques,
    dense_eig_oracle,
    normal_equation_oracle,
    normal_equation_stats,
)

__all__ = [
    "SynthConfig", "demo_config", "gen_controls", "gen_panel", "gen_returns", "shifted_rho", "spaced_events",
    "write_bundle", "brute_force_cliques", "dense_eig_oracle", "normal_equation_oracle",
    "normal_equation_stats",
]
