"""Batch command-line interface."""
from .config import RunConfig
from .main import build_parser, main, plot_results

__all__ = ["RunConfig", "build_parser", "main", "plot_results"]
