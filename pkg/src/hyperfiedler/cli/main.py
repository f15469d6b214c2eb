"""Command-line entry point.

Subcommands: ``validate``, ``run``, ``sweep``, ``plot``, ``synth-demo``.
Exit codes: 0 ok, 2 input error, 3 alignment error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from ..errors import AlignmentError, HyperFiedlerError, InputError, MissingResults, NumericalError
from ..eventstudy import EVENT_COLUMNS, k_sweep
from ..synth import demo_config, write_bundle
from . import outputs, svg
from .config import RunConfig
from .inputs import load_inputs

log = logging.getLogger("hyperfiedler")

EXIT_OK, EXIT_INPUT, EXIT_ALIGN, EXIT_NUMERIC = 0, 2, 3, 4
OUTPUT_ENV = "HYPERFIEDLER_OUTPUT_DIR"

# flag name -> config field
_OVERRIDES = {
    "k": int, "k_min": int, "k_max": int, "theta_intra": float, "theta_inter": float,
    "measure": str, "inference": str, "exclusion": str, "workers": int, "output_dir": str,
    "winsorize_policy": str, "winsorize_bound": float, "beta_mode": str,
}


def _config(args) -> RunConfig:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise InputError(f"config file not found: {path}")
        cfg = RunConfig.load(path)
    else:
        cfg = RunConfig().resolve(Path.cwd())
    env_out = os.environ.get(OUTPUT_ENV)
    if env_out:
        cfg.output_dir = env_out
    for name in _OVERRIDES:
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    try:
        return cfg.validate()
    except ValueError as exc:
        raise InputError(f"invalid configuration: {exc}") from exc


def _add_common(p: argparse.ArgumentParser, with_k: bool = True):
    p.add_argument("--config", "-c", help="TOML config file")
    if with_k:
        p.add_argument("--k", type=int, help="window half-width in trading days (5-20)")
    p.add_argument("--theta-intra", dest="theta_intra", type=float)
    p.add_argument("--theta-inter", dest="theta_inter", type=float)
    p.add_argument("--measure", choices=("hypergraph", "graph"))
    p.add_argument("--inference", choices=("classical", "robust"))
    p.add_argument("--exclusion", choices=("events", "strict"))
    p.add_argument("--winsorize-policy", dest="winsorize_policy", choices=("winsorize", "drop"))
    p.add_argument("--winsorize-bound", dest="winsorize_bound", type=float)
    p.add_argument("--beta-mode", dest="beta_mode", choices=("full", "rolling"))
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir", "-o", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperfiedler",
                                     description="Announcement effects on hypergraph connectivity")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check that all inputs load and line up")
    p.add_argument("--config", "-c")
    p.add_argument("--lenient", action="store_true", help="report control gaps without failing")

    p = sub.add_parser("run", help="fit one model at one horizon")
    _add_common(p)
    p.add_argument("--mode", choices=("baseline", "tone"), default="baseline")

    p = sub.add_parser("sweep", help="fit baseline and tone models across a range of k")
    _add_common(p, with_k=False)
    p.add_argument("--k-min", dest="k_min", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)

    p = sub.add_parser("plot", help="draw SVG charts from a sweep directory")
    p.add_argument("results", help="directory holding sweep_table.csv")

    p = sub.add_parser("synth-demo", help="write a synthetic input bundle and config")
    p.add_argument("out", help="target directory")
    p.add_argument("--seed", type=int, default=0)
    return parser


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    cfg = _config(args)
    for name in ("prices", "sectors", "events", "controls"):
        if not Path(getattr(cfg, name)).exists():
            raise InputError(f"{name} file not found: {getattr(cfg, name)}")
    inp = load_inputs(cfg)
    for w in inp.warnings:
        print(f"WARNING: {w}")
    if inp.missing_controls and not args.lenient:
        raise AlignmentError(f"controls missing on {len(inp.missing_controls)} trading days "
                             f"(first {inp.missing_controls[0]})")
    n_dates, n_stocks = inp.residuals.shape
    print(f"prices: {n_dates} trading days x {n_stocks} stocks "
          f"({inp.residuals.dates[0]} .. {inp.residuals.dates[-1]})")
    print(f"events: {len(inp.events)} "
          + ", ".join(f"{t}={len(inp.events.dates_for(t))}" for t in ("hawkish", "dovish", "neutral")))
    print(f"sectors: {len(set(inp.sectors.sectors.values()))} labels")
    print("OK")
    return EXIT_OK


def _prepare(cfg: RunConfig):
    inp = load_inputs(cfg)
    for w in inp.warnings:
        log.warning(w)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return inp, out


def cmd_run(args) -> int:
    cfg = _config(args)
    inp, out = _prepare(cfg)
    h, echo = cfg.hash(), cfg.echo()
    table = k_sweep(inp.residuals, inp.events, inp.controls, inp.sectors, [cfg.k], cfg.net_config(),
                    modes=(args.mode,), measure=cfg.measure, cov_type=cfg.cov_type,
                    strict_exclusion=cfg.exclusion == "strict", control_columns=cfg.control_columns,
                    workers=cfg.workers)
    _write_all(out, cfg, table, h, echo)
    if args.mode in table.errors and cfg.k in table.errors[args.mode]:
        raise NumericalError(table.errors[args.mode][cfg.k])
    r = table.results[args.mode][cfg.k]
    for v in r.columns:
        if v in EVENT_COLUMNS[args.mode]:
            print(f"k={cfg.k} {v}: {r.coef(v):+.4f} (p={r.pvalue(v):.3f})")
    print(f"R2={r.rsquared:.4f} n={r.nobs} -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    inp, out = _prepare(cfg)
    h, echo = cfg.hash(), cfg.echo()
    table = k_sweep(inp.residuals, inp.events, inp.controls, inp.sectors,
                    range(cfg.k_min, cfg.k_max + 1), cfg.net_config(), modes=("baseline", "tone"),
                    measure=cfg.measure, cov_type=cfg.cov_type,
                    strict_exclusion=cfg.exclusion == "strict", control_columns=cfg.control_columns,
                    workers=cfg.workers)
    _write_all(out, cfg, table, h, echo)
    outputs.write_sweep(out, table, h)
    n_ok = sum(len(v) for v in table.results.values())
    print(f"{n_ok} models fitted over k={cfg.k_min}..{cfg.k_max} -> {out}")
    return EXIT_OK if n_ok else EXIT_NUMERIC


def _write_all(out, cfg, table, h, echo):
    for k in table.ks:
        outputs.write_series(out, table.series[k], h)
        for mode, by_k in table.results.items():
            if k not in by_k:
                continue
            design = table.designs[mode][k]
            doc = outputs.result_document(echo, h, mode, k, cfg.measure, design, by_k[k],
                                          table.exclusions[k])
            outputs.write_result(out, doc, by_k[k])
            outputs.write_design_log(out, design, h)
    for mode, by_k in table.results.items():
        outputs.write_table(out, mode, by_k, h)
    outputs.write_exclusions(out, [table.exclusions[k] for k in table.ks], h)


def cmd_plot(args) -> int:
    paths = plot_results(args.results)
    for p in paths:
        print(p)
    return EXIT_OK


def plot_results(results_dir) -> list:
    """Coefficient-vs-k chart per event variable and an R^2-vs-k comparison."""
    results_dir = Path(results_dir)
    path = results_dir / outputs.SWEEP_TABLE
    if not path.exists():
        raise MissingResults(f"no {outputs.SWEEP_TABLE} in {results_dir}")
    h, rows = outputs.read_csv(path)
    if not rows:
        raise MissingResults(f"{path} has no rows")

    def num(s):
        return float(s) if s not in ("", None) else None

    ks = [int(r["k"]) for r in rows]
    written = []
    variables = [c[:-5] for c in rows[0] if c.endswith("_coef")]
    for v in variables:
        coefs = [num(r[f"{v}_coef"]) for r in rows]
        if all(c is None for c in coefs):
            continue
        doc = svg.coefficient_chart(v, ks, coefs, [num(r[f"{v}_p"]) for r in rows],
                                    [num(r.get(f"{v}_se")) for r in rows], config_hash=h)
        p = results_dir / f"coef_{v}.svg"
        p.write_text(doc)
        written.append(p)
    r2 = {c[3:]: [num(r[c]) for r in rows] for c in rows[0] if c.startswith("r2_")}
    if r2:
        p = results_dir / "r2_vs_k.svg"
        p.write_text(svg.r2_chart(ks, r2, config_hash=h))
        written.append(p)
    if not written:
        raise MissingResults(f"{path} holds no plottable columns")
    return written


def cmd_synth_demo(args) -> int:
    out = Path(args.out)
    synth = demo_config(seed=args.seed)
    paths = write_bundle(out, synth)
    cfg = RunConfig(prices=paths["prices"].name, sectors=paths["sectors"].name,
                    events=paths["events"].name, controls=paths["controls"].name,
                    factors=list(synth.factor_tickers), seed=args.seed)
    (out / "config.toml").write_text(cfg.to_toml())
    for p in [*paths.values(), out / "config.toml"]:
        print(p)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "plot": cmd_plot,
            "synth-demo": cmd_synth_demo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except AlignmentError as exc:
        print(f"alignment error: {exc}", file=sys.stderr)
        return EXIT_ALIGN
    except (InputError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HyperFiedlerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
