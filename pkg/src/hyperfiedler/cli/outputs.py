"""Result files.  Every file carries the config hash; none carries a timestamp."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from ..eventstudy import (
    EVENT_COLUMNS,
    DeltaSeries,
    DesignMatrix,
    Exclusion,
    RegressionResult,
    SweepTable,
    regression_table,
    stars,
)

SWEEP_TABLE = "sweep_table.csv"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    if isinstance(v, np.datetime64):
        return str(v)
    return str(v)


def write_csv(path: Path, header, rows, config_hash: str) -> Path:
    buf = io.StringIO()
    buf.write(f"# config_hash: {config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def write_json(path: Path, doc: dict) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def read_csv(path: Path) -> tuple[str, list]:
    """Rows as dicts plus the embedded config hash."""
    lines = Path(path).read_text().splitlines()
    config_hash = ""
    if lines and lines[0].startswith("# config_hash:"):
        config_hash = lines[0].split(":", 1)[1].strip()
        lines = lines[1:]
    return config_hash, list(csv.DictReader(lines))


def result_document(cfg_echo: dict, config_hash: str, mode: str, k: int, measure: str,
                    design: DesignMatrix, result: RegressionResult, exclusion: Exclusion) -> dict:
    event_vars = [c for c in result.columns if c in EVENT_COLUMNS[mode]]
    return {
        "config_hash": config_hash,
        "config": cfg_echo,
        "mode": mode,
        "k": k,
        "measure": measure,
        "dependent_variable": "delta_fiedler",
        "event_variables": event_vars,
        "omitted_event_variables": list(design.dropped_columns),
        "significance": {v: stars(result.pvalue(v)) for v in event_vars},
        "excluded_events": len(exclusion.excluded),
        "dropped_rows": len(design.dropped),
        **result.to_dict(),
    }


def write_result(out: Path, doc: dict, result: RegressionResult) -> list:
    mode, k, h = doc["mode"], doc["k"], doc["config_hash"]
    paths = [write_json(out / f"results_{mode}_k{k}.json", doc)]
    rows = [(c, b, s, t, p, stars(p)) for c, b, s, t, p in
            zip(result.columns, result.params, result.bse, result.tvalues, result.pvalues)]
    stats_rows = [("F", result.fvalue, None, None, result.f_pvalue, ""),
                  ("R2", result.rsquared, None, None, None, ""),
                  ("adj_R2", result.rsquared_adj, None, None, None, ""),
                  ("AIC", result.aic, None, None, None, ""),
                  ("BIC", result.bic, None, None, None, ""),
                  ("n", result.nobs, None, None, None, "")]
    paths.append(write_csv(out / f"results_{mode}_k{k}.csv", ["term", "estimate", "se", "t", "p", "signif"],
                           rows + stats_rows, h))
    return paths


def write_table(out: Path, mode: str, results: dict, config_hash: str) -> Path:
    """Publication-layout table: one column per k."""
    rows = regression_table(results, list(EVENT_COLUMNS[mode]) if results else None)
    return write_csv(out / f"table_{mode}.csv", rows[0], rows[1:], config_hash)


def write_series(out: Path, series: DeltaSeries, config_hash: str) -> list:
    k = series.k
    p1 = write_csv(out / f"delta_k{k}.csv", ["date", "delta", "lambda_pre", "lambda_post", "valid"],
                   zip(series.dates, series.delta, series.lambda_pre, series.lambda_post,
                       series.valid()), config_hash)
    rows = []
    for (a, b), w in sorted(series.windows.items()):
        rows.append((series.calendar[a], series.calendar[b - 1], w.n_stocks, w.n_edges, w.n_cliques,
                     w.n_covered, w.fallback_used, w.truncated, w.lambda2_hypergraph,
                     w.lambda2_graph, w.valid))
    p2 = write_csv(out / f"windows_k{k}.csv",
                   ["first_date", "last_date", "n_stocks", "n_edges", "n_cliques", "n_covered",
                    "fallback_used", "truncated", "lambda2_hypergraph", "lambda2_graph", "valid"],
                   rows, config_hash)
    return [p1, p2]


def write_exclusions(out: Path, exclusions, config_hash: str) -> Path:
    rows = [entry for ex in exclusions for entry in ex.log]
    return write_csv(out / "exclusion_log.csv", ["event_date", "conflicting_event_date", "k"], rows,
                     config_hash)


def write_design_log(out: Path, design: DesignMatrix, config_hash: str) -> Path:
    return write_csv(out / f"design_log_{design.mode}_k{design.k}.csv", ["date", "reason"],
                     design.dropped, config_hash)


def write_sweep(out: Path, table: SweepTable, config_hash: str) -> Path:
    variables = [v for m in table.results for v in EVENT_COLUMNS[m]]
    header = ["k"]
    for v in variables:
        header += [f"{v}_coef", f"{v}_se", f"{v}_p", f"{v}_signif"]
    for m in table.results:
        header += [f"r2_{m}", f"adj_r2_{m}", f"n_{m}"]
    rows = []
    for k in table.ks:
        row = [k]
        for v in variables:
            mode = next(m for m in table.results if v in EVENT_COLUMNS[m])
            r = table.results[mode].get(k)
            if r is not None and v in r.columns:
                j = r.columns.index(v)
                row += [r.params[j], r.bse[j], r.pvalues[j], bool(r.pvalues[j] < 0.05)]
            else:
                row += [None] * 4
        for m in table.results:
            r = table.results[m].get(k)
            row += [r.rsquared, r.rsquared_adj, r.nobs] if r is not None else [None] * 3
        rows.append(row)
    return write_csv(out / SWEEP_TABLE, header, rows, config_hash)
