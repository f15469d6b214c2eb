import json
import re

import numpy as np
import pytest

from hyperfiedler.cli import RunConfig, main, plot_results
from hyperfiedler.cli import outputs
from hyperfiedler.synth import SynthConfig, spaced_events, write_bundle

TABLE_STATS = {"F", "F_pvalue", "R2", "adj_R2", "AIC", "BIC", "n"}


def small_bundle(root, **cfg_changes):
    days = spaced_events(8, 22, first=30)
    synth = SynthConfig(n_stocks=36, n_sectors=4, n_days=days[-1] + 30, event_days=days,
                        event_tones=("hawkish", "dovish", "neutral", "hawkish") * 2,
                        event_breaks=("fragment", "consolidate", "none", "fragment") * 2,
                        delta=0.3, seed=4)
    write_bundle(root, synth)
    cfg = RunConfig(k_min=5, k_max=7, output_dir=str(root / "out"), **cfg_changes)
    (root / "config.toml").write_text(cfg.to_toml())
    return root / "config.toml"


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    return small_bundle(tmp_path_factory.mktemp("bundle"))


@pytest.fixture(scope="module")
def swept(bundle, tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    assert main(["sweep", "-c", str(bundle), "-o", str(out)]) == 0
    return out


def test_config_round_trip():
    cfg = RunConfig(k=9, theta_intra=0.25, start="2013-01-01", control_columns=["vix_level"],
                    wall_clock=1.5, split_oversize=True)
    assert RunConfig.from_toml(cfg.to_toml()) == cfg
    with pytest.raises(ValueError):
        RunConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        RunConfig(k=4).validate()
    assert RunConfig().hash() != RunConfig(theta_inter=0.55).hash()
    assert RunConfig().hash() == RunConfig(workers=4, output_dir="x").hash()


def test_validate_ok(bundle, capsys):
    assert main(["validate", "-c", str(bundle)]) == 0
    assert capsys.readouterr().out.strip().endswith("OK")


def test_validate_weekend_event(tmp_path, capsys):
    cfg = small_bundle(tmp_path)
    ev = tmp_path / "events.csv"
    lines = ev.read_text().splitlines()
    day, tone = lines[1].split(",")
    # move the first event onto a nearby Saturday
    sat = np.busday_offset(np.datetime64(day), -1, roll="forward") + 1
    while np.is_busday(sat):
        sat += 1
    lines[1] = f"{sat},{tone}"
    ev.write_text("\n".join(lines) + "\n")
    assert main(["validate", "-c", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert f"event {sat} not a trading day" in out and out.strip().endswith("OK")


def test_validate_missing_sectors(tmp_path, capsys):
    cfg = small_bundle(tmp_path)
    (tmp_path / "sectors.csv").unlink()
    assert main(["validate", "-c", str(cfg)]) == 2


def test_validate_malformed_prices(tmp_path, capsys):
    cfg = small_bundle(tmp_path)
    p = tmp_path / "prices.csv"
    lines = p.read_text().splitlines()
    lines[3] = lines[3].replace(",", ",oops,", 1).rsplit(",", 1)[0]
    p.write_text("\n".join(lines) + "\n")
    assert main(["validate", "-c", str(cfg)]) == 2
    assert "row 4" in capsys.readouterr().err


def test_validate_control_gap(tmp_path, capsys):
    cfg = small_bundle(tmp_path)
    c = tmp_path / "controls.csv"
    lines = c.read_text().splitlines()
    c.write_text("\n".join(lines[:50] + lines[60:]) + "\n")
    assert main(["validate", "-c", str(cfg)]) == 3
    assert main(["validate", "-c", str(cfg), "--lenient"]) == 0


def test_bad_override_exits_2(bundle):
    assert main(["run", "-c", str(bundle), "--k", "3"]) == 2


def test_run_schema(bundle, tmp_path):
    assert main(["run", "-c", str(bundle), "--k", "7", "-o", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "results_baseline_k7.json").read_text())
    assert TABLE_STATS <= set(doc)
    assert {"coef", "p", "se", "t"} <= set(doc["coefficients"]["FOMC"])
    assert doc["mode"] == "baseline" and doc["k"] == 7 and doc["measure"] == "hypergraph"
    assert doc["config"]["theta_intra"] == 0.30
    assert doc["significance"]["FOMC"] in ("", "*", "**", "***")
    for name in ("exclusion_log.csv", "delta_k7.csv", "windows_k7.csv", "table_baseline.csv"):
        assert (tmp_path / name).exists()


def test_tone_and_graph_measure(bundle, tmp_path):
    assert main(["run", "-c", str(bundle), "--mode", "tone", "--measure", "graph", "-o",
                 str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "results_tone_k7.json").read_text())
    assert doc["measure"] == "graph"
    assert set(doc["event_variables"]) | set(doc["omitted_event_variables"]) == {"Hawkish", "Dovish",
                                                                                 "Neutral"}
    assert TABLE_STATS <= set(doc)


def test_every_file_carries_the_hash(bundle, swept):
    cfg = RunConfig.load(bundle)
    h = cfg.hash()
    files = sorted(swept.iterdir())
    assert files
    for f in files:
        text = f.read_text()
        assert h in text, f.name


def test_repeat_and_workers_are_byte_identical(bundle, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "-c", str(bundle), "-o", str(a)]) == 0
    assert main(["run", "-c", str(bundle), "-o", str(b), "--workers", "2"]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_output_dir_precedence(bundle, tmp_path, monkeypatch):
    env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("HYPERFIEDLER_OUTPUT_DIR", str(env_dir))
    assert main(["run", "-c", str(bundle), "--k", "5"]) == 0
    assert (env_dir / "results_baseline_k5.json").exists()
    assert main(["run", "-c", str(bundle), "--k", "5", "-o", str(flag_dir)]) == 0
    assert (flag_dir / "results_baseline_k5.json").exists()


def test_sweep_and_plot(swept):
    h, rows = outputs.read_csv(swept / outputs.SWEEP_TABLE)
    assert [r["k"] for r in rows] == ["5", "6", "7"]
    paths = plot_results(swept)
    names = {p.name for p in paths}
    assert {"coef_FOMC.svg", "r2_vs_k.svg"} <= names
    r2 = (swept / "r2_vs_k.svg").read_text()
    assert r2.count("<polyline") == 2
    fomc = (swept / "coef_FOMC.svg").read_text()
    n_sig = sum(float(r["FOMC_p"]) < 0.05 for r in rows)
    assert fomc.count('class="marker sig"') == n_sig
    assert fomc.count('class="marker') == 3
    again = plot_results(swept)
    assert [p.read_bytes() for p in again] == [p.read_bytes() for p in paths]


def write_sweep_csv(path, ps):
    header = "k,FOMC_coef,FOMC_se,FOMC_p,FOMC_signif,r2_baseline,adj_r2_baseline,n_baseline"
    body = [f"{5 + i},{-0.1 * (i + 1)},0.05,{p},{int(p < 0.05)},0.01,0.005,900" for i, p in enumerate(ps)]
    path.write_text("# config_hash: abc\n" + "\n".join([header, *body]) + "\n")


def test_single_significant_marker(tmp_path):
    write_sweep_csv(tmp_path / outputs.SWEEP_TABLE, [0.3, 0.01, 0.2, 0.07])
    plot_results(tmp_path)
    svg = (tmp_path / "coef_FOMC.svg").read_text()
    assert svg.count('class="marker sig"') == 1
    assert len(re.findall(r'<rect class="marker sig"[^>]*fill="black"', svg)) == 1
    assert "config_hash: abc" in svg


def test_plot_missing_results(tmp_path, capsys):
    assert main(["plot", str(tmp_path)]) == 2
    (tmp_path / outputs.SWEEP_TABLE).write_text("# config_hash: x\nk,FOMC_coef\n")
    assert main(["plot", str(tmp_path)]) == 2


def test_synth_demo_writes_loadable_bundle(tmp_path, capsys):
    assert main(["synth-demo", str(tmp_path), "--seed", "3"]) == 0
    cfg = RunConfig.load(tmp_path / "config.toml")
    assert cfg.seed == 3 and cfg.validate()
    assert main(["validate", "-c", str(tmp_path / "config.toml")]) == 0
