import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hyperfiedler.errors import CalendarError, DegeneratePanel, ParseError, UnknownTone, MissingTickerSector
from hyperfiedler.marketdata import (
    TONES,
    ControlPanel,
    EventCalendar,
    PricePanel,
    ReturnPanel,
    SectorMap,
    clean_returns,
    compute_returns,
    load_controls,
    load_event_calendar,
    load_price_panel,
    load_sector_map,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def prices(*cols, start="2020-01-01"):
    v = np.array(cols, dtype=float).T
    dates = np.arange(np.datetime64(start), np.datetime64(start) + len(v))
    return PricePanel(dates=dates, tickers=[f"T{i}" for i in range(v.shape[1])], values=v)


# -- loading ---------------------------------------------------------------

def test_load_wide_csv(tmp_path):
    p = write(tmp_path, "p.csv", "date,AAA,BBB\n2020-01-02,1,2\n2020-01-03,1.5,2.5\n2020-01-06,2,3\n")
    panel = load_price_panel(p)
    assert panel.shape == (3, 2)
    assert panel.tickers == ("AAA", "BBB")
    assert panel.dates[0] == np.datetime64("2020-01-02")


def test_duplicate_date_rejected(tmp_path):
    p = write(tmp_path, "p.csv", "date,AAA\n2020-01-02,1\n2020-01-02,2\n")
    with pytest.raises(CalendarError):
        load_price_panel(p)


def test_blank_cell_is_missing(tmp_path):
    p = write(tmp_path, "p.csv", "date,AAA,BBB\n2020-01-02,1,\n2020-01-03,1.5,2.5\n")
    panel = load_price_panel(p)
    assert np.isnan(panel.values).sum() == 1
    assert np.isnan(panel.values[0, 1])


def test_malformed_cell_reports_position(tmp_path):
    p = write(tmp_path, "p.csv", "date,AAA,BBB\n2020-01-02,1,2\n2020-01-03,abc,2\n")
    with pytest.raises(ParseError) as exc:
        load_price_panel(p)
    assert exc.value.row == 3 and exc.value.col == 2


def test_duplicate_ticker_rejected(tmp_path):
    p = write(tmp_path, "p.csv", "date,AAA,AAA\n2020-01-02,1,2\n")
    with pytest.raises(ParseError):
        load_price_panel(p)


def test_negative_price_rejected():
    with pytest.raises(ParseError):
        prices([1.0, -1.0])


def test_long_format(tmp_path):
    p = write(tmp_path, "p.csv",
              "date,ticker,price\n2020-01-02,AAA,1\n2020-01-02,BBB,2\n2020-01-03,AAA,3\n")
    panel = load_price_panel(p, format="long")
    assert panel.tickers == ("AAA", "BBB")
    assert np.isnan(panel.values[1, 1]) and panel.values[1, 0] == 3


# -- returns ---------------------------------------------------------------

def test_simple_return():
    r = compute_returns(prices([100, 110]))
    assert r.values[:, 0] == pytest.approx([0.10])


def test_constant_price_zero_returns():
    r = compute_returns(prices([100, 100, 100]))
    assert r.values[:, 0].tolist() == [0.0, 0.0]


def test_missing_price_propagates():
    r = compute_returns(prices([100, np.nan, 120], [1, 2, 3]))
    assert np.isnan(r.values[:, 0]).all()


def test_single_date_is_degenerate():
    with pytest.raises(DegeneratePanel):
        compute_returns(prices([100]))


@settings(max_examples=50, deadline=None)
@given(arrays(float, (20, 3), elements=st.floats(0.5, 200.0)))
def test_returns_reconstruct_prices(p):
    panel = prices(*p.T)
    r = compute_returns(panel)
    rebuilt = p[0] * np.vstack([np.ones(3), np.cumprod(1 + r.values, axis=0)])
    assert np.max(np.abs(rebuilt / p - 1)) <= 1e-12


# -- cleaning --------------------------------------------------------------

def returns_panel(*vals):
    v = np.array(vals, dtype=float).reshape(-1, 1)
    dates = np.arange(np.datetime64("2020-01-01"), np.datetime64("2020-01-01") + len(v))
    return ReturnPanel(dates=dates, tickers=["A"], values=v)


def test_winsorize_clamps():
    out = clean_returns(returns_panel(0.8, -0.8, 0.3), "winsorize", 0.5)
    assert out.values[:, 0].tolist() == [0.5, -0.5, 0.3]


def test_drop_removes():
    out = clean_returns(returns_panel(0.8, -0.8, 0.3), "drop", 0.5)
    assert np.isnan(out.values[:2, 0]).all() and out.values[2, 0] == 0.3


@settings(max_examples=50, deadline=None)
@given(arrays(float, 30, elements=st.floats(-3, 3)), st.sampled_from(["winsorize", "drop"]))
def test_cleaning_is_idempotent(v, policy):
    once = clean_returns(returns_panel(*v), policy)
    twice = clean_returns(once, policy)
    np.testing.assert_array_equal(once.values, twice.values)


# -- sectors, events, controls --------------------------------------------

def test_sector_map_unknown_default(tmp_path):
    sm = load_sector_map(write(tmp_path, "s.csv", "ticker,sector\nAAA,Tech\n"))
    assert sm["AAA"] == "Tech" and sm["ZZZ"] == "UNKNOWN"
    with pytest.raises(MissingTickerSector):
        sm.resolve(["AAA", "ZZZ"], strict=True)
    assert sm.resolve(["AAA", "ZZZ"]).sectors == {"AAA": "Tech", "ZZZ": "UNKNOWN"}


def test_event_tones(tmp_path):
    cal = load_event_calendar(write(tmp_path, "e.csv",
                                    "date,tone\n2015-12-16,hawkish\n2020-03-15,dovish\n"))
    assert cal.tone_of("2015-12-16") == "hawkish"
    assert np.datetime64("2020-03-15") in cal.dates_for("dovish")


def test_unknown_tone(tmp_path):
    with pytest.raises(UnknownTone):
        load_event_calendar(write(tmp_path, "e.csv", "date,tone\n2015-12-16,mixed\n"))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3000), st.sampled_from(TONES)), unique_by=lambda e: e[0]))
def test_tone_partition(entries):
    base = np.datetime64("2010-01-01")
    cal = EventCalendar(tuple((base + d, t) for d, t in entries))
    assert sum(len(cal.dates_for(t)) for t in TONES) == len(cal)


def test_weekend_event_maps_forward():
    days = np.array(["2020-01-03", "2020-01-06"], dtype="datetime64[D]")
    cal, warnings = EventCalendar((("2020-01-04", "neutral"),)).on_calendar(days)
    assert cal.dates[0] == np.datetime64("2020-01-06")
    assert len(warnings) == 1


def test_controls_vix_change(tmp_path):
    text = "date,vix,spx_ret,y2,y10,twi\n"
    text += "2020-01-02,12,0.01,1.5,1.9,100\n2020-01-03,14,0.0,1.5,1.9,100\n2020-01-06,13,0.0,1.5,1.9,100\n"
    c = load_controls(write(tmp_path, "c.csv", text))
    assert np.isnan(c.vix_change[0])
    np.testing.assert_array_equal(c.vix_change[1:], np.diff(c.vix_level))


def test_controls_align_forward_fill():
    d = np.array(["2020-01-02", "2020-01-06"], dtype="datetime64[D]")
    one = np.ones(2)
    c = ControlPanel(dates=d, vix_level=np.array([10.0, 11.0]), spx_return=one, yield_2y=one,
                     yield_10y=one, dollar_twi=one)
    days = np.array(["2020-01-02", "2020-01-03", "2020-01-06"], dtype="datetime64[D]")
    aligned, missing = c.align(days)
    assert missing == []
    assert aligned.vix_level.tolist() == [10.0, 10.0, 11.0]
    aligned, missing = c.align(days, ffill_limit=0)
    assert len(missing) == 1
