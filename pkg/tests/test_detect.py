import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covertdns.capture import FlowFilter
from covertdns.detect import (
    DetectionConfig,
    DetectionReport,
    HeuristicResult,
    Verdict,
    analyze,
    analyze_flows,
    analyze_series,
    detect_dot_pattern,
    detect_static_length,
    parse_detection_config,
    report_to_dict,
)
from covertdns.errors import ConfigError
from covertdns.ioc import load_demo_db
from covertdns.series import SizeSeries
from covertdns.tables import DGA_FAMILIES, FAMILIES
from covertdns.trafficsim import write_pcap
from helpers import cached_session

FILTER = FlowFilter(frozenset({"1.1.1.1"}))


def pcap_bytes(family, mode, seed=11, count=1000):
    session, series = cached_session(family, mode, seed, count)
    buf = io.BytesIO()
    write_pcap(session, series, buf)
    return buf.getvalue()


def test_dot_sessions_alternate(family_series):
    for family in FAMILIES:
        res = detect_dot_pattern(family_series[(family, "dot")])
        assert res.verdict is Verdict.FLAGGED and res.score == 0.5


def test_doh_sessions_clear(family_series):
    for family in FAMILIES:
        res = detect_dot_pattern(family_series[(family, "doh")])
        assert res.verdict is Verdict.CLEAR and res.score == 0.0


def test_short_series_inconclusive():
    cfg = DetectionConfig(min_packets=30, static_unique_threshold=3)
    assert detect_dot_pattern(SizeSeries([97, 200] * 5), cfg).verdict is Verdict.INCONCLUSIVE
    assert detect_static_length(SizeSeries([97, 200] * 5), cfg).verdict is Verdict.INCONCLUSIVE


def test_misplaced_97s_not_flagged():
    shifted = SizeSeries([200, 97] * 100)
    assert detect_dot_pattern(shifted).verdict is Verdict.CLEAR


def test_tinba_dot_static():
    _, series = cached_session("Tinba", "dot", 11)
    res = detect_static_length(series)
    assert res.verdict is Verdict.FLAGGED
    assert len(set(series.values[1::2][-100:])) <= 2


def test_alexa_doh_not_static(family_series):
    assert detect_static_length(family_series[("Alexa", "doh")]).verdict is Verdict.CLEAR


@pytest.mark.parametrize("mode", ["doh", "dot"])
def test_all_dga_static(mode, family_series):
    for family in DGA_FAMILIES:
        assert detect_static_length(family_series[(family, mode)]).verdict is Verdict.FLAGGED, family


def test_static_score():
    cfg = DetectionConfig(min_packets=10, static_unique_threshold=2)
    res = detect_static_length(SizeSeries([5] * 9 + [6]), cfg)
    assert res.verdict is Verdict.FLAGGED and res.score == pytest.approx(1 - 1 / 9)
    # the window is the most recent entries
    res = detect_static_length(SizeSeries(list(range(100, 150)) + [5] * 10), cfg)
    assert res.score == 1.0


@given(st.lists(st.integers(60, 700), min_size=0, max_size=80), st.integers(8, 40))
def test_verdicts_deterministic_and_consistent(values, window):
    cfg = DetectionConfig(min_packets=window, static_unique_threshold=min(5, window))
    series = SizeSeries(values or [97])
    a = analyze_series(series, None, cfg)
    assert a == analyze_series(series, None, cfg)
    assert a.covert_dns_suspected == (Verdict.FLAGGED in (a.dot_pattern.verdict, a.static_length.verdict))
    assert (a.dot_pattern.verdict is Verdict.INCONCLUSIVE) == (len(series) < window)


def test_report_invariant_enforced():
    clear = HeuristicResult(Verdict.CLEAR, 0.0)
    with pytest.raises(AssertionError):
        DetectionReport(None, 500, 500, clear, clear, True)
    with pytest.raises(AssertionError):
        DetectionReport(None, 5, 5, clear, clear, False)


def test_config_validation_and_file():
    with pytest.raises(ConfigError):
        DetectionConfig(min_packets=4)
    with pytest.raises(ConfigError):
        DetectionConfig(dot_97_fraction_band=(0.6, 0.4))
    cfg = parse_detection_config(
        "# thresholds\nmin_packets = 40\nstatic_unique_threshold=5\ndot_97_fraction_band = 0.4, 0.6\nattribution_enabled = false\n"
    )
    assert (cfg.min_packets, cfg.static_unique_threshold, cfg.dot_97_fraction_band, cfg.attribution_enabled) == (40, 5, (0.4, 0.6), False)
    with pytest.raises(ConfigError, match="unknown key"):
        parse_detection_config("min_packet = 40\n")
    with pytest.raises(ConfigError):
        parse_detection_config("min_packets = forty\n")
    with pytest.raises(ConfigError):
        parse_detection_config("min_packets\n")


def test_pushdo_dot_pcap_suspected():
    report = analyze(pcap_bytes("Pushdo", "dot"), FILTER, load_demo_db())
    assert report.covert_dns_suspected
    assert report.flow == ("10.0.0.23", "1.1.1.1", 853)
    # a single-size trace has no AR fingerprint
    assert report.attribution is None
    assert any(n.startswith("AttributionSkipped") for n in report.notes)


def test_alexa_doh_pcap_not_suspected():
    report = analyze(pcap_bytes("Alexa", "doh"), FILTER, load_demo_db())
    assert not report.covert_dns_suspected
    assert report.attribution is not None and len(report.attribution) == len(FAMILIES)
    assert report.min_obs_estimate is None or report.min_obs_estimate >= 11


def test_handshake_only_reports_empty_series():
    session, _ = cached_session("Goz", "doh", 11, 5)
    buf = io.BytesIO()
    write_pcap(session, [], buf)
    report = analyze(buf.getvalue(), FILTER)
    assert report.status.startswith("EmptySeries")
    assert not report.covert_dns_suspected and report.n_packets == 0


def test_pcap_and_series_agree():
    session, series = cached_session("Matsnu", "doh", 11)
    db = load_demo_db()
    from_pcap = analyze(pcap_bytes("Matsnu", "doh"), FILTER, db)
    from_series = analyze_series(series, db, flow=from_pcap.flow)
    assert from_pcap == from_series


def test_attribution_can_be_disabled():
    _, series = cached_session("Goz", "doh", 11)
    report = analyze(series, db=load_demo_db(), config=DetectionConfig(attribution_enabled=False))
    assert report.attribution is None and report.notes == ()


def test_multi_flow_capture():
    a = pcap_bytes("Goz", "doh", count=150)
    b = pcap_bytes("Ramdo", "dot", count=150)
    # splice the second capture's packets (without its global header) after the first
    reports = analyze_flows(a + b[24:], FlowFilter(frozenset({"1.1.1.1"})))
    assert [r.flow[2] for r in reports] == [443, 853]
    assert "further flow" in analyze(a + b[24:], FILTER).notes[-1]


def test_report_dict_shape():
    _, series = cached_session("Tinba", "dot", 11)
    d = report_to_dict(analyze(series))
    assert list(d) == [
        "flow", "n_packets", "n_payload", "dot_pattern", "static_length", "covert_dns_suspected",
        "attribution", "min_obs_estimate", "status", "notes",
    ]
    assert d["dot_pattern"] == {"verdict": "Flagged", "score": 0.5}
