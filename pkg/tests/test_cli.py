import csv
import io
import json
import subprocess
import sys

import pytest

from covertdns.cli import _flatten, _csv_cell, run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture()
def pushdo(tmp_path):
    pcap = tmp_path / "p.pcap"
    code, _, err = call("simulate", "--family", "Pushdo", "--mode", "dot", "--seed", 7, "--pcap", pcap)
    assert code == 0, err
    return pcap


def test_simulate_ingest_stats(pushdo, tmp_path):
    series = tmp_path / "s.txt"
    assert call("ingest", "--pcap", pushdo, "--resolver", "1.1.1.1", "--out", series)[0] == 0
    code, out, _ = call("stats", "--series", series, "--exclude", 97)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows == [{"min": "185", "max": "185", "average": "185.0", "stdev": "0.0", "unique_count": "1"}]


def test_analyze_with_demo_db(pushdo):
    code, out, _ = call("analyze", "--pcap", pushdo, "--resolver", "1.1.1.1", "--demo-db")
    assert code == 0
    report = json.loads(out)
    assert report["covert_dns_suspected"] is True


def test_classify_empty_db(tmp_path):
    series = tmp_path / "s.txt"
    series.write_text("500\n" * 40)
    db = tmp_path / "empty.json"
    db.write_text(json.dumps({"config": {"lambda": 1600, "order": 4, "use_trend": True, "exclude": [97]}, "entries": []}))
    code, out, err = call("classify", "--series", series, "--db", db)
    assert code == 3 and out == "" and "EmptyDatabase" in err


def test_build_then_classify(tmp_path):
    db = tmp_path / "db.json"
    for family, seed in (("Goz", 1), ("Alexa", 2)):
        series = tmp_path / f"{family}.txt"
        pcap = tmp_path / f"{family}.pcap"
        assert call("simulate", "--family", family, "--mode", "doh", "--seed", seed, "--pcap", pcap, "--series", series)[0] == 0
        code, out, err = call("build-ioc", "--series", series, "--family", family, "--db", db, "--format", "json")
        assert code == 0, err
        assert json.loads(out)["family"] == family
    code, out, _ = call("classify", "--series", tmp_path / "Goz.txt", "--db", db, "--format", "json")
    ranked = [json.loads(line) for line in out.splitlines()]
    assert ranked[0]["family"] == "Goz" and ranked[0]["distance"] == 0.0
    # adding the same family twice is refused, a different config too
    assert call("build-ioc", "--series", tmp_path / "Goz.txt", "--family", "Goz", "--db", db)[0] == 3
    assert call("build-ioc", "--series", tmp_path / "Goz.txt", "--family", "Zeus", "--db", db, "--raw")[0] == 3
    assert call("build-ioc", "--series", tmp_path / "Goz.txt", "--family", "Goz", "--db", db, "--replace")[0] == 0


def test_gen_domains(tmp_path):
    out_file = tmp_path / "d.txt"
    code, out, _ = call("gen-domains", "--model", "conficker", "--count", 100, "--seed", 1, "--out", out_file, "--format", "json")
    assert code == 0 and json.loads(out)["count"] == 100
    assert len(out_file.read_text().splitlines()) == 100
    model = tmp_path / "m.txt"
    model.write_text("family = Mine\nmin = 9\nmax = 12\naverage = 10.5\nstdev = 1\n")
    code, out, _ = call("gen-domains", "--model", model, "--count", 20, "--seed", 1, "--out", out_file)
    assert code == 0 and "Mine" in out
    pcap = tmp_path / "x.pcap"
    assert call("simulate", "--domains", out_file, "--family", "Conficker", "--mode", "doh", "--seed", 2, "--pcap", pcap)[0] == 0


def test_usage_errors(tmp_path):
    assert call()[0] == 2
    assert call("bogus")[0] == 2
    assert call("simulate", "--family", "Goz", "--mode", "doq", "--seed", 1, "--pcap", tmp_path / "x")[0] == 2
    assert call("gen-domains", "--model", "nosuch", "--count", 1, "--seed", 1, "--out", tmp_path / "x")[0] == 2
    assert call("ingest", "--pcap", tmp_path / "x", "--resolver", "not-an-ip", "--out", tmp_path / "y")[0] == 2


def test_io_errors(tmp_path):
    assert call("stats", "--series", tmp_path / "missing.txt")[0] == 3
    bad = tmp_path / "bad.pcap"
    bad.write_bytes(b"\x00" * 40)
    code, _, err = call("ingest", "--pcap", bad, "--resolver", "1.1.1.1", "--out", tmp_path / "s")
    assert code == 3 and "BadMagic" in err


def test_analyze_no_usable_flow(tmp_path, pushdo):
    code, out, err = call("analyze", "--pcap", pushdo, "--resolver", "9.9.9.9")
    assert code == 1
    assert json.loads(out)["status"].startswith("EmptySeries")
    assert "EmptySeries" in err


def test_bad_detection_config(tmp_path, pushdo):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("min_packet = 30\n")
    assert call("analyze", "--pcap", pushdo, "--resolver", "1.1.1.1", "--config", cfg)[0] == 3
    cfg.write_text("min_packets = 30\nstatic_unique_threshold = 3\n")
    code, out, _ = call("analyze", "--pcap", pushdo, "--resolver", "1.1.1.1", "--config", cfg)
    assert code == 0 and json.loads(out)["static_length"]["verdict"] == "Flagged"


def test_outputs_are_deterministic(tmp_path):
    outputs = []
    for run_dir in ("a", "b"):
        d = tmp_path / run_dir
        d.mkdir()
        call("simulate", "--family", "Zeus", "--mode", "dot", "--seed", 3, "--pcap", d / "z.pcap", "--series", d / "z.txt")
        outputs.append(
            ((d / "z.pcap").read_bytes(), call("analyze", "--pcap", d / "z.pcap", "--resolver", "1.1.1.1", "--demo-db")[1])
        )
    assert outputs[0] == outputs[1]


def test_csv_and_json_carry_same_fields(pushdo):
    _, js, _ = call("analyze", "--pcap", pushdo, "--resolver", "1.1.1.1", "--demo-db")
    _, cs, _ = call("analyze", "--pcap", pushdo, "--resolver", "1.1.1.1", "--demo-db", "--format", "csv")
    flat = {k: _csv_cell(v) for k, v in _flatten(json.loads(js)).items()}
    assert list(csv.DictReader(io.StringIO(cs))) == [flat]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "covertdns", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("covertdns")
