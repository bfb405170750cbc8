import csv
import io
import json
import subprocess
import sys

import pytest

from gperiods import api
from gperiods.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_series_low_order(capsys):
    code, out, _ = call(capsys, "series", "--family", "default", "--coord", "1", "--order", "4")
    assert code == 0
    y11 = json.loads(out)["coefficients"]["y11"]
    assert y11 == ["1", "1/4", "9/64", "25/256", "1225/16384"]


def test_series_order_zero_identity(capsys):
    code, out, _ = call(capsys, "series", "--order", "0", "--coord", "2")
    c = json.loads(out)["coefficients"]
    assert code == 0 and c == {"y11": ["1"], "y12": ["0"], "y21": ["0"], "y22": ["1"]}


def test_bad_coordinate_is_usage_error(capsys):
    code, _, err = call(capsys, "series", "--coord", "7")
    assert code == 1 and json.loads(err)["error"]


def test_unknown_option_exits_one():
    with pytest.raises(SystemExit) as info:
        run(["series", "--bogus"])
    assert info.value.code == 1


def test_heights_csv(capsys):
    code, out, _ = call(capsys, "series", "--heights", "--order", "10")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["label", "n", "log_den", "log_abs_max"]


def test_trivial_check(capsys):
    code, out, _ = call(capsys, "trivial-check")
    assert code == 0 and json.loads(out)["summary"] == "PASS exact, PASS numeric"
    code, _, err = call(capsys, "trivial-check", "--basis-scale", "2")
    assert code == 2 and json.loads(err)["error"]


def test_relation_exit_codes(capsys):
    assert call(capsys, "relation", "--point", "1/3")[0] == 2
    assert call(capsys, "relation", "--family", "two-singular", "--point", "1/2")[0] == 3
    assert call(capsys, "relation", "--point", "not a number((")[0] == 1


def test_relation_certificate_keys(capsys):
    code, out, _ = call(capsys, "relation", "--point", "1/2", "--report")
    d = json.loads(out)
    assert code == 0
    assert set(d["field"]) == {"disc", "degree"}
    assert set(d["nontriviality"]) == {"order_of_vanishing", "witness_coefficient"}
    assert set(d["polynomial"]) >= {"degree", "terms"}
    assert d["orbit_report"]["inequalities"]["galois_orbit"].startswith("[K(s):Q] >= c1*M^c2 with M = ")


def test_cm_commands(capsys):
    code, out, _ = call(capsys, "cm", "--class-number", "-23")
    assert code == 0 and json.loads(out)["h"] == 3
    code, out, _ = call(capsys, "cm", "--heegner", "200")
    assert json.loads(out)["discriminants"] == [-3, -4, -7, -8, -11, -19, -43, -67, -163]
    code, out, _ = call(capsys, "cm", "--scan", "30")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["D", "fundamental?", "h", "min_a"]
    assert call(capsys, "cm", "--class-number", "-5")[0] == 1


def test_siegel_command(capsys):
    code, out, _ = call(capsys, "siegel", "--max", "200", "--eps", "0.1")
    rows = list(csv.DictReader(io.StringIO(out)))
    h1 = [r for r in rows if r["h"] == "1" and r["fundamental"] == "1"]
    assert code == 0 and len(h1) == 9
    assert list(rows[0]) == ["D", "fundamental", "h", "ratio_eps_0.1"]


def test_periods_command(capsys):
    code, out, _ = call(capsys, "periods", "--lam", "1/2", "--prec", "128")
    assert code == 0 and len(json.loads(out)["entries"]) == 2
    assert call(capsys, "periods", "--lam", "1")[0] == 2


def test_radii_command(capsys):
    code, out, _ = call(capsys, "radii", "--order", "100", "--place", "archimedean", "--place", "3")
    assert code == 0
    for r in json.loads(out)["radii"]:
        if r["place"] == 3:
            assert r["radius"] == 1.0


def test_precision_env(monkeypatch, capsys):
    monkeypatch.setenv(api.PREC_ENV, "notanumber")
    assert call(capsys, "periods", "--lam", "1/2")[0] == 1
    monkeypatch.setenv(api.PREC_ENV, "96")
    code, out, _ = call(capsys, "trivial-check", "--order", "10")
    assert json.loads(out)["numeric"]["precision"] == 96


def test_output_is_deterministic():
    cmd = [sys.executable, "-m", "gperiods.cli", "siegel", "--max", "500"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a


def test_remote_mode(monkeypatch, capsys):
    from fastapi.testclient import TestClient

    import httpx

    from gperiods.service import create_app

    client = TestClient(create_app())

    def post(url, json=None, timeout=None):
        return client.post("/" + url.rsplit("/", 1)[1], json=json)

    monkeypatch.setattr(httpx, "post", post)
    local = call(capsys, "cm", "--heegner", "100")
    remote = call(capsys, "--server", "http://testserver", "cm", "--heegner", "100")
    assert local == remote
    assert call(capsys, "--server", "http://testserver", "relation", "--family", "two-singular", "--point", "1/2")[0] == 3
