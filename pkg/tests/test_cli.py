import json
import logging
import subprocess
import sys
from pathlib import Path

import pytest

from hilbert16.cli import dumps, main, validate_report

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"
VDP = str(SYSTEMS / "vdp.json")
CC = str(SYSTEMS / "cubic_circle.json")
CENTER = str(SYSTEMS / "center.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_bounds_degree(capsys):
    rep = report(capsys, "bounds", "--degree", "2")
    assert rep["quartic_bound"] == 4 and rep["kind"] == "degree_bounds"


def test_bounds_degree_invalid(capsys):
    code, _, err = run(capsys, "bounds", "--degree", "1")
    assert code == 2 and "degree n > 1" in err


def test_bounds_vdp(capsys):
    rep = report(capsys, "bounds", "--system", VDP, "--window", "-4:4", "--grid", "512")
    assert (rep["M"], rep["N"], rep["master_bound"], rep["behaviors"]) == (2, 2, 17, 4)


def test_contacts_vdp(capsys):
    rep = report(capsys, "contacts", "--system", VDP, "--window", "-3:3")
    pts = sorted((p["x"], p["y"]) for p in rep["points"])
    assert rep["N"] == 2
    assert pts[0] == pytest.approx((-1, 2 / 3), abs=1e-12)
    assert pts[1] == pytest.approx((1, -2 / 3), abs=1e-12)


def test_window_axes(capsys):
    rep = report(capsys, "divcurve", "--system", VDP, "--window-x", "-3:0", "--window-y", "-2:2", "--grid", "64")
    assert rep["M"] == 1 and rep["window"] == [-3.0, 0.0, -2.0, 2.0]


def test_oracle_vdp(capsys):
    rep = report(capsys, "oracle", "--system", VDP, "--section", "x=0+", "--K", "64")
    assert rep["period"] == pytest.approx(6.663, abs=1e-3)


def test_descend_cubic_circle(capsys, tmp_path):
    csv = tmp_path / "p.csv"
    rep = report(capsys, "descend", "--system", CC, "--init", "circle:1.3", "--eps", "0", "--K", "256", "--csv", str(csv))
    assert rep["E0"] <= 1e-10 and rep["winding"] == 1
    assert len(csv.read_text().splitlines()) == 257


def test_census_small(capsys):
    rep = report(capsys, "census", "--system", CC, "--init", "circle:1.3", "--eps", "0.01", "--K", "32",
                 "--starts", "2", "--h2-precondition")
    assert rep["census"]["counts"] == {"0": 1}
    assert rep["census"]["alternating_sum"] == 1


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "contacts", "--system", CENTER)[0] == 1  # constant divergence
    assert run(capsys, "oracle", "--system", CENTER, "--section", "y=0+")[0] == 3  # non-isolated
    assert run(capsys, "contacts")[0] == 2  # missing --system
    assert run(capsys, "contacts", "--system", VDP, "--window", "4:-4")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"P": "x +* y", "Q": "x"}))
    assert run(capsys, "contacts", "--system", str(bad))[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["bounds", "--degree", "5"],
        ["bounds", "--system", VDP, "--window", "-4:4", "--grid", "128"],
        ["divcurve", "--system", CC, "--window", "-2:2", "--grid", "64"],
        ["contacts", "--system", VDP, "--window", "-3:3"],
        ["oracle", "--system", CC, "--K", "32"],
        ["descend", "--system", CC, "--init", "circle:1.2", "--K", "32", "--max-iters", "20"],
        ["census", "--system", CC, "--init", "circle:1.3", "--eps", "0.01", "--K", "32", "--starts", "1", "--h2-precondition"],
    ],
)
def test_out_is_valid_and_deterministic(capsys, tmp_path, argv):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, *argv, "--out", str(a))[0] == 0
    assert run(capsys, *argv, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    validate_report(json.loads(a.read_text()))
    code, out, _ = run(capsys, "validate", str(a))
    assert code == 0 and json.loads(out)["valid"]


def test_validate_rejects(capsys, tmp_path):
    f = tmp_path / "x.json"
    f.write_text(json.dumps({"kind": "bounds", "n": 2}))
    code, out, _ = run(capsys, "validate", str(f))
    assert code == 1 and not json.loads(out)["valid"]


def test_dumps_precision():
    assert dumps(0.1) == "0.10000000000000001"
    assert json.loads(dumps({"a": [1.0, 2]})) == {"a": [1.0, 2]}


def test_log_env(monkeypatch, capsys):
    monkeypatch.setenv("HILBERT16_LOG", "debug")
    logging.getLogger().handlers.clear()
    assert run(capsys, "bounds", "--degree", "3")[0] == 0
    assert logging.getLogger().level == logging.DEBUG
    logging.getLogger().handlers.clear()
    logging.getLogger().setLevel(logging.WARNING)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "hilbert16", "bounds", "--degree", "3"], capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["quartic_bound"] == 33
