import csv
import io
import json

import pytest

from coulomb_kernel import __version__
from coulomb_kernel.cli import SCAN_HEADER, SCHEMA_VERSION, SuiteConfig, ConfigError, main, render_report, run_suite


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_geometry_report_json(tmp_path, capsys):
    path = tmp_path / "g.json"
    code, _, _ = run(["verify", "--suite", "geometry", "--out", str(path)], capsys)
    assert code == 0
    rep = json.loads(path.read_text())
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["toolkit_version"] == __version__
    assert rep["verdict"] == "pass"
    assert "wall_clock_s" not in rep and "workers" not in rep["config"]
    assert all(set(c) == {"id", "params", "value", "threshold", "pass"} for c in rep["checks"])


def test_timing_flag_adds_duration(capsys):
    code, out, _ = run(["verify", "--suite", "geometry", "--timing"], capsys)
    assert code == 0 and "wall_clock_s" in json.loads(out)


def test_csv_report_has_verdict_row(capsys):
    code, out, _ = run(["verify", "--suite", "geometry", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["check", "params", "value", "threshold", "pass"]
    assert rows[-1][0] == "verdict" and rows[-1][-1] == "pass"


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "nosuch"],
    ["verify", "--suite", "schoenberg", "--points", "1"],
    ["verify", "--suite", "spectral", "--nu-min", "0.001"],
    ["scan", "--z", "-1"],
    ["scan", "--z", "a,b"],
    ["scan", "--workers", "0"],
    [],
])
def test_bad_configuration_exits_2(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_negative_t_fails_with_1(capsys):
    code, out, _ = run(["verify", "--suite", "schoenberg", "--t", "-0.05", "--trials", "20"], capsys)
    assert code == 1
    rep = json.loads(out)
    assert rep["verdict"] == "fail"
    assert [c["pass"] for c in rep["checks"] if c["id"] == "gram_psd"] == [False]


def test_unwritable_output_exits_3(capsys):
    code, out, err = run(["verify", "--suite", "geometry", "--out", "/nonexistent/dir/x.json"], capsys)
    assert code == 3
    assert "cannot write" in err
    assert json.loads(out)["verdict"] == "pass"


def test_scan_header_and_footer(tmp_path, capsys):
    path = tmp_path / "w.csv"
    code, _, _ = run(["scan", "--z", "0.5", "--nu-count", "4", "--out", str(path)], capsys)
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "z,nu,K,half_width_N,im_residue_ratio,status"
    assert lines[0].split(",") == SCAN_HEADER
    rows = list(csv.reader(lines[1:]))
    assert len(rows) == 5
    assert all(r[-1] == "ok" for r in rows[:4])
    assert rows[-1][1] == "min" and rows[-1][-1] == "non-negative"


def test_scan_empty_z_list(tmp_path, capsys):
    path = tmp_path / "e.csv"
    code, _, _ = run(["scan", "--z", "", "--out", str(path)], capsys)
    assert code == 0
    assert path.read_text() == ",".join(SCAN_HEADER) + "\n"


def test_scan_empty_nu_grid(capsys):
    code, out, _ = run(["scan", "--z", "1.0", "--nu-count", "0"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[1][1] == "min" and rows[1][-1] == "empty"


def test_config_validation():
    with pytest.raises(ConfigError):
        SuiteConfig(suite="lemma", trials=0).validate()
    with pytest.raises(ConfigError):
        SuiteConfig(suite="lemma", tol_psd=0.0).validate()
    SuiteConfig(suite="all").validate()


def test_suite_reports_reproducible():
    a = render_report(run_suite(SuiteConfig(suite="lemma", seed=5, trials=10)), "json")
    b = render_report(run_suite(SuiteConfig(suite="lemma", seed=5, trials=10)), "json")
    c = render_report(run_suite(SuiteConfig(suite="lemma", seed=6, trials=10)), "json")
    assert a == b and a != c


@pytest.mark.parametrize("argv", [
    ["scan", "--z", "0.5,2.3", "--nu-count", "6", "--format", "json"],
    ["verify", "--suite", "spectral", "--z", "1.0", "--nu-count", "6"],
])
def test_identical_bytes_across_workers(tmp_path, capsys, argv):
    outputs = []
    for w in (1, 2, 8):
        path = tmp_path / f"r{w}"
        assert run(argv + ["--workers", str(w), "--out", str(path)], capsys)[0] == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
