import csv
import io
import json
import math

import numpy as np
import pytest

from univsparse import bounds
from univsparse.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main, surface_table


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def by_bound(rows):
    return {r["bound"]: r for r in rows}


def test_bounds_reference_row(capsys):
    code, out, _ = run(capsys, "bounds", "--s", "0.2", "--snr-db", "10")
    assert code == EXIT_OK
    rows = by_bound(rows_of(out))
    assert float(rows["wc_lower"]["value"]) == pytest.approx(2.2198, abs=1e-3)
    assert float(rows["ac_upper_closed"]["value"]) == pytest.approx(54.148, abs=1e-2)
    assert float(rows["wc_upper_exact"]["value"]) == pytest.approx(2790.1, abs=0.5)
    assert rows["wc_lower"]["valid"] == "true"
    assert "c4=" in rows["ac_upper_closed"]["constants"]


def test_bounds_large_eps_flag(capsys):
    code, out, _ = run(capsys, "bounds", "--s", "0.2", "--eps", "0.95")
    assert code == EXIT_OK
    rows = by_bound(rows_of(out))
    assert "o_dagger_equals_1" in rows["wc_lower"]["flags"]
    assert float(rows["wc_lower"]["value"]) == 1.0
    # the average-case lower bound needs eps < sqrt(1 - s)
    assert rows["ac_lower"]["value"] == "" and rows["ac_lower"]["reason"]


def test_bounds_invalid_fields_are_empty_with_reason(capsys):
    code, out, _ = run(capsys, "bounds", "--s", "0.4", "--snr-db", "10")
    assert code == EXIT_OK
    row = by_bound(rows_of(out))["wc_upper_closed"]
    assert row["valid"] == "false" and row["value"] == "" and "s <= 1/3" in row["reason"]


def test_bounds_sweep_s(capsys):
    code, out, _ = run(capsys, "bounds", "--sweep", "s", "--snr-db", "10", "--from", "2", "--to", "10")
    assert code == EXIT_OK
    rows = rows_of(out)
    s_inv = sorted({float(r["s_inv"]) for r in rows})
    assert s_inv[0] == pytest.approx(2) and s_inv[-1] == pytest.approx(10) and len(s_inv) == 9
    upper = [float(r["value"]) for r in rows if r["bound"] == "ac_upper_closed"]
    assert all(b > a for a, b in zip(upper, upper[1:]))


def test_bounds_sweep_snr(capsys):
    code, out, _ = run(capsys, "bounds", "--sweep", "snr", "--s", "0.2", "--from", "5", "--to", "20",
                       "--points", "4")
    assert code == EXIT_OK
    snr = sorted({round(float(r["snr_db"]), 9) for r in rows_of(out)})
    assert snr == [5, 10, 15, 20]


def test_bounds_finite_d_rows(capsys):
    code, out, _ = run(capsys, "bounds", "--s", "0.2", "--eps", str(math.sqrt(0.1)), "--d", "1600",
                       "--o", "210", "--delta", str(math.sqrt(0.05)))
    assert code == EXIT_OK
    rows = by_bound(rows_of(out))
    assert float(rows["cantelli_success_lower_closed"]["value"]) == pytest.approx(0.9828, abs=1e-4)
    assert float(rows["ac_success_upper"]["value"]) == 1.0


@pytest.mark.parametrize("argv", [
    ["bounds", "--s", "0.2", "--eps", "0.3", "--snr-db", "10"],
    ["bounds", "--s", "0.2"],
    ["bounds", "--s", "1.5", "--eps", "0.3"],
    ["surface", "--s-points", "1"],
    ["simulate", "--d", "20", "--s", "0.2", "--eps", "0.5", "--o", "2", "--n", "40"],
    ["simulate", "--d", "20", "--s", "0.2", "--eps", "0.5", "--o", "2", "--pairs", "dense:block_exact"],
    ["simulate", "--d", "20", "--s", "0.2", "--eps", "0.5", "--o", "2", "--threads", "0"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG
    assert err.startswith("error:")


def test_scan_cap_exit_3(capsys):
    code, _, err = run(capsys, "scan", "--dims", "20", "--s", "0.2", "--eps", "0.05", "--trials", "10",
                       "--o-step", "1", "--o-cap", "2")
    assert code == EXIT_RUNTIME
    assert "runtime error" in err


def test_surface_default_grid(capsys):
    code, out, _ = run(capsys, "surface")
    assert code == EXIT_OK
    rows = rows_of(out)
    assert len(rows) == 2500
    assert list(rows[0]) == ["s", "eps", "log10_wc_lower", "log10_wc_upper_closed", "log10_ac_lower",
                             "log10_ac_upper_closed", "reason"]
    # s > 1/3 makes the closed worst-case upper bound undefined
    bad = [r for r in rows if float(r["s"]) > 1 / 3]
    assert all(r["log10_wc_upper_closed"] == "" and "wc_upper_closed" in r["reason"] for r in bad)


def test_surface_cell_matches_bounds():
    eps = 10 ** -0.5
    table = surface_table([0.1, 0.2, 0.3], [eps])
    cell = table.rows[1]
    r = bounds.RegimeParams(0.2, eps)
    assert cell["log10_wc_lower"] == bounds.wc_lower(r).log10_value
    assert cell["log10_ac_upper_closed"] == bounds.ac_upper_closed(r).log10_value
    assert 10 ** cell["log10_ac_upper_closed"] == pytest.approx(54.148, abs=1e-2)


def test_surface_monotone_in_s_for_small_eps():
    s_grid = [float(v) for v in np.linspace(0.05, 0.5, 50)]
    eps_grid = [0.05, 0.1, 0.2, 0.3, 0.4]
    table = surface_table(s_grid, eps_grid)
    cols = [c for c in table.columns if c.startswith("log10_")]
    for i, eps in enumerate(eps_grid):
        row = table.rows[i * 50:(i + 1) * 50]
        for c in cols:
            vals = [r[c] for r in row if r[c] is not None]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:])), (eps, c)


def test_csv_json_round_trip(tmp_path, capsys):
    base = ["bounds", "--s", "0.2", "--snr-db", "10", "--d", "400", "--o", "20"]
    assert main(base + ["--out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert main(base + ["--format", "json", "--out", str(tmp_path / "b.json")]) == EXIT_OK
    rows = rows_of((tmp_path / "b.csv").read_text())
    doc = json.loads((tmp_path / "b.json").read_text())
    assert doc["command"] == "bounds" and doc["config"]["s"] == 0.2
    assert doc["columns"] == list(rows[0])
    for r, j in zip(rows, doc["rows"]):
        for c in doc["columns"]:
            v = j[c]
            if isinstance(v, float):
                assert float(r[c]) == v
            elif isinstance(v, bool):
                assert r[c] == ("true" if v else "false")
            elif v is None:
                assert r[c] == ""
            else:
                assert r[c] == str(v)


def test_simulate_columns_and_eps_one(capsys):
    code, out, _ = run(capsys, "simulate", "--d", "20", "--s", "0.2", "--eps", "1", "--o", "2", "4",
                       "--trials", "30")
    assert code == EXIT_OK
    rows = rows_of(out)
    assert len(rows) == 8
    assert {(r["dict"], r["coder"]) for r in rows} == {("dense", "omp"), ("dense", "group_omp"),
                                                       ("block", "omp"), ("block", "group_omp")}
    assert all(float(r["p_hat"]) == 1.0 for r in rows)


def test_simulate_n_matches_o(capsys):
    common = ["simulate", "--d", "20", "--k", "4", "--snr-db", "6", "--trials", "40"]
    _, by_o, _ = run(capsys, *common, "--o", "3")
    _, by_n, _ = run(capsys, *common, "--n", "60")
    assert by_o == by_n


def test_simulate_overlay_columns(capsys):
    code, out, _ = run(capsys, "simulate", "--d", "100", "--s", "0.2", "--eps", str(math.sqrt(0.3)),
                       "--o", "8", "--trials", "50", "--pairs", "block:block_exact", "--delta", "0.5")
    assert code == EXIT_OK
    (row,) = rows_of(out)
    assert 0 <= float(row["cantelli_numeric"]) <= 1
    assert row["ac_success_upper"] != ""


def test_simulate_grid_flags(capsys):
    code, out, _ = run(capsys, "simulate", "--d", "20", "--s", "0.2", "--eps", "0.5", "--o-from", "1",
                       "--o-to", "3", "--o-step", "0.5", "--trials", "10", "--pairs", "dense:omp")
    assert code == EXIT_OK
    assert [float(r["o"]) for r in rows_of(out)] == [1, 1.5, 2, 2.5, 3]


def test_outputs_byte_identical_across_threads(tmp_path):
    sim = ["simulate", "--d", "40", "--s", "0.2", "--snr-db", "10", "--o", "4", "8", "--trials", "70",
           "--seed", "3"]
    scan = ["scan", "--dims", "20", "40", "--s", "0.2", "--snr-db", "10", "--trials", "40",
            "--o-step", "2", "--target", "0.9", "--seed", "3"]
    for name, argv in (("sim", sim), ("scan", scan)):
        outs = []
        for threads in (1, 4, 8):
            path = tmp_path / f"{name}{threads}.csv"
            assert main(argv + ["--threads", str(threads), "--out", str(path)]) == EXIT_OK
            outs.append(path.read_bytes())
            if name == "scan":
                outs.append((tmp_path / f"{name}{threads}.trace.csv").read_bytes())
        assert len(set(outs[0::2] if name == "scan" else outs)) == 1
        if name == "scan":
            assert len(set(outs[1::2])) == 1


def test_scan_rows_and_trace(tmp_path):
    out = tmp_path / "scan.json"
    argv = ["scan", "--dims", "20", "40", "--s", "0.2", "--snr-db", "10", "--trials", "40", "--o-step", "2",
            "--target", "0.9", "--format", "json", "--out", str(out)]
    assert main(argv) == EXIT_OK
    doc = json.loads(out.read_text())
    assert [r["d"] for r in doc["rows"]] == [20, 40]
    assert doc["rows"][0]["ac_upper_closed"] == pytest.approx(54.148, abs=1e-2)
    trace = json.loads((tmp_path / "scan.trace.json").read_text())
    for r in doc["rows"]:
        pts = [t for t in trace["rows"] if t["d"] == r["d"]]
        assert pts[-1]["o"] == r["o_min"] and pts[-1]["p_hat"] >= 0.9
        assert all(t["p_hat"] < 0.9 for t in pts[:-1])


def test_selftest_overlap_output(capsys):
    code, out, _ = run(capsys, "selftest", "--property", "overlap", "--n", "8", "--k", "2")
    assert code == EXIT_OK
    assert "[15/28, 12/28, 1/28]" in out
    assert out.strip().endswith("PASS overlap")


def test_selftest_single_suite(capsys):
    code, out, _ = run(capsys, "selftest", "--property", "beta_lower_bound")
    assert code == EXIT_OK and "PASS beta_lower_bound" in out


def test_selftest_failure_exit_1(capsys, monkeypatch):
    from univsparse import selftest

    monkeypatch.setitem(selftest.SUITES, "overlap", lambda args: selftest.SuiteResult(False, ["forced"]))
    code, out, _ = run(capsys, "selftest", "--property", "overlap")
    assert code == 1 and "FAIL overlap" in out
