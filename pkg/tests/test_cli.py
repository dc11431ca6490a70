import argparse
import json
import math

import pytest

from nodal_census import label_domains, load_field, measure_domains
from nodal_census.cli import main, parse_length
from nodal_census.io import domain_table_csv, read_json, write_json

ALL_COMMANDS = (
    "sample", "nodal", "psi", "ns", "sandwich", "faber-krahn", "sphere-compare", "report",
)


@pytest.mark.parametrize("command", ALL_COMMANDS)
def test_help_exits_cleanly(command, capsys):
    with pytest.raises(SystemExit) as exc:
        main([command, "--help"])
    assert exc.value.code == 0
    assert command in capsys.readouterr().out


def test_no_subcommand_prints_help(capsys):
    assert main([]) == 2
    assert "usage:" in capsys.readouterr().out


def test_parse_length_grammar():
    assert parse_length("40pi") == 40 * math.pi
    assert parse_length("2pi/10") == 2 * math.pi / 10
    assert parse_length("pi") == math.pi
    assert parse_length("pi/4") == math.pi / 4
    assert parse_length("3") == 3.0
    assert parse_length("0.5") == 0.5
    assert parse_length("inf") == math.inf
    for bad in ("abc", "pi/0", "", "2x"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_length(bad)


def test_bad_flag_value_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["sample", "--window", "junk", "--out", "x"])
    assert exc.value.code == 2


def test_unknown_model_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["sample", "--model", "laplace", "--out", "x"])
    assert exc.value.code == 2


def test_sample_then_nodal_round_trip(tmp_path, capsys):
    field = tmp_path / "f.ncfs"
    table = tmp_path / "t.csv"
    assert main(["sample", "--window", "2pi", "--seed", "5", "--out", str(field)]) == 0
    assert main(["nodal", "--in", str(field), "--out", str(table)]) == 0
    capsys.readouterr()

    dec = measure_domains(label_domains(load_field(field)))
    assert table.read_text() == domain_table_csv(dec)


def test_sample_requires_out():
    assert main(["sample", "--window", "2pi"]) == 2


def test_nodal_requires_input():
    assert main(["nodal"]) == 2
    assert main(["nodal", "--in", "does-not-exist.ncfs"]) == 2


def test_psi_run_writes_csv_and_svg(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["psi", "--window", "9pi", "--M", "2", "--seed", "3",
               "--out", str(out), "--json"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["realizations"] == 2
    assert summary["domains"] >= 1
    assert (out / "psi.csv").exists()
    assert (out / "psi.svg").exists()
    assert (out / "report.json").exists()

    again = tmp_path / "run2"
    assert main(["psi", "--window", "9pi", "--M", "2", "--seed", "3",
                 "--out", str(again), "--format", "csv-only"]) == 0
    capsys.readouterr()
    assert (again / "psi.csv").exists()
    assert not (again / "psi.svg").exists()
    assert (again / "psi.csv").read_bytes() == (out / "psi.csv").read_bytes()


def test_psi_requires_window(tmp_path, capsys):
    out = tmp_path / "never"
    assert main(["psi", "--M", "2", "--out", str(out)]) == 2
    assert "--window" in capsys.readouterr().err
    assert not out.exists()


def test_ns_reports_density(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["ns", "--window", "9pi", "--M", "2", "--seed", "3",
               "--radii", "5,8", "--out", str(out), "--json"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["radii"] == [5.0, 8.0]
    assert summary["pooled"] > 0
    assert (out / "ns.csv").exists()


def test_sandwich_default_window(capsys):
    rc = main(["sandwich", "--r", "5", "--R", "15", "--seed", "1", "--json"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    (verdict,) = summary["verdicts"]
    assert verdict["holds"] is True
    assert verdict["lower"] <= verdict["middle"] <= verdict["upper"]


def test_sandwich_requires_radii():
    with pytest.raises(SystemExit) as exc:
        main(["sandwich", "--R", "15"])
    assert exc.value.code == 2


def test_faber_krahn_small_run(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["faber-krahn", "--window", "9pi", "--M", "3", "--seed", "3",
               "--out", str(out), "--json"])
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["violations"] == []
    assert summary["min_area"] > summary["bound"]
    assert summary["realizations"] == 3


def test_faber_krahn_margin_guard(tmp_path):
    assert main(["faber-krahn", "--window", "9pi", "--M", "1",
                 "--out", str(tmp_path / "x"), "--margin", "1.5"]) == 2


def test_report_reaggregates(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["psi", "--window", "9pi", "--M", "2", "--seed", "3",
                 "--out", str(out), "--format", "csv-only"]) == 0
    capsys.readouterr()
    assert main(["report", "--dir", str(out)]) == 0
    text = capsys.readouterr().out
    assert "realizations: 2" in text
    assert main(["report", "--dir", str(tmp_path / "nope")]) == 2


def test_sphere_compare_against_planar_run(tmp_path, capsys):
    planar = tmp_path / "planar"
    assert main(["psi", "--window", "9pi", "--M", "2", "--seed", "3",
                 "--out", str(planar), "--format", "csv-only"]) == 0
    capsys.readouterr()
    sphere = tmp_path / "sphere"
    rc = main(["sphere-compare", "--model", "sphere", "--degree", "1", "--M", "2",
               "--seed", "0", "--planar-report", str(planar), "--out", str(sphere),
               "--json"])
    assert rc == 0
    captured = capsys.readouterr()
    summary = json.loads(captured.out)
    comparison = read_json(sphere / "comparison.json")
    assert comparison["planar_hash_ok"] is True
    assert 0.0 <= comparison["ks_distance"] <= 1.0
    assert comparison["volume_scale"] == 2
    assert summary["sphere_breakpoints"] >= 1
    assert summary["planar_breakpoints"] >= 1
    # degree-1 harmonics split the sphere into two hemispheres of area 2pi;
    # on the l(l+1) scale both domains land at 4pi
    psi_lines = (sphere / "sphere-psi.csv").read_text().splitlines()
    scaled = [float(line.split(",")[0]) for line in psi_lines[1:]]
    assert all(abs(t - 4 * math.pi) <= 0.05 * 4 * math.pi for t in scaled)


def test_sphere_compare_flags_tampered_report(tmp_path, capsys):
    planar = tmp_path / "planar"
    assert main(["psi", "--window", "9pi", "--M", "2", "--seed", "3",
                 "--out", str(planar), "--format", "csv-only"]) == 0
    report = read_json(planar / "report.json")
    report["config_hash"] = "0" * 16
    write_json(planar / "report.json", report)
    sphere = tmp_path / "sphere"
    rc = main(["sphere-compare", "--model", "sphere", "--degree", "1", "--M", "2",
               "--seed", "0", "--planar-report", str(planar), "--out", str(sphere)])
    assert rc == 0
    assert "does not match" in capsys.readouterr().err
    assert read_json(sphere / "comparison.json")["planar_hash_ok"] is False


def test_sphere_compare_requires_inputs(tmp_path):
    assert main(["sphere-compare", "--model", "sphere", "--M", "1",
                 "--planar-report", str(tmp_path)]) == 2
    assert main(["sphere-compare", "--model", "sphere", "--degree", "1", "--M", "1"]) == 2
