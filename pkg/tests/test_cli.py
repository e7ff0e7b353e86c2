import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from pitnet.bench import CSV_COLUMNS, line_chart, normalize_profit, read_csv, series
from pitnet.cli import main, parse_sizes


def gen(tmp_path, width, depth=None, seed=0, name="mine.json"):
    out = tmp_path / name
    argv = ["gen", "--width", str(width), "--seed", str(seed), "--out", str(out)]
    if depth is not None:
        argv += ["--depth", str(depth)]
    assert main(argv) == 0
    return out


def test_gen_shape_and_determinism(tmp_path):
    a = gen(tmp_path, 5, 3, seed=7, name="a.json")
    b = gen(tmp_path, 5, 3, seed=7, name="b.json")
    doc = json.loads(a.read_text())
    assert doc["width"] == 5 and doc["depth"] == 3
    assert np.array(doc["weights"]).size == 15
    assert a.read_bytes() == b.read_bytes()


def test_gen_to_stdout(capsys):
    assert main(["gen", "--width", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["depth"] == 2


@pytest.mark.parametrize("argv", [
    ["gen", "--width", "0"],
    ["gen", "--width", "three"],
    ["solve", "x.json", "--engine", "dmrg"],
    ["solve", "x.json", "--tau", "-1"],
    ["bench", "--sizes", "3-x"],
    [],
])
def test_usage_errors_exit_one(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1


def test_gen_unwritable_path(tmp_path):
    assert main(["gen", "--width", "3", "--out", str(tmp_path / "no" / "such" / "dir.json")]) == 2


def test_solve_single_block(tmp_path, capsys):
    path = tmp_path / "one.json"
    path.write_text(json.dumps({"width": 1, "depth": 1, "weights": [[1.0]]}))
    out = tmp_path / "sol.json"
    assert main(["solve", str(path), "--out", str(out)]) == 0
    sol = json.loads(out.read_text())
    assert sol == {"assignment": "1", "profit": 1.0, "violations": 0}
    assert "violations 0" in capsys.readouterr().out


@pytest.mark.parametrize("width", [3, 5, 7])
def test_solve_check_oracle(tmp_path, capsys, width):
    path = gen(tmp_path, width, seed=width)
    assert main(["solve", str(path), "--check-oracle"]) == 0
    assert "matched_oracle true" in capsys.readouterr().out


def test_bmps_chi_two_matches_exact(tmp_path):
    path = gen(tmp_path, 5, seed=3)
    outs = {}
    for name, extra in (("exact", []), ("bmps", ["--chi", "2"])):
        out = tmp_path / f"{name}.json"
        assert main(["solve", str(path), "--engine", name, *extra, "--out", str(out)]) == 0
        outs[name] = json.loads(out.read_text())["assignment"]
    assert outs["exact"] == outs["bmps"]


def test_solve_flag_conflicts(tmp_path):
    path = gen(tmp_path, 3)
    assert main(["solve", str(path), "--chi", "2"]) == 1
    assert main(["solve", str(path), "--engine", "bmps", "--prune"]) == 1
    assert main(["solve", str(path), "--deg-a", "1.1", "--deg-b", "0.2"]) == 1


def test_solve_missing_or_bad_file(tmp_path):
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert main(["solve", str(bad)]) == 2
    assert main(["oracle", str(bad)]) == 2


def test_oracle_command(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"width": 3, "depth": 2, "weights": [[-1, -1, -1], [0, 4, 0]]}))
    out = tmp_path / "best.json"
    assert main(["oracle", str(path), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["assignment"] == "1111"
    assert "profit 1.000000" in capsys.readouterr().out


def test_parse_sizes():
    assert parse_sizes("3,5") == [3, 5]
    assert parse_sizes("3-7") == [3, 4, 5, 6, 7]
    assert parse_sizes("3-13:5") == [3, 8, 13]
    assert parse_sizes("") == []


def test_bench_small_sweep(tmp_path):
    out = tmp_path / "bench"
    argv = ["bench", "--sizes", "3-7", "--seeds-per-size", "2", "--engines", "exact,bmps:2",
            "--out", str(out), "--quiet"]
    assert main(argv) == 0
    with open(out / "bench.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header == CSV_COLUMNS
    rows = read_csv(out / "bench.csv")
    assert [(int(r["width"]), int(r["seed"]), r["engine"]) for r in rows] == [
        (w, s, e) for w in range(3, 8) for s in (0, 1) for e in ("exact", "bmps:2")]
    for r in rows:
        assert r["error"] == "" and r["reference_source"] == "oracle"
        assert float(r["normalized_profit"]) == 1.0 and r["violations"] == "0"
        assert r["matched_oracle"] == "true"
    for name in ("time.svg", "profit.svg", "violations.svg"):
        root = ET.parse(out / name).getroot()
        assert root.tag.endswith("svg")
        assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2


def test_bench_empty_sizes(tmp_path):
    out = tmp_path / "empty"
    assert main(["bench", "--sizes", "", "--out", str(out), "--quiet"]) == 0
    assert (out / "bench.csv").read_text().strip() == ",".join(CSV_COLUMNS)
    for name in ("time.svg", "profit.svg", "violations.svg"):
        ET.parse(out / name)


def test_normalize_profit():
    assert normalize_profit(2.0, 4.0) == 0.5
    assert normalize_profit(0.0, 0.0) == 1.0
    assert math.isnan(normalize_profit(-1.0, 0.0))


def test_chart_helpers():
    rows = [{"engine": "a", "width": "3", "v": "1"}, {"engine": "a", "width": "3", "v": "3"},
            {"engine": "b", "width": "5", "v": "nan"}, {"engine": "b", "width": "5", "v": ""}]
    assert series(rows, "v") == {"a": [(3, 2.0)]}
    svg = line_chart({"a & b": [(3, 1.0), (5, 100.0)]}, "t <x>", "y", log_y=True)
    ET.fromstring(svg)
