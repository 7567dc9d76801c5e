import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqtc import __version__
from mqtc.cli import run_cli
from mqtc.errors import InputFormatError, InputSizeError
from mqtc.io import RunReport, format_distance_matrix, input_digest, parse_distance_matrix
from mqtc.quartet import DistanceMatrix

FOUR_POINT_CSV = """a,b,c,d
0,0.1,0.9,0.9
0.1,0,0.9,0.9
0.9,0.9,0,0.1
0.9,0.9,0.1,0
"""

FOUR_POINT_PHYLIP = """4
a 0 0.1 0.9 0.9
b 0.1 0 0.9 0.9
c 0.9 0.9 0 0.1
d 0.9 0.9 0.1 0
"""


class TestParse:
    def test_csv(self):
        D = parse_distance_matrix(FOUR_POINT_CSV, "csv")
        assert D.n == 4 and D.labels == tuple("abcd")
        assert D.d[0, 1] == 0.1

    def test_phylip(self):
        assert parse_distance_matrix(FOUR_POINT_PHYLIP, "phylip") == parse_distance_matrix(FOUR_POINT_CSV)

    def test_symmetrize(self):
        text = "a,b,c,d\n0,0,0,0\n0,0,0.3,0\n0,0.30000000001,0,0\n0,0,0,0\n"
        D = parse_distance_matrix(text)
        assert D.d[1, 2] == D.d[2, 1] == (0.3 + 0.30000000001) / 2

    def test_asymmetry_names_cell(self):
        text = "a,b,c,d\n0,0,0,0\n0,0,0.3,0\n0,0.5,0,0\n0,0,0,0\n"
        with pytest.raises(InputFormatError, match=r"D\[b,c\]"):
            parse_distance_matrix(text)

    def test_range(self):
        with pytest.raises(InputFormatError, match="outside"):
            parse_distance_matrix("a,b,c,d\n0,1.5,0,0\n1.5,0,0,0\n0,0,0,0\n0,0,0,0\n")

    def test_size(self):
        with pytest.raises(InputSizeError):
            parse_distance_matrix("a,b,c\n0,0,0\n0,0,0\n0,0,0\n")

    def test_duplicate_label(self):
        with pytest.raises(InputFormatError, match="duplicate"):
            parse_distance_matrix(FOUR_POINT_CSV.replace("a,b,c,d", "a,b,c,a"))

    @pytest.mark.parametrize(
        "text, fmt",
        [
            ("", "csv"),
            ("a,b,c,d\n0,1\n", "csv"),
            ("a,b,c,d\n0,x,0,0\n0,0,0,0\n0,0,0,0\n0,0,0,0\n", "csv"),
            ("four\na 0\n", "phylip"),
            ("4\na 0 0 0 0\n", "phylip"),
            ("a(,b,c,d\n0,0,0,0\n0,0,0,0\n0,0,0,0\n0,0,0,0\n", "csv"),
        ],
    )
    def test_malformed(self, text, fmt):
        with pytest.raises(InputFormatError):
            parse_distance_matrix(text, fmt)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(4, 9), seed=st.integers(0, 2**32 - 1), fmt=st.sampled_from(["csv", "phylip"]))
def test_parse_serialize_idempotent(n, seed, fmt):
    rng = np.random.default_rng(seed)
    x = rng.random((n, n))
    x = (x + x.T) / 2
    np.fill_diagonal(x, 0)
    D = DistanceMatrix.from_array([f"s{i}" for i in range(n)], x)
    text = format_distance_matrix(D, fmt)
    D2 = parse_distance_matrix(text, fmt)
    assert D2 == D
    assert format_distance_matrix(D2, fmt) == text


def test_digest_ignores_label_order():
    D = parse_distance_matrix(FOUR_POINT_CSV)
    assert input_digest(D) == input_digest(D.reorder("dbca"))
    assert input_digest(D) != input_digest(DistanceMatrix.from_array(D.labels, D.d * 0.5))


def test_report_round_trip():
    r = RunReport(5, "hill", "ab" * 32, 0.1 + 0.2, 2 / 3, "(a,b,(c,(d,e)));", 0, 1234, 12.5, 7, __version__)
    text = r.to_json()
    assert RunReport.from_json(text) == r
    assert '"best_cost": 0.30000000000000004' in text
    with pytest.raises(InputFormatError):
        RunReport.from_json(json.dumps({"n": 4}))


@pytest.fixture
def four_point(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(FOUR_POINT_CSV)
    return p


class TestCli:
    def test_shapes(self, capsys):
        assert run_cli(["shapes", "--n", "6"]) == 0
        assert capsys.readouterr().out.strip() == "2"

    def test_shapes_list(self, capsys):
        assert run_cli(["shapes", "--n", "8", "--list"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["count"] == 4 == len(doc["shapes"])
        assert all(set(s) == {"code", "internal_edges", "leaf_slots"} for s in doc["shapes"])

    def test_solve_exact(self, four_point, tmp_path):
        tree, report = tmp_path / "t.nwk", tmp_path / "r.json"
        argv = ["solve", "--input", str(four_point), "--mode", "exact",
                "--output-tree", str(tree), "--output-report", str(report)]
        assert run_cli(argv) == 0
        assert tree.read_text() == "(a,b,(c,d));\n"
        rep = RunReport.from_json(report.read_text())
        assert rep.best_cost == pytest.approx(0.2)
        assert rep.newick == "(a,b,(c,d));"
        assert rep.seed is None and rep.mode == "exact"

    def test_verify_reproduces_cost(self, four_point, tmp_path, capsys):
        tree, report = tmp_path / "t.nwk", tmp_path / "r.json"
        run_cli(["solve", "--input", str(four_point), "--output-tree", str(tree), "--output-report", str(report)])
        capsys.readouterr()
        assert run_cli(["verify", "--input", str(four_point), "--tree", str(tree)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["cost"] == RunReport.from_json(report.read_text()).best_cost
        assert run_cli(["verify", "--input", str(four_point), "--tree", "(a,c,(b,d));"]) == 0
        assert json.loads(capsys.readouterr().out)["normalized_score"] == 0.0

    def test_solve_hill_stdout(self, four_point, capsys):
        argv = ["solve", "--input", str(four_point), "--mode", "hill", "--seed", "4", "--restarts", "2"]
        assert run_cli(argv) == 0
        rep = RunReport.from_json(capsys.readouterr().out)
        assert rep.seed == 4 and rep.newick == "(a,b,(c,d));"

    def test_phylip_input(self, tmp_path, capsys):
        p = tmp_path / "m.phy"
        p.write_text(FOUR_POINT_PHYLIP)
        assert run_cli(["solve", "--input", str(p), "--format", "phylip"]) == 0
        assert RunReport.from_json(capsys.readouterr().out).best_cost == pytest.approx(0.2)

    @pytest.mark.parametrize(
        "argv",
        [[], ["frobnicate"], ["solve"], ["shapes", "--n", "x"], ["shapes", "--n", "3"]],
    )
    def test_usage_errors(self, argv, capsys):
        assert run_cli(argv) == 1

    def test_bad_hill_config_is_usage_error(self, four_point):
        assert run_cli(["solve", "--input", str(four_point), "--mode", "hill", "--restarts", "0"]) == 1

    def test_input_errors(self, tmp_path, four_point):
        bad = tmp_path / "bad.csv"
        bad.write_text(FOUR_POINT_CSV.replace("0.1,0,0.9,0.9", "0.1,0,0.8,0.9"))
        assert run_cli(["solve", "--input", str(bad)]) == 2
        assert run_cli(["solve", "--input", str(tmp_path / "missing.csv")]) == 2
        small = tmp_path / "small.csv"
        small.write_text("a,b,c\n0,0,0\n0,0,0\n0,0,0\n")
        assert run_cli(["solve", "--input", str(small)]) == 2
        assert run_cli(["verify", "--input", str(four_point), "--tree", "(a,b,(c,e));"]) == 2
        assert run_cli(["verify", "--input", str(four_point), "--tree", "(a,b,(c,d)"]) == 2

    def test_resource_errors(self, tmp_path, monkeypatch):
        assert run_cli(["shapes", "--n", "40"]) == 3
        n = 7
        x = np.full((n, n), 0.5)
        np.fill_diagonal(x, 0)
        p = tmp_path / "u.csv"
        p.write_text(format_distance_matrix(DistanceMatrix.from_array([f"u{i}" for i in range(n)], x)))
        monkeypatch.setenv("MQTC_MAX_N", "6")
        assert run_cli(["solve", "--input", str(p)]) == 3
