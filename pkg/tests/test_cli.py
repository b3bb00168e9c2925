import numpy as np
import pytest

from hps_q1.cli import main


def _data(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def _header(path):
    return dict(l[2:].split("=", 1) for l in path.read_text().splitlines() if l.startswith("# "))


def test_solve_dump(tmp_path):
    out = tmp_path / "u.csv"
    rc = main(["solve", "--subdomains", "2,2", "--elements", "2,2", "--f", "sinsin", "--g", "zero",
               "--out", str(out)])
    assert rc == 0
    assert len(_data(out)) == 25
    h = _header(out)
    assert h["subdomains"] == "2,2" and h["f"] == "sinsin" and h["nodes"] == "25"


def test_solve_constant(tmp_path):
    out = tmp_path / "u.csv"
    assert main(["solve", "--f", "zero", "--g", "const:3", "--out", str(out)]) == 0
    u = np.array([float(l.split(",")[2]) for l in _data(out)])
    assert np.abs(u - 3).max() <= 1e-12


def test_header_reproduces_run(tmp_path):
    out = tmp_path / "a.csv"
    args = ["solve", "--domain", "0,2,-1,1", "--subdomains", "4,2", "--elements", "3,2",
            "--f", "random-poly", "--g", "linear:1,2,3", "--seed", "4", "--out", str(out)]
    assert main(args) == 0
    h = _header(out)
    again = tmp_path / "b.csv"
    assert main(["solve", "--domain", h["domain"], "--subdomains", h["subdomains"],
                 "--elements", h["elements"], "--f", h["f"], "--g", h["g"], "--seed", h["seed"],
                 "--out", str(again)]) == 0
    assert _data(out) == _data(again)


@pytest.mark.parametrize("args", [["--subdomains", "3,2"], ["--elements", "0,2"],
                                  ["--f", "bogus"], ["--domain", "0,0,0,1"], ["--threads", "0"]])
def test_config_errors(args, capsys):
    assert main(["solve"] + args) == 2
    assert "error" in capsys.readouterr().err


def test_guard_exit(capsys):
    assert main(["solve", "--subdomains", "64,64", "--elements", "64,64", "--memory-budget", "1"]) == 4


def test_converge(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["converge", "--subdomains", "2,2", "--elements", "2,2", "--refinements", "4",
                 "--out", str(out)]) == 0
    rows = [l.split(",") for l in _data(out)]
    assert rows[0] == ["h", "l2_error", "order"]
    assert rows[1][2] == ""
    assert 1.9 <= float(rows[-1][2]) <= 2.1


def test_converge_linear_exact(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["converge", "--f", "zero", "--g", "linear:1,-1,2", "--refinements", "3",
                 "--out", str(out)]) == 0
    rows = [l.split(",") for l in _data(out)][1:]
    assert [r[2] for r in rows] == ["", "exact", "exact"]


def test_converge_single_row(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["converge", "--refinements", "1", "--out", str(out)]) == 0
    rows = _data(out)
    assert len(rows) == 2 and rows[1].endswith(",")


def test_converge_needs_exact():
    assert main(["converge", "--f", "random-poly:1", "--g", "zero"]) == 2


def test_verify_empty(tmp_path):
    assert main(["verify", "--empty", "--out", str(tmp_path / "v.csv")]) == 0


def test_verify_detects_sign_flip(capsys):
    assert main(["verify", "--inject", "sign-flip"]) == 3
    out = capsys.readouterr()
    assert "FAIL" in out.out and "FAILED" in out.err


def test_bench_small(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--sweep-subdomains", "4", "--sweep-elements", "2,4",
                 "--out", str(out)]) == 0
    rows = [l.split(",") for l in _data(out)]
    assert rows[0] == ["subdomains", "speedup_2x2", "speedup_4x4", "break_even_2x2", "break_even_4x4"]
    detail = tmp_path / "b_detail.csv"
    assert _header(detail)["sweep_elements"] == "2,4"
    assert len(_data(detail)) == 3


def test_bench_all_refused():
    assert main(["bench", "--sweep-subdomains", "32", "--sweep-elements", "32",
                 "--memory-budget", "1"]) == 4
