import json

import pytest

from freemotzkin import cli
from test_omega import TABLE


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_omega_table_csv(capsys):
    code, out, _ = run(capsys, "omega-table", "--n", "10", "--output", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("Length,Diag,sqrt,3rd")
    for line in lines[1:]:
        cells = line.split(",")
        assert [int(c) for c in cells[1:11]] == TABLE[int(cells[0])]
    assert out.endswith("\n")


def test_omega_table_json(capsys):
    code, out, _ = run(capsys, "omega-table", "--n", "4", "--output", "json")
    data = json.loads(out)
    assert code == 0 and data["ok"]
    assert data["rows"][3]["per_order"]["4"] == 12


def test_verify_algebra_exit_zero(capsys):
    code, out, _ = run(capsys, "verify-algebra", "--n", "4", "--seed", "7")
    assert code == 0
    assert json.loads(out)["ok"] is True


def test_verify_algebra_tolerance_failure(capsys):
    code, out, _ = run(capsys, "verify-algebra", "--n", "2", "--rtol", "1e-30", "--atol", "1e-30")
    assert code == cli.EXIT_TOLERANCE
    assert json.loads(out)["ok"] is False


def test_crosscheck_n3(capsys):
    code, out, _ = run(capsys, "crosscheck", "--n", "3", "--eta", "1")
    data = json.loads(out)
    assert code == 0 and data["matched"] == 27


def test_solve_is_byte_identical(capsys, tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.run(["solve", "--n", "2", "--output-path", str(p1)]) == 0
    assert cli.run(["solve", "--n", "2", "--output-path", str(p2), "--jobs", "3"]) == 0
    capsys.readouterr()
    assert p1.read_bytes() == p2.read_bytes()
    text = p1.read_text(encoding="utf-8")
    assert text.endswith("\n")
    data = json.loads(text)
    assert len(data["sectors"]) == 3


def test_solve_random_thetas_has_null_energy(capsys):
    code, out, _ = run(capsys, "solve", "--n", "2", "--theta-mode", "random", "--seed", "4")
    data = json.loads(out)
    assert code == 0
    assert all(s["energy"] is None for sec in data["sectors"] for s in sec["solutions"])


def test_xxx_reference(capsys):
    code, out, _ = run(capsys, "xxx-reference", "--n", "3", "--output", "pretty")
    assert code == 0 and "matched 8 / 8" in out


def test_jobs_from_environment(monkeypatch):
    monkeypatch.setenv(cli.JOBS_ENV, "3")
    args = cli.validate(cli.build_parser().parse_args(["solve"]))
    assert args.jobs == 3 and args.n == 3 and args.output == "json"


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["solve", "--output", "csv"],
    ["crosscheck", "--theta-mode", "random"],
    ["omega-table", "--theta-mode", "random"],
    ["crosscheck", "--n", "9"],
    ["solve", "--eta", "0"],
    ["solve", "--eta", "abc"],
    ["solve", "--jobs", "0"],
    ["verify-algebra", "--rtol", "-1"],
])
def test_usage_errors(capsys, argv):
    assert cli.run(argv) == cli.EXIT_USAGE
    capsys.readouterr()


def test_complex_eta(capsys):
    code, out, _ = run(capsys, "verify-algebra", "--n", "2", "--eta", "0.5+0.3j")
    assert code == 0
    assert json.loads(out)["eta"] == [0.5, 0.3]
