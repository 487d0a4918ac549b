import json

import pytest
import tomli_w

from shelf_engine.shelf_lib.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION, run
from shelf_engine.shelf_lib.services.verification import CheckResult, VerificationReport
from shelf_engine.shelf_lib.shelf import Shelf


def run_json(capsys, *args: str) -> tuple[int, dict]:
    capsys.readouterr()
    code = run(["--no-cache", *args])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else {}


def test_verify_exits_zero(capsys):
    code, payload = run_json(capsys, "verify", "--n", "12")
    assert code == EXIT_OK
    assert payload["passed"] is True and payload["command"] == "verify"


def test_verify_failure_exits_two(capsys, monkeypatch):
    failing = VerificationReport(n=5, checks=(CheckResult("kernel", False, "broken"),))
    monkeypatch.setattr(Shelf, "verify", staticmethod(lambda *args, **kwargs: failing))
    code, payload = run_json(capsys, "verify", "--n", "5")
    assert code == EXIT_VERIFICATION
    assert payload["passed"] is False


def test_counterexample(capsys):
    code, payload = run_json(capsys, "counterexample")
    assert code == EXIT_OK
    assert payload["M_19_10"] == "1615/16384" and payload["M_20_10"] == "52003/524288"
    assert payload["upper_threshold"] == "99/1000"
    assert payload["holds"] is True and payload["below_lower_threshold"] is False


@pytest.mark.parametrize("args, expected", [(("--n", "4", "--strategy", "G"), "7/4"),
                                            (("--n", "3", "--k", "2"), "9/8"),
                                            (("--n", "6", "--strategy", "constant:2"), "1/1")])
def test_guess_exact_scores(capsys, args, expected):
    code, payload = run_json(capsys, "guess", *args)
    assert code == EXIT_OK
    assert payload["exact_score"] == expected and payload["backend"] == "exact"


def test_guess_float_backend(capsys):
    code, payload = run_json(capsys, "guess", "--n", "80", "--table")
    assert code == EXIT_OK
    assert payload["backend"] == "float" and payload["exact_score"] is None
    assert payload["lower_bound"] <= payload["float_score"] <= payload["upper_bound"]
    assert len(payload["table"]) == 80


@pytest.mark.parametrize("args", [("guess", "--n", "0"), ("guess",), ("bogus",), ("guess", "--n", "4", "--k", "0"),
                                  ("guess", "--n", "4", "--strategy", "nope"),
                                  ("simulate", "--n", "4", "--samples", "0"), ("matrix", "--n", "3", "--which", "Q"),
                                  ("guess", "--n", "4", "--strategy", "file:/nonexistent/strategy.json")])
def test_invalid_arguments_exit_one(args):
    assert run(["--no-cache", *args]) == EXIT_USAGE


def test_missing_config_file_exits_one(tmp_path):
    assert run(["--config", str(tmp_path / "absent.toml"), "verify", "--n", "3"]) == EXIT_USAGE


def test_matrix_csv(capsys):
    capsys.readouterr()
    assert run(["--no-cache", "--format", "csv", "matrix", "--n", "3"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == '"i","j","value"'
    assert lines[1] == '1,1,"1/2"'
    assert len(lines) == 10


def test_out_file(tmp_path):
    target = tmp_path / "t.json"
    assert run(["--no-cache", "--out", str(target), "matrix", "--n", "3", "--which", "T"]) == EXIT_OK
    payload = json.loads(target.read_text(encoding="utf-8"))
    assert payload["matrix"] == [["1/1", "1/1", "1/1"], ["0/1", "0/1", "-1/2"], ["0/1", "0/1", "1/4"]]


def test_spectrum_uses_cache(capsys, tmp_path):
    cache_dir = tmp_path / "cache"
    for _ in range(2):
        capsys.readouterr()
        assert run(["--cache-dir", str(cache_dir), "spectrum", "--n", "5"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["eigenvalues"] == {"0": "1/1", "2": "1/4", "4": "1/16"}
        assert all(payload["verification"].values())
    assert (cache_dir / "spectrum-n5-v1.0.0.toml").exists()


def test_simulate_game(capsys):
    code, payload = run_json(capsys, "simulate", "--n", "4", "--samples", "2000", "--seed", "1", "--mode", "game")
    assert code == EXIT_OK
    assert payload["guesses"] == [1, 3, 3, 1]
    assert sum(payload["histogram"]) == 2000
    assert payload["metadata"]["shelf_convention_applies"] is False


def test_simulate_reads_defaults_from_config(capsys, tmp_path):
    config = tmp_path / "shelf_engine.toml"
    config.write_text(tomli_w.dumps({"simulate": {"seed": 5, "samples": 300}}), encoding="utf-8")
    code, payload = run_json(capsys, "--config", str(config), "simulate", "--n", "3")
    assert code == EXIT_OK
    assert payload["config"]["seed"] == 5 and payload["config"]["samples"] == 300
    assert all(sum(row) == 300 for row in payload["counts"])


def test_decay(capsys):
    code, payload = run_json(capsys, "decay", "--n", "8", "--n", "16")
    assert code == EXIT_OK
    assert [row["k"] for row in payload["rows"]] == [6, 8]


def test_version():
    assert run(["--version"]) == EXIT_OK
