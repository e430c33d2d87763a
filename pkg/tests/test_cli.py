import json
import math

import pytest

from dichotomy_check import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, main, run_command
from dichotomy_checker.utils.common import dumps_report

LN2 = math.log(2.0)

S2B_PROBLEM = {
    "schema_version": 1,
    "n": 2,
    "interval": {"kind": "whole"},
    "matrices": {
        "explicit": {"0": [[0.0, 0.0], [0.0, 2.0]]},
        "generator": {"kind": "constant", "matrix": [[0.5, 0.0], [0.0, 2.0]]},
    },
    "projection": {"interval": {"kind": "half_plus", "start": 1}, "constant": [[1, 0], [0, 0]]},
    "constants": {"form": "A", "L": 1, "alpha": LN2},
    "window": "1:40",
}


def write_problem(tmp_path, data, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


class TestVerdicts:
    def test_verify_exact_constants(self):
        code, report = run_command(["verify", "--fixture", "S1", "--alpha", "0.6931", "--L", "1",
                                    "--window", "0:50"])
        assert code == EXIT_OK
        assert report["code"] == "ok"
        assert report["result"]["verification"]["passed"]
        assert report["result"]["subspace_identities"]["passed"]
        assert report["tolerances"]["tol_residual"] == 1e-8

    def test_verify_failing_exponent(self):
        code, report = run_command(["verify", "--fixture", "S1", "--alpha", "0.8", "--L", "1",
                                    "--window", "0:20"])
        assert code == EXIT_NEGATIVE
        assert report["code"] == "negative_verdict"
        assert not report["result"]["verification"]["passed"]

    def test_extend_not_extendable(self):
        code, report = run_command(["extend", "--fixture", "S2a", "--to-zero"])
        assert code == EXIT_NEGATIVE
        criterion = report["result"]["criterion"]
        assert criterion["obstruction"] == "DimensionMismatch"
        assert criterion["preimage_dim"] == 2
        assert criterion["m"] == 1

    def test_extend_extendable(self):
        code, report = run_command(["extend", "--fixture", "S2b", "--to-zero", "--window", "1:40"])
        assert code == EXIT_OK
        assert report["result"]["certificate"]["verified_window"] == {"kind": "finite", "start": 0, "end": 40}
        assert report["result"]["guaranteed_verification"]["passed"]

    def test_constants_without_perturbation(self):
        code, report = run_command(["constants", "--K", "1", "--alpha", "0.693147", "--delta", "0"])
        assert code == EXIT_OK
        constants = report["result"]["constants"]
        assert constants["beta"] == pytest.approx(0.693147, abs=1e-12)
        assert constants["L"] == pytest.approx(1.0, abs=1e-12)

    def test_constants_inadmissible(self):
        code, report = run_command(["constants", "--K", "1", "--alpha", "0.693147", "--delta", "0.5"])
        assert code == EXIT_NEGATIVE
        assert not report["result"]["constants"]["admissible"]

    def test_glue_and_embed(self):
        code, _ = run_command(["glue", "--fixture", "S1", "--window=-40:40", "--at", "0"])
        assert code == EXIT_OK
        code, report = run_command(["embed", "--fixture", "S1", "--restrict", "0:10", "--window=-30:40"])
        assert code == EXIT_OK
        assert report["result"]["verification"]["passed"]

    def test_witness_on_extended_problem(self, tmp_path):
        data = dict(S2B_PROBLEM, projection={"interval": {"kind": "half_plus", "start": 0},
                                             "explicit": {"0": [[1, 0], [0, 0]]},
                                             "right_constant": [[1, 0], [0, 0]]},
                    window="0:40")
        code, report = run_command(["rebase", "--problem", write_problem(tmp_path, data),
                                    "--m", "1", "--witness"])
        assert code == EXIT_OK
        assert report["result"]["witness"]["found"]

    def test_perturb(self):
        code, report = run_command(["perturb", "--fixture", "S1", "--delta", "0.01", "--window", "0:20"])
        assert code == EXIT_OK
        assert report["result"]["roughness"]["rank_preserved"]

    def test_finite_time(self):
        code, report = run_command(["finite-time", "--fixture", "S1", "--N", "10", "--density", "5",
                                    "--K", "1", "--alpha", "0.6931", "--Kbar", "5", "--beta-bar", "0.6",
                                    "--norm-bound", "2", "--window", "0:30"])
        assert code == EXIT_OK
        assert report["result"]["finite_time"]["conclusion"] == "empirical"

    def test_fixtures_listing(self):
        code, report = run_command(["fixtures"])
        assert code == EXIT_OK
        labels = [entry["label"] for entry in report["result"]["fixtures"]]
        assert "S1" in labels and "S2b" in labels


class TestProblemFiles:
    def test_problem_file_verifies(self, tmp_path):
        code, report = run_command(["verify", "--problem", write_problem(tmp_path, S2B_PROBLEM)])
        assert code == EXIT_OK
        assert report["result"]["certificate"]["verified_window"]["start"] == 1

    def test_malformed_problem_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        code, report = run_command(["verify", "--problem", str(path)])
        assert code == EXIT_ERROR
        assert report["code"] == "ProblemFileError"
        assert "line 1" in report["error"]["message"]

    def test_schema_error_names_field(self, tmp_path):
        data = dict(S2B_PROBLEM, n="two")
        code, report = run_command(["verify", "--problem", write_problem(tmp_path, data)])
        assert code == EXIT_ERROR
        assert report["error"]["field"] == "n"

    def test_problem_tolerances_are_reported(self, tmp_path):
        data = dict(S2B_PROBLEM, tolerances={"tol_residual": 1e-7})
        code, report = run_command(["verify", "--problem", write_problem(tmp_path, data)])
        assert code == EXIT_OK
        assert report["tolerances"]["tol_residual"] == 1e-7


class TestUsage:
    @pytest.mark.parametrize("argv", [
        [],
        ["bogus"],
        ["verify", "--fixture", "S1", "--window", "3"],
        ["verify"],
        ["project", "--fixture", "S1", "--complement", "[[1, 2, 3]]"],
        ["glue", "--fixture", "S1", "--window", "0:10", "--at", "20"],
    ])
    def test_usage_errors_exit_two(self, argv):
        code, report = run_command(argv)
        assert code == EXIT_ERROR
        assert report["code"] == "UsageError"
        assert report["exit_code"] == EXIT_ERROR

    def test_unknown_fixture(self):
        code, report = run_command(["verify", "--fixture", "S9"])
        assert code == EXIT_ERROR
        assert report["error"]["field"] == "fixture"

    def test_environment_tolerance_override(self, monkeypatch):
        monkeypatch.setenv("DICHOTOMY_TOL", "tol_rank=1e-11")
        _, report = run_command(["fixtures"])
        assert report["tolerances"]["tol_rank"] == 1e-11


def test_reports_are_deterministic():
    argv = ["perturb", "--fixture", "S1", "--delta", "0.01", "--window", "0:5", "--seed", "7"]
    first = dumps_report(run_command(argv)[1])
    second = dumps_report(run_command(argv)[1])
    assert first == second


def test_main_writes_report_and_exits(tmp_path, monkeypatch):
    out = tmp_path / "report.json"
    monkeypatch.setattr("sys.argv", ["dichotomy_check.py", "fixtures", "--out", str(out)])
    with pytest.raises(SystemExit) as excinfo:
        main()
    assert excinfo.value.code == EXIT_OK
    assert json.loads(out.read_text())["command"] == "fixtures"


def test_problem_tolerances_do_not_leak_into_later_commands(tmp_path):
    _, before = run_command(["fixtures"])
    data = dict(S2B_PROBLEM, tolerances={"tol_residual": 1e-3})
    _, scoped = run_command(["verify", "--problem", write_problem(tmp_path, data)])
    _, after = run_command(["fixtures"])
    assert scoped["tolerances"]["tol_residual"] == 1e-3
    assert before["tolerances"] == after["tolerances"]
    assert after["tolerances"]["tol_residual"] == 1e-8
