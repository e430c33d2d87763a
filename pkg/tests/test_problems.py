import json
import math

import numpy as np
import pytest

from dichotomy_checker.dichotomy import FormA, FormB, verify_certificate
from dichotomy_checker.errors import ExtensionObstructed, ProblemFileError
from dichotomy_checker.problems import load_problem, parse_problem, report_envelope
from dichotomy_checker.system.sequence import Interval

LN2 = math.log(2.0)


def minimal_problem(**overrides):
    data = {
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
    data.update(overrides)
    return data


def test_parse_minimal_problem():
    problem = parse_problem(minimal_problem(), source="s2b.json")
    assert problem.seq.label == "s2b"
    np.testing.assert_array_equal(problem.seq.matrix(0), np.diag([0.0, 2.0]))
    np.testing.assert_array_equal(problem.seq.matrix(5), np.diag([0.5, 2.0]))
    assert problem.form == FormA(L=1.0, alpha=LN2)
    assert problem.window == Interval.finite(1, 40)
    cert = problem.certificate()
    assert cert.rank == 1
    assert verify_certificate(cert).passed


def test_list_form_of_explicit_matrices_and_periodic_generator():
    data = minimal_problem(matrices={
        "explicit": [{"k": 3, "matrix": [[1, 0], [0, 1]]}],
        "generator": {"kind": "periodic", "matrices": [[[2, 0], [0, 0.5]], [[0.5, 0], [0, 2]]]},
    })
    problem = parse_problem(data)
    np.testing.assert_array_equal(problem.seq.matrix(3), np.eye(2))
    np.testing.assert_array_equal(problem.seq.matrix(4), np.diag([2.0, 0.5]))


def test_form_b_constants_and_perturbation():
    data = minimal_problem(
        constants={"form": "B", "M": 1, "K": 1, "alpha": LN2},
        perturbation={"random": {"delta": 0.01, "window": "0:10", "seed": 2}},
    )
    problem = parse_problem(data)
    assert problem.form == FormB(M=1.0, K=1.0, alpha=LN2)
    assert np.linalg.norm(problem.perturbation.matrix(4), 2) == pytest.approx(0.01)
    assert not problem.perturbation.matrix(20).any()


def test_problem_tolerances():
    problem = parse_problem(minimal_problem(tolerances={"tol_rank": 1e-11}))
    assert problem.tolerances.tol_rank == 1e-11
    with pytest.raises(ProblemFileError) as excinfo:
        parse_problem(minimal_problem(tolerances={"tol_speed": 1}))
    assert excinfo.value.field == "tolerances"


@pytest.mark.parametrize("overrides, field", [
    ({"n": 0}, "n"),
    ({"schema_version": 99}, "schema_version"),
    ({"interval": {"kind": "circle"}}, "interval.kind"),
    ({"matrices": {"explicit": {"0": [[1, 0, 0]]}}}, "matrices.explicit.0"),
    ({"matrices": {"generator": {"kind": "random"}}}, "matrices.generator.kind"),
    ({"matrices": {"explicit": {"x": [[1, 0], [0, 1]]}}}, "matrices.explicit.x"),
    ({"matrices": {}}, "matrices"),
    ({"constants": {"form": "A", "L": 0.5, "alpha": 1}}, "constants"),
    ({"window": "1-40"}, "window"),
])
def test_errors_name_the_field(overrides, field):
    with pytest.raises(ProblemFileError) as excinfo:
        parse_problem(minimal_problem(**overrides))
    assert excinfo.value.field == field


def test_missing_required_field():
    data = minimal_problem()
    del data["n"]
    with pytest.raises(ProblemFileError) as excinfo:
        parse_problem(data)
    assert excinfo.value.field == "n"


def test_certificate_needs_projection_and_constants():
    data = minimal_problem()
    del data["projection"]
    with pytest.raises(ProblemFileError) as excinfo:
        parse_problem(data).certificate()
    assert excinfo.value.field == "projection"


def test_load_problem_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "n": 2,\n  "matrices": [\n}\n')
    with pytest.raises(ProblemFileError) as excinfo:
        load_problem(path)
    assert "line 4" in str(excinfo.value)


def test_load_problem_from_file(tmp_path):
    path = tmp_path / "system.json"
    path.write_text(json.dumps(minimal_problem()))
    problem = load_problem(path)
    assert problem.source == str(path)
    assert problem.seq.label == "system"


def test_missing_file():
    with pytest.raises(ProblemFileError):
        load_problem("/nonexistent/problem.json")


def test_report_envelope_carries_error_details():
    error = ExtensionObstructed("no extension", index=0, obstruction="DimensionMismatch")
    report = report_envelope("extend", ["extend", "--to-zero"], None, 1, result={"x": 1}, error=error)
    assert report["code"] == "ExtensionObstructed"
    assert report["error"] == {"message": "no extension", "index": 0, "obstruction": "DimensionMismatch"}
    assert report["schema_version"] == 1
    assert report["tolerances"] is None

    ok = report_envelope("verify", [], None, 0, result={})
    assert ok["code"] == "ok"
    assert "error" not in ok
