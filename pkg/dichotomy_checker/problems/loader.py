"""
Problem files: the JSON description of a coefficient sequence, an optional
projection family with constants, and an optional perturbation. Also the
envelope every command line report is wrapped in.

Matrices are row-major nested lists of numbers. A minimal problem:

    {
      "schema_version": 1,
      "n": 2,
      "interval": {"kind": "whole"},
      "matrices": {"generator": {"kind": "constant", "matrix": [[0.5, 0], [0, 2]]}},
      "projection": {"constant": [[1, 0], [0, 0]]},
      "constants": {"form": "A", "L": 1, "alpha": 0.6931471805599453}
    }
"""

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np

from ..config import ToleranceConfig, get_config, get_tolerances
from ..errors import ConfigurationError, DichotomyError, ProblemFileError
from ..dichotomy.estimator import form_from_dict
from ..dichotomy.family import DichotomyCertificate, DichotomyForm, ProjectionFamily
from ..roughness.perturbation import random_perturbation
from ..system.sequence import INTERVAL_KINDS, CoefficientSequence, Interval, TailRule, zero_sequence

logger = logging.getLogger(__name__)


@dataclass
class Problem:
    seq: CoefficientSequence
    family: Optional[ProjectionFamily] = None
    form: Optional[DichotomyForm] = None
    window: Optional[Interval] = None
    tolerances: Optional[ToleranceConfig] = None
    perturbation: Optional[CoefficientSequence] = None
    source: str = "<problem>"

    def certificate(self, window: Optional[Interval] = None) -> DichotomyCertificate:
        """
        The stated projection family and constants, claimed on ``window``.

        Raises:
            ProblemFileError: when the file has no projection or no constants
        """
        if self.family is None:
            raise ProblemFileError(f"{self.source} has no projection family", field="projection")
        if self.form is None:
            raise ProblemFileError(f"{self.source} states no constants", field="constants")
        window = window if window is not None else self.window
        if window is None:
            raise ProblemFileError(f"{self.source} names no window and none was given", field="window")
        return DichotomyCertificate(seq=self.seq, family=self.family, form=self.form, verified_window=window)


def _require(data: Mapping, key: str, path: str) -> Any:
    if not isinstance(data, Mapping):
        raise ProblemFileError(f"Expected an object at '{path or '<root>'}'", field=path or None)
    if key not in data:
        raise ProblemFileError(f"Missing field '{key}'", field=f"{path}.{key}" if path else key)
    return data[key]


def _field(path: str, key) -> str:
    return f"{path}.{key}" if path else str(key)


def parse_matrix(value, n: int, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFileError("Matrix entries must be numbers", field=path)
    if arr.shape != (n, n):
        raise ProblemFileError(f"Matrix has shape {arr.shape}, expected ({n}, {n})", field=path)
    if not np.all(np.isfinite(arr)):
        raise ProblemFileError("Matrix contains NaN or Inf entries", field=path)
    return arr


def parse_interval(value, path: str) -> Interval:
    """``{"kind": ..., "start": ..., "end": ...}``, a two-element list [a, b] or the string 'a:b'."""
    try:
        if isinstance(value, str):
            return Interval.parse(value)
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return Interval.finite(int(value[0]), int(value[1]))
        kind = _require(value, "kind", path)
        if kind not in INTERVAL_KINDS:
            raise ProblemFileError(f"Unknown interval kind '{kind}'", field=_field(path, "kind"))
        start, end = value.get("start"), value.get("end")
        return Interval(kind, None if start is None else int(start), None if end is None else int(end))
    except (TypeError, ValueError) as e:
        raise ProblemFileError(f"Invalid interval: {e}", field=path)


def _parse_explicit(data, n: int, path: str) -> Dict[int, np.ndarray]:
    """Explicit matrices as ``{"k": matrix}`` or ``[{"k": k, "matrix": ...}]``."""
    explicit = {}
    if isinstance(data, Mapping):
        items = data.items()
    elif isinstance(data, list):
        items = [(_require(entry, "k", _field(path, i)), _require(entry, "matrix", _field(path, i)))
                 for i, entry in enumerate(data)]
    else:
        raise ProblemFileError("Explicit matrices must be an object or a list", field=path)
    for key, value in items:
        try:
            k = int(key)
        except (TypeError, ValueError):
            raise ProblemFileError(f"Index '{key}' is not an integer", field=_field(path, key))
        explicit[k] = parse_matrix(value, n, _field(path, key))
    return explicit


def _parse_generator(data, n: int, path: str) -> TailRule:
    kind = _require(data, "kind", path)
    if kind == "constant":
        return TailRule.constant(parse_matrix(_require(data, "matrix", path), n, _field(path, "matrix")))
    if kind == "periodic":
        matrices = _require(data, "matrices", path)
        if not isinstance(matrices, list) or not matrices:
            raise ProblemFileError("Periodic generator needs a non-empty list", field=_field(path, "matrices"))
        return TailRule.periodic([parse_matrix(m, n, _field(path, f"matrices.{i}")) for i, m in enumerate(matrices)])
    raise ProblemFileError(f"Unknown generator kind '{kind}'", field=_field(path, "kind"))


def parse_sequence(data: Mapping, n: int, interval: Interval, label: str = "") -> CoefficientSequence:
    matrices = _require(data, "matrices", "")
    if not isinstance(matrices, Mapping):
        raise ProblemFileError("Expected an object", field="matrices")
    explicit = _parse_explicit(matrices.get("explicit", {}), n, "matrices.explicit")
    tail = _parse_generator(matrices["generator"], n, "matrices.generator") \
        if "generator" in matrices else TailRule()
    left = _parse_generator(matrices["left_generator"], n, "matrices.left_generator") \
        if "left_generator" in matrices else None
    if not explicit and tail.kind == "none":
        raise ProblemFileError("Need explicit matrices or a generator", field="matrices")
    norm_bound = data.get("norm_bound")
    return CoefficientSequence(n=n, interval=interval, explicit_window=explicit, tail_rule=tail,
                               left_tail_rule=left,
                               norm_bound=None if norm_bound is None else float(norm_bound),
                               label=label)


def parse_family(data: Mapping, n: int, default_interval: Interval,
                 tol: Optional[ToleranceConfig] = None) -> ProjectionFamily:
    interval = parse_interval(data["interval"], "projection.interval") if "interval" in data else default_interval
    explicit = _parse_explicit(data.get("explicit", {}), n, "projection.explicit")
    constant = data.get("constant")
    left = data.get("left_constant", constant)
    right = data.get("right_constant", constant)
    left = None if left is None else parse_matrix(left, n, "projection.left_constant")
    right = None if right is None else parse_matrix(right, n, "projection.right_constant")
    try:
        return ProjectionFamily.build(interval, explicit, left_constant=left, right_constant=right, tol=tol)
    except DichotomyError as e:
        raise ProblemFileError(str(e), field="projection")


def parse_perturbation(data: Mapping, n: int) -> CoefficientSequence:
    """Explicit B(k) (zero elsewhere) or ``{"random": {"delta", "window", "seed"}}``."""
    if "random" in data:
        random_data = data["random"]
        delta = float(_require(random_data, "delta", "perturbation.random"))
        window = parse_interval(_require(random_data, "window", "perturbation.random"), "perturbation.random.window")
        seed = int(random_data.get("seed", get_config().get('cli_defaults.seed', 0)))
        return random_perturbation(n, window, delta, seed=seed)
    explicit = _parse_explicit(_require(data, "explicit", "perturbation"), n, "perturbation.explicit")
    return zero_sequence(n, Interval.whole(), explicit=explicit, label="B")


def parse_tolerances(data: Mapping) -> ToleranceConfig:
    base = get_tolerances()
    unknown = set(data) - set(base.as_dict())
    if unknown:
        raise ProblemFileError(f"Unknown tolerances {sorted(unknown)}", field="tolerances")
    try:
        return replace(base, **{k: float(v) for k, v in data.items()})
    except (TypeError, ValueError, ConfigurationError) as e:
        raise ProblemFileError(f"Invalid tolerances: {e}", field="tolerances")


def parse_problem(data: Mapping, source: str = "<problem>") -> Problem:
    """
    Validate a decoded problem file.

    Raises:
        ProblemFileError: naming the offending field path
    """
    if not isinstance(data, Mapping):
        raise ProblemFileError("A problem file must hold a JSON object")
    version = data.get("schema_version", 1)
    supported = get_config().schema_version
    if version != supported:
        raise ProblemFileError(f"Schema version {version} is not supported (expected {supported})",
                               field="schema_version")
    n = _require(data, "n", "")
    if not isinstance(n, int) or n < 1:
        raise ProblemFileError(f"n must be a positive integer, got {n!r}", field="n")
    interval = parse_interval(data.get("interval", {"kind": "whole"}), "interval")
    tolerances = parse_tolerances(data["tolerances"]) if "tolerances" in data else None

    try:
        seq = parse_sequence(data, n, interval, label=str(data.get("label", Path(source).stem)))
    except ProblemFileError:
        raise
    except DichotomyError as e:
        raise ProblemFileError(str(e), field="matrices")

    problem = Problem(seq=seq, tolerances=tolerances, source=source)
    if "projection" in data:
        problem.family = parse_family(data["projection"], n, interval, tolerances)
    if "constants" in data:
        try:
            problem.form = form_from_dict(data["constants"])
        except (KeyError, TypeError, ValueError, DichotomyError) as e:
            raise ProblemFileError(f"Invalid constants: {e}", field="constants")
    if "window" in data:
        problem.window = parse_interval(data["window"], "window")
    if "perturbation" in data:
        problem.perturbation = parse_perturbation(data["perturbation"], n)
    logger.debug(f"Parsed problem {source}: n={n}, interval {interval}")
    return problem


def load_problem(path) -> Problem:
    """
    Read and validate a problem file.

    Raises:
        ProblemFileError: for unreadable files, malformed JSON (with line and
            column) and schema violations (with the field path)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ProblemFileError(f"Cannot read problem file {path}: {e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFileError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")
    return parse_problem(data, source=str(path))


def report_envelope(command: str, argv, tol: Optional[ToleranceConfig], exit_code: int,
                    result: Optional[Dict] = None, error: Optional[Exception] = None) -> Dict:
    """
    Wrap a command's result with the schema version, the command echo, the
    tolerances it was judged against and the error taxonomy code.
    """
    report = {
        "schema_version": get_config().schema_version,
        "command": command,
        "argv": list(argv),
        "tolerances": None if tol is None else tol.as_dict(),
        "exit_code": exit_code,
        "code": "ok" if exit_code == 0 else "negative_verdict",
        "result": result,
    }
    if error is not None:
        report["code"] = getattr(error, "code", type(error).__name__)
        report["error"] = {"message": str(error)}
        for attribute in ("field", "index", "obstruction"):
            value = getattr(error, attribute, None)
            if value is not None:
                report["error"][attribute] = value
    return report
