"""Problem files and JSON encodings.

Exact rationals are always written as strings (``"-7/8"``, ``"3"``) so
that no float ever touches them.  Non-rational extended reals are plain
JSON numbers, and +inf is the string ``"inf"``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

from .analysis import HypothesisCheck, ProblemSpec, TailAnalysisError, TailReport
from .lp import PrimalSolution, RationalMatrix, UniquenessReport, parse_rational
from .marginals import marginal_from_json, marginal_to_json

__all__ = [
    "ProblemFileError",
    "decode_extended",
    "encode_extended",
    "error_to_dict",
    "load_problem",
    "parse_problem",
    "problem_to_dict",
    "report_to_dict",
]


class ProblemFileError(ValueError):
    pass


def encode_extended(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return float(v)


def decode_extended(v):
    if v == "inf":
        return math.inf
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


def _decimal(v):
    f = float(v)
    return "inf" if math.isinf(f) else f


def _rational_field(value, where: str) -> Fraction:
    if isinstance(value, float):
        raise ProblemFileError(f"{where}: write rationals as strings or integers, got float {value!r}")
    try:
        return parse_rational(value)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"{where}: {exc}") from None


def parse_problem(obj, *, require_model: bool = True) -> ProblemSpec | RationalMatrix:
    """Validate a decoded problem document.

    With ``require_model=False`` only ``A`` is required and a
    :class:`RationalMatrix` is returned.
    """
    if not isinstance(obj, dict):
        raise ProblemFileError("top level must be a JSON object")
    if "A" not in obj:
        raise ProblemFileError("missing field 'A'")
    rows = obj["A"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ProblemFileError("A: expected a non-empty list of rows")
    width = len(rows[0])
    if width == 0:
        raise ProblemFileError("A: rows must be non-empty")
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ProblemFileError(f"A[{i}]: has {len(r)} entries, row 0 has {width} (A must be rectangular)")
    A = RationalMatrix(tuple(tuple(_rational_field(v, f"A[{i}][{j}]") for j, v in enumerate(r)) for i, r in enumerate(rows)))
    if not require_model:
        return A
    for key in ("c", "marginals"):
        if key not in obj:
            raise ProblemFileError(f"missing field {key!r}")
    c, margs = obj["c"], obj["marginals"]
    if not isinstance(c, list) or len(c) != A.rows:
        raise ProblemFileError(f"c: expected a list of {A.rows} thresholds (one per row of A)")
    if not isinstance(margs, list) or len(margs) != A.cols:
        raise ProblemFileError(f"marginals: expected a list of {A.cols} models (one per column of A)")
    cs = tuple(_rational_field(v, f"c[{i}]") for i, v in enumerate(c))
    models = []
    for j, mobj in enumerate(margs):
        try:
            models.append(marginal_from_json(mobj))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFileError(f"marginals[{j}]: {exc}") from None
    try:
        return ProblemSpec(A, cs, tuple(models))
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(str(exc)) from None


def load_problem(path, *, require_model: bool = True):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFileError(f"{path}: {exc.strerror or exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return parse_problem(obj, require_model=require_model)
    except ProblemFileError as exc:
        raise ProblemFileError(f"{path}: {exc}") from None


def problem_to_dict(spec: ProblemSpec) -> dict:
    return {
        "A": spec.A.to_strings(),
        "c": [str(v) for v in spec.c],
        "marginals": [marginal_to_json(m) for m in spec.marginals],
    }


def _log_to_list(log: tuple[HypothesisCheck, ...]) -> list[dict]:
    return [{"condition": h.condition, "status": h.status, "detail": h.detail} for h in log]


def _uniqueness_to_dict(uq: UniquenessReport | None):
    if uq is None:
        return None
    return {
        "unique": uq.unique,
        "method": uq.method,
        "witnesses": [[str(v) for v in w] for w in uq.witnesses],
        "reason": uq.reason,
    }


def _primal_to_dict(sol: PrimalSolution) -> dict:
    return {
        "status": sol.status,
        "kappa": [str(v) for v in sol.kappa],
        "basis": list(sol.basis),
        "objective": None if sol.objective is None else str(sol.objective),
        "is_unique": sol.is_unique,
        "is_nondegenerate": sol.is_nondegenerate,
        "tight_rows": sorted(sol.tight_rows),
    }


def report_to_dict(report: TailReport) -> dict:
    """JSON-ready report; column keys of the beta/moment maps are 0-based."""
    exact = {
        "kappa": [str(v) for v in report.kappa],
        "kappa_hat": [str(v) for v in report.kappa_hat],
        "rv_index": str(report.rv_index),
        "beta": {str(j): str(v) for j, v in report.beta.items()},
        "moment_values": {str(j): encode_extended(v) for j, v in report.moment_values.items()},
        "eps_max": {str(j): encode_extended(v) for j, v in report.eps_max.items()},
        "det_A_kappa": str(report.det_A_kappa),
        "coefficient": str(report.coefficient),
        "constant_at_c": encode_extended(report.constant_at_c),
        "reduced_costs": [str(v) for v in report.dual.reduced_costs],
    }
    decimal = {
        "kappa": [float(v) for v in report.kappa],
        "kappa_hat": [float(v) for v in report.kappa_hat],
        "rv_index": float(report.rv_index),
        "beta": {str(j): float(v) for j, v in report.beta.items()},
        "moment_values": {str(j): _decimal(v) for j, v in report.moment_values.items()},
        "coefficient": float(report.coefficient),
        "constant_at_c": _decimal(report.constant_at_c),
    }
    return {
        "problem": problem_to_dict(report.spec),
        **exact,
        "decimal": decimal,
        "primal": _primal_to_dict(report.primal),
        "uniqueness": _uniqueness_to_dict(report.primal.uniqueness),
        "theorem_applies": report.theorem_applies,
        "hypothesis_log": _log_to_list(report.hypothesis_log),
    }


def error_to_dict(exc: TailAnalysisError) -> dict:
    out = {
        "error": type(exc).__name__,
        "message": str(exc),
        "hypothesis_log": _log_to_list(exc.log),
        "uniqueness": _uniqueness_to_dict(exc.uniqueness),
    }
    if exc.primal is not None:
        out["primal"] = _primal_to_dict(exc.primal)
    if exc.report is not None:
        out["report"] = report_to_dict(exc.report)
    return out
