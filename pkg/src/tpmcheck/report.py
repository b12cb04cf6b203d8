"""Report assembly and byte-stable serialization.

Every float is written with ``REPORT_PRECISION`` significant digits (default
17, which round-trips IEEE doubles). Key order in JSON and column order in
CSV are fixed by the builders below; ``docs/report_format.md`` lists them.
Non-finite values (undefined entries) serialize as JSON ``null`` and as an
empty CSV cell.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from typing import Any, Iterable

import numpy as np

from . import __version__
from .errors import ScenarioError
from .infotherm import exp_average, jarzynski_average, residuals
from .protosearch import SearchResult
from .sampler import EstimatorResult
from .scenario import Scenario, matrix_to_json
from .tpm import TpmDistribution, thermal_chain_check

IDENTITY_TOL = 1e-10
TOOL_NAME = "tpmcheck"

DELTA_F_NOTE = {
    "paper": "dF = ln(Z_f/Z_i)/beta so that exp(-beta dF) = Z_i/Z_f; sign inferred from the Jarzynski chain, not stated explicitly",
    "standard": "dF = F_f - F_i = -ln(Z_f/Z_i)/beta",
}
THERMALIZATION_NOTE = "thermalization modeled as replacement of q_m by the canonical weights of H_f; p(m|n) unchanged"


def precision() -> int:
    raw = os.environ.get("REPORT_PRECISION")
    if raw is None or raw == "":
        return 17
    try:
        p = int(raw)
    except ValueError:
        p = -1
    if not 6 <= p <= 17:
        raise ScenarioError("REPORT_PRECISION", "expected an integer between 6 and 17")
    return p


def format_float(x: float, digits: int) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x + 0.0, f".{digits}g")  # + 0.0 folds -0.0 into 0.0
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _scalar(value: Any, digits: int) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value), digits)
    if isinstance(value, str):
        return _json_string(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _json_string(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def dumps(obj: Any, digits: int | None = None, indent: int = 2) -> str:
    """JSON text with fixed-precision floats; scalar-only lists stay on one line."""
    digits = precision() if digits is None else digits

    def emit(o: Any, level: int) -> str:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, np.ndarray):
            o = o.tolist()
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{_json_string(str(k))}: {emit(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in o):
                return "[" + ", ".join(_scalar(v, digits) for v in o) + "]"
            return "[\n" + ",\n".join(pad + emit(v, level + 1) for v in o) + "\n" + end + "]"
        return _scalar(o, digits)

    return emit(obj, 0) + "\n"


def _real_matrix(m: np.ndarray) -> list:
    return [[None if not math.isfinite(v) else float(v) for v in row] for row in np.asarray(m, float)]


def _header(s: Scenario) -> dict:
    return {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "conventions": {
            "work_sign": s.conventions.work_sign,
            "delta_f": s.conventions.delta_f,
            "delta_f_note": DELTA_F_NOTE[s.conventions.delta_f],
            "thermalization": THERMALIZATION_NOTE if s.thermalized else "none",
        },
        "scenario": s.to_json(),
    }


def _close(a: float, b: float, tol: float = IDENTITY_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(b))


def verify_report(s: Scenario, t: TpmDistribution | None = None) -> dict:
    t = s.tpm() if t is None else t
    avg = exp_average(t)
    info = residuals(t)
    chain = thermal_chain_check(t)
    jz_paper = jarzynski_average(t, "paper")
    jz_standard = jarzynski_average(t, "standard")
    (i_vals, i_w), (tg_vals, tg_w) = info.distributions()
    report = _header(s)
    report["eigen"] = {
        name: {
            "energies": g.hamiltonian.energies.tolist(),
            "multiplicities": g.hamiltonian.multiplicities.tolist(),
            "log_partition": g.log_partition,
        }
        for name, g in (("initial", t.initial), ("final", t.final))
    }
    report["p_n"] = t.p_n.tolist()
    report["conditional"] = _real_matrix(t.conditional)
    report["joint"] = _real_matrix(t.joint)
    report["q_m"] = t.marginal.tolist()
    report["work"] = _real_matrix(t.work)
    report["delta_f"] = t.delta_f
    report["i_tilde"] = _real_matrix(info.i_tilde)
    report["residual"] = {
        "conventions": {"work_sign": info.conventions.work_sign, "delta_f": info.conventions.delta_f},
        "target": _real_matrix(info.target),
        "matrix": _real_matrix(info.residual),
        "max_abs": info.max_abs_residual,
        "weighted_sq": info.weighted_sq_residual,
        "undefined_mass": info.undefined_mass,
        "i_tilde_distribution": {"values": i_vals.tolist(), "weights": i_w.tolist()},
        "target_distribution": {"values": tg_vals.tolist(), "weights": tg_w.tolist()},
    }
    report["eq1"] = {"full_grid": avg.full_grid, "support_restricted": avg.support_restricted}
    report["jarzynski"] = {
        "convention": t.conventions.work_sign,
        "value": avg.jarzynski,
        "paper": jz_paper,
        "standard": jz_standard,
        "z_ratio": avg.z_ratio,
    }
    report["thermal_chain"] = list(chain)
    report["checks"] = {
        "tolerance": IDENTITY_TOL,
        "normalization": bool(
            _close(float(t.joint.sum()), 1.0)
            and np.allclose(t.conditional.sum(axis=1), 1.0, rtol=0, atol=IDENTITY_TOL)
            and _close(float(t.marginal.sum()), 1.0)
        ),
        "eq1_full_grid": _close(avg.full_grid, 1.0),
        "jarzynski_paper": _close(jz_paper, 1.0),
        "jarzynski_standard": _close(jz_standard, avg.z_ratio),
        "thermal_chain": all(_close(v, 1.0) for v in chain),
    }
    return report


def flatten(obj: Any, prefix: str = "") -> Iterable[tuple[str, Any]]:
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _csv_cell(v: Any, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else format_float(float(v), digits)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def to_csv(header: list[str], rows: Iterable[Iterable[Any]], digits: int | None = None) -> str:
    digits = precision() if digits is None else digits
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_csv_cell(v, digits) for v in row])
    return buf.getvalue()


def key_value_csv(report: dict, digits: int | None = None) -> str:
    return to_csv(["field", "value"], flatten(report), digits)


ESTIMATOR_COLUMNS = ["observable", "shots", "seed", "mean", "sample_std", "standard_error", "exact", "z_score"]


def estimator_row(r: EstimatorResult, seed: int) -> list:
    return [r.observable, r.shots, seed, r.mean, r.sample_std, r.standard_error, r.exact, r.z_score]


def sample_report(s: Scenario, results: list[EstimatorResult], seed: int) -> dict:
    report = _header(s)
    report["results"] = [dict(zip(ESTIMATOR_COLUMNS, estimator_row(r, seed))) for r in results]
    return report


def search_report(s: Scenario, r: SearchResult, seed: int, max_iterations: int) -> dict:
    report = _header(s)
    report["search"] = {
        "starts": r.starts,
        "max_iterations": max_iterations,
        "seed": seed,
        "best_start": r.best_start,
        "best_params": list(r.best_params),
        "objective": r.objective,
        "max_abs_residual": r.max_abs_residual,
        "iterations_used": r.iterations_used,
        "converged": r.converged,
        "best_unitary": matrix_to_json(r.best_unitary),
    }
    return report


SWEEP_COLUMNS = [
    "beta",
    "eq1_full_grid",
    "eq1_support_restricted",
    "jarzynski",
    "z_ratio",
    "max_abs_residual",
    "weighted_sq_residual",
]


def sweep_row(s: Scenario) -> list:
    t = s.tpm()
    avg = exp_average(t)
    info = residuals(t)
    return [
        s.beta,
        avg.full_grid,
        avg.support_restricted,
        avg.jarzynski,
        avg.z_ratio,
        info.max_abs_residual,
        info.weighted_sq_residual,
    ]
