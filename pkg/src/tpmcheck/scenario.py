"""Scenario documents: parsing, validation and canonical echo.

A scenario is one JSON object; see ``docs/scenario_format.md``. Matrices are
nested arrays of ``[re, im]`` pairs (a bare number is accepted as a real
entry). Structural problems raise ``ScenarioError`` naming the field;
numerical ones (non-Hermitian, non-unitary) surface from ``realize``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ScenarioError
from .qstate import CONVENTIONS, Hamiltonian, make_hamiltonian
from .tpm import Conventions, Evolution, TpmDistribution, build_tpm

EVOLUTION_KINDS = ("identity", "hadamard", "euler", "matrix", "haar")


def _number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(field, f"expected a finite number, got {value!r}")
    return float(value)


def parse_matrix(value: Any, field: str, dim: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise ScenarioError(field, f"expected {dim} rows")
    out = np.zeros((dim, dim), dtype=np.complex128)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != dim:
            raise ScenarioError(f"{field}[{i}]", f"expected {dim} entries")
        for j, entry in enumerate(row):
            where = f"{field}[{i}][{j}]"
            if isinstance(entry, list):
                if len(entry) != 2:
                    raise ScenarioError(where, "complex entries are [re, im] pairs")
                out[i, j] = complex(_number(entry[0], where), _number(entry[1], where))
            else:
                out[i, j] = _number(entry, where)
    return out


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


@dataclass(frozen=True)
class HamiltonianSpec:
    eigenvalues: tuple[float, ...] | None = None
    basis: np.ndarray | None = None
    matrix: np.ndarray | None = None

    def realize(self) -> Hamiltonian:
        if self.matrix is not None:
            return make_hamiltonian(self.matrix)
        return make_hamiltonian(eigenvalues=self.eigenvalues, basis=self.basis)

    def to_json(self) -> dict:
        if self.matrix is not None:
            return {"matrix": matrix_to_json(self.matrix)}
        out: dict = {"eigenvalues": list(self.eigenvalues)}
        if self.basis is not None:
            out["basis"] = matrix_to_json(self.basis)
        return out


def _parse_hamiltonian(value: Any, field: str, dim: int) -> HamiltonianSpec:
    if not isinstance(value, dict):
        raise ScenarioError(field, "expected an object with 'eigenvalues' or 'matrix'")
    unknown = set(value) - {"eigenvalues", "basis", "matrix"}
    if unknown:
        raise ScenarioError(field, f"unknown keys {sorted(unknown)}")
    if "matrix" in value:
        if "eigenvalues" in value or "basis" in value:
            raise ScenarioError(field, "give either 'matrix' or 'eigenvalues' (+ optional 'basis'), not both")
        return HamiltonianSpec(matrix=parse_matrix(value["matrix"], f"{field}.matrix", dim))
    if "eigenvalues" not in value:
        raise ScenarioError(field, "missing 'eigenvalues' or 'matrix'")
    ev = value["eigenvalues"]
    if not isinstance(ev, list) or len(ev) != dim:
        raise ScenarioError(f"{field}.eigenvalues", f"expected a list of {dim} numbers")
    eig = tuple(_number(x, f"{field}.eigenvalues[{k}]") for k, x in enumerate(ev))
    basis = parse_matrix(value["basis"], f"{field}.basis", dim) if "basis" in value else None
    return HamiltonianSpec(eigenvalues=eig, basis=basis)


@dataclass(frozen=True)
class EvolutionSpec:
    kind: str
    params: tuple = ()
    matrix: np.ndarray | None = None

    def realize(self, dim: int) -> Evolution:
        if self.kind == "identity":
            return Evolution.identity(dim)
        if self.kind == "hadamard":
            return Evolution.hadamard()
        if self.kind == "euler":
            return Evolution.euler(*self.params)
        if self.kind == "haar":
            return Evolution.haar(dim, self.params[0])
        return Evolution.explicit(self.matrix)

    def to_json(self) -> dict:
        if self.kind == "euler":
            theta, phi, lam = self.params
            return {"kind": "euler", "theta": theta, "phi": phi, "lambda": lam}
        if self.kind == "haar":
            return {"kind": "haar", "seed": self.params[0]}
        if self.kind == "matrix":
            return {"kind": "matrix", "matrix": matrix_to_json(self.matrix)}
        return {"kind": self.kind}


def _parse_evolution(value: Any, dim: int) -> EvolutionSpec:
    field = "evolution"
    if isinstance(value, str):
        value = {"kind": value}
    if not isinstance(value, dict) or "kind" not in value:
        raise ScenarioError(field, "expected a kind string or an object with 'kind'")
    kind = value["kind"]
    if kind not in EVOLUTION_KINDS:
        raise ScenarioError(f"{field}.kind", f"expected one of {EVOLUTION_KINDS}, got {kind!r}")
    if kind in ("hadamard", "euler") and dim != 2:
        raise ScenarioError(field, f"{kind} evolution needs dim = 2")
    if kind == "euler":
        return EvolutionSpec(kind, tuple(_number(value.get(k), f"{field}.{k}") for k in ("theta", "phi", "lambda")))
    if kind == "haar":
        seed = value.get("seed")
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ScenarioError(f"{field}.seed", "expected a non-negative 64-bit integer")
        return EvolutionSpec(kind, (seed,))
    if kind == "matrix":
        if "matrix" not in value:
            raise ScenarioError(f"{field}.matrix", "missing")
        return EvolutionSpec(kind, matrix=parse_matrix(value["matrix"], f"{field}.matrix", dim))
    return EvolutionSpec(kind)


@dataclass(frozen=True)
class Scenario:
    dim: int
    beta: float
    h_initial: HamiltonianSpec
    evolution: EvolutionSpec
    h_final: HamiltonianSpec | None  # None means same as initial
    conventions: Conventions
    thermalized: bool
    description: str = ""

    def realize(self) -> tuple[Hamiltonian, Evolution, Hamiltonian]:
        hi = self.h_initial.realize()
        hf = hi if self.h_final is None else self.h_final.realize()
        return hi, self.evolution.realize(self.dim), hf

    def with_beta(self, beta: float) -> Scenario:
        return Scenario(
            self.dim, float(beta), self.h_initial, self.evolution, self.h_final,
            self.conventions, self.thermalized, self.description,
        )

    def tpm(self) -> TpmDistribution:
        hi, u, hf = self.realize()
        return build_tpm(hi, self.beta, u, hf, self.conventions, self.thermalized)

    def to_json(self) -> dict:
        """Canonical form; parsing it back gives an equal scenario."""
        out: dict = {}
        if self.description:
            out["description"] = self.description
        out["dim"] = self.dim
        out["beta"] = self.beta
        out["h_initial"] = self.h_initial.to_json()
        out["evolution"] = self.evolution.to_json()
        out["h_final"] = "same-as-initial" if self.h_final is None else self.h_final.to_json()
        out["conventions"] = {"work_sign": self.conventions.work_sign, "delta_f": self.conventions.delta_f}
        out["thermalized"] = self.thermalized
        return out


def parse_scenario(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    allowed = {"description", "dim", "beta", "h_initial", "evolution", "h_final", "conventions", "thermalized"}
    unknown = set(doc) - allowed
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown field")
    for key in ("dim", "beta", "h_initial", "evolution"):
        if key not in doc:
            raise ScenarioError(key, "missing required field")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ScenarioError("dim", "expected a positive integer")
    beta = _number(doc["beta"], "beta")
    if beta <= 0:
        raise ScenarioError("beta", "must be > 0")
    description = doc.get("description", "")
    if not isinstance(description, str):
        raise ScenarioError("description", "expected a string")
    h_initial = _parse_hamiltonian(doc["h_initial"], "h_initial", dim)
    hf_raw = doc.get("h_final", "same-as-initial")
    h_final = None if hf_raw == "same-as-initial" else _parse_hamiltonian(hf_raw, "h_final", dim)
    conv_raw = doc.get("conventions", {})
    if not isinstance(conv_raw, dict) or set(conv_raw) - {"work_sign", "delta_f"}:
        raise ScenarioError("conventions", "expected an object with 'work_sign' and/or 'delta_f'")
    conv = {}
    for key in ("work_sign", "delta_f"):
        value = conv_raw.get(key, "paper")
        if value not in CONVENTIONS:
            raise ScenarioError(f"conventions.{key}", f"expected one of {CONVENTIONS}")
        conv[key] = value
    thermalized = doc.get("thermalized", False)
    if not isinstance(thermalized, bool):
        raise ScenarioError("thermalized", "expected true or false")
    return Scenario(
        dim=dim,
        beta=beta,
        h_initial=h_initial,
        evolution=_parse_evolution(doc["evolution"], dim),
        h_final=h_final,
        conventions=Conventions(**conv),
        thermalized=thermalized,
        description=description,
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"invalid JSON: {exc}") from exc
    return parse_scenario(doc)
