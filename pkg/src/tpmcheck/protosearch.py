"""Search over evolution unitaries for the smallest pointwise information gap.

The objective is ``sum p_nm (I~_nm - target_nm)^2`` over defined entries plus
``10 *`` the joint mass on undefined entries. It is minimized with a
multistart Nelder-Mead simplex. Qubits use Euler angles; larger systems use
``U0 @ exp(i H(x))`` with ``U0`` a seeded Haar draw and ``H(x)`` a Hermitian
matrix holding the ``d*d`` real parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import matkit
from .infotherm import residuals
from .qstate import Hamiltonian
from .tpm import PAPER, Conventions, Evolution, build_tpm, euler_unitary, haar_unitary

UNDEFINED_PENALTY = 10.0
EULER_RANGES = ((0.0, math.pi), (0.0, 2 * math.pi), (0.0, 2 * math.pi))


def objective(
    hi: Hamiltonian,
    beta: float,
    hf: Hamiltonian,
    u: Evolution,
    conventions: Conventions = PAPER,
    thermalized: bool = False,
) -> float:
    t = build_tpm(hi, beta, u, hf, conventions, thermalized)
    info = residuals(t, conventions)
    return info.weighted_sq_residual + UNDEFINED_PENALTY * info.undefined_mass


@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0,
    step,
    max_iterations: int,
    xtol: float = 1e-10,
    ftol: float = 1e-14,
) -> NelderMeadResult:
    """Nelder-Mead with coefficients reflection 1, expansion 2, contraction 0.5, shrink 0.5.

    Stops when the simplex diameter drops below ``xtol`` or the spread of
    vertex values below ``ftol``.
    """
    x0 = np.asarray(x0, dtype=float)
    k = x0.size
    simplex = np.vstack([x0, x0 + np.diag(np.broadcast_to(np.asarray(step, float), (k,)))])
    fvals = np.array([f(x) for x in simplex])
    for it in range(1, max_iterations + 1):
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        diameter = max(np.linalg.norm(a - b) for i, a in enumerate(simplex) for b in simplex[i + 1 :])
        if diameter < xtol or fvals[-1] - fvals[0] < ftol:
            return NelderMeadResult(simplex[0].copy(), float(fvals[0]), it - 1, True)
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            simplex[-1], fvals[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        best = simplex[0]
        simplex[1:] = best + 0.5 * (simplex[1:] - best)
        fvals[1:] = [f(x) for x in simplex[1:]]
    i = int(np.argmin(fvals))
    return NelderMeadResult(simplex[i].copy(), float(fvals[i]), max_iterations, False)


def hermitian_from_params(x: np.ndarray, dim: int) -> np.ndarray:
    h = np.diag(x[:dim]).astype(np.complex128)
    iu = np.triu_indices(dim, 1)
    npairs = len(iu[0])
    h[iu] = x[dim : dim + npairs] + 1j * x[dim + npairs : dim + 2 * npairs]
    h[(iu[1], iu[0])] = np.conj(h[iu])
    return h


def perturbed_unitary(u0: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``u0 @ exp(i H(x))``."""
    sp = matkit.eigh(hermitian_from_params(x, u0.shape[0]))
    v = sp.eigenvectors
    return u0 @ ((v * np.exp(1j * sp.eigenvalues)) @ v.conj().T)


@dataclass(frozen=True)
class SearchBudget:
    starts: int = 32
    max_iterations: int = 2000

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.max_iterations < 100:
            raise ValueError("max_iterations must be >= 100")


@dataclass(frozen=True)
class SearchResult:
    best_params: tuple
    best_unitary: np.ndarray
    objective: float
    max_abs_residual: float
    starts: int
    iterations_used: int
    converged: bool
    best_start: int


def _unitary_objective(hi, beta, hf, conventions, thermalized) -> Callable[[np.ndarray], float]:
    def f(u: np.ndarray) -> float:
        return objective(hi, beta, hf, Evolution("search", u), conventions, thermalized)

    return f


def search(
    hi: Hamiltonian,
    beta: float,
    hf: Hamiltonian,
    conventions: Conventions = PAPER,
    thermalized: bool = False,
    budget: SearchBudget = SearchBudget(),
    seed: int = 0,
    include_identity: bool = True,
) -> SearchResult:
    """Multistart Nelder-Mead over evolutions; deterministic given ``seed``.

    With ``include_identity`` start 0 is the identity evolution, so the result
    never does worse than not evolving at all.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    d = hi.dim
    f_u = _unitary_objective(hi, beta, hf, conventions, thermalized)
    rng = np.random.default_rng(seed)

    runs = []
    if d == 2:
        for s in range(budget.starts):
            if s == 0 and include_identity:
                x0 = np.zeros(3)
            else:
                x0 = np.array([rng.uniform(lo, hi_) for lo, hi_ in EULER_RANGES])
            res = nelder_mead(lambda x: f_u(euler_unitary(*x)), x0, 0.5, budget.max_iterations)
            runs.append((res, None))
    else:
        for s in range(budget.starts):
            u0 = np.eye(d, dtype=np.complex128) if (s == 0 and include_identity) else haar_unitary(d, rng)
            res = nelder_mead(lambda x, u0=u0: f_u(perturbed_unitary(u0, x)), np.zeros(d * d), 0.3, budget.max_iterations)
            runs.append((res, u0))

    fun = [r.fun for r, _ in runs]
    best = int(np.argmin(fun))
    res, u0 = runs[best]
    if d == 2:
        params = tuple(float(v) for v in res.x)
        u = euler_unitary(*params)
    else:
        params = tuple(float(v) for v in res.x)
        u = perturbed_unitary(u0, res.x)
    t = build_tpm(hi, beta, Evolution("search", u), hf, conventions, thermalized)
    return SearchResult(
        best_params=params,
        best_unitary=u,
        objective=res.fun,
        max_abs_residual=residuals(t, conventions).max_abs_residual,
        starts=budget.starts,
        iterations_used=sum(r.iterations for r, _ in runs),
        converged=res.converged,
        best_start=best,
    )
