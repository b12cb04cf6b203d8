"""Two-point-measurement statistics for a single-unitary protocol.

The protocol: prepare the Gibbs state of ``H_i``, measure the ``H_i``
eigenprojectors ``P_n``, evolve with ``U``, then measure the ``H_f``
eigenprojectors ``Q_m``. Optionally the outcome marginal is replaced by the
canonical weights of ``H_f`` (the thermalization step); the conditional
probabilities are left untouched by that replacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matkit
from .errors import DimensionMismatch, NormalizationError, NotUnitary, ZeroTemperature
from .qstate import CONVENTIONS, Convention, GibbsEnsemble, Hamiltonian, free_energy_difference, gibbs

UNITARY_TOL = 1e-10
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class Evolution:
    """A named unitary; ``params`` records how it was produced."""

    kind: str
    matrix: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not matkit.is_unitary(self.matrix, UNITARY_TOL):
            raise NotUnitary(f"{self.kind} evolution matrix is not unitary within {UNITARY_TOL}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> Evolution:
        return cls("identity", np.eye(dim, dtype=np.complex128))

    @classmethod
    def hadamard(cls) -> Evolution:
        return cls("hadamard", np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2))

    @classmethod
    def euler(cls, theta: float, phi: float, lam: float) -> Evolution:
        return cls("qubit-euler", euler_unitary(theta, phi, lam), {"theta": theta, "phi": phi, "lambda": lam})

    @classmethod
    def haar(cls, dim: int, seed: int) -> Evolution:
        return cls("haar-random", haar_unitary(dim, np.random.default_rng(seed)), {"seed": seed})

    @classmethod
    def explicit(cls, matrix) -> Evolution:
        m = matkit.as_matrix(matrix, "evolution")
        return cls("explicit-matrix", m)


def euler_unitary(theta: float, phi: float, lam: float) -> np.ndarray:
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=np.complex128,
    )


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix, R-diagonal phases folded into Q."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class Conventions:
    """Sign conventions: ``work_sign`` for W and ``delta_f`` for the free-energy change.

    ``paper`` work is ``E_n^i - E_m^f``; ``standard`` work is ``E_m^f - E_n^i``.
    """

    work_sign: Convention = "paper"
    delta_f: Convention = "paper"

    def __post_init__(self):
        for name in ("work_sign", "delta_f"):
            if getattr(self, name) not in CONVENTIONS:
                raise ValueError(f"{name} must be one of {CONVENTIONS}, got {getattr(self, name)!r}")


PAPER = Conventions("paper", "paper")
STANDARD = Conventions("standard", "standard")


def _clamp_probabilities(c: np.ndarray, what: str) -> np.ndarray:
    if np.any(c < -CLAMP_TOL) or np.any(c > 1 + CLAMP_TOL):
        raise NormalizationError(f"{what} has entries outside [0, 1] beyond {CLAMP_TOL}")
    return np.clip(c, 0.0, 1.0)


def _conditional(p_stack: np.ndarray, g_i: np.ndarray, q_stack: np.ndarray, u: np.ndarray) -> np.ndarray:
    evolved = np.einsum("ab,nbc,dc->nad", u, p_stack, u.conj())
    traces = np.einsum("mij,nji->nm", q_stack, evolved).real
    c = _clamp_probabilities(traces / g_i[:, None], "conditional matrix")
    return c / c.sum(axis=1, keepdims=True)


def conditional_matrix(hi: Hamiltonian, u: Evolution, hf: Hamiltonian) -> np.ndarray:
    """``C[n, m] = Tr[Q_m U P_n U^H] / g_n``, row-stochastic."""
    if not (hi.dim == hf.dim == u.dim):
        raise DimensionMismatch(f"dimensions differ: H_i {hi.dim}, U {u.dim}, H_f {hf.dim}")
    return _conditional(hi.projectors, hi.multiplicities, hf.projectors, u.matrix)


def work_matrix(e_initial, e_final, work_sign: Convention) -> np.ndarray:
    w = np.subtract.outer(np.asarray(e_initial, float), np.asarray(e_final, float))
    return w if work_sign == "paper" else -w


@dataclass(frozen=True)
class TpmDistribution:
    beta: float
    initial: GibbsEnsemble
    final: GibbsEnsemble
    conditional: np.ndarray
    joint: np.ndarray
    marginal: np.ndarray
    work: np.ndarray
    delta_f: float
    conventions: Conventions
    thermalized: bool
    evolution: Evolution | None = None

    @property
    def final_h(self) -> Hamiltonian:
        return self.final.hamiltonian

    @property
    def p_n(self) -> np.ndarray:
        return self.initial.probabilities

    def work_for(self, work_sign: Convention) -> np.ndarray:
        return work_matrix(self.initial.hamiltonian.energies, self.final_h.energies, work_sign)

    def delta_f_for(self, convention: Convention) -> float:
        return free_energy_difference(self.initial, self.final, convention)

    @property
    def z_ratio(self) -> float:
        """``Z_f / Z_i``."""
        return math.exp(self.final.log_partition - self.initial.log_partition)


def column_sums(joint: np.ndarray) -> np.ndarray:
    """Marginal over the first index, accumulated in ascending row order."""
    q = joint[0].copy()
    for row in joint[1:]:
        q = q + row
    return q


def build_tpm(
    hi: Hamiltonian,
    beta: float,
    u: Evolution,
    hf: Hamiltonian,
    conventions: Conventions = PAPER,
    thermalized: bool = False,
) -> TpmDistribution:
    if beta <= 0:
        raise ZeroTemperature("TPM statistics need beta > 0")
    gi = gibbs(hi, beta)
    gf = gibbs(hf, beta)
    c = conditional_matrix(hi, u, hf)
    joint = gi.probabilities[:, None] * c
    marginal = gf.probabilities.copy() if thermalized else column_sums(joint)
    return TpmDistribution(
        beta=float(beta),
        initial=gi,
        final=gf,
        conditional=c,
        joint=joint,
        marginal=marginal,
        work=work_matrix(hi.energies, hf.energies, conventions.work_sign),
        delta_f=free_energy_difference(gi, gf, conventions.delta_f),
        conventions=conventions,
        thermalized=bool(thermalized),
        evolution=u,
    )


def thermal_chain_check(t: TpmDistribution) -> tuple[float, float, float]:
    """The three sums of the Jarzynski chain, evaluated under paper conventions.

    1. ``sum g_n p(m|n) exp(-beta E_m^f) / Z_f``
    2. ``sum p_nm exp(-ln(p_n/g_n)) exp(-beta E_m^f) / Z_f``
    3. ``sum p_nm exp(-beta (E_m^f - E_n^i) - beta dF)``

    ``g_n`` are level multiplicities (all 1 for a nondegenerate spectrum).
    Each equals 1 by unitality of the conditional matrix.
    """
    gi, gf = t.initial, t.final
    g_n = gi.hamiltonian.multiplicities
    boltz_f = gf.state_probabilities
    first = float(np.sum(g_n[:, None] * t.conditional * boltz_f[None, :]))
    second = float(np.sum(t.joint / gi.state_probabilities[:, None] * boltz_f[None, :]))
    w_paper = t.work_for("paper")
    df_paper = t.delta_f_for("paper")
    third = float(np.sum(t.joint * np.exp(t.beta * w_paper - t.beta * df_paper)))
    return first, second, third
