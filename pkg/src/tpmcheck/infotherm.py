"""Information quantities on top of TPM statistics.

``I~_nm = ln(p(m|n) / q_m)`` is compared pointwise against the thermodynamic
target ``-beta (W_nm - dF)``. Entries where the joint or the marginal
vanishes are *undefined*; they are flagged and never filled with zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qstate import Convention, Hamiltonian
from .tpm import PAPER, Conventions, Evolution, TpmDistribution


@dataclass(frozen=True)
class InfoMatrix:
    i_tilde: np.ndarray  # NaN where undefined
    defined: np.ndarray
    target: np.ndarray
    residual: np.ndarray  # NaN where undefined
    max_abs_residual: float
    weighted_sq_residual: float
    weights: np.ndarray
    conventions: Conventions

    @property
    def undefined_mass(self) -> float:
        """Joint probability sitting on undefined entries."""
        return float(np.sum(self.weights[~self.defined]))

    def distributions(self) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
        """``((values, weights), (values, weights))`` for I~ and for the target.

        Each is restricted to outcome pairs that occur (``p_nm > 0``), so the
        two can be compared as distributions rather than pointwise.
        """
        occurs = self.weights > 0
        i_vals = self.i_tilde[occurs & self.defined]
        i_w = self.weights[occurs & self.defined]
        return (i_vals, i_w), (self.target[occurs], self.weights[occurs])


@dataclass(frozen=True)
class AverageReport:
    full_grid: float
    support_restricted: float
    jarzynski: float
    z_ratio: float


def defined_mask(t: TpmDistribution) -> np.ndarray:
    return (t.joint > 0) & (t.marginal > 0)[None, :]


def _i_tilde(t: TpmDistribution) -> tuple[np.ndarray, np.ndarray]:
    defined = defined_mask(t)
    values = np.full(t.joint.shape, np.nan)
    ratio = t.conditional / np.where(t.marginal > 0, t.marginal, 1.0)[None, :]
    values[defined] = np.log(ratio[defined])
    return values, defined


def target_matrix(t: TpmDistribution, conventions: Conventions) -> np.ndarray:
    """``-beta (W - dF)`` with paper work sign, ``+beta (W - dF)`` with standard.

    Flipping the work sign negates W, so the target is expressed in whichever
    sign keeps it the same physical quantity.
    """
    w = t.work_for(conventions.work_sign)
    df = t.delta_f_for(conventions.delta_f)
    sign = -1.0 if conventions.work_sign == "paper" else 1.0
    return sign * t.beta * (w - df)


def residuals(t: TpmDistribution, conventions: Conventions | None = None) -> InfoMatrix:
    """Pointwise gap ``I~ - target``; paper conventions unless overridden."""
    conventions = PAPER if conventions is None else conventions
    values, defined = _i_tilde(t)
    target = target_matrix(t, conventions)
    resid = np.where(defined, values - target, np.nan)
    d = resid[defined]
    return InfoMatrix(
        i_tilde=values,
        defined=defined,
        target=target,
        residual=resid,
        max_abs_residual=float(np.max(np.abs(d))) if d.size else 0.0,
        weighted_sq_residual=float(np.sum(t.joint[defined] * d**2)),
        weights=t.joint,
        conventions=conventions,
    )


def i_tilde_matrix(t: TpmDistribution) -> InfoMatrix:
    """``I~`` with target and residuals under the distribution's own conventions."""
    return residuals(t, t.conventions)


def i_tilde_trace_form(hi: Hamiltonian, beta: float, u: Evolution, hf: Hamiltonian) -> np.ndarray:
    """``I~`` straight from traces, without forming ``p(m|n)`` or ``q_m`` first.

    ``ln[ Z_i Tr(Q_m U P_n U^H) / g_n / sum_n' exp(-beta E_n') Tr(Q_m U P_n' U^H) ]``
    (Boltzmann factors shifted by the ground energy, which cancels).
    Only meaningful without the thermalization step. NaN where undefined.
    """
    e = hi.energies
    boltz = np.exp(-beta * (e - e.min()))
    z = float(np.sum(hi.multiplicities * boltz))
    evolved = np.einsum("ab,nbc,dc->nad", u.matrix, hi.projectors, u.matrix.conj())
    tr = np.einsum("mij,nji->nm", hf.projectors, evolved).real
    tr = np.clip(tr, 0.0, None)
    denom = np.einsum("n,nm->m", boltz, tr)
    num = z * tr / hi.multiplicities[:, None]
    out = np.full(tr.shape, np.nan)
    ok = (tr > 0) & (denom > 0)[None, :]
    out[ok] = np.log((num / np.where(denom > 0, denom, 1.0)[None, :])[ok])
    return out


def jarzynski_average(t: TpmDistribution, convention: Convention | None = None) -> float:
    """Exponential work average.

    ``paper``: ``sum p_nm exp(beta (W - dF))`` with paper W and dF, equal to 1.
    ``standard``: ``sum p_nm exp(-beta W)`` with standard W, equal to ``Z_f/Z_i``.
    Defaults to the work-sign convention of ``t``.
    """
    convention = t.conventions.work_sign if convention is None else convention
    if t.beta <= 0:
        raise ValueError("jarzynski_average needs beta > 0")
    # exp(beta W_paper) and exp(-beta W_standard) are the same numbers, so the
    # paper value is the standard sum times exp(-beta dF_paper).
    base = float(np.sum(t.joint * np.exp(t.beta * t.work_for("paper"))))
    if convention == "standard":
        return base
    if convention == "paper":
        return base * math.exp(-t.beta * t.delta_f_for("paper"))
    raise ValueError(f"unknown convention {convention!r}")


def exp_average(t: TpmDistribution) -> AverageReport:
    """Both readings of ``sum p_nm exp(-I~_nm)``.

    Uses ``p_nm exp(-I~_nm) = p_n q_m``, so no logarithm is evaluated:
    ``full_grid`` sums that over every pair, ``support_restricted`` only
    over pairs with ``p_nm > 0`` (and ``q_m > 0``).
    """
    grid = np.outer(t.p_n, t.marginal)
    return AverageReport(
        full_grid=float(np.sum(grid)),
        support_restricted=float(np.sum(grid[defined_mask(t)])),
        jarzynski=jarzynski_average(t),
        z_ratio=t.z_ratio,
    )
