"""Hamiltonians with eigenprojectors, Gibbs ensembles and free energies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import matkit
from .errors import BetaMismatch, NotUnitaryBasis, ZeroTemperature
from .matkit import DEGENERACY_GAP, Spectrum

Convention = Literal["paper", "standard"]
CONVENTIONS = ("paper", "standard")


@dataclass(frozen=True)
class Level:
    energy: float
    multiplicity: int
    projector: np.ndarray


@dataclass(frozen=True)
class Hamiltonian:
    """Spectrum grouped into degeneracy clusters, one projector per level."""

    dim: int
    spectrum: Spectrum
    levels: tuple[Level, ...]

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([lv.multiplicity for lv in self.levels], dtype=int)

    @property
    def projectors(self) -> np.ndarray:
        """Stacked projectors, shape ``(n_levels, dim, dim)``."""
        return np.stack([lv.projector for lv in self.levels])

    def matrix(self) -> np.ndarray:
        return self.spectrum.reconstruct()


def _group_levels(sp: Spectrum) -> tuple[Level, ...]:
    w, v = sp.eigenvalues, sp.eigenvectors
    levels = []
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop] - w[stop - 1] < DEGENERACY_GAP:
            stop += 1
        block = v[:, start:stop]
        levels.append(
            Level(
                energy=float(np.mean(w[start:stop])),
                multiplicity=stop - start,
                projector=block @ block.conj().T,
            )
        )
        start = stop
    return tuple(levels)


def make_hamiltonian(
    matrix=None,
    *,
    eigenvalues: Sequence[float] | None = None,
    basis=None,
) -> Hamiltonian:
    """Build a Hamiltonian from a Hermitian matrix or an explicit eigensystem.

    With ``eigenvalues`` alone the computational basis is used; ``basis``
    supplies eigenvectors as columns and must be unitary within 1e-10.
    """
    if (matrix is None) == (eigenvalues is None):
        raise ValueError("pass exactly one of matrix or eigenvalues")
    if matrix is not None:
        sp = matkit.eigh(matrix)
    else:
        w = np.asarray(eigenvalues, dtype=float)
        if w.ndim != 1 or len(w) == 0 or not np.all(np.isfinite(w)):
            raise ValueError("eigenvalues must be a non-empty finite 1-D sequence")
        if basis is None:
            v = np.eye(len(w), dtype=np.complex128)
        else:
            v = matkit.as_matrix(basis, "basis")
            if v.shape != (len(w), len(w)) or not matkit.is_unitary(v, 1e-10):
                raise NotUnitaryBasis("eigenvector basis is not a unitary matrix of matching size")
        # Round-trip through the matrix keeps ordering and degeneracy handling in one place.
        sp = matkit.eigh((v * w) @ v.conj().T)
    return Hamiltonian(dim=sp.eigenvectors.shape[0], spectrum=sp, levels=_group_levels(sp))


@dataclass(frozen=True)
class GibbsEnsemble:
    beta: float
    hamiltonian: Hamiltonian
    probabilities: np.ndarray
    log_partition: float

    @property
    def partition(self) -> float:
        return math.exp(self.log_partition)

    @property
    def free_energy(self) -> float:
        """``-ln(Z) / beta``; undefined at infinite temperature."""
        if self.beta == 0:
            raise ZeroTemperature("free energy needs beta > 0")
        return -self.log_partition / self.beta

    @property
    def state_probabilities(self) -> np.ndarray:
        """Per-eigenstate weight ``p_n / g_n`` (the Boltzmann factor over Z)."""
        return self.probabilities / self.hamiltonian.multiplicities


def gibbs(h: Hamiltonian, beta: float) -> GibbsEnsemble:
    """Canonical populations of each level of ``h`` at inverse temperature ``beta``.

    Energies are shifted by the ground energy before exponentiation so that
    large ``beta`` cannot overflow; ``ln Z`` carries the shift back.
    """
    beta = float(beta)
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    e = h.energies
    g = h.multiplicities
    e0 = float(e.min())
    weights = g * np.exp(-beta * (e - e0))
    shifted_z = float(np.sum(weights))
    return GibbsEnsemble(
        beta=beta,
        hamiltonian=h,
        probabilities=weights / shifted_z,
        log_partition=math.log(shifted_z) - beta * e0,
    )


def density_matrix(g: GibbsEnsemble) -> np.ndarray:
    """``exp(-beta H) / Z`` assembled from level projectors."""
    return np.einsum("n,nij->ij", g.state_probabilities, g.hamiltonian.projectors)


def free_energy_difference(gi: GibbsEnsemble, gf: GibbsEnsemble, convention: Convention = "paper") -> float:
    """Free-energy change between two ensembles at the same ``beta``.

    ``"standard"`` is ``F_f - F_i = -ln(Z_f/Z_i)/beta``. ``"paper"`` is the
    opposite sign, ``ln(Z_f/Z_i)/beta``, the convention under which
    ``exp(-beta dF) = Z_i/Z_f`` and the Jarzynski chain closes.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown delta_f convention {convention!r}")
    if gi.beta != gf.beta:
        raise BetaMismatch(f"beta differs: {gi.beta} vs {gf.beta}")
    if gi.beta == 0:
        raise ZeroTemperature("free-energy difference needs beta > 0")
    paper = (gf.log_partition - gi.log_partition) / gi.beta
    return paper if convention == "paper" else -paper
