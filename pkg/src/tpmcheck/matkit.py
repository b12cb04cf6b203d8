"""Dense complex linear algebra for small Hermitian problems.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The eigensolver
is a cyclic complex Jacobi iteration: for the dimensions used here (d <= 8)
it is unconditionally stable and fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotHermitian, ShapeMismatch

HERMITIAN_RTOL = 1e-10
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_RTOL = 1e-14
DEGENERACY_GAP = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ShapeMismatch(f"{name} must be a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a), "fro"))


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return frobenius_norm(a - b)


def is_hermitian(a, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return frobenius_norm(a - a.conj().T) <= rtol * max(1.0, frobenius_norm(a))


def is_unitary(u, tol: float) -> bool:
    """True iff ``||u^H u - I||_F <= tol``; non-square input is never unitary."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return frobenius_norm(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def _off_norm(a: np.ndarray) -> float:
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.sqrt(np.sum(off.real**2 + off.imag**2)))


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    r = abs(apq)
    phase = apq / r
    app = a[p, p].real
    aqq = a[q, q].real
    tau = (aqq - app) / (2.0 * r)
    if abs(tau) > 1e150:
        t = 0.5 / tau
    elif tau >= 0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # Phase rotation diag(1, conj(phase)) followed by the real Givens rotation.
    block = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
    idx = [p, q]
    a[:, idx] = a[:, idx] @ block
    a[idx, :] = block.conj().T @ a[idx, :]
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    v[:, idx] = v[:, idx] @ block


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    mags = np.abs(vec)
    k = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    return vec * (np.conj(vec[k]) / mags[k])


def _canonicalize(w: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order].copy()
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] < DEGENERACY_GAP:
            stop += 1
        # Modified Gram-Schmidt in index order inside the degenerate cluster.
        for j in range(start, stop):
            col = v[:, j]
            for k in range(start, j):
                col = col - (v[:, k].conj() @ col) * v[:, k]
            v[:, j] = _fix_phase(col / np.linalg.norm(col))
        start = stop
    return w, v


def eigh(a) -> Spectrum:
    """Hermitian eigendecomposition by cyclic Jacobi sweeps.

    Raises ``NotHermitian`` when ``||a - a^H||_F`` exceeds
    ``1e-10 * max(1, ||a||_F)`` and ``NoConvergence`` when the off-diagonal
    mass is not below ``1e-14 * ||a||_F`` after 100 sweeps.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotHermitian(f"matrix is not square: {a.shape}")
    if not is_hermitian(a):
        raise NotHermitian("matrix is not Hermitian within 1e-10 relative Frobenius tolerance")
    d = a.shape[0]
    work = 0.5 * (a + a.conj().T)
    v = np.eye(d, dtype=np.complex128)
    threshold = JACOBI_OFF_RTOL * frobenius_norm(work)
    skip = 1e-3 * threshold / max(d, 1)
    for _ in range(JACOBI_MAX_SWEEPS):
        if _off_norm(work) <= threshold:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                if abs(work[p, q]) > skip:
                    _jacobi_rotate(work, v, p, q)
    else:
        if _off_norm(work) > threshold:
            raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    w, v = _canonicalize(np.diag(work).real.copy(), v)
    return Spectrum(eigenvalues=w, eigenvectors=v)


def expm_hermitian(a, scale: float) -> np.ndarray:
    """``exp(scale * a)`` through the spectral decomposition of ``a``."""
    sp = eigh(a)
    v = sp.eigenvectors
    return (v * np.exp(scale * sp.eigenvalues)) @ v.conj().T


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T
