import math

import numpy as np
import pytest
import mpmath
import scipy.linalg

from tpmcheck.qstate import make_hamiltonian
from tpmcheck.tpm import Evolution, haar_unitary

P0 = math.exp(0) / (1 + math.exp(-1))  # qubit E = {0, 1}, beta = 1
P1 = math.exp(-1) / (1 + math.exp(-1))


def random_hermitian(rng, d, scale=1.0):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (x + x.conj().T) / 2


def random_hamiltonian(rng, d, lo=-5.0, hi=5.0):
    """Random spectrum in [lo, hi] with a Haar-random eigenbasis."""
    return make_hamiltonian(eigenvalues=rng.uniform(lo, hi, d), basis=haar_unitary(d, rng))


def random_scenario(rng, d=None):
    d = int(rng.choice([2, 3, 4])) if d is None else d
    hi = random_hamiltonian(rng, d)
    hf = random_hamiltonian(rng, d)
    u = Evolution("haar-random", haar_unitary(d, rng))
    beta = float(rng.uniform(0.1, 5.0))
    return hi, beta, u, hf


def random_oracle_scenario(rng, d):
    """Scenario whose every initial branch has weight >~ 1e-3.

    Conditioning on a branch of weight p_n costs ~eps/p_n relative accuracy,
    so the pipeline oracle is only a 1e-12 referee when no branch is tiny.
    """
    hi = random_hamiltonian(rng, d, -2.0, 2.0)
    hf = random_hamiltonian(rng, d, -2.0, 2.0)
    u = Evolution("haar-random", haar_unitary(d, rng))
    return hi, float(rng.uniform(0.1, 1.0)), u, hf


def pipeline_conditional(hi, u, hf, beta):
    """Brute-force TPM: dephase rho_i, condition on outcome n, evolve, read Q_m."""
    rho = scipy.linalg.expm(-beta * hi.matrix())
    rho = rho / np.trace(rho).real
    U = u.matrix
    out = np.zeros((len(hi.levels), len(hf.levels)))
    for n, pn in enumerate(hi.levels):
        post = pn.projector @ rho @ pn.projector
        prob = np.trace(post).real
        state = U @ (post / prob) @ U.conj().T
        for m, qm in enumerate(hf.levels):
            out[n, m] = np.trace(qm.projector @ state).real
    return out


def _mp_orthonormal(v):
    """Columns of a float matrix, Gram-Schmidt orthonormalized at working precision."""
    cols = [mpmath.matrix([mpmath.mpc(complex(z)) for z in v[:, k]]) for k in range(v.shape[1])]
    out = []
    for c in cols:
        for b in out:
            c = c - b * sum(mpmath.conj(b[i]) * c[i] for i in range(len(c)))
        out.append(c / mpmath.sqrt(sum(abs(c[i]) ** 2 for i in range(len(c)))))
    return out


def pipeline_conditional_mp(hi, u, hf, beta, dps=60):
    """High-precision TPM pipeline for nondegenerate spectra.

    rho_i = expm(-beta H_i) at ``dps`` digits, dephased and conditioned on
    each P_n, evolved by U and read out with Q_m. Working at 60 digits keeps
    branches as small as exp(-50) accurate to far below 1e-12.
    """
    assert len(hi.levels) == hi.dim and len(hf.levels) == hf.dim
    with mpmath.workdps(dps):
        d = hi.dim
        vi = _mp_orthonormal(hi.spectrum.eigenvectors)
        vf = _mp_orthonormal(hf.spectrum.eigenvectors)
        proj = lambda v: v * v.transpose_conj()  # noqa: E731
        h = mpmath.zeros(d, d)
        for e, v in zip(hi.spectrum.eigenvalues, vi):
            h += mpmath.mpf(float(e)) * proj(v)
        rho = mpmath.expm(-mpmath.mpf(beta) * h)
        U = mpmath.matrix([[mpmath.mpc(complex(z)) for z in row] for row in u.matrix])
        out = np.zeros((d, d))
        for n, pv in enumerate(vi):
            pn = proj(pv)
            post = pn * rho * pn
            post = post / sum(post[i, i] for i in range(d))
            state = U * post * U.transpose_conj()
            for m, qv in enumerate(vf):
                qs = proj(qv) * state
                out[n, m] = float(mpmath.re(sum(qs[i, i] for i in range(d))))
    return out


def grid_floor(beta, e, points=10**6):
    """Exhaustive 1-D oracle over symmetric bistochastic conditionals [[c, 1-c], [1-c, c]].

    Closed-form objective, independent of the TPM code path; c on the open
    interval (0, 1). Paper conventions with H_f = H_i, so dF = 0.
    """
    w = np.exp(-beta * np.asarray(e, float))
    p = w / w.sum()
    c = np.linspace(0.0, 1.0, points + 2)[1:-1]
    cond = [[c, 1 - c], [1 - c, c]]
    q = [p[0] * cond[0][m] + p[1] * cond[1][m] for m in range(2)]
    total = np.zeros_like(c)
    for n in range(2):
        for m in range(2):
            i_tilde = np.log(cond[n][m] / q[m])
            target = -beta * (e[n] - e[m])
            total += p[n] * cond[n][m] * (i_tilde - target) ** 2
    k = int(np.argmin(total))
    return float(total[k]), float(c[k])


def chain_sums_bruteforce(t):
    """The three chain expressions by explicit double loops (nondegenerate spectra)."""
    ei = t.initial.hamiltonian.energies
    ef = t.final_h.energies
    zi = sum(math.exp(-t.beta * e) for e in ei)
    zf = sum(math.exp(-t.beta * e) for e in ef)
    df = math.log(zf / zi) / t.beta
    s1 = s2 = s3 = 0.0
    for n in range(len(ei)):
        pn = math.exp(-t.beta * ei[n]) / zi
        for m in range(len(ef)):
            pmn = t.conditional[n, m]
            pnm = pn * pmn
            s1 += pmn * math.exp(-t.beta * ef[m]) / zf
            s2 += pnm * math.exp(-math.log(pn)) * math.exp(-t.beta * ef[m]) / zf
            s3 += pnm * math.exp(-t.beta * (ef[m] - ei[n]) - t.beta * df)
    return s1, s2, s3


@pytest.fixture
def qubit():
    return make_hamiltonian(eigenvalues=[0.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
