"""Finite-shot Monte Carlo of the TPM protocol.

Random numbers come from numpy's PCG64 generator (PCG-XSL-RR 128/64) seeded
with a 64-bit integer. Runs are reproducible bit for bit on one numpy
version; no cross-language bitstream compatibility is attempted.

Parallel streams: ``RngState(seed).spawn(k)`` derives ``k`` child seeds
through ``numpy.random.SeedSequence(seed).spawn(k)``. Stream ``j`` draws
``shots // k`` samples, plus one more when ``j < shots % k``, and outcomes
are concatenated in stream order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import UndefinedObservableAtSample
from .infotherm import exp_average, jarzynski_average, residuals
from .tpm import TpmDistribution

Observable = Literal["exp_neg_i_tilde", "exp_jarzynski", "work_mean"]
OBSERVABLES: tuple[str, ...] = ("exp_neg_i_tilde", "exp_jarzynski", "work_mean")


@dataclass
class RngState:
    seed: int
    _seq: np.random.SeedSequence = field(init=False, repr=False)
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(self.seed)
        self._seq = np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def spawn(self, k: int) -> list[np.random.Generator]:
        return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(self.seed).spawn(k)]


def inverse_cdf_table(p: np.ndarray) -> np.ndarray:
    """Cumulative sums in index order with the last bin pinned to exactly 1."""
    cdf = np.cumsum(np.asarray(p, dtype=float), axis=-1)
    cdf[..., -1] = 1.0
    return cdf


def _draw(t: TpmDistribution, shots: int, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    u = gen.random((2, shots))
    n = np.searchsorted(inverse_cdf_table(t.p_n), u[0], side="right")
    m = np.empty(shots, dtype=np.intp)
    rows = inverse_cdf_table(t.conditional)
    for level in range(len(rows)):
        sel = n == level
        m[sel] = np.searchsorted(rows[level], u[1, sel], side="right")
    return n, m


def sample_tpm(t: TpmDistribution, shots: int, rng: RngState, streams: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``shots`` outcome pairs; returns index arrays ``(n, m)``.

    ``n`` is drawn by inverse CDF over ``p_n``, then ``m`` by inverse CDF
    over row ``n`` of the conditional matrix.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if streams == 1:
        return _draw(t, shots, rng.generator)
    base, extra = divmod(shots, streams)
    parts = [_draw(t, base + (j < extra), g) for j, g in enumerate(rng.spawn(streams))]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


@dataclass(frozen=True)
class EstimatorResult:
    observable: str
    shots: int
    mean: float
    sample_std: float
    standard_error: float
    exact: float
    z_score: float


def observable_table(t: TpmDistribution, observable: Observable) -> tuple[np.ndarray, float]:
    """Per-pair observable values (NaN where undefined) and the exact expectation."""
    if observable == "exp_neg_i_tilde":
        info = residuals(t)
        return np.exp(-info.i_tilde), exp_average(t).support_restricted
    if observable == "exp_jarzynski":
        conv = t.conventions.work_sign
        if conv == "paper":
            values = np.exp(t.beta * t.work_for("paper")) * math.exp(-t.beta * t.delta_f_for("paper"))
        else:
            values = np.exp(-t.beta * t.work_for("standard"))
        return values, jarzynski_average(t)
    if observable == "work_mean":
        return t.work.copy(), float(np.sum(t.joint * t.work))
    raise ValueError(f"unknown observable {observable!r}; expected one of {OBSERVABLES}")


def _z_score(mean: float, exact: float, se: float) -> float:
    if se > 0:
        return (mean - exact) / se
    # Constant observable: agreement is judged to roundoff.
    if abs(mean - exact) <= 1e-12 * max(1.0, abs(exact)):
        return 0.0
    return math.copysign(math.inf, mean - exact)


def estimate(
    t: TpmDistribution,
    observable: Observable,
    shots: int,
    rng: RngState,
    streams: int = 1,
) -> EstimatorResult:
    """Sample-mean estimate of ``observable`` with its standard error."""
    values, exact = observable_table(t, observable)
    n, m = sample_tpm(t, shots, rng, streams)
    d_i, d_f = values.shape
    counts = np.bincount(n * d_f + m, minlength=d_i * d_f).reshape(d_i, d_f)
    hit = counts > 0
    bad = hit & ~np.isfinite(values)
    if np.any(bad):
        k = int(np.flatnonzero(bad.ravel()[n * d_f + m])[0])
        raise UndefinedObservableAtSample(int(n[k]), int(m[k]), observable)
    seen = values[hit]
    if np.all(seen == seen[0]):
        mean, std = float(seen[0]), 0.0
    else:
        w = counts[hit].astype(float)
        mean = float(np.sum(w * seen) / shots)
        var = float(np.sum(w * (seen - mean) ** 2)) / (shots - 1) if shots > 1 else 0.0
        std = math.sqrt(var)
    se = std / math.sqrt(shots)
    return EstimatorResult(
        observable=observable,
        shots=shots,
        mean=mean,
        sample_std=std,
        standard_error=se,
        exact=exact,
        z_score=_z_score(mean, exact, se),
    )
