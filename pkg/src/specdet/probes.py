"""Stochastic estimation of normalized spectral moments.

Moments mu_i = (1/n) Tr f_i(B) are estimated with Rademacher probes
(Hutchinson's method) and per-probe three-term recurrences, so each probe
costs exactly m matrix-vector products. Three bases are supported on
[0, 1]: raw powers, shifted Chebyshev T_i(2x-1), and shifted Legendre
P_i(2x-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POWER = "power"
CHEBYSHEV = "chebyshev"
LEGENDRE = "legendre"
_BASIS_KINDS = (POWER, CHEBYSHEV, LEGENDRE)


@dataclass(frozen=True)
class MomentBasis:
    """Polynomial basis f_0..f_m on [0, 1] with f_0 == 1."""

    kind: str
    order: int

    def __post_init__(self):
        if self.kind not in _BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {_BASIS_KINDS}")
        if self.order < 0:
            raise ValueError("basis order must be non-negative")

    def vandermonde(self, lam: np.ndarray) -> np.ndarray:
        """Evaluate f_0..f_m at the given points; shape (len(lam), m+1)."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        m = self.order
        F = np.empty((lam.size, m + 1))
        F[:, 0] = 1.0
        if m == 0:
            return F
        if self.kind == POWER:
            F[:, 1] = lam
            for i in range(2, m + 1):
                F[:, i] = F[:, i - 1] * lam
        else:
            t = 2.0 * lam - 1.0
            F[:, 1] = t
            for i in range(1, m):
                if self.kind == CHEBYSHEV:
                    F[:, i + 1] = 2.0 * t * F[:, i] - F[:, i - 1]
                else:
                    F[:, i + 1] = ((2 * i + 1) * t * F[:, i] - i * F[:, i - 1]) / (i + 1)
        return F

    def to_power_matrix(self) -> np.ndarray:
        """Exact change of basis C with f_i(x) = sum_k C[i, k] x^k."""
        m = self.order
        C = np.zeros((m + 1, m + 1))
        C[0, 0] = 1.0
        if m == 0:
            return C
        if self.kind == POWER:
            return np.eye(m + 1)
        # recurrences in power coefficients of t = 2x - 1
        C[1, 0], C[1, 1] = -1.0, 2.0
        for i in range(1, m):
            tC = 2.0 * np.roll(C[i], 1) - C[i]  # (2x - 1) * f_i in power coefficients
            if self.kind == CHEBYSHEV:
                C[i + 1] = 2.0 * tC - C[i - 1]
            else:
                C[i + 1] = ((2 * i + 1) * tC - i * C[i - 1]) / (i + 1)
        return C


@dataclass
class SpectralMoments:
    """Estimated moments mu_0..mu_m with probe metadata."""

    basis: MomentBasis
    values: np.ndarray
    probes: int
    seed: int
    variance: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.basis.order + 1,):
            raise ValueError("moment vector length must be order + 1")
        if self.variance is None:
            self.variance = np.zeros_like(self.values)


def probe_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for probe `index` of stream `seed`, schedule-independent."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss))


def rademacher_probe(n: int, rng: np.random.Generator) -> np.ndarray:
    """Vector of i.i.d. +-1 entries; z.z == n exactly for every draw."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * rng.integers(0, 2, size=n).astype(float) - 1.0


def probe_matrix(n: int, d: int, seed: int) -> np.ndarray:
    """The d Rademacher probes of stream `seed`, as columns; shape (n, d).

    Methods that share a seed share these exact probes, so cross-method
    comparisons are paired.
    """
    Z = np.empty((n, d))
    for j in range(d):
        Z[:, j] = rademacher_probe(n, probe_rng(seed, j))
    return Z


def _moment_samples(op, basis: MomentBasis, Z: np.ndarray) -> np.ndarray:
    """Per-probe quadratic forms z_j.f_i(B)z_j / n; shape (d, m+1)."""
    n, d = Z.shape
    m = basis.order
    samples = np.empty((d, m + 1))
    samples[:, 0] = np.einsum("ij,ij->j", Z, Z) / n
    if m == 0:
        return samples
    if basis.kind == POWER:
        W = op.matmat(Z)
        samples[:, 1] = np.einsum("ij,ij->j", Z, W) / n
        for i in range(2, m + 1):
            W = op.matmat(W)
            samples[:, i] = np.einsum("ij,ij->j", Z, W) / n
    else:
        # recurrences in t = 2B - I applied to the probe block
        prev = Z
        cur = 2.0 * op.matmat(Z) - Z
        samples[:, 1] = np.einsum("ij,ij->j", Z, cur) / n
        for i in range(1, m):
            tcur = 2.0 * op.matmat(cur) - cur
            if basis.kind == CHEBYSHEV:
                nxt = 2.0 * tcur - prev
            else:
                nxt = ((2 * i + 1) * tcur - i * prev) / (i + 1)
            samples[:, i + 1] = np.einsum("ij,ij->j", Z, nxt) / n
            prev, cur = cur, nxt
    return samples


def estimate_moments(op, basis: MomentBasis, d: int, seed: int) -> SpectralMoments:
    """Monte Carlo moment estimates over d probes, deterministic in seed.

    `op` is typically a NormalizedOperator; anything with .n and .matmat
    works. Probes are reduced in index order, so results are bit-identical
    for identical arguments.
    """
    if d < 1:
        raise ValueError("probe count d must be >= 1")
    Z = probe_matrix(op.n, d, seed)
    samples = _moment_samples(op, basis, Z)
    values = samples.mean(axis=0)
    if not np.isfinite(values).all():
        raise ValueError("non-finite moment estimate; operator may not be normalized")
    variance = samples.var(axis=0, ddof=1) if d > 1 else np.zeros(basis.order + 1)
    return SpectralMoments(basis=basis, values=values, probes=d, seed=seed, variance=variance)


def moments_to_power(moments: SpectralMoments) -> SpectralMoments:
    """Re-express moments in the power basis via the exact change of basis."""
    C = moments.basis.to_power_matrix()
    # mu_i = sum_k C[i,k] p_k  =>  p = C^{-1} mu (C is triangular-like, solve directly)
    p = np.linalg.solve(C, moments.values)
    return SpectralMoments(
        basis=MomentBasis(POWER, moments.basis.order),
        values=p,
        probes=moments.probes,
        seed=moments.seed,
        variance=moments.variance.copy(),
    )


def hutchinson_sample_bound(epsilon: float, eta: float) -> int:
    """Probe count guaranteeing fractional trace error epsilon w.p. 1 - eta."""
    if not (0.0 < epsilon <= 1.0):
        raise ValueError("epsilon must lie in (0, 1]")
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    return math.ceil(6.0 * epsilon**-2 * math.log(2.0 / eta))
