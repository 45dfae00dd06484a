"""Moment-constrained maximum relative entropy spectral densities.

Given estimated moments mu_i of a spectrum supported on (0, 1] and a
prior q0, the surrogate density

    q(x) = q0(x) * exp(-[1 + sum_i alpha_i f_i(x)])

is found by minimizing the convex dual

    S(alpha) = int q0 exp(-[1 + sum alpha_i f_i]) dx + sum alpha_i mu_i

with a damped Newton method whose steps come from conjugate gradients on
the jitter-regularized Hessian. All integrals use composite
Gauss-Legendre panels refined geometrically toward 0, where log has its
singularity and ill-conditioned spectra pile up mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from .probes import MomentBasis, SpectralMoments

_EXP_LIMIT = 700.0  # exp overflow guard for float64


class DegenerateSpectrumError(ValueError):
    """Beta fit impossible (zero spectral variance); fall back to Uniform."""


@dataclass(frozen=True)
class UniformPrior:
    """Flat prior on [delta, 1]; delta > 0 keeps log integrable."""

    delta: float = 1e-14

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")

    @property
    def support_floor(self) -> float:
        return self.delta

    def density(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return np.where((lam >= self.delta) & (lam <= 1.0), 1.0 / (1.0 - self.delta), 0.0)


@dataclass(frozen=True)
class BetaPrior:
    """Beta(gamma, beta) density on [0, 1]."""

    gamma: float
    beta: float

    def __post_init__(self):
        if self.gamma <= 0 or self.beta <= 0:
            raise ValueError("Beta prior parameters must be positive")

    @property
    def support_floor(self) -> float:
        return 0.0

    def density(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        lognorm = -betaln(self.gamma, self.beta)
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = lognorm + (self.gamma - 1.0) * np.log(lam) \
                + (self.beta - 1.0) * np.log1p(-lam)
        out = np.exp(logd)
        return np.where((lam > 0.0) & (lam < 1.0), out, 0.0)


PriorSpec = UniformPrior | BetaPrior


def fit_beta_prior(mu1: float, mu2: float) -> BetaPrior:
    """Invert the first two raw moments into Beta(gamma, beta) parameters."""
    if not (0.0 < mu1 < 1.0 and 0.0 < mu2 < 1.0):
        raise ValueError("moments must lie in (0, 1)")
    var = mu2 - mu1 * mu1
    if var <= 0.0:
        raise DegenerateSpectrumError(
            "mu2 <= mu1^2: spectrum has no variance; use a Uniform prior instead"
        )
    if mu2 >= mu1:
        raise ValueError("mu2 must be smaller than mu1 for a [0,1] variable")
    gamma = mu1 * (mu1 - mu2) / var
    beta = (1.0 / mu1 - 1.0) * gamma
    return BetaPrior(gamma=gamma, beta=beta)


@dataclass
class SolverConfig:
    gtol: float = 1e-6
    jitter: float = 1e-8
    max_jitter: float = 1e-2
    max_iter: int = 500
    panels: int = 30
    nodes_per_panel: int = 16
    floor: float = 1e-14  # quadrature lower endpoint when the prior allows mass there
    ridge: float = 1.0  # multiplier on the per-moment squared-standard-error penalty

    def __post_init__(self):
        if self.gtol <= 0:
            raise ValueError("gtol must be positive")
        if self.nodes_per_panel < 2:
            raise ValueError("need at least 2 nodes per panel")


@dataclass
class SurrogateDensity:
    """Prior reweighted by the exponential of a fitted polynomial."""

    prior: PriorSpec
    basis: MomentBasis
    alpha: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.shape != (self.basis.order + 1,):
            raise ValueError("alpha length must be order + 1")

    def density(self, lam: np.ndarray) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        F = self.basis.vandermonde(lam)
        return self.prior.density(lam) * np.exp(-(1.0 + F @ self.alpha))


@dataclass
class SolveResult:
    density: SurrogateDensity
    iterations: int
    grad_norm: float
    objective: float
    converged: bool


def quadrature_grid(floor: float, panels: int, nodes_per_panel: int,
                    ceil_gap: float = 1e-10):
    """Composite Gauss-Legendre nodes/weights on [floor, 1 - ceil_gap].

    Panel edges refine geometrically toward both endpoints: toward 0 for
    the log singularity and ill-conditioned spectral mass, and toward 1 so
    no low-degree exponent polynomial can hide a spike between the last
    node and the boundary (a degree-m Chebyshev feature is no narrower
    than ~1/m^2, far wider than the terminal gap).
    """
    if not (0.0 < floor < 0.5):
        raise ValueError("floor must lie in (0, 0.5)")
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    left = floor * (0.5 / floor) ** (np.arange(panels + 1) / panels)
    gaps = 0.5 * (ceil_gap / 0.5) ** (np.arange(panels + 1) / panels)
    edges = np.concatenate([left, (1.0 - gaps)[1:]])
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


class DualProblem:
    """Precomputed quadrature view of the dual objective for fixed inputs.

    `penalty` is an optional non-negative vector p adding 0.5 sum p_i a_i^2
    to the objective. Weighting p by each moment's squared standard error
    keeps the dual bounded when Monte Carlo noise pushes the constraint
    vector outside the attainable moment cone: a coefficient only grows
    large if the moment it matches is known accurately.
    """

    def __init__(self, prior: PriorSpec, basis: MomentBasis, moments: np.ndarray,
                 config: SolverConfig | None = None,
                 penalty: np.ndarray | None = None):
        config = config or SolverConfig()
        self.prior = prior
        self.basis = basis
        self.mu = np.asarray(moments, dtype=float)
        if self.mu.shape != (basis.order + 1,):
            raise ValueError("moment vector length must match basis order + 1")
        if penalty is None:
            self.penalty = np.zeros_like(self.mu)
        else:
            self.penalty = np.asarray(penalty, dtype=float)
            if self.penalty.shape != self.mu.shape or np.any(self.penalty < 0):
                raise ValueError("penalty must be a non-negative vector matching mu")
        floor = max(prior.support_floor, config.floor)
        self.nodes, w = quadrature_grid(floor, config.panels, config.nodes_per_panel)
        self.wq0 = w * prior.density(self.nodes)
        self.F = basis.vandermonde(self.nodes)

    def _expfactor(self, alpha: np.ndarray) -> np.ndarray:
        a = 1.0 + self.F @ alpha
        if np.any(-a > _EXP_LIMIT):
            raise OverflowError(
                "dual exponent overflow; rescale coefficients or reduce the order"
            )
        return np.exp(-a)

    def objective(self, alpha: np.ndarray) -> float:
        return float(self.wq0 @ self._expfactor(alpha) + alpha @ self.mu
                     + 0.5 * self.penalty @ (alpha * alpha))

    def gradient(self, alpha: np.ndarray) -> np.ndarray:
        e = self._expfactor(alpha)
        return self.mu - self.F.T @ (self.wq0 * e) + self.penalty * alpha

    def hessian(self, alpha: np.ndarray) -> np.ndarray:
        e = self._expfactor(alpha)
        return self.F.T @ (self.F * (self.wq0 * e)[:, None]) + np.diag(self.penalty)

    def fitted_moments(self, alpha: np.ndarray) -> np.ndarray:
        """int q f_j dx for every j at the current coefficients."""
        e = self._expfactor(alpha)
        return self.F.T @ (self.wq0 * e)


def _moment_penalty(moments: SpectralMoments, config: SolverConfig) -> np.ndarray:
    """Squared standard error of each moment estimate, times config.ridge."""
    if config.ridge == 0.0 or moments.probes < 2:
        return np.zeros_like(moments.values)
    return config.ridge * moments.variance / moments.probes


def _problem(prior, basis, moments: SpectralMoments,
             config: SolverConfig | None) -> DualProblem:
    config = config or SolverConfig()
    return DualProblem(prior, basis, moments.values, config,
                       penalty=_moment_penalty(moments, config))


def dual_objective(alpha, prior, basis, moments: SpectralMoments,
                   config: SolverConfig | None = None) -> float:
    return _problem(prior, basis, moments, config).objective(np.asarray(alpha, float))


def dual_gradient(alpha, prior, basis, moments: SpectralMoments,
                  config: SolverConfig | None = None) -> np.ndarray:
    return _problem(prior, basis, moments, config).gradient(np.asarray(alpha, float))


def dual_hessian(alpha, prior, basis, moments: SpectralMoments,
                 config: SolverConfig | None = None) -> np.ndarray:
    return _problem(prior, basis, moments, config).hessian(np.asarray(alpha, float))


def _cg(H: np.ndarray, b: np.ndarray, tol: float, max_iter: int):
    """Conjugate gradients for H x = b; returns (x, hit_nonpositive_curvature)."""
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = r @ r
    bnorm = np.sqrt(rs)
    if bnorm == 0.0:
        return x, False
    for _ in range(max_iter):
        Hp = H @ p
        curv = p @ Hp
        if curv <= 0.0:
            return x, True
        a = rs / curv
        x += a * p
        r -= a * Hp
        rs_new = r @ r
        if np.sqrt(rs_new) <= tol * bnorm:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, False


def solve(moments: SpectralMoments, prior: PriorSpec,
          config: SolverConfig | None = None) -> SolveResult:
    """Newton-CG minimization of the dual, starting from alpha = 0.

    The Hessian is symmetrized and regularized with escalating diagonal
    jitter whenever CG encounters non-positive curvature; steps are damped
    by Armijo backtracking.
    """
    config = config or SolverConfig()
    if abs(moments.values[0] - 1.0) > 1e-8:
        raise ValueError("mu_0 must equal 1 (normalized spectral measure)")
    problem = DualProblem(prior, moments.basis, moments.values, config,
                          penalty=_moment_penalty(moments, config))
    dim = moments.basis.order + 1
    alpha = np.zeros(dim)
    S = problem.objective(alpha)
    iterations = 0
    converged = False
    for iterations in range(1, config.max_iter + 1):
        g = problem.gradient(alpha)
        gnorm = float(np.abs(g).max())
        if gnorm < config.gtol:
            converged = True
            iterations -= 1
            break
        H = problem.hessian(alpha)
        H = 0.5 * (H + H.T)
        eta = config.jitter
        cg_tol = min(0.5, np.sqrt(gnorm))
        while True:
            step, bad_curv = _cg(H + eta * np.eye(dim), -g, cg_tol, 4 * dim)
            if not bad_curv and np.any(step != 0.0):
                break
            eta *= 10.0
            if eta > config.max_jitter:
                raise RuntimeError(
                    "regularized Hessian remained indefinite at maximum jitter"
                )
        t = 1.0
        slope = g @ step
        while t > 1e-14:
            try:
                S_new = problem.objective(alpha + t * step)
            except OverflowError:
                t *= 0.5
                continue
            if S_new <= S + 1e-4 * t * slope:
                break
            t *= 0.5
        alpha = alpha + t * step
        S = problem.objective(alpha)
    g = problem.gradient(alpha)
    gnorm = float(np.abs(g).max())
    converged = gnorm < config.gtol
    density = SurrogateDensity(prior=prior, basis=moments.basis, alpha=alpha)
    return SolveResult(density=density, iterations=iterations,
                       grad_norm=gnorm, objective=S, converged=converged)


def integrate_log_expectation(q: SurrogateDensity,
                              config: SolverConfig | None = None) -> float:
    """int q(x) log(x) dx on [floor, 1] with panels clustered at 0.

    Uses the same grid family as the solver so the density is only
    evaluated where its moments were constrained; a fitted exponent
    polynomial is not trustworthy off that grid when coefficients are
    large (near-point-mass spectra).
    """
    config = config or SolverConfig()
    floor = max(q.prior.support_floor, config.floor)
    nodes, w = quadrature_grid(floor, config.panels, config.nodes_per_panel)
    val = float((w * q.density(nodes)) @ np.log(nodes))
    return min(val, 0.0)
