"""Empirical-Bayes core shrinkage for covariance estimation.

The sample covariance S is shrunk towards its separable fit K_hat:
Sigma_hat = (1-w) S + w K_hat.  The weight comes from maximizing, in the
prior degrees of freedom nu, the marginal likelihood of an
inverse-Wishart prior centered on K_hat; the likelihood depends on the
data only through the eigenvalues of the core of S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln

from .kcd import KCDOptions, is_core, kcd
from .linalg import Covariance, Dims, DomainError, SeparableCovariance, sym_eigen

EIG_FLOOR = 1e-12
NU_MAX_FACTOR = 1e8
SCAN_POINTS = 256
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ShrinkageFit:
    """Fitted shrinkage weight and the quantities it was derived from.

    nu_hat is math.inf when the marginal likelihood is maximized on the
    upper boundary, in which case w_hat = 1 (the pure separable fit);
    nu_hat = p+1 with w_hat = 0 marks the lower boundary.
    """

    nu_hat: float
    w_hat: float
    core_eigs: NDArray
    objective_at_opt: float
    n: int
    dims: Dims


@dataclass(frozen=True)
class PriorSpec:
    """Inverse-Wishart prior with separable mean k_mean and nu > p+1."""

    nu: float
    k_mean: SeparableCovariance

    def __post_init__(self):
        p = self.k_mean.dims.p
        if not math.isfinite(self.nu) or self.nu <= p + 1:
            raise ValueError(f"prior nu must be finite and > p+1 = {p + 1}, got {self.nu}")


def lmgamma(p: int, a: float) -> float:
    """Log of the multivariate gamma function Gamma_p(a).

    log Gamma_p(a) = p(p-1)/4 * ln(pi) + sum_{j=1..p} lgamma(a + (1-j)/2),
    defined for a > (p-1)/2.
    """
    if p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    if a <= (p - 1) / 2.0:
        raise DomainError(f"lmgamma requires a > (p-1)/2 = {(p - 1) / 2.0}, got {a}")
    js = np.arange(1, p + 1, dtype=float)
    return float(
        p * (p - 1) / 4.0 * math.log(math.pi) + np.sum(gammaln(a + (1.0 - js) / 2.0))
    )


def shrink_weight(nu: float, n: int, p: int) -> float:
    """Posterior-mean weight (nu-p-1)/(n+nu-p-1), stable for large nu."""
    if math.isinf(nu):
        return 1.0
    m = nu - p - 1.0
    return 1.0 / (1.0 + n / m)


def log_marginal(nu: float, core_eigs: NDArray, n: int, dims: Dims) -> float:
    """Marginal log-likelihood of nu given the core eigenvalues.

    Up to a nu-free constant,

        log L = lmgamma(p, (n+nu)/2) - lmgamma(p, nu/2)
                + (nu*p/2) log w + (n*p/2) log(1-w)
                - ((nu+n)/2) sum_j log(w + (1-w) c_j)

    with w = (nu-p-1)/(n+nu-p-1).  Eigenvalues are floored at 1e-12 so
    singular sample covariances (n < p) evaluate finitely.
    """
    p = dims.p
    if nu <= p + 1:
        raise DomainError(f"log_marginal requires nu > p+1 = {p + 1}, got {nu}")
    eigs = np.maximum(np.asarray(core_eigs, dtype=float), EIG_FLOOR)
    m = nu - p - 1.0
    log_nm = math.log(n + m)
    log_w = math.log(m) - log_nm
    log_1mw = math.log(n) - log_nm
    det_sum = float(np.sum(np.log(m + n * eigs))) - p * log_nm
    return (
        lmgamma(p, (n + nu) / 2.0)
        - lmgamma(p, nu / 2.0)
        + (nu * p / 2.0) * log_w
        + (n * p / 2.0) * log_1mw
        - ((nu + n) / 2.0) * det_sum
    )


def _golden_max(f, a: float, b: float, tol: float = 1e-11) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal f on [a, b]."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def fit_weight(core: Covariance, n: int, dims: Dims) -> ShrinkageFit:
    """Empirical-Bayes estimate of the shrinkage weight from a core.

    Maximizes the marginal likelihood over nu in (p+1, 1e8*(n+p)] via a
    256-point scan in log(nu-p-1) followed by golden-section refinement.
    A maximum on the upper boundary is reported as nu_hat = inf, w = 1;
    on the lower boundary as nu_hat = p+1, w = 0.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not is_core(core, dims, tol=1e-4):
        raise ValueError("input does not satisfy the core partial-trace identities")
    p = dims.p
    eigs, _ = sym_eigen(core)
    eigs = np.maximum(eigs, EIG_FLOOR)

    nu_max = NU_MAX_FACTOR * (n + p)
    t_grid = np.linspace(math.log(1e-8), math.log(nu_max - p - 1), SCAN_POINTS)

    def objective(t: float) -> float:
        return log_marginal(p + 1 + math.exp(t), eigs, n, dims)

    values = [objective(t) for t in t_grid]
    best = int(np.argmax(values))
    if best == SCAN_POINTS - 1:
        nu_hat, w_hat, obj = math.inf, 1.0, values[best]
    elif best == 0:
        nu_hat, w_hat, obj = p + 1.0, 0.0, values[best]
    else:
        t_opt, obj = _golden_max(objective, t_grid[best - 1], t_grid[best + 1])
        m = math.exp(t_opt)
        nu_hat = p + 1 + m
        w_hat = 1.0 / (1.0 + n / m)
    return ShrinkageFit(
        nu_hat=nu_hat,
        w_hat=w_hat,
        core_eigs=eigs,
        objective_at_opt=obj,
        n=n,
        dims=dims,
    )


def shrink_combine(s: Covariance, k_hat: SeparableCovariance, w: float) -> Covariance:
    """Convex combination (1-w) S + w K_hat."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {w}")
    if s.dim != k_hat.dims.p:
        raise ValueError(f"dimension mismatch: {s.dim} vs {k_hat.dims.p}")
    return Covariance((1.0 - w) * s.mat + w * k_hat.matrix)


def cse(
    s: Covariance, n: int, dims: Dims, opts: KCDOptions | None = None
) -> tuple[Covariance, ShrinkageFit, SeparableCovariance]:
    """Core shrinkage estimate (1-w) S + w K_hat with empirical-Bayes w.

    Returns (estimate, fit, k_hat).  For singular S the separable fit is
    attempted anyway; FactorSingular propagates when it does not exist.
    """
    opts = opts or KCDOptions()
    result = kcd(s, dims, opts)
    fit = fit_weight(result.core, n, dims)
    return shrink_combine(s, result.k_factor, fit.w_hat), fit, result.k_factor


def oracle_bayes(s: Covariance, n: int, prior: PriorSpec) -> Covariance:
    """Posterior-mean estimate (1-w) S + w k_mean with the true prior weight."""
    p = prior.k_mean.dims.p
    if s.dim != p:
        raise ValueError(f"dimension mismatch: {s.dim} vs {p}")
    w = shrink_weight(prior.nu, n, p)
    return Covariance((1.0 - w) * s.mat + w * prior.k_mean.matrix)
