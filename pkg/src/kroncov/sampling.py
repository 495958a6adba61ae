"""Seedable samplers for matrix-normal data and (inverse-)Wishart draws.

All draws come from the counter-based Philox generator keyed by
(seed, stream id), so the same seed given to different samplers, or
different seeds given to the same sampler, never share state.  Seeds for
nested work (replicates, per-class data) are derived with SplitMix64
over an integer id path via :func:`derive_seed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .linalg import Covariance, Dims, DomainError, SeparableCovariance, chol_sqrt, kron, sym_sqrt

_MASK64 = (1 << 64) - 1

# Fixed per-sampler stream ids (domain separation under a shared seed).
_STREAM_MATRIX_NORMAL = 1
_STREAM_WISHART = 2
_STREAM_PRIOR = 3
_STREAM_FIXTURE = 4


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *ids: int) -> int:
    """Derive an independent 64-bit seed from a base seed and an id path.

    Folds each id into the state with one SplitMix64 step, so distinct id
    paths give unrelated streams while remaining a pure function of
    (seed, ids).
    """
    x = seed & _MASK64
    for i in ids:
        x = _splitmix64((x ^ (i & _MASK64)) & _MASK64)
    return x


def _generator(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ScenarioPrior:
    """Hyperparameters of a separable inverse-Wishart scenario.

    nu = math.inf marks the exactly separable scenario where Sigma is the
    prior mean itself rather than a draw around it.
    """

    dims: Dims
    nu: float
    sigma1: Covariance
    sigma2: Covariance

    def __post_init__(self):
        if self.sigma1.dim != self.dims.p1 or self.sigma2.dim != self.dims.p2:
            raise ValueError("prior factor dimensions do not match dims")
        if not math.isinf(self.nu) and self.nu <= self.dims.p + 1:
            raise ValueError(f"nu must exceed p+1 = {self.dims.p + 1} or be inf, got {self.nu}")

    @property
    def k_mean(self) -> SeparableCovariance:
        return SeparableCovariance(self.dims, self.sigma1, self.sigma2)


def sample_matrix_normal(sigma: Covariance, dims: Dims, n: int, seed: int) -> NDArray:
    """Draw n vectorized p1 x p2 matrix-normal samples as an (n, p) array.

    Each row is Sigma^{1/2} z for a standard normal z, with the symmetric
    square root; the output is a pure function of (sigma, n, seed).
    """
    if sigma.dim != dims.p:
        raise ValueError(f"covariance dim {sigma.dim} does not equal p1*p2 = {dims.p}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    h = sym_sqrt(sigma)
    z = _generator(seed, _STREAM_MATRIX_NORMAL).standard_normal((n, sigma.dim))
    return z @ h


def sample_wishart(scale: Covariance, df: float, seed: int) -> Covariance:
    """Wishart(scale, df) draw via the Bartlett construction, E[W] = df * scale."""
    d = scale.dim
    if df <= d - 1:
        raise DomainError(f"Wishart needs df > dim-1 = {d - 1}, got {df}")
    rng = _generator(seed, _STREAM_WISHART)
    a = np.tril(rng.standard_normal((d, d)), -1)
    a[np.diag_indices(d)] = np.sqrt(rng.chisquare(df - np.arange(d)))
    factor = chol_sqrt(scale) @ a
    return Covariance(factor @ factor.T)


def sample_prior_sigma(prior: ScenarioPrior, seed: int) -> Covariance:
    """Draw Sigma with E[Sigma] = Sigma2 (x) Sigma1 from the inverse-Wishart prior.

    The precision is Wishart with scale [(nu-p-1) K0]^{-1} and df nu, so
    the mean of Sigma is exactly the separable K0.  nu = inf returns K0
    itself.
    """
    k0 = prior.k_mean
    if math.isinf(prior.nu):
        return k0.to_covariance()
    p = prior.dims.p
    k0_inv = kron(np.linalg.inv(k0.sigma2.mat), np.linalg.inv(k0.sigma1.mat))
    scale = Covariance(k0_inv / (prior.nu - p - 1.0))
    precision = sample_wishart(scale, prior.nu, derive_seed(seed, _STREAM_PRIOR))
    return Covariance(np.linalg.inv(precision.mat))


def random_spd(dim: int, seed: int) -> Covariance:
    """Random SPD test fixture with eigenvalues bounded away from zero."""
    g = _generator(seed, _STREAM_FIXTURE).standard_normal((dim, dim))
    return Covariance(g @ g.T / dim + 0.5 * np.eye(dim))


def random_separable(dims: Dims, seed: int) -> SeparableCovariance:
    """Random separable fixture from two independent SPD factors."""
    return SeparableCovariance(
        dims,
        random_spd(dims.p1, derive_seed(seed, 1)),
        random_spd(dims.p2, derive_seed(seed, 2)),
    )
