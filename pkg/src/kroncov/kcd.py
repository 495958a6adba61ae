"""Kronecker-core decomposition of positive-definite matrices.

The Kronecker covariance k(Sigma) is the separable matrix closest to
Sigma in the divergence d(K:Sigma); the core c(Sigma) is what remains
after whitening Sigma by a separable square root of k(Sigma).  Together
they give the unique factorization Sigma = H C H^T with H H^T = K.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve

from .linalg import (
    Covariance,
    Dims,
    SeparableCovariance,
    chol_sqrt,
    col_gram,
    divergence,
    kron,
    row_gram,
    sym_sqrt,
)


class FactorSingular(ValueError):
    """A flip-flop iterate lost positive definiteness and cannot be inverted."""


class SqrtKind(enum.Enum):
    """Separable square-root family used to whiten the Kronecker covariance."""

    SYMMETRIC = "symmetric"
    CHOLESKY = "cholesky"


@dataclass(frozen=True)
class KCDOptions:
    """Controls for the alternating factor iteration.

    tol is the relative Frobenius change of the assembled product between
    sweeps below which the iteration stops; sqrt_kind selects the
    separable square-root family for core extraction.
    """

    tol: float = 1e-10
    max_iter: int = 1000
    sqrt_kind: SqrtKind = SqrtKind.SYMMETRIC

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class KCDResult:
    """Full decomposition Sigma = H C H^T.

    k_factor holds the separable part K = Sigma2 (x) Sigma1, core the
    whitened residual C, and h the separable square root with
    h @ h^T = K.  divergence_value is d(K : Sigma).
    """

    k_factor: SeparableCovariance
    core: Covariance
    h: NDArray
    iterations: int
    converged: bool
    divergence_value: float


def _inv_spd(mat: NDArray) -> NDArray:
    try:
        factor = cho_factor(mat, lower=True)
    except np.linalg.LinAlgError:
        raise FactorSingular(
            "factor iterate is not positive definite; the separable fit does "
            "not exist for this input"
        ) from None
    return cho_solve(factor, np.eye(mat.shape[0]))


def _flip_flop(
    sigma: Covariance, dims: Dims, opts: KCDOptions
) -> tuple[NDArray, NDArray, int, bool]:
    """Alternate the two factor updates from the identity start.

    Returns un-normalized (sigma1, sigma2, iterations, converged).  The
    input may be singular; FactorSingular is raised only when an iterate
    itself cannot be inverted.
    """
    p1, p2 = dims.p1, dims.p2
    s1 = np.eye(p1)
    s2 = np.eye(p2)
    k_prev = None
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        s1 = row_gram(sigma, dims, _inv_spd(s2)) / p2
        s2 = col_gram(sigma, dims, _inv_spd(s1)) / p1
        k_mat = kron(s2, s1)
        if k_prev is not None:
            delta = np.linalg.norm(k_mat - k_prev) / np.linalg.norm(k_prev)
            if delta < opts.tol:
                converged = True
                break
        k_prev = k_mat
    return s1, s2, iterations, converged


def kronecker_cov(
    sigma: Covariance, dims: Dims, opts: KCDOptions | None = None
) -> SeparableCovariance:
    """Closest separable covariance to sigma in the divergence d(K:Sigma).

    Block coordinate descent on the two factors, started at the identity
    column factor, stopping when the assembled product is stable.  Use
    :func:`kcd` when the iteration count or convergence flag is needed.
    """
    opts = opts or KCDOptions()
    s1, s2, _, _ = _flip_flop(sigma, dims, opts)
    return SeparableCovariance(dims, Covariance(s1), Covariance(s2))


def separable_sqrt(k_factor: SeparableCovariance, kind: SqrtKind) -> NDArray:
    """h(K) = h(Sigma2) (x) h(Sigma1) for the chosen square-root family."""
    root = sym_sqrt if kind is SqrtKind.SYMMETRIC else chol_sqrt
    return kron(root(k_factor.sigma2), root(k_factor.sigma1))


def kcd(sigma: Covariance, dims: Dims, opts: KCDOptions | None = None) -> KCDResult:
    """Decompose sigma into its Kronecker covariance and core.

    The core is C = H^{-1} sigma H^{-T} with H = h(k(sigma)); the inverse
    map h(K) C h(K)^T reproduces sigma.
    """
    opts = opts or KCDOptions()
    s1, s2, iterations, converged = _flip_flop(sigma, dims, opts)
    k_factor = SeparableCovariance(dims, Covariance(s1), Covariance(s2))
    h = separable_sqrt(k_factor, opts.sqrt_kind)
    half = np.linalg.solve(h, sigma.mat)
    c = np.linalg.solve(h, half.T).T
    return KCDResult(
        k_factor=k_factor,
        core=Covariance(c),
        h=h,
        iterations=iterations,
        converged=converged,
        divergence_value=divergence(k_factor.to_covariance(), sigma),
    )


def core_cov(sigma: Covariance, dims: Dims, opts: KCDOptions | None = None) -> Covariance:
    """The core of sigma: whitened by a separable square root of k(sigma)."""
    return kcd(sigma, dims, opts).core


def is_core(c: Covariance, dims: Dims, tol: float) -> bool:
    """Check the partial-trace identities defining a core covariance.

    True iff the across-column average of across-row covariance and its
    transpose counterpart are both the identity within tol in max-norm.
    """
    m1 = row_gram(c, dims, np.eye(dims.p2)) / dims.p2
    m2 = col_gram(c, dims, np.eye(dims.p1)) / dims.p1
    return bool(
        np.max(np.abs(m1 - np.eye(dims.p1))) <= tol
        and np.max(np.abs(m2 - np.eye(dims.p2))) <= tol
    )
