"""Dense symmetric-positive-definite matrix kernels.

Kronecker algebra under a fixed column-major vec ordering, partial-trace
contractions for matrix-variate covariances, matrix square roots,
Cholesky-based log-determinants, and the Stein-type divergence that
defines the Kronecker covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_factor, cho_solve

EPS_PSD = 1e-10


class NotPositiveDefinite(ValueError):
    """A matrix required to be positive (semi)definite is not."""


class DomainError(ValueError):
    """A scalar parameter lies outside the domain of a function."""


def psd_tolerance(mat: NDArray) -> float:
    """Roundoff tolerance for definiteness checks, relative to the largest entry."""
    return EPS_PSD * float(np.max(np.abs(mat)))


@dataclass(frozen=True)
class Dims:
    """Row and column dimensions of the matrix-variate sample space.

    A p1 x p2 data matrix Y is vectorized column-major: element (i, j) of
    Y sits at position j*p1 + i of vec(Y).  Under this ordering, rows of Y
    covarying as Sigma1 and columns as Sigma2 give
    Var(vec Y) = Sigma2 (x) Sigma1.
    """

    p1: int
    p2: int

    def __post_init__(self):
        if self.p1 < 1 or self.p2 < 1:
            raise ValueError(f"dimensions must be >= 1, got ({self.p1}, {self.p2})")

    @property
    def p(self) -> int:
        return self.p1 * self.p2


@dataclass(frozen=True, eq=False)
class Covariance:
    """A square symmetric positive-semidefinite matrix.

    The input is symmetrized to (M + M^T)/2 on construction and frozen.
    Eigenvalues below the relative roundoff tolerance are rejected, so
    accumulated sample covariances with n < p stay representable while
    indefinite matrices are not.  Strict positive definiteness is checked
    by the operations that need it.
    """

    mat: NDArray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        sym = (mat + mat.T) / 2.0
        smallest = float(np.linalg.eigvalsh(sym)[0])
        if smallest < -psd_tolerance(sym):
            raise NotPositiveDefinite(
                f"eigenvalue {smallest:.3e} is below the roundoff tolerance"
            )
        sym.setflags(write=False)
        object.__setattr__(self, "mat", sym)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __repr__(self) -> str:
        return f"Covariance(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class SeparableCovariance:
    """A separable covariance Sigma2 (x) Sigma1 with strictly PD factors.

    The factor pair is only identified up to (c*Sigma1, Sigma2/c); the
    constructor rescales so that trace(sigma1) = p1, which leaves the
    assembled product unchanged.
    """

    dims: Dims
    sigma1: Covariance
    sigma2: Covariance

    def __post_init__(self):
        if self.sigma1.dim != self.dims.p1 or self.sigma2.dim != self.dims.p2:
            raise ValueError(
                f"factor dims ({self.sigma1.dim}, {self.sigma2.dim}) do not match "
                f"({self.dims.p1}, {self.dims.p2})"
            )
        for factor, name in ((self.sigma1, "sigma1"), (self.sigma2, "sigma2")):
            if np.linalg.eigvalsh(factor.mat)[0] <= psd_tolerance(factor.mat):
                raise NotPositiveDefinite(f"{name} must be strictly positive definite")
        c = self.dims.p1 / float(np.trace(self.sigma1.mat))
        object.__setattr__(self, "sigma1", Covariance(self.sigma1.mat * c))
        object.__setattr__(self, "sigma2", Covariance(self.sigma2.mat / c))

    @property
    def matrix(self) -> NDArray:
        """The assembled p x p product Sigma2 (x) Sigma1."""
        return kron(self.sigma2.mat, self.sigma1.mat)

    def to_covariance(self) -> Covariance:
        return Covariance(self.matrix)

    def __repr__(self) -> str:
        return f"SeparableCovariance(p1={self.dims.p1}, p2={self.dims.p2})"


def kron(a: NDArray, b: NDArray) -> NDArray:
    """Kronecker product with block (i, j) equal to a[i, j] * b."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def _check_vec_dims(sigma: Covariance, dims: Dims) -> None:
    if sigma.dim != dims.p:
        raise ValueError(f"covariance dim {sigma.dim} does not equal p1*p2 = {dims.p}")


def row_gram(sigma: Covariance, dims: Dims, a2: NDArray) -> NDArray:
    """Contract the column indices of a vec-ordered covariance.

    For sigma = Var(vec Y) this realizes E[Y A2 Y^T]:

        M[i, i'] = sum_{j, j'} a2[j, j'] * sigma[j*p1 + i, j'*p1 + i'].

    Parameters
    ----------
    sigma : Covariance of dim p1*p2
    dims : Dims
    a2 : (p2, p2) symmetric weight matrix

    Returns
    -------
    (p1, p1) symmetric ndarray
    """
    _check_vec_dims(sigma, dims)
    a2 = np.asarray(a2, dtype=float)
    if a2.shape != (dims.p2, dims.p2):
        raise ValueError(f"a2 must be ({dims.p2}, {dims.p2}), got {a2.shape}")
    t = sigma.mat.reshape(dims.p2, dims.p1, dims.p2, dims.p1)
    m = np.einsum("ab,aibj->ij", a2, t)
    return (m + m.T) / 2.0


def col_gram(sigma: Covariance, dims: Dims, a1: NDArray) -> NDArray:
    """Contract the row indices of a vec-ordered covariance.

    Mirror of :func:`row_gram`: realizes E[Y^T A1 Y] as

        M[j, j'] = sum_{i, i'} a1[i, i'] * sigma[j*p1 + i, j'*p1 + i'],

    returning a (p2, p2) symmetric ndarray.
    """
    _check_vec_dims(sigma, dims)
    a1 = np.asarray(a1, dtype=float)
    if a1.shape != (dims.p1, dims.p1):
        raise ValueError(f"a1 must be ({dims.p1}, {dims.p1}), got {a1.shape}")
    t = sigma.mat.reshape(dims.p2, dims.p1, dims.p2, dims.p1)
    m = np.einsum("ab,iajb->ij", a1, t)
    return (m + m.T) / 2.0


def sym_sqrt(sigma: Covariance) -> NDArray:
    """Symmetric square root H with H @ H = sigma and positive eigenvalues."""
    w, q = np.linalg.eigh(sigma.mat)
    if w[0] <= psd_tolerance(sigma.mat):
        raise NotPositiveDefinite(
            f"symmetric square root needs a strictly PD input; smallest "
            f"eigenvalue is {w[0]:.3e}"
        )
    h = (q * np.sqrt(w)) @ q.T
    return (h + h.T) / 2.0


def chol_sqrt(sigma: Covariance) -> NDArray:
    """Lower-triangular L with positive diagonal and L @ L^T = sigma."""
    try:
        return np.linalg.cholesky(sigma.mat)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            "Cholesky factorization failed; input is not strictly positive definite"
        ) from None


def log_det(sigma: Covariance) -> float:
    """Log-determinant via Cholesky (twice the sum of log diagonal entries)."""
    return 2.0 * float(np.sum(np.log(np.diag(chol_sqrt(sigma)))))


def divergence(k: Covariance, sigma: Covariance) -> float:
    """Stein-type divergence d(K : Sigma) = ln|K| + trace(K^{-1} Sigma).

    Over all SPD K this is minimized at K = Sigma, where it equals
    ln|Sigma| + p.
    """
    if k.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {k.dim} vs {sigma.dim}")
    try:
        factor = cho_factor(k.mat, lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("divergence needs a strictly PD first argument") from None
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return logdet + float(np.trace(cho_solve(factor, sigma.mat)))


def sym_eigen(sigma: Covariance) -> tuple[NDArray, NDArray]:
    """Eigendecomposition with eigenvalues sorted descending.

    Returns (eigenvalues, eigenvectors) with orthogonal eigenvectors in
    columns, so that Q @ diag(w) @ Q^T reconstructs the input.
    """
    w, q = np.linalg.eigh(sigma.mat)
    return w[::-1].copy(), q[:, ::-1].copy()
