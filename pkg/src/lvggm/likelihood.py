"""Gaussian negative log-likelihood in the (S, Z) parameterization."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .model import (
    CovarianceEstimate,
    Dataset,
    Decomposition,
    NotPositiveDefinite,
    assemble_precision,
    cholesky_or_none,
    symmetrize,
)


def sample_covariance(data: Dataset, center: bool = False) -> CovarianceEstimate:
    """Return ``X^T X / n``.

    The model is zero-mean, so no centering happens unless ``center`` is set
    (useful for real data).
    """
    if not isinstance(data, Dataset):
        data = Dataset(data)
    X = data.samples
    if center:
        X = X - X.mean(axis=0)
    return CovarianceEstimate(X.T @ X / data.n)


def _as_cov(cov):
    if isinstance(cov, CovarianceEstimate):
        return cov.matrix
    return symmetrize(cov)


def _chol(Omega):
    c = cholesky_or_none(Omega)
    if c is None:
        raise NotPositiveDefinite("precision matrix is not positive definite")
    return c


def logdet_pd(Omega) -> float:
    """``log|Omega|`` from the Cholesky diagonal; raises if not PD."""
    c = _chol(Omega)
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def _inverse_from_factor(chol):
    inv, info = scipy.linalg.lapack.dpotri(chol, lower=1)
    if info != 0:
        raise NotPositiveDefinite(f"potri failed with info={info}")
    # potri fills only the lower triangle; the upper one keeps the zeros of chol
    return inv + np.tril(inv, -1).T


def precision_inverse(Omega) -> np.ndarray:
    return _inverse_from_factor(np.tril(_chol(Omega)))


def objective_precision(Sigma, Omega) -> float:
    """``tr(Sigma Omega) - log|Omega|`` for an explicit precision matrix."""
    Sigma = _as_cov(Sigma)
    return float(np.sum(Sigma * Omega)) - logdet_pd(Omega)


def objective(cov, dec: Decomposition) -> float:
    return objective_precision(cov, assemble_precision(dec))


def gradients(cov, dec: Decomposition, chol=None):
    """Both partial gradients sharing one Cholesky solve.

    Returns ``(grad_S, grad_Z)`` where ``grad_S = Sigma - Omega^{-1}`` and
    ``grad_Z = 2 sign (Sigma - Omega^{-1}) Z``.  ``chol`` may pass in a
    lower Cholesky factor of the assembled precision matrix.
    """
    if chol is None:
        chol = _chol(assemble_precision(dec))
    G = _as_cov(cov) - _inverse_from_factor(chol)
    return G, 2.0 * dec.sign * (G @ dec.Z)


def objective_from_factor(cov, Omega, chol) -> float:
    return float(np.sum(_as_cov(cov) * Omega)) - 2.0 * float(np.sum(np.log(np.diag(chol))))


def grad_s(cov, dec: Decomposition) -> np.ndarray:
    return gradients(cov, dec)[0]


def grad_z(cov, dec: Decomposition) -> np.ndarray:
    return gradients(cov, dec)[1]
