"""Spectral initialization from the inverted sample covariance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CovarianceEstimate, CovarianceSingular, Decomposition, InputError, symmetrize
from .optimizer import StepSizePolicy
from .thresholding import hard_threshold_sym

MAX_CONDITION = 1e12
SCALE_FLOOR = 1e-6


@dataclass(frozen=True)
class Initialization:
    decomposition: Decomposition
    eigenvalues: np.ndarray  # top-r signed eigenvalues of the residual, before clamping


def _cov_matrix(cov):
    return cov.matrix if isinstance(cov, CovarianceEstimate) else symmetrize(cov)


def spectral_init(cov, s: int, r: int, sign: int = 1, ridge: float = 0.0) -> Initialization:
    """Threshold ``W = (Sigma + ridge I)^{-1}`` and factor the residual.

    ``S0`` keeps the ``s`` largest magnitudes of ``W``.  The residual
    ``sign * (W - S0)`` is eigendecomposed and its ``r`` largest (signed)
    eigenvalues, clamped at zero, give ``Z0 = U_r diag(sqrt(lambda))``.
    """
    if ridge < 0:
        raise InputError("ridge must be nonnegative")
    Sigma = _cov_matrix(cov)
    d = Sigma.shape[0]
    if not 1 <= r <= d:
        raise InputError(f"need 1 <= r <= d, got r={r}")
    A = Sigma + ridge * np.eye(d)
    w, V = np.linalg.eigh(A)
    if w[0] <= 0 or w[-1] / w[0] > MAX_CONDITION:
        raise CovarianceSingular(
            f"sample covariance is singular or ill-conditioned (eigenvalues {w[0]:.3g}..{w[-1]:.3g}); "
            "supply ridge > 0 or more samples"
        )
    W = symmetrize((V / w) @ V.T)
    S0 = hard_threshold_sym(W, s, keep_diagonal=False)
    lam, U = np.linalg.eigh(sign * (W - S0))
    top = lam[::-1][:r]
    Ur = U[:, ::-1][:, :r]
    Z0 = Ur * np.sqrt(np.clip(top, 0.0, None))
    return Initialization(Decomposition(S0, Z0, sign), top.copy())


def initialize(cov, s: int, r: int, sign: int = 1, ridge: float = 0.0) -> Decomposition:
    return spectral_init(cov, s, r, sign, ridge).decomposition


def estimate_scales(cov, init_residual_eigenvalues, c1: float = 0.25, mode: str = "theory") -> StepSizePolicy:
    """Plug-in constants for the step-size rules.

    ``nu = max(1, lambda_max(Sigma))``; ``sigma_max`` and ``sigma_min`` are
    the first and last of the residual eigenvalues, floored at 1e-6.
    """
    Sigma = _cov_matrix(cov)
    eigs = np.atleast_1d(np.asarray(init_residual_eigenvalues, dtype=float))
    nu = max(1.0, float(np.linalg.eigvalsh(Sigma)[-1]))
    sigma_max = max(float(eigs[0]), SCALE_FLOOR)
    sigma_min = min(max(float(eigs[-1]), SCALE_FLOOR), sigma_max)
    return StepSizePolicy(nu=nu, sigma_max=sigma_max, sigma_min=sigma_min, c1=c1, mode=mode)
