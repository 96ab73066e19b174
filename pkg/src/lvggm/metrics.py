"""Error metrics for sparse plus low-rank estimates."""
from __future__ import annotations

import numpy as np

from .model import InputError


def _same_shape(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise InputError(f"shape mismatch: {A.shape} vs {B.shape}")
    return A, B


def frobenius_error(A, B) -> float:
    A, B = _same_shape(A, B)
    return float(np.linalg.norm(A - B))


def procrustes_rotation(Z, Z_star) -> np.ndarray:
    """Orthogonal ``U`` minimizing ``||Z - Z_star U||_F`` (polar factor of ``Z_star^T Z``)."""
    Z, Z_star = _same_shape(Z, Z_star)
    a, _, bt = np.linalg.svd(Z_star.T @ Z)
    return a @ bt


def procrustes_distance(Z, Z_star, return_rotation: bool = False):
    """Rotation-invariant factor distance ``min_U ||Z - Z_star U||_F``.

    Uses ``||Z||^2 + ||Z*||^2 - 2 ||Z*^T Z||_*`` so no explicit minimization
    is needed.
    """
    Z, Z_star = _same_shape(Z, Z_star)
    if Z.ndim == 1:
        Z, Z_star = Z[:, None], Z_star[:, None]
    nuc = np.linalg.svd(Z_star.T @ Z, compute_uv=False).sum()
    sq = np.sum(Z * Z) + np.sum(Z_star * Z_star) - 2.0 * nuc
    dist = float(np.sqrt(max(sq, 0.0)))
    if return_rotation:
        return dist, procrustes_rotation(Z, Z_star)
    return dist


def spikiness(L) -> float:
    """``d * max|L_ij| / ||L||_F``; ranges from 1 (flat) to d (one spike)."""
    L = np.asarray(L, dtype=float)
    fro = np.linalg.norm(L)
    if fro == 0:
        raise InputError("spikiness of the zero matrix is undefined")
    return float(L.shape[0] * np.max(np.abs(L)) / fro)


def support_metrics(S_hat, S_star, tol=None):
    """Precision, recall and F1 of the off-diagonal edge set.

    ``tol`` defaults to ``1e-6 * max|S_star|``.  Empty sets count as a
    perfect match of nothing: two edgeless matrices score (1, 1, 1).
    """
    S_hat, S_star = _same_shape(S_hat, S_star)
    if tol is None:
        tol = 1e-6 * float(np.max(np.abs(S_star))) if S_star.size else 0.0
    iu = np.triu_indices(S_star.shape[0], k=1)
    est = np.abs(S_hat[iu]) > tol
    true = np.abs(S_star[iu]) > tol
    tp = int(np.sum(est & true))
    n_est, n_true = int(est.sum()), int(true.sum())
    precision = tp / n_est if n_est else float(n_true == 0)
    recall = tp / n_true if n_true else float(n_est == 0)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1
