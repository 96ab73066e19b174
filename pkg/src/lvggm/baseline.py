"""Convex sparse plus low-rank baseline solved by three-block ADMM.

Minimizes::

    tr(Sigma Omega) - log|Omega| + lam ||S||_1 + gamma tr(L)
    subject to Omega = S + sign * L,  L >= 0

with a scaled dual variable and fixed penalty ``beta``.  ``sign=+1`` is the
plain sparse-plus-PSD split; ``sign=-1`` is the latent-variable form
``Omega = S - L`` whose ``L`` estimates the marginalized latent effect.
Each iteration costs two dense symmetric eigendecompositions.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .likelihood import logdet_pd
from .metrics import frobenius_error
from .model import CovarianceEstimate, GroundTruth, InputError, NotPositiveDefinite, symmetrize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdmmConfig:
    lam: float
    gamma: float
    beta: float = 1.0
    max_iters: int = 2000
    primal_tol: float = 1e-5
    dual_tol: float = 1e-5
    sign: int = 1

    def __post_init__(self):
        if self.lam <= 0 or self.gamma <= 0 or self.beta <= 0:
            raise InputError("lam, gamma and beta must be positive")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")
        if self.sign not in (1, -1):
            raise InputError("sign must be +1 or -1")


@dataclass(frozen=True)
class AdmmRecord:
    iteration: int
    objective: float
    primal_res: float
    dual_res: float
    err_S: Optional[float] = None
    err_L: Optional[float] = None
    err_Omega: Optional[float] = None
    time_ms: float = 0.0


@dataclass
class AdmmResult:
    S: np.ndarray
    L: np.ndarray
    Omega: np.ndarray
    dual: np.ndarray
    converged: bool
    sign: int = 1
    trace: List[AdmmRecord] = field(default_factory=list)

    @property
    def termination(self):
        return "tolerance" if self.converged else "max_iters"

    def column(self, name):
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.trace])


def logdet_prox(B, Sigma, beta: float) -> np.ndarray:
    """Minimizer of ``tr(Sigma W) - log|W| + beta/2 ||W - B||_F^2``."""
    if beta <= 0:
        raise InputError("beta must be positive")
    g, Q = np.linalg.eigh(symmetrize(B) - np.asarray(Sigma) / beta)
    w = (g + np.sqrt(g * g + 4.0 / beta)) / 2.0
    return symmetrize((Q * w) @ Q.T)


def soft_threshold(M, kappa: float) -> np.ndarray:
    if kappa < 0:
        raise InputError("kappa must be nonnegative")
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - kappa, 0.0)


def psd_eigen_shrink(M, kappa: float) -> np.ndarray:
    """Proximal map of ``kappa tr(L)`` restricted to the PSD cone."""
    if kappa < 0:
        raise InputError("kappa must be nonnegative")
    lam, Q = np.linalg.eigh(symmetrize(M))
    lam = np.maximum(lam - kappa, 0.0)
    return symmetrize((Q * lam) @ Q.T)


def penalized_objective(Sigma, Omega, S, L, lam, gamma) -> float:
    Sigma = Sigma.matrix if isinstance(Sigma, CovarianceEstimate) else np.asarray(Sigma)
    return (
        float(np.sum(Sigma * Omega))
        - logdet_pd(Omega)
        + lam * float(np.abs(S).sum())
        + gamma * float(np.trace(L))
    )


def _split_objective(Sigma, split, S, L, cfg):
    try:
        return penalized_objective(Sigma, split, S, L, cfg.lam, cfg.gamma)
    except NotPositiveDefinite:
        return np.inf


def admm_fit(cov, cfg: AdmmConfig, truth: Optional[GroundTruth] = None) -> AdmmResult:
    """Run ADMM from ``S = I, L = 0``.

    Stops when the primal residual ``||Omega - S - sign L||_F`` and the
    dual residual ``beta ||(S + sign L) - (S_prev + sign L_prev)||_F`` are
    both below tolerance.  Reaching ``max_iters`` returns the iterate with
    the smallest primal residual and ``converged=False``.  At a solution
    the scaled dual ``U`` satisfies ``Sigma - Omega^{-1} + beta U = 0``.
    The recorded objective is evaluated at the feasible point
    ``S + sign L`` (``inf`` while that point is not positive definite).
    """
    Sigma = cov.matrix if isinstance(cov, CovarianceEstimate) else symmetrize(cov)
    d = Sigma.shape[0]
    beta, sg = cfg.beta, cfg.sign
    S = np.eye(d)
    L = np.zeros((d, d))
    U = np.zeros((d, d))
    result = AdmmResult(S, L, np.eye(d), U, False, sg)
    best, best_primal = (S, L, np.eye(d), U), np.inf
    timed_ms = 0.0
    for k in range(1, cfg.max_iters + 1):
        start = time.perf_counter()
        Omega = logdet_prox(S + sg * L - U, Sigma, beta)
        prev = S + sg * L
        S = soft_threshold(Omega - sg * L + U, cfg.lam / beta)
        S = symmetrize(S)
        L = psd_eigen_shrink(sg * (Omega - S + U), cfg.gamma / beta)
        split = S + sg * L
        U = U + Omega - split
        primal = float(np.linalg.norm(Omega - split))
        dual = beta * float(np.linalg.norm(split - prev))
        timed_ms += (time.perf_counter() - start) * 1e3
        obj = _split_objective(Sigma, split, S, L, cfg)
        rec = AdmmRecord(k, obj, primal, dual, time_ms=timed_ms)
        if truth is not None:
            L_cmp = sg * L
            rec = AdmmRecord(
                k, obj, primal, dual,
                err_S=frobenius_error(S, truth.S_star),
                err_L=frobenius_error(L_cmp, truth.L_star),
                err_Omega=frobenius_error(S + L_cmp, truth.Omega_star),
                time_ms=timed_ms,
            )
        result.trace.append(rec)
        if primal < cfg.primal_tol and dual < cfg.dual_tol:
            result.converged = True
            break
        if primal < best_primal:
            best_primal = primal
            best = (S, L, Omega, U)
    if result.converged:
        result.S, result.L, result.Omega, result.dual = S, L, Omega, U
    else:
        result.S, result.L, result.Omega, result.dual = best
        log.info("admm hit max_iters=%d without meeting tolerance", cfg.max_iters)
    return result
