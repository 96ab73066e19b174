"""End-to-end estimation: covariance, spectral start, AltGD or ADMM, metrics."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .baseline import AdmmConfig, AdmmResult, admm_fit
from .initialization import estimate_scales, spectral_init
from .likelihood import sample_covariance
from .metrics import frobenius_error, procrustes_distance, spikiness, support_metrics
from .model import CovarianceEstimate, Dataset, FitConfig, GroundTruth, InputError
from .optimizer import FitResult, fit, step_sizes


@dataclass
class AltgdRun:
    result: FitResult
    init_ms: float
    fit_ms: float

    @property
    def S(self):
        return self.result.decomposition.S

    @property
    def Z(self):
        return self.result.decomposition.Z

    @property
    def L(self):
        return self.result.decomposition.L


def _cov(data, center=False):
    if isinstance(data, CovarianceEstimate):
        return data
    return sample_covariance(data if isinstance(data, Dataset) else Dataset(data), center=center)


def budget_from_c2(c2: float, s_star: int) -> int:
    """Sparsity budget ``ceil(c2 * s*)``; ``c2`` must be at least 1."""
    if c2 < 1:
        raise InputError(f"c2 must be >= 1, got {c2}")
    return int(math.ceil(c2 * s_star - 1e-9))


def run_altgd(
    data,
    s: int,
    r: int,
    sign: int = 1,
    T: int = 200,
    tol: float = 1e-7,
    step_mode: str = "theory",
    c1: float = 0.25,
    ridge: float = 0.0,
    keep_diagonal: bool = False,
    center: bool = False,
    truth: Optional[GroundTruth] = None,
) -> AltgdRun:
    """Spectral initialization followed by AltGD with plug-in step sizes."""
    cov = _cov(data, center)
    t0 = time.perf_counter()
    init = spectral_init(cov, s, r, sign=sign, ridge=ridge)
    policy = estimate_scales(cov, init.eigenvalues, c1=c1, mode=step_mode)
    init_ms = (time.perf_counter() - t0) * 1e3
    eta, eta_prime = step_sizes(policy)
    cfg = FitConfig(
        s=s, r=r, eta=eta, eta_prime=eta_prime, T=T, sign=sign,
        keep_diagonal=keep_diagonal, tol=tol,
    )
    result = fit(cov, init.decomposition, cfg, truth=truth)
    return AltgdRun(result, init_ms, result.trace[-1].time_ms)


def default_admm_weights(d: int, n: int):
    """``lam = sqrt(log d / n)`` and ``gamma = sqrt(d / n)``."""
    return math.sqrt(math.log(d) / n), math.sqrt(d / n)


def run_admm(data, cfg: AdmmConfig, center: bool = False, truth: Optional[GroundTruth] = None) -> AdmmResult:
    return admm_fit(_cov(data, center), cfg, truth=truth)


def evaluate(S_hat, L_hat, S_star, L_star, Z_hat=None, Z_star=None, time_ms=None) -> dict:
    """Metrics of an estimate against a truth, keyed as in the eval JSON.

    ``L_hat`` and ``L_star`` are the signed low-rank terms, so that
    ``Omega = S + L`` for both.
    """
    out = {
        "err_s": frobenius_error(S_hat, S_star),
        "err_l": frobenius_error(L_hat, L_star),
        "err_omega": frobenius_error(np.asarray(S_hat) + L_hat, np.asarray(S_star) + L_star),
    }
    if Z_hat is not None and Z_star is not None:
        Z_hat = np.atleast_2d(Z_hat)
        Z_star = np.atleast_2d(Z_star)
        if Z_hat.shape == Z_star.shape:
            out["dist_z"] = procrustes_distance(Z_hat, Z_star)
    precision, recall, f1 = support_metrics(S_hat, S_star)
    out.update(precision=precision, recall=recall, f1=f1)
    try:
        out["spikiness"] = spikiness(L_hat)
    except InputError:
        out["spikiness"] = None
    out["time_ms"] = time_ms
    return out
