"""Alternating thresholded gradient descent (AltGD) and its step-size policy."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import likelihood
from .metrics import frobenius_error
from .model import (
    Decomposition,
    FitConfig,
    FitTrace,
    GroundTruth,
    InputError,
    NotPositiveDefinite,
    StepFailure,
    TraceRecord,
    assemble_precision,
    cholesky_or_none,
)
from .thresholding import hard_threshold_sym

log = logging.getLogger(__name__)

MAX_HALVINGS = 30
STALL_PATIENCE = 3


@dataclass(frozen=True)
class StepSizePolicy:
    """Inputs of the two step-size rules.

    ``theory``: ``eta = c1 / (sigma_max nu^2)`` and
    ``eta' = c1 sigma_min / (sigma_max nu^4)``.
    ``simple``: ``eta = 0.1 / nu^2`` and ``eta' = 0.1 / nu^4``.
    """

    nu: float
    sigma_max: float = 1.0
    sigma_min: float = 1.0
    c1: float = 0.25
    mode: str = "theory"

    def __post_init__(self):
        if self.mode not in ("theory", "simple"):
            raise InputError(f"unknown step-size mode {self.mode!r}")
        if self.nu <= 0 or self.sigma_max <= 0 or self.sigma_min <= 0 or self.c1 <= 0:
            raise InputError("step-size constants must be positive")
        if self.sigma_min > self.sigma_max:
            raise InputError("sigma_min exceeds sigma_max")


def step_sizes(policy: StepSizePolicy):
    nu = policy.nu
    if policy.mode == "simple":
        return 0.1 / nu**2, 0.1 / nu**4
    eta = policy.c1 / (policy.sigma_max * nu**2)
    eta_prime = policy.c1 * policy.sigma_min / (policy.sigma_max * nu**4)
    return eta, eta_prime


@dataclass
class FitResult:
    decomposition: Decomposition
    trace: FitTrace
    termination: str
    eta: float
    eta_prime: float

    @property
    def Omega(self):
        return assemble_precision(self.decomposition)


def _propose(cov, dec, cfg, eta, eta_prime, G, GZ):
    S_next = hard_threshold_sym(dec.S - eta * G, cfg.s, cfg.keep_diagonal)
    if cfg.gauss_seidel:
        # Z gradient at the freshly thresholded S; comparison variant only
        try:
            GZ = likelihood.grad_z(cov, Decomposition(S_next, dec.Z, dec.sign))
        except NotPositiveDefinite:
            return None
    Z_next = dec.Z - eta_prime * GZ
    return Decomposition(S_next, Z_next, dec.sign)


def _step(cov, dec, cfg, chol=None):
    try:
        G, GZ = likelihood.gradients(cov, dec, chol)
    except NotPositiveDefinite as exc:
        raise StepFailure("current iterate is not positive definite") from exc
    eta, eta_prime = cfg.eta, cfg.eta_prime
    for _ in range(MAX_HALVINGS + 1):
        nxt = _propose(cov, dec, cfg, eta, eta_prime, G, GZ)
        if nxt is not None:
            Omega = assemble_precision(nxt)
            c = cholesky_or_none(Omega)
            if c is not None:
                return nxt, Omega, c
        if not cfg.backtrack:
            break
        eta, eta_prime = eta / 2.0, eta_prime / 2.0
    raise StepFailure(f"step left the positive definite cone (eta={eta:.3g}, eta'={eta_prime:.3g})")


def altgd_step(cov, dec: Decomposition, cfg: FitConfig) -> Decomposition:
    """One simultaneous update of ``(S, Z)``.

    Both gradients are taken at the current ``(S, Z)``; ``S`` is then hard
    thresholded to ``cfg.s`` entries.  With ``cfg.backtrack`` both step
    sizes are halved (up to 30 times) until the new precision matrix is
    positive definite.

    Raises
    ------
    StepFailure
        If no admissible step is found.
    """
    return _step(cov, dec, cfg)[0]


def _record(t, obj, dec, truth, elapsed_ms):
    if truth is None:
        return TraceRecord(t, obj, time_ms=elapsed_ms)
    L = dec.L
    return TraceRecord(
        t,
        obj,
        err_S=frobenius_error(dec.S, truth.S_star),
        err_L=frobenius_error(L, truth.L_star),
        err_Omega=frobenius_error(dec.S + L, truth.Omega_star),
        time_ms=elapsed_ms,
    )


def fit(cov, init: Decomposition, cfg: FitConfig, truth: Optional[GroundTruth] = None) -> FitResult:
    """Run AltGD from ``init`` for at most ``cfg.T`` iterations.

    The trace holds one record per iterate, starting with ``init``.  The
    loop stops early once the relative objective change stays below
    ``cfg.tol`` for three consecutive iterations, or when an iterate is an
    exact fixed point (``"stalled"``).  Truth-relative errors are recorded
    only when ``truth`` is given; computing them is excluded from the
    reported time.
    """
    if init.sign != cfg.sign:
        raise InputError("initial decomposition sign differs from the config sign")
    cfg.check_dimension(init.d)
    trace = FitTrace()
    dec = init
    Omega = assemble_precision(dec)
    chol = cholesky_or_none(Omega)
    if chol is None:
        raise InputError("initial decomposition is not positive definite")
    obj = likelihood.objective_from_factor(cov, Omega, chol)

    timed_ms = 0.0
    trace.append(_record(0, obj, dec, truth, timed_ms))
    termination = "max_iters"
    quiet = 0
    for t in range(1, cfg.T + 1):
        start = time.perf_counter()
        try:
            nxt, Omega, chol = _step(cov, dec, cfg, chol)
        except StepFailure as exc:
            exc.trace = trace
            raise
        new_obj = likelihood.objective_from_factor(cov, Omega, chol)
        timed_ms += (time.perf_counter() - start) * 1e3
        fixed = np.array_equal(nxt.S, dec.S) and np.array_equal(nxt.Z, dec.Z)
        dec = nxt
        trace.append(_record(t, new_obj, dec, truth, timed_ms))
        change = abs(new_obj - obj) / max(abs(obj), 1e-12)
        obj = new_obj
        quiet = quiet + 1 if change < cfg.tol else 0
        if quiet >= STALL_PATIENCE:
            termination = "tolerance"
            break
        if fixed:
            termination = "stalled"
            break
    log.debug("altgd stopped after %d iterations (%s)", len(trace) - 1, termination)
    return FitResult(dec, trace, termination, cfg.eta, cfg.eta_prime)
