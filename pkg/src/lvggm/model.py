"""Core domain types for sparse plus low-rank precision estimation.

Every symmetric matrix is stored dense and re-symmetrized after updates.
The precision matrix is represented as ``Omega = S + sign * Z @ Z.T``; the
explicit ``sign`` reconciles the negative semidefinite latent term of a
latent-variable model with a positive semidefinite factorization.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg


class InputError(ValueError):
    """Invalid argument or malformed input data."""


class NotPositiveDefinite(ArithmeticError):
    """The assembled precision matrix left the positive definite cone."""


class BudgetTooSmall(InputError):
    """Sparsity budget cannot cover the mandatory diagonal."""


class CovarianceSingular(ArithmeticError):
    """Sample covariance cannot be inverted without a ridge."""


class StepFailure(ArithmeticError):
    """An AltGD step produced a non positive definite iterate.

    ``trace`` carries the records collected before the failure, when the
    error is raised from inside a fit loop.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return (M + M.T) / 2.0


def _check_sign(sign):
    if sign not in (1, -1):
        raise InputError(f"sign must be +1 or -1, got {sign!r}")
    return int(sign)


@dataclass(frozen=True)
class Dataset:
    samples: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=float)
        if X.ndim != 2:
            raise InputError("samples must be a 2-d array")
        if X.shape[0] < 2 or X.shape[1] < 2:
            raise InputError(f"need n >= 2 and d >= 2, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InputError("samples contain non-finite entries")
        object.__setattr__(self, "samples", X)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise InputError(f"covariance must be square, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise InputError("covariance contains non-finite entries")
        M = symmetrize(M)
        if np.any(np.diag(M) < 0):
            raise InputError("covariance has a negative diagonal entry")
        object.__setattr__(self, "matrix", M)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Decomposition:
    """Estimator state ``(S, Z, sign)`` with ``Omega = S + sign * Z Z^T``."""

    S: np.ndarray
    Z: np.ndarray
    sign: int = 1

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise InputError(f"S must be square, got {S.shape}")
        if Z.ndim != 2 or Z.shape[0] != S.shape[0]:
            raise InputError(f"Z must be d x r with d={S.shape[0]}, got {Z.shape}")
        if not 1 <= Z.shape[1] <= S.shape[0]:
            raise InputError(f"rank must satisfy 1 <= r <= d, got r={Z.shape[1]}")
        object.__setattr__(self, "S", symmetrize(S))
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "sign", _check_sign(self.sign))

    @property
    def d(self) -> int:
        return self.S.shape[0]

    @property
    def r(self) -> int:
        return self.Z.shape[1]

    @property
    def L(self) -> np.ndarray:
        return symmetrize(self.sign * (self.Z @ self.Z.T))

    @property
    def Omega(self) -> np.ndarray:
        return assemble_precision(self)


@dataclass(frozen=True)
class GroundTruth:
    S_star: np.ndarray
    L_star: np.ndarray
    Omega_star: np.ndarray
    r: int
    sign: int
    Z_star: Optional[np.ndarray] = None
    s_star: int = field(init=False)

    def __post_init__(self):
        S = symmetrize(self.S_star)
        L = symmetrize(self.L_star)
        Om = symmetrize(self.Omega_star)
        if np.max(np.abs(S + L - Om)) > 1e-10 * max(1.0, np.max(np.abs(Om))):
            raise InputError("Omega_star must equal S_star + L_star")
        if not is_positive_definite(Om):
            raise InputError("Omega_star is not positive definite")
        object.__setattr__(self, "S_star", S)
        object.__setattr__(self, "L_star", L)
        object.__setattr__(self, "Omega_star", Om)
        object.__setattr__(self, "sign", _check_sign(self.sign))
        if self.Z_star is not None:
            Z = np.asarray(self.Z_star, dtype=float)
            object.__setattr__(self, "Z_star", Z.reshape(Z.shape[0], -1))
        object.__setattr__(self, "s_star", int(np.count_nonzero(S)))

    @property
    def d(self) -> int:
        return self.S_star.shape[0]

    def decomposition(self) -> Decomposition:
        if self.Z_star is None:
            raise InputError("ground truth carries no factor Z_star")
        return Decomposition(self.S_star, self.Z_star, self.sign)


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of the alternating thresholded gradient descent.

    ``s`` counts nonzeros over the full matrix (both triangles).  ``tol``
    is the relative objective change that, sustained for three iterations,
    stops the loop; ``tol=0`` runs exactly ``T`` iterations.
    """

    s: int
    r: int
    eta: float
    eta_prime: float
    T: int = 200
    sign: int = 1
    keep_diagonal: bool = False
    backtrack: bool = True
    tol: float = 1e-7
    gauss_seidel: bool = False

    def __post_init__(self):
        if self.eta <= 0 or self.eta_prime <= 0:
            raise InputError("step sizes must be positive")
        if self.T < 0:
            raise InputError("T must be nonnegative")
        if self.s < 0:
            raise InputError("s must be nonnegative")
        if self.r < 1:
            raise InputError("r must be at least 1")
        if self.tol < 0:
            raise InputError("tol must be nonnegative")
        _check_sign(self.sign)

    def check_dimension(self, d: int) -> None:
        if self.s > d * d:
            raise InputError(f"s={self.s} exceeds d^2={d * d}")
        if self.r > d:
            raise InputError(f"r={self.r} exceeds d={d}")
        if self.keep_diagonal and self.s < d:
            raise BudgetTooSmall(f"keep_diagonal needs s >= d={d}, got {self.s}")
        if not self.keep_diagonal and self.s < d:
            warnings.warn(
                f"s={self.s} < d={d}: thresholding may drop diagonal entries",
                RuntimeWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    err_S: Optional[float] = None
    err_L: Optional[float] = None
    err_Omega: Optional[float] = None
    time_ms: float = 0.0


@dataclass
class FitTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.time_ms < self.records[-1].time_ms:
            raise InputError("trace times must be nondecreasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name: str) -> np.ndarray:
        return np.array(
            [np.nan if getattr(rec, name) is None else getattr(rec, name) for rec in self.records],
            dtype=float,
        )


def assemble_precision(dec: Decomposition) -> np.ndarray:
    """Return ``S + sign * Z Z^T``, exactly symmetric."""
    return symmetrize(dec.S + dec.sign * (dec.Z @ dec.Z.T))


def cholesky_or_none(M):
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InputError("matrix contains non-finite entries")
    try:
        c = scipy.linalg.cholesky(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    if np.any(np.diag(c) <= 0):
        return None
    return c


def is_positive_definite(M) -> bool:
    return cholesky_or_none(M) is not None
