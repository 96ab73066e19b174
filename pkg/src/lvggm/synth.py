"""Seeded ground-truth generators and the Gaussian sampler.

Randomness comes from numpy's PCG64 generator.  A spec's seed is turned
into a ``SeedSequence`` and one child stream is spawned per matrix draw
(support, values, factor), so adding a draw never shifts another one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .model import Dataset, GroundTruth, InputError, symmetrize


def _streams(seed, k):
    return [np.random.Generator(np.random.PCG64(ss)) for ss in np.random.SeedSequence(seed).spawn(k)]


def default_s_star(d: int) -> int:
    return int(round(0.02 * d * d))


@dataclass(frozen=True)
class LvggmSpec:
    """Latent-variable model of ``d`` observed and ``r`` latent nodes.

    ``latent_scale`` multiplies the dense latent-observed coupling block
    and ``sparse_scale`` the observed off-diagonal entries.  Defaults are
    ``1/sqrt(d)`` and ``1/sqrt(max(1, k))`` with ``k`` the mean number of
    off-diagonal nonzeros per row, so the spectrum of the joint precision
    matrix stays of order one as ``d`` grows.  Setting both to 1 gives
    unscaled uniform ``[-1, 1]`` entries.
    """

    d: int
    r: int
    seed: int = 0
    s_star_target: Optional[int] = None
    diag_boost: Optional[float] = None
    latent_scale: Optional[float] = None
    sparse_scale: Optional[float] = None

    def __post_init__(self):
        if self.s_star_target is None:
            object.__setattr__(self, "s_star_target", max(self.d, default_s_star(self.d)))
        if not 1 <= self.r < self.d:
            raise InputError(f"need 1 <= r < d, got r={self.r}, d={self.d}")
        if not self.d <= self.s_star_target <= self.d * self.d:
            raise InputError(f"s_star_target must lie in [d, d^2], got {self.s_star_target}")
        if self.diag_boost is not None and self.diag_boost <= 0:
            raise InputError("diag_boost must be positive")
        for name in ("latent_scale", "sparse_scale"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise InputError(f"{name} must be positive")


@dataclass(frozen=True)
class GenericSpec:
    d: int
    r: int
    seed: int = 0
    s_star_target: Optional[int] = None
    pd_margin: float = 1.0
    scale_factor: bool = True

    def __post_init__(self):
        if self.s_star_target is None:
            object.__setattr__(self, "s_star_target", max(self.d, default_s_star(self.d)))
        if not 1 <= self.r < self.d:
            raise InputError(f"need 1 <= r < d, got r={self.r}, d={self.d}")
        if not self.d <= self.s_star_target <= self.d * self.d:
            raise InputError(f"s_star_target must lie in [d, d^2], got {self.s_star_target}")
        if self.pd_margin <= 0:
            raise InputError("pd_margin must be positive")


def _sparse_symmetric(d, s_target, rng_support, rng_values):
    """Zero-diagonal symmetric matrix with ``s_target - d`` off-diagonal nonzeros.

    Odd remainders round down: off-diagonal entries come in mirror pairs.
    """
    n_pairs = min((s_target - d) // 2, d * (d - 1) // 2)
    rows, cols = np.triu_indices(d, k=1)
    pick = rng_support.choice(rows.size, size=n_pairs, replace=False)
    pick.sort()
    vals = rng_values.uniform(-1.0, 1.0, size=n_pairs)
    # a value of exactly 0 would silently shrink the support
    vals[vals == 0.0] = 1.0
    A = np.zeros((d, d))
    A[rows[pick], cols[pick]] = vals
    return A + A.T


def lvggm_from_joint(Omega_joint, d: int, r: int) -> GroundTruth:
    """Marginal ground truth of the first ``d`` nodes of a joint precision matrix."""
    Omega_joint = symmetrize(Omega_joint)
    S = Omega_joint[:d, :d]
    B = Omega_joint[:d, d:]
    C = Omega_joint[d:, d:]
    M = symmetrize(B @ scipy.linalg.solve(C, B.T, assume_a="pos"))
    w, V = np.linalg.eigh(M)
    top = np.argsort(w)[::-1][:r]
    Z = V[:, top] * np.sqrt(np.clip(w[top], 0.0, None))
    return GroundTruth(S_star=S, L_star=-M, Omega_star=S - M, r=r, sign=-1, Z_star=Z)


def generate_lvggm(spec: LvggmSpec) -> GroundTruth:
    """Sparse joint precision over observed and latent nodes, then marginalize.

    The observed block carries the sparse support (diagonal plus random
    mirror pairs up to ``s_star_target`` nonzeros), the latent-observed
    and latent-latent blocks are dense, and every nonzero is uniform on
    ``[-1, 1]`` before block scaling (see ``LvggmSpec``).  The diagonal is then shifted by ``|lambda_min| + 1``
    unless ``diag_boost`` is given.
    """
    d, r = spec.d, spec.r
    rng_support, rng_values, rng_latent = _streams(spec.seed, 3)
    latent_scale = 1.0 / np.sqrt(d) if spec.latent_scale is None else spec.latent_scale
    sparse_scale = spec.sparse_scale
    if sparse_scale is None:
        sparse_scale = 1.0 / np.sqrt(max(1.0, (spec.s_star_target - d) / d))
    A = np.zeros((d + r, d + r))
    A[:d, :d] = sparse_scale * _sparse_symmetric(d, spec.s_star_target, rng_support, rng_values)
    B = latent_scale * rng_latent.uniform(-1.0, 1.0, size=(d, r))
    C = np.triu(rng_latent.uniform(-1.0, 1.0, size=(r, r)), k=1)
    A[:d, d:] = B
    A[d:, :d] = B.T
    A[d:, d:] = C + C.T
    boost = spec.diag_boost
    if boost is None:
        boost = abs(np.linalg.eigvalsh(A)[0]) + 1.0
    Omega_joint = A + boost * np.eye(d + r)
    return lvggm_from_joint(Omega_joint, d, r)


def generate_generic(spec: GenericSpec) -> GroundTruth:
    """Arbitrary sparse ``S*`` plus PSD rank-``r`` ``L* = Z* Z*^T`` (sign +1)."""
    d, r = spec.d, spec.r
    rng_support, rng_values, rng_factor = _streams(spec.seed, 3)
    S_raw = _sparse_symmetric(d, spec.s_star_target, rng_support, rng_values)
    Z = rng_factor.uniform(-1.0, 1.0, size=(d, r))
    if spec.scale_factor:
        Z = Z / np.sqrt(d)
    L = symmetrize(Z @ Z.T)
    shift = abs(np.linalg.eigvalsh(S_raw + L)[0]) + spec.pd_margin
    S = S_raw + shift * np.eye(d)
    return GroundTruth(S_star=S, L_star=L, Omega_star=S + L, r=r, sign=1, Z_star=Z)


def sample_gaussian(truth, n: int, seed) -> Dataset:
    """``n`` draws from ``N(0, Omega*^{-1})`` as ``G zeta`` with ``G G^T`` the covariance."""
    Omega = truth.Omega_star if isinstance(truth, GroundTruth) else np.asarray(truth, dtype=float)
    if n < 2:
        raise InputError("n must be at least 2")
    d = Omega.shape[0]
    c = scipy.linalg.cholesky(Omega, lower=True)
    # Sigma = Omega^{-1} from the triangular factor, no general inverse
    c_inv = scipy.linalg.solve_triangular(c, np.eye(d), lower=True)
    Sigma = symmetrize(c_inv.T @ c_inv)
    G = scipy.linalg.cholesky(Sigma, lower=True)
    (rng,) = _streams(seed, 1)
    zeta = rng.standard_normal((n, d))
    return Dataset(zeta @ G.T)
