"""Symmetric hard thresholding and support extraction."""
from __future__ import annotations

import functools
from typing import List, Tuple

import numpy as np

from .model import BudgetTooSmall, InputError

SupportSet = List[Tuple[int, int]]


def hard_threshold(x, s: int) -> np.ndarray:
    """Keep the ``s`` largest magnitudes of a flat array, zero the rest.

    Ties are broken toward the smaller flat index.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if s < 0 or s > flat.size:
        raise InputError(f"budget s={s} outside [0, {flat.size}]")
    out = np.zeros_like(flat)
    if s == 0:
        return out.reshape(x.shape)
    mags = np.abs(flat)
    cut = np.partition(mags, flat.size - s)[flat.size - s]
    above = mags > cut
    at = np.flatnonzero(mags == cut)[: s - int(above.sum())]
    out[above] = flat[above]
    out[at] = flat[at]
    return out.reshape(x.shape)


def hard_threshold_sym(M, s: int, keep_diagonal: bool = False, pair_atomic: bool = True) -> np.ndarray:
    """Keep the largest-magnitude entries of a symmetric matrix within budget ``s``.

    Diagonal cells cost 1 and off-diagonal mirror pairs cost 2.  Candidates
    are visited in decreasing magnitude, ties by ``(row, col)``, and are
    admitted greedily when their cost still fits; a pair that does not fit
    is skipped so a later diagonal cell may still be taken.  With
    ``keep_diagonal`` the whole diagonal is admitted first and charged
    against ``s``.

    ``pair_atomic=False`` treats every cell independently (row-major
    tie-break), which is the plain flat operator applied to ``M``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got {M.shape}")
    d = M.shape[0]
    if not 0 <= s <= d * d:
        raise InputError(f"budget s={s} outside [0, {d * d}]")
    if keep_diagonal and s < d:
        raise BudgetTooSmall(f"keep_diagonal needs s >= d={d}, got {s}")
    if not pair_atomic:
        if keep_diagonal:
            out = np.diag(np.diag(M))
            off = M - out
            off_mask = ~np.eye(d, dtype=bool)
            kept = hard_threshold(off[off_mask], s - d)
            out[off_mask] = kept
            return out
        return hard_threshold(M, s)

    rows, cols = _upper_pairs(d, not keep_diagonal)
    budget = s - d if keep_diagonal else s
    out = np.diag(np.diag(M)) if keep_diagonal else np.zeros_like(M)
    if budget == 0 or rows.size == 0:
        return out
    mags = np.abs(M[rows, cols])
    # every admitted candidate costs >= 1, so the greedy prefix lies within
    # the `budget` largest magnitudes (plus ties at the cut)
    k = min(rows.size, budget)
    if k < rows.size:
        cut = -np.partition(-mags, k - 1)[k - 1]
        cand = np.flatnonzero(mags >= cut)
    else:
        cand = np.arange(rows.size)
    # lexsort: last key is primary
    order = cand[np.lexsort((cols[cand], rows[cand], -mags[cand]))]
    cost = np.where(rows[order] == cols[order], 1, 2)
    spent = np.cumsum(cost)
    n_prefix = int(np.searchsorted(spent, budget, side="right"))
    chosen = order[:n_prefix]
    remaining = budget - (int(spent[n_prefix - 1]) if n_prefix else 0)
    if remaining == 1 and not keep_diagonal:
        # a pair no longer fits; the next diagonal cell in visiting order does
        diag_mag = np.abs(np.diag(M)).copy()
        taken = rows[chosen][rows[chosen] == cols[chosen]]
        diag_mag[taken] = -1.0
        i = int(np.argmax(diag_mag))
        if diag_mag[i] >= 0:
            out[i, i] = M[i, i]
    ri, ci = rows[chosen], cols[chosen]
    out[ri, ci] = M[ri, ci]
    out[ci, ri] = M[ci, ri]
    return out


@functools.lru_cache(maxsize=8)
def _upper_pairs(d, with_diagonal):
    rows, cols = np.triu_indices(d, k=0 if with_diagonal else 1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def support(M, tol: float = 0.0) -> SupportSet:
    """Upper-triangle index pairs ``(i, j)``, ``i <= j``, with ``|M_ij| > tol``."""
    if tol < 0:
        raise InputError("tol must be nonnegative")
    M = np.asarray(M, dtype=float)
    rows, cols = np.triu_indices(M.shape[0], m=M.shape[1])
    hit = np.abs(M[rows, cols]) > tol
    return [(int(i), int(j)) for i, j in zip(rows[hit], cols[hit])]


def nnz(M, tol: float = 0.0) -> int:
    return int(np.count_nonzero(np.abs(np.asarray(M)) > tol))
