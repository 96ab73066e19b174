"""Grid sweeps over synthetic instances and K-fold selection of ``(s, r)``."""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .baseline import AdmmConfig
from .likelihood import objective_precision, sample_covariance
from .model import (
    CovarianceSingular,
    Dataset,
    InputError,
    NotPositiveDefinite,
    StepFailure,
    assemble_precision,
)
from .pipeline import budget_from_c2, default_admm_weights, evaluate, run_admm, run_altgd
from .synth import LvggmSpec, _streams, generate_lvggm, sample_gaussian

SWEEP_COLUMNS = [
    "d", "n", "r", "s_star", "seed", "method", "s", "termination", "iters",
    "err_s", "err_l", "err_omega", "dist_z", "precision", "recall", "f1", "spikiness",
    "rate_s", "rate_l", "gen_ms", "init_ms", "fit_ms", "error",
]
TIME_COLUMNS = ("gen_ms", "init_ms", "fit_ms")
FIT_ERRORS = (CovarianceSingular, StepFailure, NotPositiveDefinite, InputError)


@dataclass(frozen=True)
class SweepCell:
    d: int
    n: int
    r: int
    s_star: int
    seed: int

    @property
    def key(self):
        return (self.d, self.n, self.r, self.s_star, self.seed)


@dataclass(frozen=True)
class SweepSettings:
    method: str = "altgd"
    c2: float = 1.0
    T: int = 200
    tol: float = 1e-7
    step_mode: str = "theory"
    lam: Optional[float] = None
    gamma: Optional[float] = None
    admm_iters: int = 2000


def sweep_cells(ds, ns, rs, s_stars, seeds):
    """Cartesian grid in cell-key order.  ``None`` in ``s_stars`` means the default ``0.02 d^2``."""
    cells = set()
    for d, n, r, s_star, seed in itertools.product(ds, ns, rs, s_stars, seeds):
        target = LvggmSpec(d, r, seed=0, s_star_target=s_star).s_star_target
        cells.add(SweepCell(int(d), int(n), int(r), int(target), int(seed)))
    return sorted(cells, key=lambda c: c.key)


def run_cell(cell: SweepCell, settings: SweepSettings) -> dict:
    """Generate, fit and evaluate one cell.  Failures land in the ``error`` field."""
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(d=cell.d, n=cell.n, r=cell.r, seed=cell.seed, method=settings.method, error="")
    row["rate_s"] = math.sqrt(cell.s_star * math.log(cell.d) / cell.n)
    row["rate_l"] = math.sqrt(cell.r * cell.d / cell.n)
    try:
        t0 = time.perf_counter()
        truth = generate_lvggm(LvggmSpec(cell.d, cell.r, seed=cell.seed, s_star_target=cell.s_star))
        data = sample_gaussian(truth, cell.n, [cell.seed, cell.n])
        row["gen_ms"] = (time.perf_counter() - t0) * 1e3
        row["s_star"] = truth.s_star
        cov = sample_covariance(data)
        if settings.method == "altgd":
            s = budget_from_c2(settings.c2, truth.s_star)
            run = run_altgd(
                cov, s, cell.r, sign=truth.sign, T=settings.T, tol=settings.tol,
                step_mode=settings.step_mode, truth=truth,
            )
            res = run.result
            row.update(s=s, termination=res.termination, iters=len(res.trace) - 1,
                       init_ms=run.init_ms, fit_ms=run.fit_ms)
            metrics = evaluate(run.S, run.L, truth.S_star, truth.L_star, run.Z, truth.Z_star)
        elif settings.method == "admm":
            lam0, gamma0 = default_admm_weights(cell.d, cell.n)
            cfg = AdmmConfig(
                lam=settings.lam or lam0, gamma=settings.gamma or gamma0,
                max_iters=settings.admm_iters, sign=truth.sign,
            )
            res = run_admm(cov, cfg, truth=truth)
            row.update(termination=res.termination, iters=len(res.trace), init_ms=0.0,
                       fit_ms=res.trace[-1].time_ms)
            metrics = evaluate(res.S, res.sign * res.L, truth.S_star, truth.L_star)
        else:
            raise InputError(f"unknown method {settings.method!r}")
        metrics.pop("time_ms")
        row.update(metrics)
    except FIT_ERRORS as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        if row["s_star"] is None:
            row["s_star"] = cell.s_star
    return row


def _run_cell_single_thread(args):
    with threadpool_limits(1):
        return run_cell(*args)


def run_sweep(cells: Sequence[SweepCell], settings: SweepSettings, workers: int = 1):
    """Rows in the order of ``cells``; each cell runs with single-threaded BLAS."""
    jobs = [(c, settings) for c in cells]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_cell_single_thread(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell_single_thread, jobs))


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def write_rows(fh, rows, columns, blank=()):
    fh.write(",".join(columns) + "\n")
    for row in rows:
        fields = []
        for c in columns:
            text = "" if c in blank else format_value(row.get(c))
            if any(ch in text for ch in ',"\n'):
                text = '"' + text.replace('"', '""') + '"'
            fields.append(text)
        fh.write(",".join(fields) + "\n")


def fold_indices(n: int, k: int, seed) -> list:
    """``k`` contiguous blocks of a seeded permutation of ``range(n)``."""
    if k < 2:
        raise InputError("need at least 2 folds")
    if n < 2 * k:
        raise InputError(f"need n >= 2K samples, got n={n}, K={k}")
    (rng,) = _streams(seed, 1)
    perm = rng.permutation(n)
    return [np.sort(block) for block in np.array_split(perm, k)]


def select_best(table):
    """Lowest score; ties go to smaller ``s`` then smaller ``r``."""
    if not table:
        raise InputError("empty score table")
    return min(table, key=lambda row: (row["score"], row["s"], row["r"]))


def cross_validate(
    data: Dataset,
    s_grid: Sequence[int],
    r_grid: Sequence[int],
    sign: int = 1,
    k: int = 4,
    seed=0,
    T: int = 200,
    tol: float = 1e-7,
    step_mode: str = "theory",
    ridge: float = 0.0,
):
    """Held-out negative log-likelihood ``tr(Sigma_val Omega) - log|Omega|`` per grid cell.

    Returns ``(best_row, table)``.  A cell in which any fold fails scores
    ``+inf``.
    """
    if not s_grid or not r_grid:
        raise InputError("s and r grids must be nonempty")
    if not isinstance(data, Dataset):
        data = Dataset(data)
    folds = fold_indices(data.n, k, seed)
    splits = []
    for i, held in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        splits.append((sample_covariance(data.samples[train]), sample_covariance(data.samples[held])))
    table = []
    for s, r in itertools.product(s_grid, r_grid):
        scores = []
        error = ""
        for cov_train, cov_val in splits:
            try:
                run = run_altgd(cov_train, int(s), int(r), sign=sign, T=T, tol=tol,
                                step_mode=step_mode, ridge=ridge)
                Omega = assemble_precision(run.result.decomposition)
                scores.append(objective_precision(cov_val, Omega))
            except FIT_ERRORS as exc:
                error = f"{type(exc).__name__}: {exc}"
                scores = [math.inf]
                break
        table.append({"s": int(s), "r": int(r), "score": float(np.mean(scores)), "error": error})
    return select_best(table), table
