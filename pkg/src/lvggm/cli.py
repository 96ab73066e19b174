"""Command-line front end: ``lvggm generate|fit|eval|sweep|cv``.

Every option may also come from an INI file given with ``--config``: the
section named after the command holds ``key = value`` lines whose keys are
the long option names (dashes or underscores), and a ``[common]`` section
feeds all commands.  Flags on the command line win over the file.

Exit codes: 0 success, 2 input error, 3 singular covariance, 4 step
failure, 5 baseline not converged.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import fileio
from .baseline import AdmmConfig
from .experiments import (
    SWEEP_COLUMNS,
    TIME_COLUMNS,
    SweepSettings,
    cross_validate,
    run_sweep,
    sweep_cells,
    write_rows,
)
from .likelihood import sample_covariance
from .model import (
    CovarianceSingular,
    GroundTruth,
    InputError,
    NotPositiveDefinite,
    StepFailure,
)
from .pipeline import budget_from_c2, default_admm_weights, evaluate, run_admm, run_altgd
from .synth import GenericSpec, LvggmSpec, generate_generic, generate_lvggm, sample_gaussian

log = logging.getLogger("lvggm")

EXIT_OK, EXIT_INPUT, EXIT_SINGULAR, EXIT_STEP, EXIT_NOT_CONVERGED = 0, 2, 3, 4, 5
TRACE_COLUMNS = ["iter", "objective", "err_S", "err_L", "err_Omega", "time_ms"]

COMMON_DEFAULTS = {"seed": 0, "threads": None, "config": None, "out": None, "no_timing": False, "verbose": False}
DEFAULTS = {
    "generate": {"model": "lvggm", "r": 2, "s_star": None, "latent_scale": None, "sparse_scale": None},
    "fit": {
        "method": "altgd", "s": None, "c2": None, "s_star": None, "sign": None, "truth": None,
        "T": 200, "tol": 1e-7, "step_mode": "theory", "ridge": 0.0, "center": False,
        "keep_diagonal": False, "lam": None, "gamma": None, "beta": 1.0, "admm_iters": 2000,
        "admm_tol": 1e-5,
    },
    "eval": {"truth": None},
    "sweep": {
        "s_star": None, "seeds": None, "method": "altgd", "c2": 1.0, "T": 200, "tol": 1e-7,
        "step_mode": "theory", "lam": None, "gamma": None, "admm_iters": 2000,
    },
    "cv": {"sign": 1, "folds": 4, "T": 200, "tol": 1e-7, "step_mode": "theory", "ridge": 0.0},
}


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _int_list(text):
    return [int(v) for v in text.replace(",", " ").split()]


def _common(p, suppress=True):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, help="random seed (default 0)", **kw)
    p.add_argument("--threads", type=int, help="BLAS threads, or sweep workers (default: logical cores)", **kw)
    p.add_argument("--config", help="INI file with per-command defaults", **kw)
    p.add_argument("--out", help="output directory (generate, fit) or file (eval, sweep, cv)", **kw)
    p.add_argument("--no-timing", action="store_true", help="leave wall-time fields empty", **kw)
    p.add_argument("-v", "--verbose", action="store_true", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lvggm", description=__doc__.split("\n\n")[0],
                                     argument_default=argparse.SUPPRESS)
    _common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic truth and dataset", argument_default=argparse.SUPPRESS)
    _common(g)
    g.add_argument("--d", type=int, help="observed dimension")
    g.add_argument("--r", type=int, help="latent rank (default 2)")
    g.add_argument("--n", type=int, help="sample count")
    g.add_argument("--s-star", type=int, help="sparse support size (default 0.02 d^2)")
    g.add_argument("--model", choices=["lvggm", "generic"], help="latent-variable (sign -1) or generic (sign +1)")
    g.add_argument("--latent-scale", type=float, help="lvggm coupling scale (default 1/sqrt(d))")
    g.add_argument("--sparse-scale", type=float, help="lvggm off-diagonal scale")

    f = sub.add_parser("fit", help="estimate S and L from a dataset", argument_default=argparse.SUPPRESS)
    _common(f)
    f.add_argument("--data", help="n x d CSV")
    f.add_argument("--method", choices=["altgd", "admm"])
    f.add_argument("--s", type=int, help="sparsity budget")
    f.add_argument("--c2", type=float, help="budget as ceil(c2 * s*), needs --s-star or --truth")
    f.add_argument("--s-star", type=int)
    f.add_argument("--r", type=int, help="rank")
    f.add_argument("--sign", type=int, choices=[1, -1], help="Omega = S + sign L (default: truth sign, else 1)")
    f.add_argument("--truth", help="truth directory; adds error columns to the trace")
    f.add_argument("--T", type=int, help="AltGD iterations (default 200)")
    f.add_argument("--tol", type=float, help="relative objective tolerance")
    f.add_argument("--step-mode", choices=["theory", "simple"])
    f.add_argument("--ridge", type=float)
    f.add_argument("--center", action="store_true")
    f.add_argument("--keep-diagonal", action="store_true")
    f.add_argument("--lam", type=float, help="ADMM l1 weight (default sqrt(log d / n))")
    f.add_argument("--gamma", type=float, help="ADMM trace weight (default sqrt(d / n))")
    f.add_argument("--beta", type=float)
    f.add_argument("--admm-iters", type=int)
    f.add_argument("--admm-tol", type=float)

    e = sub.add_parser("eval", help="compare a fit against a truth", argument_default=argparse.SUPPRESS)
    _common(e)
    e.add_argument("--fit", help="fit directory (a truth directory also works)")
    e.add_argument("--truth", help="truth directory")

    w = sub.add_parser("sweep", help="generate, fit and evaluate over a grid", argument_default=argparse.SUPPRESS)
    _common(w)
    w.add_argument("--d", type=_int_list, help="dimensions, e.g. '50 100'")
    w.add_argument("--n", type=_int_list)
    w.add_argument("--r", type=_int_list)
    w.add_argument("--s-star", type=_int_list)
    w.add_argument("--seeds", type=_int_list, help="default: --seed")
    w.add_argument("--method", choices=["altgd", "admm"])
    w.add_argument("--c2", type=float)
    w.add_argument("--T", type=int)
    w.add_argument("--tol", type=float)
    w.add_argument("--step-mode", choices=["theory", "simple"])
    w.add_argument("--lam", type=float)
    w.add_argument("--gamma", type=float)
    w.add_argument("--admm-iters", type=int)

    c = sub.add_parser("cv", help="K-fold choice of (s, r)", argument_default=argparse.SUPPRESS)
    _common(c)
    c.add_argument("--data")
    c.add_argument("--s-grid", type=_int_list)
    c.add_argument("--r-grid", type=_int_list)
    c.add_argument("--sign", type=int, choices=[1, -1])
    c.add_argument("--folds", type=int)
    c.add_argument("--T", type=int)
    c.add_argument("--tol", type=float)
    c.add_argument("--step-mode", choices=["theory", "simple"])
    c.add_argument("--ridge", type=float)
    return parser


def _config_values(path, command, subparser):
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}")
    except configparser.Error as exc:
        raise CliError(f"{path}: {exc}")
    # keys are case-insensitive, so `T = 50` and `t = 50` both work
    actions = {a.dest.lower(): a for a in subparser._actions}
    values = {}
    for section in ("common", command):
        if not cp.has_section(section):
            continue
        for key, text in cp.items(section):
            action = actions.get(key.replace("-", "_").lower())
            if action is None or action.dest in ("config", "help"):
                raise CliError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                if isinstance(action, argparse._StoreTrueAction):
                    value = cp.getboolean(section, key)
                else:
                    value = action.type(text) if action.type else text
            except ValueError as exc:
                raise CliError(f"{path}: bad value for {key!r}: {exc}")
            if action.choices is not None and value not in action.choices:
                raise CliError(f"{path}: {key!r} must be one of {list(action.choices)}")
            values[action.dest] = value
    return values


def resolve_args(argv=None):
    """Parse ``argv`` and merge flags over config over built-in defaults."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    command = ns["command"]
    merged = dict(COMMON_DEFAULTS)
    merged.update(DEFAULTS[command])
    if ns.get("config"):
        sub = parser._subparsers._group_actions[0].choices[command]
        merged.update(_config_values(ns["config"], command, sub))
    merged.update(ns)
    return argparse.Namespace(**merged)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise CliError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _out_dir(args):
    _require(args, "out")
    path = Path(args.out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}")
    return path


def _emit(args, text):
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(f"{args.out}: {exc.strerror}")
    else:
        sys.stdout.write(text)


def _timing(args, value):
    return None if args.no_timing or value is None else float(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def cmd_generate(args):
    _require(args, "d", "n")
    out = _out_dir(args)
    if args.model == "lvggm":
        truth = generate_lvggm(LvggmSpec(
            args.d, args.r, seed=args.seed, s_star_target=args.s_star,
            latent_scale=args.latent_scale, sparse_scale=args.sparse_scale,
        ))
    else:
        truth = generate_generic(GenericSpec(args.d, args.r, seed=args.seed, s_star_target=args.s_star))
    data = sample_gaussian(truth, args.n, [args.seed, args.n])
    fileio.write_matrix(out / "S_star.csv", truth.S_star)
    fileio.write_matrix(out / "L_star.csv", truth.L_star)
    fileio.write_matrix(out / "Omega_star.csv", truth.Omega_star)
    fileio.write_matrix(out / "Z_star.csv", truth.Z_star)
    fileio.write_dataset(out / "data.csv", data)
    meta = {"model": args.model, "d": truth.d, "r": truth.r, "n": args.n, "s_star": truth.s_star,
            "sign": truth.sign, "seed": args.seed}
    fileio.write_json(out / "truth.json", meta)
    print(f"generated s_star={truth.s_star} r={truth.r} d={truth.d} n={args.n} seed={args.seed} "
          f"sign={truth.sign} out={out}")
    return EXIT_OK


def load_truth(path):
    path = Path(path)
    meta = fileio.read_json(path / "truth.json")
    z_path = path / "Z_star.csv"
    return GroundTruth(
        S_star=fileio.read_matrix(path / "S_star.csv"),
        L_star=fileio.read_matrix(path / "L_star.csv"),
        Omega_star=fileio.read_matrix(path / "Omega_star.csv"),
        r=int(meta["r"]),
        sign=int(meta["sign"]),
        Z_star=fileio.read_matrix(z_path) if z_path.exists() else None,
    )


def _write_trace(path, rows, columns, args):
    blank = ("time_ms",) if args.no_timing else ()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_rows(fh, rows, columns, blank=blank)


def cmd_fit(args):
    _require(args, "data", "r")
    data = fileio.read_dataset(args.data)
    truth = load_truth(args.truth) if args.truth else None
    if truth is not None and truth.d != data.d:
        raise CliError(f"truth has d={truth.d} but data has d={data.d}")
    sign = args.sign if args.sign is not None else (truth.sign if truth else 1)
    out = _out_dir(args)
    cov = sample_covariance(data, center=args.center)
    meta = {"method": args.method, "sign": sign, "r": args.r, "d": data.d, "n": data.n}
    if args.method == "altgd":
        s = args.s
        if s is None:
            s_star = args.s_star if args.s_star is not None else (truth.s_star if truth else None)
            if args.c2 is None or s_star is None:
                raise CliError("give --s, or --c2 together with --s-star or --truth")
            s = budget_from_c2(args.c2, s_star)
        run = run_altgd(cov, s, args.r, sign=sign, T=args.T, tol=args.tol, step_mode=args.step_mode,
                        ridge=args.ridge, keep_diagonal=args.keep_diagonal, truth=truth)
        res = run.result
        rows = [{"iter": t.iteration, "objective": t.objective, "err_S": t.err_S, "err_L": t.err_L,
                 "err_Omega": t.err_Omega, "time_ms": t.time_ms} for t in res.trace]
        _write_trace(out / "trace.csv", rows, TRACE_COLUMNS, args)
        fileio.write_matrix(out / "S.csv", run.S)
        fileio.write_matrix(out / "Z.csv", run.Z)
        meta.update(s=s, termination=res.termination, iters=len(res.trace) - 1, eta=res.eta,
                    eta_prime=res.eta_prime, converged=res.termination != "max_iters",
                    time_ms=_timing(args, run.fit_ms), init_ms=_timing(args, run.init_ms))
        code = EXIT_OK
    else:
        lam0, gamma0 = default_admm_weights(data.d, data.n)
        cfg = AdmmConfig(lam=args.lam or lam0, gamma=args.gamma or gamma0, beta=args.beta,
                         max_iters=args.admm_iters, primal_tol=args.admm_tol, dual_tol=args.admm_tol, sign=sign)
        res = run_admm(cov, cfg, truth=truth)
        rows = [{"iter": t.iteration, "objective": t.objective, "err_S": t.err_S, "err_L": t.err_L,
                 "err_Omega": t.err_Omega, "time_ms": t.time_ms, "primal_res": t.primal_res,
                 "dual_res": t.dual_res} for t in res.trace]
        _write_trace(out / "trace.csv", rows, TRACE_COLUMNS + ["primal_res", "dual_res"], args)
        fileio.write_matrix(out / "S.csv", res.S)
        fileio.write_matrix(out / "L.csv", res.L)
        meta.update(lam=cfg.lam, gamma=cfg.gamma, beta=cfg.beta, termination=res.termination,
                    iters=len(res.trace), converged=res.converged,
                    time_ms=_timing(args, res.trace[-1].time_ms if res.trace else 0.0))
        code = EXIT_OK if res.converged else EXIT_NOT_CONVERGED
    fileio.write_json(out / "fit.json", {k: _json_safe(v) for k, v in meta.items()})
    log.info("fit finished: %s", meta["termination"])
    if code == EXIT_NOT_CONVERGED:
        print(f"error: NotConverged: ADMM stopped after {meta['iters']} iterations", file=sys.stderr)
    return code


def _load_estimate(path):
    """``(S, signed L, Z or None, time_ms)`` from a fit or truth directory."""
    path = Path(path)
    if (path / "fit.json").exists():
        meta = fileio.read_json(path / "fit.json")
        sign = int(meta["sign"])
        S = fileio.read_matrix(path / "S.csv")
        if (path / "Z.csv").exists():
            Z = fileio.read_matrix(path / "Z.csv")
            return S, sign * (Z @ Z.T), Z, meta.get("time_ms")
        return S, sign * fileio.read_matrix(path / "L.csv"), None, meta.get("time_ms")
    if (path / "S_star.csv").exists():
        truth = load_truth(path)
        return truth.S_star, truth.L_star, truth.Z_star, None
    raise CliError(f"{path}: neither a fit directory nor a truth directory")


def cmd_eval(args):
    _require(args, "fit", "truth")
    S, L, Z, time_ms = _load_estimate(args.fit)
    truth = load_truth(args.truth)
    if S.shape != truth.S_star.shape:
        raise CliError(f"shape mismatch: estimate is {S.shape}, truth is {truth.S_star.shape}")
    metrics = evaluate(S, L, truth.S_star, truth.L_star, Z, truth.Z_star,
                       time_ms=None if args.no_timing else time_ms)
    _emit(args, json.dumps({k: _json_safe(v) for k, v in metrics.items()}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_sweep(args):
    _require(args, "d", "n", "r")
    seeds = args.seeds if args.seeds is not None else [args.seed]
    s_stars = args.s_star if args.s_star is not None else [None]
    cells = sweep_cells(args.d, args.n, args.r, s_stars, seeds)
    if not cells:
        raise CliError("empty grid")
    settings = SweepSettings(method=args.method, c2=args.c2, T=args.T, tol=args.tol, step_mode=args.step_mode,
                             lam=args.lam, gamma=args.gamma, admm_iters=args.admm_iters)
    workers = args.threads or os.cpu_count() or 1
    rows = run_sweep(cells, settings, workers=workers)
    buf = io.StringIO()
    write_rows(buf, rows, SWEEP_COLUMNS, blank=TIME_COLUMNS if args.no_timing else ())
    _emit(args, buf.getvalue())
    failed = sum(1 for r in rows if r["error"])
    if failed:
        log.warning("%d of %d cells failed", failed, len(rows))
    return EXIT_OK


def cmd_cv(args):
    _require(args, "data", "s_grid", "r_grid")
    if args.folds < 2:
        raise CliError("--folds must be at least 2")
    data = fileio.read_dataset(args.data)
    best, table = cross_validate(data, args.s_grid, args.r_grid, sign=args.sign, k=args.folds, seed=args.seed,
                                 T=args.T, tol=args.tol, step_mode=args.step_mode, ridge=args.ridge)
    clean = lambda row: {k: _json_safe(v) for k, v in row.items()}  # noqa: E731
    report = {"folds": args.folds, "best": clean(best), "table": [clean(r) for r in table]}
    _emit(args, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "fit": cmd_fit, "eval": cmd_eval, "sweep": cmd_sweep, "cv": cmd_cv}


def main(argv=None) -> int:
    try:
        args = resolve_args(argv)
    except CliError as exc:
        print(f"error: InputError: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sweep" or args.threads is None:
            return COMMANDS[args.command](args)
        with threadpool_limits(args.threads):
            return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: InputError: {exc}", file=sys.stderr)
        return exc.code
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CovarianceSingular as exc:
        print(f"error: CovarianceSingular: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (StepFailure, NotPositiveDefinite) as exc:
        print(f"error: StepFailure: {exc}", file=sys.stderr)
        return EXIT_STEP
    except OSError as exc:
        print(f"error: InputError: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
