"""Command-line interface.

Subcommands
-----------
fit             select a similarity matrix on (X, Y) data and fit all tasks
estimate-cov    estimate the inter-task noise covariance from (X, Y) data
run-experiment  run a simulation preset (A-E) or a JSON config
make-grids      write the df-indexed regularization grid of a design

File formats: the design CSV has header x1,...,xd (one row per point); the
response CSV has header y1,...,yp.  Decimal points only, no locale handling.
Covariance matrices use a plain-text format with a 'p=<int>' header followed
by p rows of p entries.

Exit codes: 0 success, 2 input/parse error, 3 numeric or calibration
failure.  Thread count for experiments comes from --threads, else the
MINPEN_THREADS environment variable, else 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import experiments
from .covariance import (
    estimate_sigma_basis,
    estimate_sigma_full,
    matrix_diagnostics,
    parse_sigma_text,
    read_sigma,
    sigma_text,
    write_sigma,
)
from .errors import InputError, NumericError
from .kernel import kernel_matrix, lambda_grid, smoother_table
from .model import collection, criterion_table, mean_first_basis, select_model


def _read_csv_matrix(path, prefix):
    """Read a CSV with header prefix1..prefixK into an (n, K) float array."""
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        k = len(header)
        expected = [f"{prefix}{i + 1}" for i in range(k)]
        if header != expected:
            raise InputError(
                f"{path}: header must be {','.join(expected[:3])},... "
                f"(got {','.join(header[:4])})"
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k:
                raise InputError(f"{path}:{line_no}: expected {k} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise InputError(f"{path}:{line_no}: non-numeric value") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows)


def _write_csv_matrix(path, prefix, mat):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow([f"{prefix}{j + 1}" for j in range(mat.shape[1])])
        for row in mat:
            w.writerow([repr(float(v)) for v in row])


def _jsonable(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(float(x))
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _load_xy(args):
    if not args.data_x or not args.data_y:
        raise InputError("this command needs --data-x and --data-y")
    x = _read_csv_matrix(args.data_x, "x")
    y = _read_csv_matrix(args.data_y, "y")
    if x.shape[0] != y.shape[0]:
        raise InputError(
            f"row mismatch: {args.data_x} has {x.shape[0]} points, "
            f"{args.data_y} has {y.shape[0]}"
        )
    return x, y


def _basis_for(family, p):
    """The shared eigenbasis of single-basis families (for hm/simple)."""
    if family == "ind":
        return np.eye(p)
    if family == "similar":
        return mean_first_basis(p)
    raise InputError(
        f"--cov hm/simple needs a single-basis family (ind or similar); "
        f"{family!r} mixes bases, use --cov full"
    )


def _covariance_for_fit(args, spectrum, y, table):
    p = y.shape[1]
    if args.cov == "known":
        if not args.cov_file:
            raise InputError("--cov known requires --cov-file")
        s = read_sigma(args.cov_file)
        if s.shape[0] != p:
            raise InputError(
                f"covariance is {s.shape[0]}x{s.shape[0]} but data has p={p} tasks"
            )
        return s
    if args.cov == "full":
        return estimate_sigma_full(spectrum, y, table=table).matrix
    basis = _basis_for(args.family, p)
    return estimate_sigma_basis(spectrum, y, basis, method=args.cov, table=table).matrix


def _cmd_fit(args):
    x, y = _load_xy(args)
    p = y.shape[1]
    members = collection(args.family, p)
    spectrum = kernel_matrix(x, jitter=args.jitter)
    table = smoother_table(spectrum, refine=args.grid_refine)
    s = _covariance_for_fit(args, spectrum, y, table)
    fit = select_model(spectrum, y, members, s, table=table)

    os.makedirs(args.out, exist_ok=True)
    _write_csv_matrix(os.path.join(args.out, "fitted.csv"), "y", fit.fitted)
    write_sigma(os.path.join(args.out, "sigma.txt"), s)
    chosen = {
        "family": fit.family,
        "member": fit.label,
        "groups": _jsonable(dict(zip(fit.group_names,
                                     [[g_i + 1 for g_i in g] for g in fit.groups]))),
        "eigenvalues": _jsonable(fit.d),
        "lambda_eff": _jsonable(fit.lambda_eff),
        "per_direction_df": _jsonable(fit.per_direction_df),
        "residual": _jsonable(fit.residual_value),
        "penalty": _jsonable(fit.penalty_value),
        "criterion": _jsonable(fit.criterion_value),
    }
    with open(os.path.join(args.out, "chosen.json"), "w", encoding="ascii") as fh:
        json.dump(chosen, fh, indent=2, sort_keys=True)
        fh.write("\n")
    rows = criterion_table(spectrum, y, members, s, table=table)
    with open(os.path.join(args.out, "criterion.csv"), "w", newline="",
              encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "member", "group", "lambda_eff", "df",
                    "residual", "penalty", "total", "chosen"])
        for r in rows:
            w.writerow([r["family"], r["member"], r["group"],
                        repr(r["lambda_eff"]), repr(r["df"]), repr(r["residual"]),
                        repr(r["penalty"]), repr(r["total"]), r["chosen"]])
    print(f"selected {fit.family}/{fit.label} criterion={fit.criterion_value!r}")
    print(f"wrote fitted.csv, sigma.txt, chosen.json, criterion.csv to {args.out}")
    return 0


def _cmd_estimate_cov(args):
    if args.verify:
        s = read_sigma(args.verify)
        reparsed = parse_sigma_text(sigma_text(s), source="<round-trip>")
        dev = float(np.abs(reparsed - s).max())
        if dev > 1e-12:
            raise NumericError(f"round-trip deviation {dev:.3e} exceeds 1e-12")
        print(f"verified {args.verify}: p={s.shape[0]} max deviation {dev!r}")
        return 0
    if not (args.data_x and args.data_y and args.out):
        raise InputError("estimate-cov needs --data-x, --data-y and --out "
                         "(or --verify FILE)")
    x, y = _load_xy(args)
    spectrum = kernel_matrix(x, jitter=args.jitter)
    table = smoother_table(spectrum, refine=args.grid_refine)
    if args.cov == "full":
        est = estimate_sigma_full(spectrum, y, table=table)
    else:
        basis = _basis_for(args.family, y.shape[1])
        est = estimate_sigma_basis(spectrum, y, basis, method=args.cov, table=table)
    write_sigma(args.out, est.matrix)
    op_norm, cond, min_eig = matrix_diagnostics(est.matrix)
    print(f"wrote {args.out} (method={est.method}, p={est.p})")
    print(f"op_norm={op_norm!r} cond={cond!r} min_eig={min_eig!r}")
    if est.degenerate_directions:
        print(f"degenerate directions: {len(est.degenerate_directions)}")
    return 0


def _cmd_run_experiment(args):
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot open {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}:{exc.lineno}: {exc.msg}") from exc
        if args.preset:
            raise InputError("give either --config or --preset, not both")
        config = experiments.config_from_dict(data)
        if args.threads is not None or "threads" not in data:
            config = experiments.ExperimentConfig(
                preset=config.preset, cells=config.cells, n_reps=config.n_reps,
                seed=config.seed, threads=_resolve_threads(args),
                grid_refine=config.grid_refine, cv_folds=config.cv_folds,
            )
    else:
        if not args.preset:
            raise InputError("run-experiment needs --preset or --config")
        config = experiments.make_config(
            args.preset, n=args.n, p=args.p, t=args.t,
            n_reps=args.n_reps, seed=args.seed, threads=_resolve_threads(args),
            grid_refine=args.grid_refine,
        )
    result = experiments.run_experiment(config, out_dir=args.out)
    for line in experiments.summarize(result):
        print(line)
    if result.failures:
        print(f"{len(result.failures)} replication(s) failed; see failures.csv")
    return 0


def _cmd_make_grids(args):
    if not args.data_x:
        raise InputError("make-grids needs --data-x")
    x = _read_csv_matrix(args.data_x, "x")
    spectrum = kernel_matrix(x, jitter=args.jitter)
    table = smoother_table(spectrum, refine=args.grid_refine)
    p = args.p
    with open(args.out, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda_eff", "d", "df", "pen_min"])
        for k in range(table.size):
            lam = float(table.lambdas[k])
            w.writerow([repr(lam), repr(lam / p), repr(float(table.df[k])),
                        repr(float(table.pen[k]))])
    print(f"wrote {table.size} grid points to {args.out}")
    return 0


def _resolve_threads(args):
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        return args.threads
    env = os.environ.get("MINPEN_THREADS")
    if env:
        try:
            val = int(env)
        except ValueError:
            raise InputError(f"MINPEN_THREADS must be an integer, got {env!r}") from None
        if val < 1:
            raise InputError("MINPEN_THREADS must be >= 1")
        return val
    return 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="minpen",
        description="Multi-task kernel ridge regression with data-driven "
                    "calibration of the task-similarity matrix.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(sp):
        sp.add_argument("--data-x", help="design CSV, header x1..xd")
        sp.add_argument("--data-y", help="response CSV, header y1..yp")
        sp.add_argument("--grid-refine", type=int, default=1,
                        help="df-grid refinement factor (default 1)")
        sp.add_argument("--jitter", type=float, default=0.0,
                        help="ridge added to the kernel matrix only if needed")

    sp = sub.add_parser("fit", help="select a similarity matrix and fit")
    add_data_flags(sp)
    sp.add_argument("--family", default="similar",
                    choices=["ind", "similar", "cluster", "segmentation", "union"])
    sp.add_argument("--cov", default="hm", choices=["known", "full", "hm", "simple"],
                    help="covariance source for the penalty")
    sp.add_argument("--cov-file", help="matrix file for --cov known")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("estimate-cov", help="estimate the noise covariance")
    add_data_flags(sp)
    sp.add_argument("--cov", default="full", choices=["full", "hm", "simple"],
                    help="estimator variant")
    sp.add_argument("--family", default="similar", choices=["ind", "similar"],
                    help="basis family for hm/simple")
    sp.add_argument("--out", help="output matrix file")
    sp.add_argument("--verify", metavar="FILE",
                    help="check that FILE round-trips through the text format")
    sp.set_defaults(func=_cmd_estimate_cov)

    sp = sub.add_parser("run-experiment", help="run a simulation preset")
    sp.add_argument("--preset", choices=list(experiments.PRESETS))
    sp.add_argument("--config", help="JSON config file (alternative to --preset)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-reps", type=int, default=100)
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: MINPEN_THREADS or 1)")
    sp.add_argument("--n", type=int, action="append",
                    help="override sample size (repeat for a sweep)")
    sp.add_argument("--p", type=int, action="append",
                    help="override task count (repeat for a sweep)")
    sp.add_argument("--t", type=float, action="append",
                    help="override noise scale for preset C")
    sp.add_argument("--grid-refine", type=int, default=1)
    sp.set_defaults(func=_cmd_run_experiment)

    sp = sub.add_parser("make-grids", help="write the df-indexed lambda grid")
    add_data_flags(sp)
    sp.add_argument("--p", type=int, default=1,
                    help="task count used to convert lambda to eigenvalue scale")
    sp.add_argument("--out", required=True, help="output CSV")
    sp.set_defaults(func=_cmd_make_grids)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
