"""Synthetic-data experiment harness: presets A-E, statistics, file output.

Common frame: design points are standard Gaussian in R^4, target functions
are 4-center kernel expansions, noise rows are i.i.d. N(0, Sigma).  Each
preset sweeps one knob and compares a small set of estimators per
replication; reported quantities are per-entry quadratic errors
(n p)^-1 ||fitted - f||_F^2 and per-replication error ratios against the
preset's reference estimator.

    A  p varies, n = 10, Sigma = 10 I; coupled vs per-task selection.
    B  n varies, p = 5, Sigma drawn once from a Wishart; same comparison.
    C  noise scale t varies, n = 100, p = 5, Sigma = 5 t I.
    D  two clusters of tasks, p = 10, n = 100; subset unions vs per-task.
    E  n varies, p = 5; penalized selection vs 5-fold cross-validation.

Replications are deterministic: one seed tree is split per cell and per
replication up front, so results are identical for any thread count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .covariance import estimate_sigma_basis, estimate_sigma_full
from .errors import InputError, NumericError
from .kernel import kernel_gram, smoother_table, spectrum_from_matrix
from .model import (
    _assemble_fit,
    _group_series,
    _member_argmin,
    clustering_union,
    independent_family,
    mean_first_basis,
    multitask_family,
    oracle_select,
    segmentation_union,
    select_model,
)

PRESETS = ("A", "B", "C", "D", "E")

DESIGN_DIM = 4
N_CENTERS = 4

# default sweeps, desk scale
_SWEEP_A_P = (2, 4, 8, 12)
_SWEEP_B_N = (50, 100, 200)
_SWEEP_C_T = (0.01, 1.0, 100.0)
_SWEEP_E_N = (10, 50, 100, 250)


@dataclass(frozen=True)
class Cell:
    """One point of a preset's sweep."""

    n: int
    p: int
    t: float = float("nan")  # noise scale, only meaningful for preset C

    def sweep_value(self, preset):
        if preset == "A":
            return self.p
        if preset == "C":
            return self.t
        return self.n


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    cells: tuple
    n_reps: int = 100
    seed: int = 0
    threads: int = 1
    grid_refine: int = 1
    cv_folds: int = 5


def make_config(preset, n=None, p=None, t=None, n_reps=100, seed=0, threads=1,
                grid_refine=1, cv_folds=5):
    """Resolve a preset plus overrides into the concrete cell sweep."""
    preset = str(preset).upper()
    if preset not in PRESETS:
        raise InputError(
            f"unknown preset {preset!r}; valid presets: {', '.join(PRESETS)}"
        )

    def as_tuple(v, cast):
        if v is None:
            return None
        if np.isscalar(v):
            return (cast(v),)
        return tuple(cast(x) for x in v)

    ns = as_tuple(n, int)
    ps = as_tuple(p, int)
    ts = as_tuple(t, float)

    if preset == "A":
        cells = tuple(Cell(n=(ns[0] if ns else 10), p=pv) for pv in (ps or _SWEEP_A_P))
    elif preset == "B":
        cells = tuple(Cell(n=nv, p=(ps[0] if ps else 5)) for nv in (ns or _SWEEP_B_N))
    elif preset == "C":
        cells = tuple(
            Cell(n=(ns[0] if ns else 100), p=(ps[0] if ps else 5), t=tv)
            for tv in (ts or _SWEEP_C_T)
        )
    elif preset == "D":
        cells = (Cell(n=(ns[0] if ns else 100), p=(ps[0] if ps else 10)),)
    else:  # E
        cells = tuple(Cell(n=nv, p=(ps[0] if ps else 5)) for nv in (ns or _SWEEP_E_N))

    for c in cells:
        if c.n < 4:
            raise InputError(f"cell n={c.n} too small (need n >= 4)")
        if c.p < 1:
            raise InputError(f"cell p={c.p} invalid")
    if n_reps < 1:
        raise InputError("n_reps must be >= 1")
    if threads < 1:
        raise InputError("threads must be >= 1")
    return ExperimentConfig(
        preset=preset,
        cells=cells,
        n_reps=int(n_reps),
        seed=int(seed),
        threads=int(threads),
        grid_refine=int(grid_refine),
        cv_folds=int(cv_folds),
    )


def config_from_dict(data):
    """Build a config from a parsed JSON object (the --config file)."""
    if not isinstance(data, dict):
        raise InputError("config file must hold a JSON object")
    known = {"preset", "n", "p", "t", "n_reps", "seed", "threads",
             "grid_refine", "cv_folds"}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    if "preset" not in data:
        raise InputError("config file must set 'preset'")
    return make_config(
        data["preset"],
        n=data.get("n"),
        p=data.get("p"),
        t=data.get("t"),
        n_reps=data.get("n_reps", 100),
        seed=data.get("seed", 0),
        threads=data.get("threads", 1),
        grid_refine=data.get("grid_refine", 1),
        cv_folds=data.get("cv_folds", 5),
    )


# === random draws ============================================================


def draw_wishart(scale, dof, rng):
    """Wishart sample via the Bartlett construction; expectation dof * scale."""
    scale = np.asarray(scale, dtype=float)
    p = scale.shape[0]
    if scale.shape != (p, p):
        raise InputError(f"scale must be square, got {scale.shape}")
    if dof < p:
        raise InputError(f"Wishart needs dof >= p, got dof={dof}, p={p}")
    chol = np.linalg.cholesky(scale)
    a = np.zeros((p, p))
    for i in range(p):
        a[i, i] = math.sqrt(rng.chisquare(dof - i))
        for j in range(i):
            a[i, j] = rng.standard_normal()
    la = chol @ a
    return la @ la.T


def _psd_sqrt(sigma):
    sigma = np.asarray(sigma, dtype=float)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(sigma)
        tol = 1e-8 * max(float(w[-1]), 0.0)
        if w[0] < -tol:
            raise InputError("noise covariance is not positive semidefinite")
        w = np.where(w < 0.0, 0.0, w)
        return v * np.sqrt(w)[None, :]


def draw_noise(sigma, n, rng):
    """n rows i.i.d. N(0, Sigma)."""
    b = _psd_sqrt(sigma)
    p = b.shape[0]
    return rng.standard_normal((n, p)) @ b.T


def target_functions(x, centers, coeffs):
    """Kernel expansion values sum_k coeffs_k k(x_i, z_k) for each row x_i."""
    return kernel_gram(x, centers) @ np.asarray(coeffs, dtype=float)


# === cross-validation ========================================================


def cv_select(spectrum, Y, members, folds=5, rng=None, table=None, k_full=None,
               refine=1):
    """Grid selection by k-fold held-out error, on the full-data lam grid.

    Each fold's kernel submatrix is decomposed from scratch; predictions at
    held-out points come from the representer coefficients of the training
    fold.  The held-out error decomposes across eigenvalue groups exactly
    like the penalized criterion, so the same per-group argmin applies.
    """
    Y = np.asarray(Y, dtype=float)
    n, p = Y.shape
    folds = int(folds)
    if folds < 2 or folds > n:
        raise InputError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    members = list(members)
    if table is None:
        table = smoother_table(spectrum, refine=refine)
    if k_full is None:
        k_full = spectrum.reconstruct()

    if rng is None:
        order = np.arange(n)
    else:
        order = rng.permutation(n)
    parts = np.array_split(order, folds)

    lams = table.lambdas
    finite = np.isfinite(lams)
    heldout = [np.zeros((table.size, p)) for _ in members]
    for va in parts:
        tr = np.setdiff1d(np.arange(n), va)
        n_tr = tr.size
        spec_tr = spectrum_from_matrix(k_full[np.ix_(tr, tr)])
        mu = spec_tr.eigenvalues
        u = k_full[np.ix_(va, tr)] @ spec_tr.q.T          # (n_va, n_tr)
        # denom[g, i] = mu_i + n_tr * lam_g; inf rows give zero coefficients
        denom = np.empty((table.size, n_tr))
        denom[finite] = mu[None, :] + n_tr * lams[finite, None]
        denom[~finite] = np.inf
        for m_i, member in enumerate(members):
            ytr_r = spec_tr.q @ (Y[tr] @ member.basis.T)  # (n_tr, p)
            yva_r = Y[va] @ member.basis.T                # (n_va, p)
            for j in range(p):
                coef = np.divide(
                    ytr_r[None, :, j], denom,
                    out=np.zeros_like(denom), where=denom > 0.0,
                )
                resid = coef @ u.T - yva_r[None, :, j]
                heldout[m_i][:, j] += (resid * resid).sum(axis=1)

    best = None
    for m_i, member in enumerate(members):
        idx, mins = _member_argmin(
            member, table.lambdas, _group_series(heldout[m_i], member.groups)
        )
        err = float(sum(mins))
        if best is None or (err,) < best[0]:
            best = ((err,), member, idx, err)
    _, member, idx, err = best

    yr = (spectrum.q @ Y) @ member.basis.T
    resid_cols = table.resid_w @ (yr * yr)
    resid_val = 0.0
    for g_i, g in enumerate(member.groups):
        resid_val += float(resid_cols[idx[g_i], list(g)].sum())
    return _assemble_fit(spectrum, member, table, yr, idx, "cv", resid_val, 0.0, err)


# === statistics ==============================================================


def gaussian_p_value(mean, std, n_obs):
    """One-sided p-value for H0: the expected ratio exceeds 1.

    Phi((mean - 1) / (std / sqrt(n))); small values reject H0, i.e. support
    an expected ratio below 1.
    """
    if n_obs < 1:
        return float("nan")
    se = std / math.sqrt(n_obs)
    if se == 0.0:
        return 0.0 if mean < 1.0 else 1.0
    z = (mean - 1.0) / se
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _mean_std(values):
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        return float("nan"), float("nan")
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if n > 1 else 0.0
    return mean, std


# === per-replication estimators ==============================================

REFERENCE = {"A": "singletask_sigma_hat", "B": "singletask_sigma_hat",
             "C": "singletask_sigma_hat", "D": "singletask",
             "E": "multitask_cv"}

EXTRA_RATIOS = {"D": (("segmentation", "clustering"),)}

HEADLINE_RATIOS = {
    "A": (("multitask_sigma_hat", "singletask_sigma_hat"),
          ("multitask_sigma", "singletask_sigma")),
    "B": (("multitask_sigma_hat", "singletask_sigma_hat"),
          ("multitask_sigma", "singletask_sigma")),
    "C": (("multitask_sigma_hat", "singletask_sigma_hat"),
          ("multitask_sigma", "singletask_sigma")),
    "D": (("clustering", "singletask"), ("segmentation", "singletask"),
          ("segmentation", "clustering")),
    "E": (("multitask_sigma_hat", "multitask_cv"),),
}


@dataclass(frozen=True)
class CellContext:
    """Replication-independent pieces of one cell's computation."""

    cell: Cell
    sigma: np.ndarray
    centers: np.ndarray
    member_sets: dict
    hm_bases: dict


def _cell_context(preset, cell, sigma, centers):
    p = cell.p
    if preset == "D":
        member_sets = {
            "clustering": clustering_union(p, ordered=True),
            "segmentation": segmentation_union(p, ordered=True),
            "singletask": independent_family(p),
        }
        hm_bases = {}
    elif preset == "E":
        member_sets = {"multitask": multitask_family(p)}
        hm_bases = {"multitask": mean_first_basis(p)}
    else:
        member_sets = {
            "multitask": multitask_family(p),
            "singletask": independent_family(p),
        }
        hm_bases = {"multitask": mean_first_basis(p), "singletask": np.eye(p)}
    return CellContext(
        cell=cell, sigma=sigma, centers=centers,
        member_sets=member_sets, hm_bases=hm_bases,
    )


def _params_string(fit):
    pieces = []
    for name, g in zip(fit.group_names, fit.groups):
        pieces.append(f"{name}:lam={fit.lambda_eff[g[0]]:.6g}")
    return f"{fit.family}/{fit.label};" + ",".join(pieces)


def _fit_error(fit, f_true):
    n, p = f_true.shape
    return float(((fit.fitted - f_true) ** 2).sum() / (n * p))


def _run_replication(preset, ctx, seed, grid_refine, cv_folds):
    """All estimators for one replication; returns {estimator: (error, params)}."""
    cell = ctx.cell
    n, p = cell.n, cell.p
    rng = np.random.default_rng(seed)

    x = rng.standard_normal((n, DESIGN_DIM))
    if preset == "D":
        centers = rng.standard_normal((N_CENTERS, DESIGN_DIM))
        coeffs = rng.standard_normal(N_CENTERS)
        col = target_functions(x, centers, coeffs)
        half = p - p // 2
        f_true = np.column_stack([col] * half + [-col] * (p // 2))
    else:
        col = target_functions(x, ctx.centers, np.ones(N_CENTERS))
        f_true = np.tile(col[:, None], (1, p))
    noise = draw_noise(ctx.sigma, n, rng)
    y = f_true + noise

    k = kernel_gram(x)
    spectrum = spectrum_from_matrix(k)
    table = smoother_table(spectrum, refine=grid_refine)

    out = {}
    if preset == "D":
        s_hat = estimate_sigma_full(spectrum, y, table=table).matrix
        for name in ("clustering", "segmentation", "singletask"):
            fit = select_model(spectrum, y, ctx.member_sets[name], s_hat, table=table)
            out[name] = (_fit_error(fit, f_true), _params_string(fit))
            ofit = oracle_select(spectrum, y, f_true, ctx.member_sets[name], table=table)
            out[f"oracle_{name}"] = (_fit_error(ofit, f_true), _params_string(ofit))
    elif preset == "E":
        members = ctx.member_sets["multitask"]
        s_hm = estimate_sigma_basis(
            spectrum, y, ctx.hm_bases["multitask"], table=table
        ).matrix
        fit = select_model(spectrum, y, members, s_hm, table=table)
        out["multitask_sigma_hat"] = (_fit_error(fit, f_true), _params_string(fit))
        cv_fit = cv_select(
            spectrum, y, members, folds=cv_folds, rng=rng, table=table, k_full=k
        )
        out["multitask_cv"] = (_fit_error(cv_fit, f_true), _params_string(cv_fit))
        ofit = oracle_select(spectrum, y, f_true, members, table=table)
        out["oracle_multitask"] = (_fit_error(ofit, f_true), _params_string(ofit))
    else:
        for name in ("multitask", "singletask"):
            members = ctx.member_sets[name]
            s_hm = estimate_sigma_basis(
                spectrum, y, ctx.hm_bases[name], table=table
            ).matrix
            fit_hat = select_model(spectrum, y, members, s_hm, table=table)
            fit_known = select_model(spectrum, y, members, ctx.sigma, table=table)
            out[f"{name}_sigma_hat"] = (_fit_error(fit_hat, f_true), _params_string(fit_hat))
            out[f"{name}_sigma"] = (_fit_error(fit_known, f_true), _params_string(fit_known))
            ofit = oracle_select(spectrum, y, f_true, members, table=table)
            out[f"oracle_{name}"] = (_fit_error(ofit, f_true), _params_string(ofit))
    return out


# === the harness =============================================================


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)        # per-replication records
    aggregates: list = field(default_factory=list)  # per-cell summary records
    failures: list = field(default_factory=list)
    sigma_draws: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def _cell_sigma(preset, cell, shared_rng_draws):
    if preset == "A" or preset == "E":
        return 10.0 * np.eye(cell.p)
    if preset == "C":
        return 5.0 * cell.t * np.eye(cell.p)
    return shared_rng_draws  # B, D: the frozen Wishart draw


def run_experiment(config, out_dir=None):
    """Run all cells and replications; optionally write the output files.

    Output files (under out_dir): replications.csv, aggregate.csv,
    config.json, one fig_<preset>_*.dat per figure, failures.csv when any
    replication failed.  Identical config and seed give identical bytes.
    """
    preset = config.preset
    root = np.random.SeedSequence(config.seed)
    shared_seq, cells_seq = root.spawn(2)
    shared_rng = np.random.default_rng(shared_seq)
    centers = shared_rng.standard_normal((N_CENTERS, DESIGN_DIM))
    wishart = None
    if preset in ("B", "D"):
        # frozen across replications; dof = 2p, rescaled so the expected
        # covariance is I_p (keeps the noise level comparable to the
        # identity-covariance presets while adding anisotropy)
        p0 = config.cells[0].p
        wishart = draw_wishart(np.eye(p0), 2 * p0, shared_rng) / (2 * p0)

    result = ExperimentResult(config=config)
    if wishart is not None:
        result.sigma_draws["wishart"] = wishart

    cell_seqs = cells_seq.spawn(len(config.cells))
    for cell, cell_seq in zip(config.cells, cell_seqs):
        sigma = _cell_sigma(preset, cell, wishart)
        ctx = _cell_context(preset, cell, sigma, centers)
        rep_seeds = cell_seq.spawn(config.n_reps)

        def one(rep):
            try:
                est = _run_replication(
                    preset, ctx, rep_seeds[rep], config.grid_refine, config.cv_folds
                )
                return rep, est, None
            except NumericError as exc:
                return rep, None, str(exc)

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                outcomes = list(pool.map(one, range(config.n_reps)))
        else:
            outcomes = [one(rep) for rep in range(config.n_reps)]
        outcomes.sort(key=lambda o: o[0])

        ref_name = REFERENCE[preset]
        per_est = {}
        ratios = {}
        n_degenerate = {}
        for rep, est, err_msg in outcomes:
            if est is None:
                result.failures.append((cell, rep, err_msg))
                continue
            ref_err = est[ref_name][0]
            for name, (err, params) in est.items():
                if err == 0.0 and ref_err == 0.0:
                    ratio = float("nan")
                    n_degenerate[name] = n_degenerate.get(name, 0) + 1
                elif ref_err == 0.0:
                    ratio = float("inf")
                else:
                    ratio = err / ref_err
                per_est.setdefault(name, []).append(err)
                ratios.setdefault(name, []).append(ratio)
                result.rows.append({
                    "preset": preset, "n": cell.n, "p": cell.p, "t": cell.t,
                    "replication": rep, "estimator": name,
                    "error": err, "ratio": ratio, "params": params,
                })
        n_failed = sum(1 for _, est, _ in outcomes if est is None)

        est_names = sorted(per_est)
        for name in est_names:
            vals = per_est[name]
            mean, std = _mean_std(vals)
            result.aggregates.append({
                "preset": preset, "n": cell.n, "p": cell.p, "t": cell.t,
                "quantity": f"error:{name}",
                "mean": mean, "std": std,
                "halfwidth": 1.96 * std / math.sqrt(len(vals)) if vals else float("nan"),
                "pvalue": float("nan"),
                "n_used": len(vals), "n_failed": n_failed,
                "n_degenerate": 0,
            })
        pairs = [(name, ref_name) for name in est_names if name != ref_name]
        for extra in EXTRA_RATIOS.get(preset, ()):
            if extra not in pairs and extra[0] in per_est and extra[1] in per_est:
                pairs.append(extra)
        for num, den in pairs:
            if den == ref_name:
                vals = [r for r in ratios[num] if math.isfinite(r)]
                n_deg = n_degenerate.get(num, 0)
            else:
                vals, n_deg = [], 0
                for a, b in zip(per_est[num], per_est[den]):
                    if a == 0.0 and b == 0.0:
                        n_deg += 1
                    elif b != 0.0:
                        vals.append(a / b)
            mean, std = _mean_std(vals)
            result.aggregates.append({
                "preset": preset, "n": cell.n, "p": cell.p, "t": cell.t,
                "quantity": f"ratio:{num}/{den}",
                "mean": mean, "std": std,
                "halfwidth": 1.96 * std / math.sqrt(len(vals)) if vals else float("nan"),
                "pvalue": gaussian_p_value(mean, std, len(vals)) if vals else float("nan"),
                "n_used": len(vals), "n_failed": n_failed,
                "n_degenerate": n_deg,
            })

    if out_dir is not None:
        _write_outputs(result, out_dir)
    return result


# === output files ============================================================


def _fmt(x):
    """Deterministic full-precision text for a float (shared by CSV and stdout)."""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _cell_key_fields(row):
    t = row["t"]
    return [row["preset"], str(row["n"]), str(row["p"]),
            "" if (isinstance(t, float) and math.isnan(t)) else _fmt(float(t))]


def _write_outputs(result, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    preset = result.config.preset

    path = os.path.join(out_dir, "replications.csv")
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(["preset", "n", "p", "t", "replication", "estimator",
                    "error", "ratio", "params"])
        for row in result.rows:
            w.writerow(_cell_key_fields(row) + [
                row["replication"], row["estimator"],
                _fmt(row["error"]), _fmt(row["ratio"]), row["params"],
            ])
    result.files.append(path)

    path = os.path.join(out_dir, "aggregate.csv")
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(["preset", "n", "p", "t", "quantity", "mean", "std",
                    "halfwidth", "pvalue", "n_used", "n_failed", "n_degenerate"])
        for row in result.aggregates:
            w.writerow(_cell_key_fields(row) + [
                row["quantity"], _fmt(row["mean"]), _fmt(row["std"]),
                _fmt(row["halfwidth"]), _fmt(row["pvalue"]),
                row["n_used"], row["n_failed"], row["n_degenerate"],
            ])
    result.files.append(path)

    cfg = result.config
    payload = {
        "preset": cfg.preset,
        "cells": [{"n": c.n, "p": c.p,
                   "t": None if math.isnan(c.t) else c.t} for c in cfg.cells],
        "n_reps": cfg.n_reps, "seed": cfg.seed, "threads": cfg.threads,
        "grid_refine": cfg.grid_refine, "cv_folds": cfg.cv_folds,
    }
    if "wishart" in result.sigma_draws:
        payload["sigma_wishart"] = [
            [float(v) for v in row] for row in result.sigma_draws["wishart"]
        ]
    path = os.path.join(out_dir, "config.json")
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.files.append(path)

    # gnuplot data: one block per quantity, columns x mean lo hi
    by_quantity = {}
    for row in result.aggregates:
        by_quantity.setdefault(row["quantity"], []).append(row)
    ratio_pairs = [f"ratio:{a}/{b}" for a, b in HEADLINE_RATIOS[preset]]
    for fname, quantities in (
        (f"fig_{preset}_ratio.dat", [q for q in ratio_pairs if q in by_quantity]),
        (f"fig_{preset}_errors.dat",
         [q for q in sorted(by_quantity) if q.startswith("error:")]),
    ):
        lines = []
        for q in quantities:
            lines.append(f"# {q}")
            lines.append("# x mean lo hi")
            for row in by_quantity[q]:
                cell = Cell(n=row["n"], p=row["p"], t=row["t"])
                x = cell.sweep_value(preset)
                m, hw = row["mean"], row["halfwidth"]
                lines.append(" ".join([
                    _fmt(float(x)), _fmt(m), _fmt(m - hw), _fmt(m + hw)
                ]))
            lines.append("")
        path = os.path.join(out_dir, fname)
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines))
        result.files.append(path)

    if result.failures:
        path = os.path.join(out_dir, "failures.csv")
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh)
            w.writerow(["preset", "n", "p", "t", "replication", "message"])
            for cell, rep, msg in result.failures:
                t = "" if math.isnan(cell.t) else _fmt(cell.t)
                w.writerow([preset, cell.n, cell.p, t, rep, msg])
        result.files.append(path)


def summarize(result):
    """Human-readable summary lines; values match aggregate.csv exactly."""
    lines = []
    for row in result.aggregates:
        key = _cell_key_fields(row)
        cell = f"preset={key[0]} n={key[1]} p={key[2]}"
        if key[3]:
            cell += f" t={key[3]}"
        lines.append(
            f"{cell} {row['quantity']} mean={_fmt(row['mean'])} "
            f"std={_fmt(row['std'])} halfwidth={_fmt(row['halfwidth'])} "
            f"pvalue={_fmt(row['pvalue'])} n_used={row['n_used']} "
            f"n_failed={row['n_failed']} n_degenerate={row['n_degenerate']}"
        )
    return lines
