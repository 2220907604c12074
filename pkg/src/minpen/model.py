"""Jointly-diagonalizable similarity families and penalized model selection.

A similarity matrix M = P.T @ diag(d) @ P couples the p tasks through the
joint smoother

    A_M = (M^-1 (x) K) ((M^-1 (x) K) + n p I)^-1 .

Because every family here shares one orthogonal basis P per member, the
joint smoother never has to be materialized: rotating the tasks by P and the
samples by Q turns it into p independent single-task smoothers with
effective regularization lam_j = p * d_j.  Fitted values, penalties, risks,
and the selection criterion are all sums over directions of spectral
quantities, and directions sharing one eigenvalue (a "group") share one
1-d grid search.

Selection minimizes

    crit(M) = ||fitted - Y||_F^2 + 2 tr(A_M (S (x) I_n))

over the grid, with S either the true covariance or any symmetric estimate
(possibly indefinite).  The criterion splits across groups, so the argmin is
found per group and is identical to exhaustive enumeration of the full
Cartesian grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernel import argmin_prefer_larger, shrinkage_factors, smoother_table

MAX_UNION_TASKS = 12  # guard: the subset union grows as 2^p


# === bases ===================================================================


def helmert_rows(indices, p):
    """Orthonormal contrasts supported on an index set, orthogonal to its indicator.

    For indices (j_1 < ... < j_k) produces k - 1 rows; row r has weight
    1/sqrt(r(r+1)) on j_1..j_r and -r/sqrt(r(r+1)) on j_{r+1}.
    """
    indices = tuple(indices)
    k = len(indices)
    rows = np.zeros((max(k - 1, 0), p))
    for r in range(1, k):
        c = 1.0 / math.sqrt(r * (r + 1))
        for t in range(r):
            rows[r - 1, indices[t]] = c
        rows[r - 1, indices[r]] = -r * c
    return rows


def mean_first_basis(p):
    """Orthonormal basis whose first row is the normalized all-ones vector."""
    if p < 1:
        raise InputError("p must be >= 1")
    rows = np.zeros((p, p))
    rows[0] = 1.0 / math.sqrt(p)
    if p > 1:
        rows[1:] = helmert_rows(range(p), p)
    return rows


def cluster_basis(subset, p):
    """Basis adapted to a two-cluster split: indicators first, then contrasts.

    Rows: 1_I/sqrt(k), 1_Ic/sqrt(p-k), the k-1 contrasts within I, the
    p-k-1 contrasts within the complement.
    """
    subset = tuple(sorted(set(int(i) for i in subset)))
    if not all(0 <= i < p for i in subset):
        raise InputError(f"subset {subset} out of range for p={p}")
    k = len(subset)
    if k < 1 or k > p - 1:
        raise InputError(f"cluster subset must be proper and nonempty, got size {k} of p={p}")
    comp = tuple(i for i in range(p) if i not in subset)
    rows = np.zeros((p, p))
    rows[0, list(subset)] = 1.0 / math.sqrt(k)
    rows[1, list(comp)] = 1.0 / math.sqrt(p - k)
    rows[2:1 + k] = helmert_rows(subset, p)
    rows[1 + k:] = helmert_rows(comp, p)
    return rows, subset, comp


# === families ================================================================


@dataclass(frozen=True)
class FamilyMember:
    """One jointly-diagonalizable grid: a basis P plus its eigenvalue groups.

    groups partitions range(p) into tuples of basis-row indices that share a
    single eigenvalue; each group contributes one free parameter.

    link says how the group parameters move against each other.  "free"
    groups are minimized independently (the grid is their Cartesian
    product).  "band" requires exactly two groups and restricts the second
    group's level to [first, cap * first]: one shared level plus a bounded
    extra-smoothing factor, so the pair effectively moves together.
    """

    family: str
    label: str
    basis: np.ndarray
    groups: tuple
    group_names: tuple
    link: str = "free"
    cap: float = math.inf

    @property
    def p(self):
        return self.basis.shape[0]


def independent_family(p):
    """No coupling: M diagonal, one eigenvalue per task."""
    return [
        FamilyMember(
            family="independent",
            label="independent",
            basis=np.eye(p),
            groups=tuple((j,) for j in range(p)),
            group_names=tuple(f"task{j + 1}" for j in range(p)),
        )
    ]


def similar_family(p):
    """Mean direction free, all contrast directions tied to one eigenvalue."""
    if p == 1:
        groups = ((0,),)
        names = ("mean",)
    else:
        groups = ((0,), tuple(range(1, p)))
        names = ("mean", "contrast")
    return [
        FamilyMember(
            family="similar",
            label="similar",
            basis=mean_first_basis(p),
            groups=groups,
            group_names=names,
        )
    ]


def multitask_family(p):
    """Shared ridge level with a bounded extra shrinkage of the contrasts.

    The contrast eigenvalue is confined to [d_mean, p/(p-1) * d_mean], so the
    two levels move nearly in lockstep: selection selects one effective
    parameter judged on all p directions at once.  Compared with the free
    similar family this trades the ability to shrink contrasts away entirely
    for much steadier selection when the noise dominates.
    """
    if p < 1:
        raise InputError("p must be >= 1")
    if p == 1:
        return [
            FamilyMember(
                family="multitask",
                label="multitask",
                basis=np.eye(1),
                groups=((0,),),
                group_names=("mean",),
            )
        ]
    return [
        FamilyMember(
            family="multitask",
            label="multitask",
            basis=mean_first_basis(p),
            groups=((0,), tuple(range(1, p))),
            group_names=("mean", "contrast"),
            link="band",
            cap=p / (p - 1.0),
        )
    ]


def cluster_member(subset, p, tied=True, family="cluster", ordered=False):
    """Two-cluster member: indicator directions share one eigenvalue.

    tied=True ties the within-cluster contrasts of both clusters together
    (two groups total); tied=False keeps them separate (up to three groups).
    ordered=True (tied only) additionally forbids shrinking the contrasts
    less than the indicator directions.
    """
    basis, subset, comp = cluster_basis(subset, p)
    k = len(subset)
    within = tuple(range(2, 1 + k))
    between = tuple(range(1 + k, p))
    groups = [(0, 1)]
    names = ["indicators"]
    link = "free"
    if tied:
        contrasts = within + between
        if contrasts:
            groups.append(contrasts)
            names.append("contrasts")
            if ordered:
                link = "band"
    else:
        if within:
            groups.append(within)
            names.append("within")
        if between:
            groups.append(between)
            names.append("between")
    label = "I={" + ",".join(str(i + 1) for i in subset) + "}"
    return FamilyMember(
        family=family,
        label=label,
        basis=basis,
        groups=tuple(groups),
        group_names=tuple(names),
        link=link,
    )


def clustering_union(p, ordered=False):
    """All proper nonempty subsets (tied contrasts) plus a coupled member.

    By default levels are free and the similar member rides along.  With
    ordered=True each split forbids shrinking contrasts less than the
    indicators and the rider is the banded multitask member instead; the
    experiment harness selects over this variant.
    """
    if p > MAX_UNION_TASKS:
        raise InputError(
            f"clustering union enumerates 2^p - 2 subsets; p={p} exceeds the "
            f"guard of {MAX_UNION_TASKS}"
        )
    if p < 2:
        raise InputError("clustering union needs p >= 2")
    members = []
    for mask in range(1, 2 ** p - 1):
        subset = tuple(i for i in range(p) if mask >> i & 1)
        members.append(
            cluster_member(subset, p, tied=True, family="clustering", ordered=ordered)
        )
    members.extend(multitask_family(p) if ordered else similar_family(p))
    return members


def segmentation_union(p, ordered=False):
    """Prefix subsets {1..k} for k = 1..p-1 plus a coupled member.

    ordered has the same meaning as for the clustering union.
    """
    if p < 2:
        raise InputError("segmentation union needs p >= 2")
    members = [
        cluster_member(tuple(range(k)), p, tied=True, family="segmentation",
                       ordered=ordered)
        for k in range(1, p)
    ]
    members.extend(multitask_family(p) if ordered else similar_family(p))
    return members


def collection(name, p):
    """Named member collections used by the CLI and the experiment harness."""
    if name in ("ind", "independent", "singletask"):
        return independent_family(p)
    if name == "similar":
        return similar_family(p)
    if name in ("cluster", "clustering"):
        return clustering_union(p)
    if name == "segmentation":
        return segmentation_union(p)
    if name == "union":
        combined = (
            independent_family(p)
            + similar_family(p)
            + clustering_union(p)
            + segmentation_union(p)
        )
        # segmentation splits are a subset of the clustering splits and
        # "similar" rides along in both unions; keep the first of each label
        seen = set()
        members = []
        for m in combined:
            if m.label not in seen:
                seen.add(m.label)
                members.append(m)
        return members
    raise InputError(
        f"unknown family {name!r}; choose from ind, similar, cluster, segmentation, union"
    )


def family_eigenvalues(name, theta, p=None, subset=None):
    """Eigendecomposition (P, d) of a parametrized similarity matrix.

    independent: theta = (lam_1..lam_p), all > 0; M = diag(lam)/p, so
        d_j = lam_j / p and each lam_j is the single-task level of task j.
    similar: theta = (lam, mu); d = (lam, lam + p mu, ..., lam + p mu) on the
        mean-first basis.
    cluster: theta = (lam, mu, nu) with a proper subset; d = lam on the two
        indicator directions, lam + mu on within-subset contrasts, lam + nu
        on complement contrasts.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if name == "independent":
        if p is None:
            p = theta.size
        if theta.size != p:
            raise InputError(f"independent family needs {p} eigenvalue parameters")
        if np.any(theta <= 0):
            raise InputError("independent family parameters must be positive")
        return np.eye(p), theta / p
    if name == "similar":
        if p is None or p < 1:
            raise InputError("similar family needs p")
        if theta.size != 2 or np.any(theta <= 0):
            raise InputError("similar family needs positive (lam, mu)")
        lam, mu = theta
        d = np.full(p, lam + p * mu)
        d[0] = lam
        return mean_first_basis(p), d
    if name == "cluster":
        if p is None or subset is None:
            raise InputError("cluster family needs p and a subset")
        if theta.size != 3 or np.any(theta <= 0):
            raise InputError("cluster family needs positive (lam, mu, nu)")
        lam, mu, nu = theta
        basis, sub, comp = cluster_basis(subset, p)
        k = len(sub)
        d = np.empty(p)
        d[0] = d[1] = lam
        d[2:1 + k] = lam + mu
        d[1 + k:] = lam + nu
        return basis, d
    raise InputError(f"unknown parametrized family {name!r}")


def similarity_matrix(basis, d):
    """M = P.T @ diag(d) @ P accumulated rank-one so it is exactly symmetric."""
    basis = np.asarray(basis, dtype=float)
    d = np.asarray(d, dtype=float).ravel()
    p = basis.shape[0]
    m = np.zeros((p, p))
    for j in range(p):
        m += d[j] * np.outer(basis[j], basis[j])
    return m


def similar_matrix(lam, mu, p):
    """Display form of the similar family: (lam + p mu) I - mu 1 1^T."""
    if lam <= 0 or mu <= 0:
        raise InputError("similar matrix needs positive (lam, mu)")
    return (lam + p * mu) * np.eye(p) - mu * np.ones((p, p))


# === joint smoother and penalties ============================================


def _shrinkage_columns(spectrum, d, n=None):
    p = len(d)
    s = np.empty((spectrum.n, p))
    for j, dj in enumerate(d):
        s[:, j] = shrinkage_factors(spectrum, p * float(dj), n=n)
    return s


def multitask_smoother_apply(spectrum, basis, d, Y, n=None):
    """Fitted values of the joint smoother, computed column-wise spectrally.

    Rotate tasks by P and samples by Q, shrink column j by
    mu_i / (mu_i + n p d_j), rotate back.  Equivalent to reshaping
    A_M @ vec(Y) without forming any np x np matrix.
    """
    Y = np.asarray(Y, dtype=float)
    basis = np.asarray(basis, dtype=float)
    d = np.asarray(d, dtype=float).ravel()
    p = basis.shape[0]
    if Y.ndim != 2 or Y.shape[1] != p or d.size != p:
        raise InputError(
            f"shape mismatch: Y {Y.shape}, basis {basis.shape}, d {d.shape}"
        )
    yr = (spectrum.q @ Y) @ basis.T
    s = _shrinkage_columns(spectrum, d, n=n)
    return spectrum.q.T @ ((s * yr) @ basis)


def trace_smoother(spectrum, d, n=None):
    """tr(A_M) = sum_j df(p * d_j)."""
    s = _shrinkage_columns(spectrum, np.asarray(d, dtype=float).ravel(), n=n)
    return float(s.sum())


def rotated_diagonal(basis, s_matrix):
    """diag(P S P.T) as a vector: w_j = u_j.T S u_j for basis rows u_j."""
    return np.einsum("jk,kl,jl->j", basis, s_matrix, basis)


def penalty(spectrum, basis, d, s_matrix, n=None):
    """Unbiasing penalty (2/(n p)) sum_j df(p d_j) (P S P.T)_jj.

    Accepts any symmetric S, including indefinite covariance estimates; the
    expression is linear in S.
    """
    basis = np.asarray(basis, dtype=float)
    d = np.asarray(d, dtype=float).ravel()
    s_matrix = np.asarray(s_matrix, dtype=float)
    p = basis.shape[0]
    n_eff = spectrum.n if n is None else int(n)
    if s_matrix.shape != (p, p):
        raise InputError(f"S must be ({p}, {p}), got {s_matrix.shape}")
    if not np.allclose(s_matrix, s_matrix.T, atol=1e-10, rtol=0.0):
        raise InputError("S must be symmetric")
    w = rotated_diagonal(basis, s_matrix)
    shr = _shrinkage_columns(spectrum, d, n=n)
    dfs = shr.sum(axis=0)
    return float(2.0 / (n_eff * p) * (dfs * w).sum())


# === selection ===============================================================


@dataclass(frozen=True)
class MultiTaskFit:
    """Outcome of a grid selection.

    criterion_value is the minimized objective: the penalized criterion
    ||fitted - Y||_F^2 + 2 tr(A_M (S (x) I_n)) when objective == 'penalized',
    or the realized error ||fitted - f||_F^2 when objective == 'oracle'
    (penalty_value is 0 there).  All values are unnormalized; divide by n*p
    for the per-entry scale.
    """

    fitted: np.ndarray
    family: str
    label: str
    basis: np.ndarray
    groups: tuple
    group_names: tuple
    d: np.ndarray
    lambda_eff: np.ndarray
    per_direction_df: np.ndarray
    residual_value: float
    penalty_value: float
    criterion_value: float
    objective: str = "penalized"


def _band_argmin(tot0, tot1, lambdas, cap):
    """Joint argmin of tot0[i] + tot1[j] over pairs with lam_j in [lam_i, cap*lam_i].

    Ties resolve toward larger (lam_i, lam_j), matching the 1-d convention.
    The diagonal j = i is always feasible (cap >= 1), so a minimum exists.
    """
    lam = lambdas
    with np.errstate(invalid="ignore"):
        hi = cap * lam
    # inf * 0 is nan: an unbounded cap leaves lam_j free above 0, a finite
    # cap pins lam_j to 0 when lam_i is 0
    hi = np.where(np.isnan(hi), np.inf if np.isinf(cap) else 0.0, hi)
    allowed = (lam[None, :] >= lam[:, None]) & (lam[None, :] <= hi[:, None])
    total = np.where(allowed, tot0[:, None] + tot1[None, :], np.inf)
    flipped = total[::-1, ::-1]
    fi, fj = np.unravel_index(int(np.argmin(flipped)), flipped.shape)
    i = total.shape[0] - 1 - fi
    j = total.shape[1] - 1 - fj
    return [i, j], [float(tot0[i]), float(tot1[j])]


def _member_argmin(member, lambdas, series):
    """Minimize the summed per-group criterion series under the member's link.

    series: one (G,) array per group, already including any penalty part.
    Returns (indices per group, minima per group); free links minimize each
    series alone, a band link does the constrained joint search.
    """
    if member.link == "band":
        if len(series) != 2:
            raise InputError(
                f"band member {member.label} needs exactly 2 groups, has {len(series)}"
            )
        return _band_argmin(series[0], series[1], lambdas, member.cap)
    idx = [argmin_prefer_larger(tot) for tot in series]
    return idx, [float(series[g_i][i]) for g_i, i in enumerate(idx)]


def _group_series(per_column, groups, extra_per_group=None):
    """Per-group criterion series: column sums plus optional per-group terms."""
    series = []
    for g_i, g in enumerate(groups):
        tot = per_column[:, list(g)].sum(axis=1)
        if extra_per_group is not None:
            tot = tot + extra_per_group[g_i]
        series.append(tot)
    return series


def _group_argmin(per_column, groups, extra_per_group=None):
    """Independent per-group minimization (free-link members)."""
    series = _group_series(per_column, groups, extra_per_group)
    idx = [argmin_prefer_larger(tot) for tot in series]
    return idx, [float(series[g_i][i]) for g_i, i in enumerate(idx)]


def _assemble_fit(spectrum, member, table, yr, idx, objective, resid_val, pen_val, crit_val):
    p = member.p
    col_idx = np.empty(p, dtype=int)
    for g_i, g in enumerate(member.groups):
        for j in g:
            col_idx[j] = idx[g_i]
    s_cols = table.s[col_idx].T                      # (n, p)
    fitted = spectrum.q.T @ ((s_cols * yr) @ member.basis)
    lam_eff = table.lambdas[col_idx]
    return MultiTaskFit(
        fitted=fitted,
        family=member.family,
        label=member.label,
        basis=member.basis,
        groups=member.groups,
        group_names=member.group_names,
        d=lam_eff / p,
        lambda_eff=lam_eff,
        per_direction_df=table.df[col_idx],
        residual_value=resid_val,
        penalty_value=pen_val,
        criterion_value=crit_val,
        objective=objective,
    )


def select_model(spectrum, Y, members, s_matrix, table=None, refine=1):
    """Penalized grid selection over one or more family members.

    Each eigenvalue group is minimized independently over the shared lam
    grid (ties toward larger lam); members are compared by (criterion,
    penalty, enumeration order).  This equals exhaustive enumeration of the
    Cartesian parameter grid.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise InputError(f"Y must be (n, p), got {Y.shape}")
    n, p = Y.shape
    if n != spectrum.n:
        raise InputError(f"Y has {n} rows but the spectrum has n={spectrum.n}")
    members = list(members)
    if not members:
        raise InputError("no family members to select from")
    s_matrix = np.asarray(s_matrix, dtype=float)
    if s_matrix.shape != (p, p):
        raise InputError(f"S must be ({p}, {p}), got {s_matrix.shape}")
    if table is None:
        table = smoother_table(spectrum, refine=refine)

    yq = spectrum.q @ Y
    best = None
    for member in members:
        if member.p != p:
            raise InputError(f"member {member.label} has p={member.p}, data has p={p}")
        yr = yq @ member.basis.T
        resid_cols = table.resid_w @ (yr * yr)       # (G, p)
        w = rotated_diagonal(member.basis, s_matrix)
        pen_series = [2.0 * table.df * float(w[list(g)].sum()) for g in member.groups]
        series = _group_series(resid_cols, member.groups, extra_per_group=pen_series)
        idx, _ = _member_argmin(member, table.lambdas, series)
        resid_val = 0.0
        pen_val = 0.0
        for g_i, g in enumerate(member.groups):
            resid_val += float(resid_cols[idx[g_i], list(g)].sum())
            pen_val += float(pen_series[g_i][idx[g_i]])
        crit = resid_val + pen_val
        key = (crit, pen_val)
        if best is None or key < best[0]:
            best = (key, member, yr, idx, resid_val, pen_val, crit)
    key, member, yr, idx, resid_val, pen_val, crit = best
    return _assemble_fit(
        spectrum, member, table, yr, idx, "penalized", resid_val, pen_val, crit
    )


def oracle_select(spectrum, Y, f_true, members, table=None, refine=1):
    """Grid choice minimizing the realized error ||fitted - f||_F^2.

    Simulation-only baseline: requires the true means.  Decomposes across
    groups exactly like the penalized criterion.
    """
    Y = np.asarray(Y, dtype=float)
    f_true = np.asarray(f_true, dtype=float)
    if Y.shape != f_true.shape:
        raise InputError(f"Y {Y.shape} and f {f_true.shape} differ")
    n, p = Y.shape
    members = list(members)
    if table is None:
        table = smoother_table(spectrum, refine=refine)

    yq = spectrum.q @ Y
    fq = spectrum.q @ f_true
    best = None
    for member in members:
        yr = yq @ member.basis.T
        fr = fq @ member.basis.T
        # per-column realized error at every lam:
        #   sum_i (s yr - fr)^2 = s^2 yr^2 - 2 s yr fr + fr^2
        err_cols = (
            table.s_sq @ (yr * yr)
            - 2.0 * (table.s @ (yr * fr))
            + (fr * fr).sum(axis=0)[None, :]
        )
        idx, mins = _member_argmin(
            member, table.lambdas, _group_series(err_cols, member.groups)
        )
        err = float(sum(mins))
        if best is None or (err, ) < best[0]:
            best = ((err, ), member, yr, idx, err)
    _, member, yr, idx, err = best
    resid_cols = table.resid_w @ (yr * yr)
    resid_val = 0.0
    for g_i, g in enumerate(member.groups):
        resid_val += float(resid_cols[idx[g_i], list(g)].sum())
    return _assemble_fit(spectrum, member, table, yr, idx, "oracle", resid_val, 0.0, err)


def criterion_table(spectrum, Y, members, s_matrix, table=None, refine=1):
    """Per-grid-point breakdown of the selection criterion, for reporting.

    One row per (member, group, lam): residual and penalty contributions of
    that group at that lam, plus whether the row is the group's argmin.
    """
    Y = np.asarray(Y, dtype=float)
    s_matrix = np.asarray(s_matrix, dtype=float)
    if table is None:
        table = smoother_table(spectrum, refine=refine)
    yq = spectrum.q @ Y
    rows = []
    for member in members:
        yr = yq @ member.basis.T
        resid_cols = table.resid_w @ (yr * yr)
        w = rotated_diagonal(member.basis, s_matrix)
        pen_series = [2.0 * table.df * float(w[list(g)].sum()) for g in member.groups]
        series = _group_series(resid_cols, member.groups, extra_per_group=pen_series)
        idx, _ = _member_argmin(member, table.lambdas, series)
        for g_i, g in enumerate(member.groups):
            rg = resid_cols[:, list(g)].sum(axis=1)
            pg = pen_series[g_i]
            tot = series[g_i]
            chosen = idx[g_i]
            for k in range(table.size):
                rows.append({
                    "family": member.family,
                    "member": member.label,
                    "group": member.group_names[g_i],
                    "lambda_eff": float(table.lambdas[k]),
                    "df": float(table.df[k]),
                    "residual": float(rg[k]),
                    "penalty": float(pg[k]),
                    "total": float(tot[k]),
                    "chosen": int(k == chosen),
                })
    return rows


# === closed-form risk ========================================================


def oracle_bias_variance(spectrum, f_true, sigma, basis, d, n=None):
    """Exact decomposition of E||fitted - f||_F^2 for a fixed M.

    bias = sum_{i,j} (1 - s_ij)^2 (Q f P.T)_ij^2,
    variance = sum_{i,j} s_ij^2 (P Sigma P.T)_jj,
    with s_ij = mu_i / (mu_i + n p d_j).
    """
    f_true = np.asarray(f_true, dtype=float)
    basis = np.asarray(basis, dtype=float)
    d = np.asarray(d, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float)
    p = basis.shape[0]
    if f_true.ndim != 2 or f_true.shape[1] != p:
        raise InputError(f"f must be (n, {p}), got {f_true.shape}")
    fr = (spectrum.q @ f_true) @ basis.T
    s = _shrinkage_columns(spectrum, d, n=n)
    bias = float((((1.0 - s) * fr) ** 2).sum())
    w = rotated_diagonal(basis, sigma)
    variance = float(((s * s).sum(axis=0) * w).sum())
    return bias, variance
