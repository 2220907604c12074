"""Similarity families, the joint smoother, and penalized model selection."""

import itertools
import math

import numpy as np
import pytest

from minpen import (
    InputError,
    collection,
    clustering_union,
    draw_wishart,
    family_eigenvalues,
    independent_family,
    kernel_matrix,
    mean_first_basis,
    multitask_smoother_apply,
    oracle_bias_variance,
    oracle_select,
    penalty,
    segmentation_union,
    select_model,
    shrinkage_factors,
    similar_family,
    similarity_matrix,
    smoother_table,
    spectrum_from_matrix,
    trace_smoother,
)
from minpen.kernel import apply_smoother
from minpen import multitask_family
from minpen.model import (
    MAX_UNION_TASKS,
    FamilyMember,
    _band_argmin,
    cluster_basis,
    cluster_member,
    criterion_table,
    helmert_rows,
    rotated_diagonal,
    similar_matrix,
)

from _oracles import (
    dense_bias_variance,
    dense_multitask_smoother,
    dense_penalty,
    random_orthogonal,
    random_spd,
    unvec,
    vec,
)


def small_problem(seed, n=8, p=3, design_dim=2):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, design_dim))
    spec = kernel_matrix(x)
    Y = rng.standard_normal((n, p))
    return rng, spec, Y


# === bases ===================================================================


def test_helmert_rows_oracle():
    rows = helmert_rows((0, 1, 2), 3)
    c2 = 1.0 / math.sqrt(2.0)
    c6 = 1.0 / math.sqrt(6.0)
    assert np.allclose(rows, [[c2, -c2, 0.0], [c6, c6, -2.0 * c6]], atol=1e-15)


def test_helmert_rows_orthonormal_and_contrast():
    rows = helmert_rows((1, 3, 4, 6), 8)
    assert rows.shape == (3, 8)
    assert np.allclose(rows @ rows.T, np.eye(3), atol=1e-12)
    assert np.allclose(rows.sum(axis=1), 0.0, atol=1e-12)
    assert np.all(rows[:, [0, 2, 5, 7]] == 0.0)  # supported on the index set


def test_mean_first_basis_structure():
    for p in (1, 2, 5):
        b = mean_first_basis(p)
        assert np.allclose(b[0], np.full(p, 1.0 / math.sqrt(p)), atol=1e-15)
        assert np.allclose(b @ b.T, np.eye(p), atol=1e-12)


def test_cluster_basis_structure():
    basis, sub, comp = cluster_basis((0, 2), 5)
    assert sub == (0, 2) and comp == (1, 3, 4)
    c2 = 1.0 / math.sqrt(2.0)
    c3 = 1.0 / math.sqrt(3.0)
    assert np.allclose(basis[0], [c2, 0.0, c2, 0.0, 0.0], atol=1e-15)
    assert np.allclose(basis[1], [0.0, c3, 0.0, c3, c3], atol=1e-15)
    assert np.allclose(basis @ basis.T, np.eye(5), atol=1e-12)
    with pytest.raises(InputError):
        cluster_basis((0, 1, 2), 3)  # not a proper subset
    with pytest.raises(InputError):
        cluster_basis((), 3)


# === family collections ======================================================


def test_family_member_counts_and_groups():
    ind = independent_family(4)
    assert len(ind) == 1 and ind[0].groups == ((0,), (1,), (2,), (3,))
    sim = similar_family(4)
    assert len(sim) == 1 and sim[0].groups == ((0,), (1, 2, 3))
    sim1 = similar_family(1)
    assert sim1[0].groups == ((0,),)


def test_clustering_union_enumerates_subsets():
    members = clustering_union(3)
    labels = [m.label for m in members]
    assert len(labels) == len(set(labels))
    # 2^3 - 2 = 6 proper nonempty subsets plus the similar member
    assert len(members) == 7
    families = {m.family for m in members}
    assert families == {"clustering", "similar"}


def test_segmentation_union_uses_prefixes():
    members = segmentation_union(4)
    assert len(members) == 4  # 3 prefix splits plus similar
    cluster_members = [m for m in members if m.family == "segmentation"]
    subsets = []
    for m in cluster_members:
        # indicator support of the first basis row identifies the subset
        subsets.append(tuple(np.nonzero(m.basis[0])[0]))
    assert subsets == [(0,), (0, 1), (0, 1, 2)]


def test_union_guard_rejects_large_p():
    with pytest.raises(InputError):
        clustering_union(MAX_UNION_TASKS + 1)


def test_collection_name_mapping():
    assert [m.family for m in collection("ind", 3)] == ["independent"]
    assert [m.family for m in collection("similar", 3)] == ["similar"]
    assert len(collection("cluster", 3)) == 7  # 6 subsets + similar
    assert len(collection("segmentation", 3)) == 3  # 2 prefixes + similar
    union = collection("union", 3)
    labels = [m.label for m in union]
    assert len(labels) == len(set(labels))
    # independent + similar + 6 cluster splits; segmentation prefixes dedupe
    assert len(union) == 8
    with pytest.raises(InputError):
        collection("nope", 3)


# === parametrized similarity matrices ========================================


def test_similar_matrix_display_oracle():
    lam, mu = 0.7, 0.3
    m = similar_matrix(lam, mu, 2)
    assert np.allclose(m, [[lam + mu, -mu], [-mu, lam + mu]], atol=1e-15)


def test_family_eigenvalues_similar_matches_display():
    lam, mu, p = 0.7, 0.3, 4
    basis, d = family_eigenvalues("similar", (lam, mu), p=p)
    assert np.array_equal(basis, mean_first_basis(p))
    assert d[0] == lam and np.all(d[1:] == lam + p * mu)
    assert np.allclose(similarity_matrix(basis, d), similar_matrix(lam, mu, p), atol=1e-12)


def test_family_eigenvalues_independent_single_task_reduction():
    # M = diag(lam)/p makes each task's column the single-task smoother at lam_j
    rng, spec, Y = small_problem(0, n=10, p=3)
    lams = np.array([0.05, 0.4, 2.0])
    basis, d = family_eigenvalues("independent", lams)
    assert np.array_equal(basis, np.eye(3))
    assert np.allclose(d, lams / 3.0, atol=1e-15)
    fitted = multitask_smoother_apply(spec, basis, d, Y)
    for j in range(3):
        assert np.allclose(fitted[:, j], apply_smoother(spec, lams[j], Y[:, j]), atol=1e-12)


def test_family_eigenvalues_cluster_layout():
    basis, d = family_eigenvalues("cluster", (1.0, 2.0, 5.0), p=5, subset=(0, 2))
    assert np.allclose(d, [1.0, 1.0, 3.0, 6.0, 6.0], atol=1e-15)
    assert basis.shape == (5, 5)


def test_family_eigenvalues_validation():
    with pytest.raises(InputError):
        family_eigenvalues("independent", (1.0, -1.0))
    with pytest.raises(InputError):
        family_eigenvalues("similar", (1.0,), p=3)
    with pytest.raises(InputError):
        family_eigenvalues("cluster", (1.0, 1.0, 1.0), p=3)  # no subset


def test_similarity_matrix_is_exactly_symmetric():
    rng = np.random.default_rng(1)
    basis = random_orthogonal(4, rng)
    m = similarity_matrix(basis, np.array([0.5, 1.0, 2.0, 4.0]))
    assert np.array_equal(m, m.T)


# === the joint smoother against dense oracles ================================


def test_multitask_smoother_matches_dense_kronecker():
    rng = np.random.default_rng(2)
    for trial in range(12):
        n = int(rng.integers(3, 7))
        p = int(rng.integers(1, 4))
        x = rng.standard_normal((n, 2))
        spec = kernel_matrix(x)
        k = spec.reconstruct()
        basis = random_orthogonal(p, rng)
        d = rng.uniform(0.05, 3.0, size=p)
        m = basis.T @ np.diag(d) @ basis
        Y = rng.standard_normal((n, p))
        dense = unvec(dense_multitask_smoother(k, m) @ vec(Y), n, p)
        assert np.allclose(multitask_smoother_apply(spec, basis, d, Y), dense, atol=1e-8)


def test_multitask_smoother_is_linear_in_y():
    rng, spec, Y = small_problem(3)
    basis = random_orthogonal(3, rng)
    d = np.array([0.1, 0.5, 2.0])
    Z = rng.standard_normal(Y.shape)
    lhs = multitask_smoother_apply(spec, basis, d, 2.0 * Y - 3.0 * Z)
    rhs = 2.0 * multitask_smoother_apply(spec, basis, d, Y) - 3.0 * multitask_smoother_apply(
        spec, basis, d, Z
    )
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_multitask_smoother_infinite_eigenvalue_zeroes_direction():
    rng, spec, Y = small_problem(4)
    basis = mean_first_basis(3)
    d = np.array([0.2, np.inf, np.inf])
    fitted = multitask_smoother_apply(spec, basis, d, Y)
    rotated = fitted @ basis.T
    assert np.allclose(rotated[:, 1:], 0.0, atol=1e-12)


def test_trace_and_penalty_match_dense():
    rng = np.random.default_rng(5)
    for _ in range(8):
        n, p = int(rng.integers(3, 7)), int(rng.integers(1, 4))
        x = rng.standard_normal((n, 2))
        spec = kernel_matrix(x)
        k = spec.reconstruct()
        basis = random_orthogonal(p, rng)
        d = rng.uniform(0.05, 3.0, size=p)
        m = basis.T @ np.diag(d) @ basis
        s = random_spd(p, rng)
        a = dense_multitask_smoother(k, m)
        assert trace_smoother(spec, d) == pytest.approx(np.trace(a), abs=1e-8)
        assert penalty(spec, basis, d, s) == pytest.approx(dense_penalty(k, m, s), abs=1e-10)


def test_penalty_df_additivity():
    # with S = I the penalty is (2/np) sum_j df(p d_j)
    rng, spec, Y = small_problem(6, p=4)
    basis = mean_first_basis(4)
    d = np.array([0.1, 0.5, 0.5, 2.0])
    total = sum(
        float(np.sum(shrinkage_factors(spec, 4.0 * dj))) for dj in d
    )
    assert penalty(spec, basis, d, np.eye(4)) == pytest.approx(
        2.0 * total / (spec.n * 4), abs=1e-12
    )


def test_rotated_diagonal_matches_explicit_product():
    rng = np.random.default_rng(7)
    basis = random_orthogonal(4, rng)
    s = random_spd(4, rng)
    assert np.allclose(rotated_diagonal(basis, s), np.diag(basis @ s @ basis.T), atol=1e-12)


# === selection ===============================================================


def brute_force_best(spec, Y, members, s, table):
    """Cartesian sweep over every member and per-group grid assignment."""
    best = None
    for mem in members:
        yr = (spec.q @ Y) @ mem.basis.T
        w = rotated_diagonal(mem.basis, s)
        for combo in itertools.product(range(table.size), repeat=len(mem.groups)):
            crit = 0.0
            pen = 0.0
            lam_eff = np.empty(mem.p)
            for g_i, g in enumerate(mem.groups):
                k_i = combo[g_i]
                lam_eff[list(g)] = table.lambdas[k_i]
                for j in g:
                    crit += float(table.resid_w[k_i] @ (yr[:, j] ** 2))
                    crit += 2.0 * float(table.df[k_i]) * w[j]
                    pen += 2.0 * float(table.df[k_i]) * w[j]
            if best is None or (crit, pen) < (best[0], best[1]):
                best = (crit, pen, mem.label, lam_eff.copy())
    return best


def test_select_model_equals_exhaustive_search():
    rng = np.random.default_rng(8)
    for trial in range(8):
        n, p = 10, 3
        x = rng.standard_normal((n, 2))
        spec = kernel_matrix(x)
        Y = rng.standard_normal((n, p)) * rng.uniform(0.5, 3.0)
        s = draw_wishart(np.eye(p), 2 * p, rng)
        members = similar_family(p) + independent_family(p) + clustering_union(p)
        table = smoother_table(spec)
        fit = select_model(spec, Y, members, s, table=table)
        crit, pen, label, lam_eff = brute_force_best(spec, Y, members, s, table)
        assert fit.criterion_value == pytest.approx(crit, rel=1e-10)
        assert fit.label == label
        both = np.isinf(lam_eff) & np.isinf(fit.lambda_eff)
        assert np.allclose(
            np.where(both, 0.0, lam_eff), np.where(both, 0.0, fit.lambda_eff), rtol=1e-12
        )


def test_select_model_noiseless_target_interpolates():
    # a reachable target with a zero covariance penalty: residual alone decides,
    # and interpolation (lam_eff = 0) wins in every group
    rng = np.random.default_rng(9)
    n, p = 8, 2
    x = rng.standard_normal((n, 2))
    spec = kernel_matrix(x)
    Y = rng.standard_normal((n, p))
    fit = select_model(spec, Y, similar_family(p), np.zeros((p, p)))
    assert np.all(fit.lambda_eff == 0.0)
    assert np.allclose(fit.fitted, Y, atol=1e-8)


def test_select_model_single_task_reduction():
    # p = 1: selection must agree with the single-task criterion argmin
    rng = np.random.default_rng(10)
    n = 12
    x = rng.standard_normal((n, 2))
    spec = kernel_matrix(x)
    y = rng.standard_normal((n, 1))
    table = smoother_table(spec)
    fit = select_model(spec, y, similar_family(1), np.array([[2.0]]), table=table)
    totals = table.resid_w @ (spec.q @ y[:, 0]) ** 2 + 2.0 * table.df * 2.0
    k_best = int(totals.size - 1 - np.argmin(totals[::-1]))
    assert fit.lambda_eff[0] == table.lambdas[k_best]


def test_select_model_strong_shared_signal_prefers_similar_coupling():
    # identical task columns with a clear signal: the mean direction gets
    # nearly all the degrees of freedom and the contrasts are shut off
    rng = np.random.default_rng(11)
    n, p = 40, 3
    x = rng.standard_normal((n, 4))
    centers = x[rng.choice(n, 4, replace=False)]
    from minpen import kernel_gram

    f = 10.0 * (kernel_gram(x, centers) @ np.ones(4))
    F = np.tile(f[:, None], (1, p))
    Y = F + rng.multivariate_normal(np.zeros(p), 0.5 * np.eye(p), size=n)
    spec = kernel_matrix(x)
    fit = select_model(spec, Y, similar_family(p), 0.5 * np.eye(p))
    assert fit.per_direction_df[0] > 3.0
    assert np.all(fit.per_direction_df[1:] < fit.per_direction_df[0])
    err = np.sum((fit.fitted - F) ** 2) / (n * p)
    assert err < 0.3 * np.sum(F**2) / (n * p)


def test_criterion_table_marks_selected_rows():
    rng, spec, Y = small_problem(12, n=9, p=2)
    members = similar_family(2)
    s = np.eye(2)
    table = smoother_table(spec)
    fit = select_model(spec, Y, members, s, table=table)
    rows = criterion_table(spec, Y, members, s, table=table)
    chosen = [r for r in rows if r["chosen"]]
    assert len(chosen) == len(members[0].groups)
    for r in chosen:
        g_i = members[0].group_names.index(r["group"])
        j = members[0].groups[g_i][0]
        assert r["lambda_eff"] == fit.lambda_eff[j]
    # totals in the table are per-group: summing the chosen rows gives the criterion
    assert sum(r["total"] for r in chosen) == pytest.approx(fit.criterion_value, rel=1e-12)


# === oracle selection and risk decomposition =================================


def test_oracle_select_minimizes_true_error():
    rng = np.random.default_rng(13)
    n, p = 10, 2
    x = rng.standard_normal((n, 2))
    spec = kernel_matrix(x)
    table = smoother_table(spec)
    F = rng.standard_normal((n, p))
    Y = F + 0.5 * rng.standard_normal((n, p))
    members = similar_family(p) + independent_family(p)
    ofit = oracle_select(spec, Y, F, members, table=table)
    best_err = np.sum((ofit.fitted - F) ** 2)

    # no grid assignment anywhere beats the oracle's realized error
    for mem in members:
        for combo in itertools.product(range(table.size), repeat=len(mem.groups)):
            d = np.empty(p)
            for g_i, g in enumerate(mem.groups):
                d[list(g)] = table.lambdas[combo[g_i]] / p
            fitted = multitask_smoother_apply(spec, mem.basis, d, Y)
            assert np.sum((fitted - F) ** 2) >= best_err - 1e-9


def test_oracle_bias_variance_matches_dense():
    rng = np.random.default_rng(14)
    for _ in range(8):
        n, p = int(rng.integers(3, 6)), int(rng.integers(1, 4))
        x = rng.standard_normal((n, 2))
        spec = kernel_matrix(x)
        k = spec.reconstruct()
        basis = random_orthogonal(p, rng)
        d = rng.uniform(0.05, 3.0, size=p)
        m = basis.T @ np.diag(d) @ basis
        F = rng.standard_normal((n, p))
        sigma = random_spd(p, rng)
        b, v = oracle_bias_variance(spec, F, sigma, basis, d)
        bd, vd = dense_bias_variance(k, m, F, sigma)
        assert b == pytest.approx(bd, rel=1e-8, abs=1e-8)
        assert v == pytest.approx(vd, rel=1e-8, abs=1e-8)


def test_oracle_bias_variance_limits():
    rng, spec, _ = small_problem(15, n=6, p=2)
    F = rng.standard_normal((6, 2))
    sigma = 2.0 * np.eye(2)
    basis = mean_first_basis(2)
    b_inf, v_inf = oracle_bias_variance(spec, F, sigma, basis, np.array([np.inf, np.inf]))
    assert b_inf == pytest.approx(np.sum(F**2), rel=1e-12)
    assert v_inf == 0.0
    b0, v0 = oracle_bias_variance(spec, F, sigma, basis, np.array([0.0, 0.0]))
    assert b0 == pytest.approx(0.0, abs=1e-16)  # full-rank kernel: no bias at lam 0
    assert v0 == pytest.approx(2.0 * 2 * spec.rank, rel=1e-10)


def test_bias_invariant_to_contrast_eigenvalue_for_equal_columns():
    # equal task columns have no contrast component, so only d_mean matters
    rng, spec, _ = small_problem(16, n=7, p=3)
    f = rng.standard_normal(7)
    F = np.tile(f[:, None], (1, 3))
    basis = mean_first_basis(3)
    sigma = np.zeros((3, 3))
    b1, _ = oracle_bias_variance(spec, F, sigma, basis, np.array([0.3, 0.1, 0.1]))
    b2, _ = oracle_bias_variance(spec, F, sigma, basis, np.array([0.3, 9.0, 9.0]))
    assert b1 == pytest.approx(b2, rel=1e-10)


# === band-coupled members ====================================================


def masked_pair_min(tot0, tot1, lambdas, cap):
    """Reference enumeration for the band argmin, ties toward larger lams."""
    best = None
    for i, li in enumerate(lambdas):
        for j, lj in enumerate(lambdas):
            if lj < li:
                continue
            if math.isinf(cap):
                hi = math.inf
            elif li == 0.0:
                hi = 0.0
            else:
                hi = cap * li
            if lj > hi:
                continue
            v = tot0[i] + tot1[j]
            # strictly-smaller value wins; exact tie goes to larger (i, j)
            if best is None or v < best[0] or (v == best[0] and (i, j) > best[1]):
                best = (v, (i, j))
    return best


def test_band_argmin_equals_masked_enumeration():
    rng = np.random.default_rng(17)
    lambdas = np.concatenate([[0.0], np.geomspace(0.01, 50.0, 9), [np.inf]])
    for cap in (1.25, 2.0, np.inf):
        for _ in range(40):
            tot0 = rng.standard_normal(lambdas.size)
            tot1 = rng.standard_normal(lambdas.size)
            idx, mins = _band_argmin(tot0, tot1, lambdas, cap)
            value, pair = masked_pair_min(tot0, tot1, lambdas, cap)
            assert tuple(idx) == pair
            assert sum(mins) == pytest.approx(value, rel=1e-12)


def test_band_argmin_tie_break_prefers_larger_lambdas():
    # exact ties everywhere: the largest feasible pair must win
    lambdas = np.array([0.0, 1.0, 2.0, np.inf])
    flat0 = np.zeros(4)
    idx, _ = _band_argmin(flat0, flat0.copy(), lambdas, np.inf)
    assert tuple(idx) == (3, 3)
    idx, _ = _band_argmin(flat0, flat0.copy(), lambdas, 1.5)
    assert tuple(idx) == (3, 3)  # inf pairs with inf under any cap


def test_band_argmin_endpoint_feasibility():
    lambdas = np.array([0.0, 1.0, np.inf])
    # a finite cap pins the second level to 0 whenever the first is 0
    tot0 = np.array([0.0, 10.0, 10.0])
    tot1 = np.array([5.0, 0.0, 0.0])
    idx, _ = _band_argmin(tot0, tot1, lambdas, 1.5)
    assert tuple(idx) == (0, 0)
    # an unbounded cap frees the second level above a zero first level
    idx, _ = _band_argmin(tot0, tot1, lambdas, np.inf)
    assert tuple(idx) == (0, 2)


def test_multitask_family_structure():
    for p in (2, 3, 7):
        (member,) = multitask_family(p)
        assert member.link == "band"
        assert member.cap == pytest.approx(p / (p - 1.0))
        assert member.groups == ((0,), tuple(range(1, p)))
        assert np.array_equal(member.basis, mean_first_basis(p))
    (single,) = multitask_family(1)
    assert single.link == "free" and single.groups == ((0,),)


def test_multitask_band_cap_is_the_positivity_frontier():
    # any eigenvalue pair inside the band comes from positive ridge and
    # spread weights, and the reconstructed matrix couples tasks through
    # a uniform off-diagonal; at the cap the ridge weight hits zero
    rng = np.random.default_rng(18)
    for p in (2, 3, 6):
        cap = p / (p - 1.0)
        for _ in range(20):
            d_mean = float(rng.uniform(0.1, 5.0))
            d_con = float(rng.uniform(d_mean, cap * d_mean))
            lam = p * d_mean - (p - 1.0) * d_con
            mu = d_con - d_mean
            assert lam >= -1e-12 and mu >= -1e-12
            rebuilt = similarity_matrix(
                mean_first_basis(p), np.array([d_mean] + [d_con] * (p - 1))
            )
            explicit = (lam + p * mu) * np.eye(p) - (mu / p) * np.ones((p, p))
            assert np.allclose(rebuilt, explicit, atol=1e-10)
        assert p * d_mean - (p - 1.0) * (cap * d_mean) == pytest.approx(0.0, abs=1e-12)


def test_select_model_band_member_matches_masked_enumeration():
    rng = np.random.default_rng(19)
    n, p = 10, 4
    x = rng.standard_normal((n, 2))
    spec = kernel_matrix(x)
    table = smoother_table(spec, refine=2)
    (member,) = multitask_family(p)
    for _ in range(20):
        Y = rng.standard_normal((n, p)) * rng.uniform(0.5, 3.0)
        s = draw_wishart(np.eye(p), 2 * p, rng)
        fit = select_model(spec, Y, [member], s, table=table)
        yr = (spec.q @ Y) @ member.basis.T
        w = rotated_diagonal(member.basis, s)
        tot0 = table.resid_w @ (yr[:, :1] ** 2) + 2.0 * table.df[:, None] * w[0]
        tot1 = table.resid_w @ (yr[:, 1:] ** 2) @ np.ones(p - 1) + 2.0 * table.df * w[1:].sum()
        value, pair = masked_pair_min(tot0[:, 0], tot1, table.lambdas, member.cap)
        assert fit.criterion_value == pytest.approx(value, rel=1e-10)
        assert fit.lambda_eff[0] == table.lambdas[pair[0]]
        assert fit.lambda_eff[1] == table.lambdas[pair[1]]


def test_band_constraint_binds_on_contrast_heavy_signal():
    # signal lives in the contrasts and the mean direction is pure noise: a
    # free member would unshrink the contrasts below the mean level, the
    # banded member must keep them within the cap
    rng = np.random.default_rng(20)
    n, p = 30, 3
    x = rng.standard_normal((n, 2))
    spec = kernel_matrix(x)
    from minpen import kernel_gram

    g = kernel_gram(x, x[:4])
    contrast_signal = 8.0 * (g @ np.ones(4))
    basis = mean_first_basis(p)
    F = np.outer(contrast_signal, basis[1])
    Y = F + rng.standard_normal((n, p))
    table = smoother_table(spec)
    (band,) = multitask_family(p)
    free = FamilyMember(
        family=band.family, label=band.label, basis=band.basis,
        groups=band.groups, group_names=band.group_names,
    )
    fit_band = select_model(spec, Y, [band], np.eye(p), table=table)
    fit_free = select_model(spec, Y, [free], np.eye(p), table=table)
    assert fit_free.lambda_eff[1] < fit_free.lambda_eff[0]  # engineered inversion
    assert fit_band.lambda_eff[1] >= fit_band.lambda_eff[0]
    assert fit_band.lambda_eff[1] <= band.cap * fit_band.lambda_eff[0]
    assert fit_band.criterion_value >= fit_free.criterion_value - 1e-12


def test_band_member_requires_exactly_two_groups():
    bad = FamilyMember(
        family="similar", label="bad", basis=mean_first_basis(3),
        groups=((0,), (1,), (2,)), group_names=("a", "b", "c"), link="band",
    )
    rng, spec, Y = small_problem(21)
    with pytest.raises(InputError):
        select_model(spec, Y, [bad], np.eye(3))


def test_ordered_cluster_member_keeps_contrasts_above_indicators():
    rng = np.random.default_rng(22)
    n, p = 12, 5
    x = rng.standard_normal((n, 2))
    spec = kernel_matrix(x)
    table = smoother_table(spec)
    member = cluster_member((0, 2), p, ordered=True)
    assert member.link == "band" and math.isinf(member.cap)
    for _ in range(15):
        Y = rng.standard_normal((n, p)) * rng.uniform(0.3, 4.0)
        fit = select_model(spec, Y, [member], np.eye(p), table=table)
        lam_ind = fit.lambda_eff[0]
        lam_con = fit.lambda_eff[2]
        assert lam_con >= lam_ind
        ofit = oracle_select(spec, Y, rng.standard_normal((n, p)), [member], table=table)
        assert ofit.lambda_eff[2] >= ofit.lambda_eff[0]


def test_ordered_unions_swap_rider_and_link():
    ordered = clustering_union(3, ordered=True)
    assert {m.family for m in ordered} == {"clustering", "multitask"}
    for m in ordered:
        if m.family == "clustering":
            assert m.link == "band" and math.isinf(m.cap)
    seg = segmentation_union(4, ordered=True)
    assert seg[-1].family == "multitask"
    assert all(m.link == "band" for m in seg if m.family == "segmentation")
