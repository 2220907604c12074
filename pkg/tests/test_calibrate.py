"""Variance calibration by locating the complexity jump along the C sweep."""

import numpy as np
import pytest

from minpen import (
    CalibrationError,
    InputError,
    estimate_variance,
    kernel_gram,
    kernel_matrix,
    lambda_path_point,
    project_responses,
    spectrum_from_matrix,
)
from minpen.calibrate import C_GRID_SIZE, default_c_grid
from minpen.kernel import df as df_of

GRID_STEP = (1e2 / 1e-4) ** (1.0 / (C_GRID_SIZE - 1))  # multiplicative spacing


def smooth_problem(n, noise_sd, seed, signal_scale=1.0):
    """1-D design with a kernel-expansion target plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2.0, 2.0, size=(n, 1))
    centers = rng.uniform(-2.0, 2.0, size=(4, 1))
    f = signal_scale * (kernel_gram(x, centers) @ np.ones(4))
    y = f + noise_sd * rng.standard_normal(n)
    return kernel_matrix(x), y


# === the C grid ==============================================================


def test_default_c_grid_shape_and_anchoring():
    y = np.array([1.0, -2.0, 3.0, 0.5])
    grid = default_c_grid(y)
    vhat = np.sum((y - y.mean()) ** 2) / y.size
    assert grid.size == C_GRID_SIZE
    assert grid[0] == pytest.approx(1e-4 * vhat, rel=1e-12)
    assert grid[-1] == pytest.approx(1e2 * vhat, rel=1e-12)
    assert np.all(np.diff(np.log(grid)) > 0)


def test_default_c_grid_constant_response():
    assert default_c_grid(np.zeros(5)) is None
    assert default_c_grid(np.full(5, 3.3)) is None


# === the lam path ============================================================


def test_lambda_path_point_limits():
    spec, y = smooth_problem(40, 1.0, seed=0)
    lam_lo = lambda_path_point(spec, y, 1e-10)
    lam_hi = lambda_path_point(spec, y, 1e6)
    assert df_of(spec, lam_lo) > 0.9 * spec.rank  # tiny C: near-interpolation
    assert df_of(spec, lam_hi) <= 1.0  # huge C: essentially no fitting
    with pytest.raises(InputError):
        lambda_path_point(spec, y, 0.0)


# === variance estimation =====================================================


def test_estimate_variance_recovers_noise_level():
    spec, y = smooth_problem(200, np.sqrt(2.0), seed=1)
    c_hat, path = estimate_variance(spec, y)
    assert 1.4 <= c_hat <= 2.7
    assert not path.degenerate
    assert path.df_at_c_hat < spec.n / 2


def test_estimate_variance_zero_response_is_degenerate():
    spec, _ = smooth_problem(10, 1.0, seed=2)
    c_hat, path = estimate_variance(spec, np.zeros(10))
    assert c_hat == 0.0
    assert path.degenerate


def test_estimate_variance_scaling_identity():
    # C_hat(a y) = a^2 C_hat(y) up to the geometric grid spacing
    spec, y = smooth_problem(80, 1.0, seed=3)
    c1, _ = estimate_variance(spec, y)
    a = 7.0
    c2, _ = estimate_variance(spec, a * y)
    ratio = c2 / (a * a * c1)
    assert 1.0 / (GRID_STEP * 1.001) <= ratio <= GRID_STEP * 1.001


def test_estimate_variance_permutation_invariance():
    rng = np.random.default_rng(4)
    spec, y = smooth_problem(60, 1.5, seed=5)
    k = spec.reconstruct()
    perm = rng.permutation(60)
    spec_p = spectrum_from_matrix(k[np.ix_(perm, perm)])
    c1, _ = estimate_variance(spec, y)
    c2, _ = estimate_variance(spec_p, y[perm])
    ratio = c2 / c1
    assert 1.0 / (GRID_STEP * 1.001) <= ratio <= GRID_STEP * 1.001


def test_estimate_variance_is_deterministic():
    spec, y = smooth_problem(50, 1.0, seed=6)
    c1, p1 = estimate_variance(spec, y)
    c2, p2 = estimate_variance(spec, y)
    assert c1 == c2
    assert np.array_equal(p1.lambda_at_c, p2.lambda_at_c)
    assert np.array_equal(p1.df_at_c, p2.df_at_c)


def test_estimate_variance_raises_when_jump_never_happens():
    # Mean-heavy response on a near-identity kernel: interpolation removes a
    # huge residual while the C grid, anchored to the tiny centered variance,
    # cannot pay for even one degree of freedom.  df stays >= n/2 everywhere.
    x = np.array([[0.0], [50.0], [100.0], [150.0]])
    y = np.array([10.0, 10.001, 9.999, 10.0005])
    spec = kernel_matrix(x)
    with pytest.raises(CalibrationError):
        estimate_variance(spec, y)


def test_estimate_variance_tracks_projected_noise():
    # project a 2-task panel onto a direction; the estimate should follow
    # z^T Sigma z
    rng = np.random.default_rng(7)
    n = 300
    x = rng.uniform(-2.0, 2.0, size=(n, 1))
    spec = kernel_matrix(x)
    sigma = np.array([[2.0, 0.5], [0.5, 1.0]])
    chol = np.linalg.cholesky(sigma)
    f = kernel_gram(x, np.zeros((1, 1))) @ np.array([2.0])
    Y = f[:, None] + rng.standard_normal((n, 2)) @ chol.T
    for z in (np.array([1.0, 0.0]), np.array([1.0, 1.0])):
        target = float(z @ sigma @ z)
        c_hat, _ = estimate_variance(spec, project_responses(Y, z))
        assert abs(c_hat - target) < 0.35 * target


def test_path_is_monotone_in_c():
    # larger C never selects a smaller lam (df never increases)
    spec, y = smooth_problem(60, 1.0, seed=8)
    _, path = estimate_variance(spec, y)
    assert np.all(np.diff(path.df_at_c) <= 1e-9)
