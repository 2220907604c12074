"""One-dimensional noise-variance estimation by the minimal-penalty sweep.

For a response vector y and kernel spectrum, the penalized path

    lam_0(C) = argmin_lam (1/n) ||A_lam y - y||^2 + C * pen_min(lam)

is computed over a lam grid for every C on a geometric grid.  The selected
complexity df(lam_0(C)) collapses from near n to a small value as C crosses
the noise level; the estimate is the smallest grid C whose selected df drops
below n / 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, InputError
from .kernel import argmin_prefer_larger, smoother_table

C_GRID_SIZE = 200
C_LO_REL = 1e-4  # c_min = C_LO_REL * vhat
C_HI_REL = 1e2   # c_max = C_HI_REL * vhat


@dataclass(frozen=True)
class CalibrationPath:
    """Per-C trace of the sweep plus the selected point.

    c_grid: ascending candidate penalty levels.
    lambda_at_c, df_at_c: the argmin lam and its df for each C.
    c_hat: the selected C (the variance estimate).
    df_at_c_hat: df at the selection.
    degenerate: True when the jump condition already held at the first grid
        point (e.g. y constant), so c_hat is just the grid floor.
    """

    c_grid: np.ndarray
    lambda_at_c: np.ndarray
    df_at_c: np.ndarray
    c_hat: float
    df_at_c_hat: float
    degenerate: bool = False


def project_responses(Y, z):
    """Project an (n, p) response matrix onto a task direction: Y @ z."""
    Y = np.asarray(Y, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    if Y.ndim != 2 or Y.shape[1] != z.size:
        raise InputError(f"cannot project shape {Y.shape} onto length {z.size}")
    return Y @ z


def default_c_grid(y):
    """Geometric C grid anchored to the crude variance scale of y.

    Returns None when y is exactly constant (zero variance), the degenerate
    case handled by estimate_variance.
    """
    y = np.asarray(y, dtype=float).ravel()
    vhat = float(np.mean((y - y.mean()) ** 2))
    if vhat == 0.0:
        return None
    return np.geomspace(C_LO_REL * vhat, C_HI_REL * vhat, C_GRID_SIZE)


def _residuals(table, spectrum, y):
    # (1/n) ||A_lam y - y||^2 for every lam of the table, spectrally:
    # sum_i (1 - s_i)^2 yhat_i^2 with yhat = Q y.
    yhat_sq = (spectrum.q @ y) ** 2
    return (table.resid_w @ yhat_sq) / table.n


def lambda_path_point(spectrum, y, c, table=None, refine=1):
    """The penalized argmin lam_0(C) for a single penalty level C.

    Ties are resolved toward the larger lam (the smaller df).
    """
    if not (c > 0):
        raise InputError(f"C must be positive, got {c}")
    y = np.asarray(y, dtype=float).ravel()
    if table is None:
        table = smoother_table(spectrum, refine=refine)
    total = _residuals(table, spectrum, y) + c * table.pen
    return float(table.lambdas[argmin_prefer_larger(total)])


def estimate_variance(spectrum, y, c_grid=None, table=None, refine=1):
    """Run the full sweep and locate the complexity jump.

    Args:
        spectrum: KernelSpectrum of the design.
        y: response vector of length n (n >= 4).
        c_grid: optional ascending positive C grid; default anchored to y.
        table: optional precomputed SmootherTable (shared across calls).
        refine: lam-grid refinement when table is None.

    Returns:
        (c_hat, CalibrationPath).  c_hat estimates the noise variance of y.

    Raises:
        CalibrationError: if df(lam_0(C)) >= n/2 for every grid C.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = spectrum.n
    if y.size != n:
        raise InputError(f"response length {y.size} does not match n={n}")
    if n < 4:
        raise InputError(f"need n >= 4 for calibration, got {n}")
    if not np.isfinite(y).all():
        raise InputError("response contains non-finite values")

    if c_grid is None:
        c_grid = default_c_grid(y)
        if c_grid is None:
            # constant response: no noise scale at all
            path = CalibrationPath(
                c_grid=np.array([0.0]),
                lambda_at_c=np.array([np.inf]),
                df_at_c=np.array([0.0]),
                c_hat=0.0,
                df_at_c_hat=0.0,
                degenerate=True,
            )
            return 0.0, path
    c_grid = np.asarray(c_grid, dtype=float).ravel()
    if c_grid.size == 0 or np.any(c_grid <= 0) or np.any(np.diff(c_grid) <= 0):
        raise InputError("c_grid must be strictly increasing and positive")

    if table is None:
        table = smoother_table(spectrum, refine=refine)

    resid = _residuals(table, spectrum, y)
    # totals[k, g] = resid[g] + C_k * pen[g]; argmin per row, ties to larger lam
    totals = resid[None, :] + c_grid[:, None] * table.pen[None, :]
    rev = totals[:, ::-1]
    idx = table.size - 1 - np.argmin(rev, axis=1)
    lam_at_c = table.lambdas[idx]
    df_at_c = table.df[idx]

    below = np.flatnonzero(df_at_c < n / 2.0)
    if below.size == 0:
        raise CalibrationError(
            "no penalty level reached df < n/2 "
            f"(df range [{df_at_c.min():.3g}, {df_at_c.max():.3g}], n={n}); "
            "the C grid is too narrow for this response"
        )
    k = int(below[0])
    path = CalibrationPath(
        c_grid=c_grid,
        lambda_at_c=lam_at_c,
        df_at_c=df_at_c,
        c_hat=float(c_grid[k]),
        df_at_c_hat=float(df_at_c[k]),
        degenerate=(k == 0),
    )
    return float(c_grid[k]), path
