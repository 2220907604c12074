"""Kernel evaluation and spectral quantities of the ridge smoother.

Everything downstream works in the eigenbasis of the kernel matrix, so this
module owns the decomposition and the scalar functions of it: shrinkage
factors, effective degrees of freedom, the minimal penalty shape, and the
inverse map from a df target back to a regularization level.

Conventions
-----------
The spectrum stores K = Q.T @ diag(mu) @ Q with the rows of Q being the
eigenvectors and mu sorted descending.  The regularization parameter lam
lives in [0, inf]; numpy's inf is used as a first-class sentinel for the
fully-shrunk smoother (A = 0), and lam = 0 means interpolation on the range
of K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError

# Eigenvalues of a kernel matrix in (-CLAMP_REL * mu_max, 0) are treated as
# roundoff and clamped to zero; anything more negative is an error, because
# the default kernel is positive definite in exact arithmetic.
CLAMP_REL = 1e-8

# |df(lam) - target| tolerance of the bisection in lambda_for_df.
DF_TOL = 1e-6


def kernel_eval(x, y):
    """Product of one-dimensional Laplace kernels, prod_j exp(-|x_j - y_j|).

    Args:
        x, y: coordinate vectors of equal dimension.

    Returns:
        A real in (0, 1]; equals 1 iff x == y.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InputError("non-finite coordinates")
    return float(np.exp(-np.abs(x - y).sum()))


def validate_design(x):
    """Check an (n, d) design array: n >= 2, d >= 1, finite entries."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InputError(f"design must be 2-d, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise InputError(f"need at least 2 design points, got {n}")
    if d < 1:
        raise InputError("design dimension must be >= 1")
    if not np.isfinite(x).all():
        raise InputError("design contains non-finite coordinates")
    return x


def kernel_gram(x, z=None):
    """Kernel matrix between the rows of x and the rows of z (default x)."""
    x = np.asarray(x, dtype=float)
    z = x if z is None else np.asarray(z, dtype=float)
    # |x_j - z_j| summed over coordinates, pairwise
    diff = np.abs(x[:, None, :] - z[None, :, :]).sum(axis=2)
    return np.exp(-diff)


@dataclass(frozen=True)
class KernelSpectrum:
    """Eigendecomposition K = Q.T @ diag(eigenvalues) @ Q.

    eigenvalues: nonnegative, sorted descending.
    q: orthogonal matrix whose ROWS are the eigenvectors.
    n: matrix size.
    jitter_applied: the ridge delta added to K before decomposing (0 if none).
    """

    eigenvalues: np.ndarray
    q: np.ndarray
    n: int
    jitter_applied: float = 0.0

    @property
    def rank(self):
        return int(np.count_nonzero(self.eigenvalues > 0))

    def reconstruct(self):
        return self.q.T @ (self.eigenvalues[:, None] * self.q)


def spectrum_from_matrix(k, jitter=0.0):
    """Decompose a symmetric kernel matrix into a KernelSpectrum.

    Negative eigenvalues above -CLAMP_REL * mu_max are clamped to zero.  If
    anything is more negative, the matrix gets one chance with jitter * I
    added (when jitter > 0); otherwise a NumericError carries the diagnostics.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise InputError(f"kernel matrix must be square, got {k.shape}")
    if not np.allclose(k, k.T, atol=1e-12, rtol=0.0):
        raise InputError("kernel matrix is not symmetric")
    n = k.shape[0]

    applied = 0.0
    try:
        w, v = np.linalg.eigh(k)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    mu_max = float(w[-1])
    tol = CLAMP_REL * max(mu_max, 0.0)
    if w[0] < -tol and jitter > 0.0:
        applied = float(jitter)
        w, v = np.linalg.eigh(k + applied * np.eye(n))
        mu_max = float(w[-1])
        tol = CLAMP_REL * max(mu_max, 0.0)
    if w[0] < -tol:
        raise NumericError(
            "kernel matrix has eigenvalue {:.3e} below -{:.3e}; "
            "min/max eigenvalues {:.3e}/{:.3e}".format(w[0], tol, w[0], mu_max)
        )
    w = np.where(w < 0.0, 0.0, w)

    order = np.argsort(w)[::-1]
    mu = np.ascontiguousarray(w[order])
    q = np.ascontiguousarray(v[:, order].T)
    return KernelSpectrum(eigenvalues=mu, q=q, n=n, jitter_applied=applied)


def kernel_matrix(design, jitter=0.0, kernel=None):
    """Build and decompose the kernel matrix of a design.

    Args:
        design: (n, d) array of design points.
        jitter: ridge delta to add only if the decomposition reports
            eigenvalues below the clamping tolerance.
        kernel: optional kernel function k(x, y); defaults to kernel_eval.

    Returns:
        KernelSpectrum of the (possibly jittered) kernel matrix.
    """
    x = validate_design(design)
    if kernel is None:
        k = kernel_gram(x)
    else:
        n = x.shape[0]
        k = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                k[i, j] = k[j, i] = kernel(x[i], x[j])
    return spectrum_from_matrix(k, jitter=jitter)


# === scalar smoother quantities ==============================================


def _check_lambda(lam):
    lam = float(lam)
    if math.isnan(lam) or lam < 0.0:
        raise InputError(f"lambda must be in [0, inf], got {lam}")
    return lam


def shrinkage_factors(spectrum, lam, n=None):
    """Eigenvalues s_i = mu_i / (mu_i + n * lam) of the smoother A_lam.

    lam = 0 gives s_i = 1 wherever mu_i > 0 and s_i = 0 on the null space of
    K (the interpolation limit); lam = inf gives exactly 0.
    """
    lam = _check_lambda(lam)
    n = spectrum.n if n is None else int(n)
    mu = spectrum.eigenvalues
    if math.isinf(lam):
        return np.zeros_like(mu)
    denom = mu + n * lam
    return np.divide(mu, denom, out=np.zeros_like(mu), where=denom > 0.0)


def df(spectrum, lam, n=None):
    """Effective degrees of freedom tr(A_lam) = sum_i mu_i/(mu_i + n lam)."""
    return float(shrinkage_factors(spectrum, lam, n=n).sum())


def pen_min(spectrum, lam, n=None):
    """Minimal-penalty shape (2 tr(A) - tr(A.T A)) / n at this lam."""
    n_eff = spectrum.n if n is None else int(n)
    s = shrinkage_factors(spectrum, lam, n=n)
    return float((2.0 * s.sum() - (s * s).sum()) / n_eff)


def apply_smoother(spectrum, lam, y, n=None):
    """A_lam @ y computed spectrally (never forms the dense inverse)."""
    y = np.asarray(y, dtype=float)
    s = shrinkage_factors(spectrum, lam, n=n)
    if y.ndim == 1:
        return spectrum.q.T @ (s * (spectrum.q @ y))
    return spectrum.q.T @ (s[:, None] * (spectrum.q @ y))


# === df inversion and grids ==================================================


def lambdas_for_dfs(spectrum, targets, n=None, tol=DF_TOL):
    """Invert df(lam) at several targets at once by vectorized bisection.

    Targets must lie in [0, rank(K)].  Endpoints are exact: target 0 maps to
    the inf sentinel, target rank(K) maps to 0.  Interior targets are solved
    to |df(lam) - target| <= tol.
    """
    n = spectrum.n if n is None else int(n)
    targets = np.asarray(targets, dtype=float)
    mu = spectrum.eigenvalues[spectrum.eigenvalues > 0.0]
    rank = mu.size
    if targets.size and (targets.min() < 0.0 or targets.max() > rank + 1e-12):
        raise InputError(
            f"df targets must lie in [0, rank(K)={rank}], "
            f"got range [{targets.min()}, {targets.max()}]"
        )

    def df_of(lams):
        # (T,) lams -> (T,) dfs, broadcasting over the positive spectrum
        return (mu[None, :] / (mu[None, :] + n * lams[:, None])).sum(axis=1)

    out = np.empty(targets.shape)
    out[targets <= 0.0] = np.inf
    out[targets >= rank - 1e-12] = 0.0
    interior = (targets > 0.0) & (targets < rank - 1e-12)
    if not interior.any():
        return out

    t = targets[interior]
    lo = np.zeros_like(t)
    hi = np.ones_like(t)
    for _ in range(400):
        mask = df_of(hi) > t
        if not mask.any():
            break
        hi[mask] *= 10.0
    else:
        raise NumericError("df bisection could not bracket the targets")

    lam = 0.5 * (lo + hi)
    for _ in range(300):
        val = df_of(lam)
        if np.all(np.abs(val - t) <= tol):
            break
        high = val > t  # df too large -> lam too small
        lo = np.where(high, lam, lo)
        hi = np.where(high, hi, lam)
        lam = 0.5 * (lo + hi)
    else:
        raise NumericError("df bisection did not converge")
    out[interior] = lam
    return out


def lambda_for_df(spectrum, target_df, n=None, tol=DF_TOL):
    """Scalar inverse of df: the lam with df(lam) = target_df."""
    return float(lambdas_for_dfs(spectrum, np.array([float(target_df)]), n=n, tol=tol)[0])


def lambda_grid(spectrum, refine=1, n=None):
    """Ascending lam grid hitting every df target 0, 1/refine, ..., rank(K).

    The grid always contains the exact endpoints 0 (interpolation) and inf
    (zero fit), so selection can reach both extremes.
    """
    refine = int(refine)
    if refine < 1:
        raise InputError("refine must be a positive integer")
    rank = spectrum.rank
    steps = int(math.ceil(rank * refine))
    targets = np.unique(np.concatenate([np.arange(steps + 1) / refine, [float(rank)]]))
    lams = lambdas_for_dfs(spectrum, targets, n=n)
    return np.sort(lams)


@dataclass(frozen=True)
class SmootherTable:
    """Shrinkage quantities precomputed over a lam grid.

    lambdas: (G,) ascending, may end with inf.
    s: (G, n) shrinkage factors; s_sq = s**2; resid_w = (1 - s)**2.
    df: (G,) traces; pen: (G,) minimal-penalty shapes.
    """

    lambdas: np.ndarray
    n: int
    s: np.ndarray
    s_sq: np.ndarray
    resid_w: np.ndarray
    df: np.ndarray
    pen: np.ndarray

    @property
    def size(self):
        return self.lambdas.size


def smoother_table(spectrum, lambdas=None, refine=1, n=None):
    """Precompute shrinkage tables over a lam grid (default: df-integer grid)."""
    n = spectrum.n if n is None else int(n)
    if lambdas is None:
        lambdas = lambda_grid(spectrum, refine=refine, n=n)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise InputError("empty lambda grid")
    if np.any(np.diff(lambdas) < 0):
        raise InputError("lambda grid must be ascending")
    mu = spectrum.eigenvalues
    s = np.empty((lambdas.size, mu.size))
    finite = np.isfinite(lambdas)
    if finite.any():
        denom = mu[None, :] + n * lambdas[finite, None]
        s[finite] = np.divide(
            np.broadcast_to(mu, denom.shape), denom,
            out=np.zeros_like(denom), where=denom > 0.0,
        )
    s[~finite] = 0.0
    s_sq = s * s
    resid_w = (1.0 - s) ** 2
    dfs = s.sum(axis=1)
    pens = (2.0 * dfs - s_sq.sum(axis=1)) / n
    return SmootherTable(
        lambdas=lambdas, n=n, s=s, s_sq=s_sq, resid_w=resid_w, df=dfs, pen=pens
    )


def argmin_prefer_larger(values):
    """Index of the minimum, ties resolved toward the LAST (largest-lam) entry."""
    values = np.asarray(values)
    return int(values.size - 1 - np.argmin(values[::-1]))
