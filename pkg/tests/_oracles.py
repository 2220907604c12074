"""Dense-matrix reference implementations the fast paths are tested against.

Everything here materializes the full np x np operators that the library
deliberately avoids, so keep n and p tiny when calling in.  Column stacking
throughout: vec(Y) lists task 1's values first.
"""

import numpy as np


def vec(y):
    return np.asarray(y, dtype=float).reshape(-1, order="F")


def unvec(v, n, p):
    return np.asarray(v, dtype=float).reshape((n, p), order="F")


def dense_single_smoother(k, lam):
    """A_lam = K (K + n lam I)^-1 via a solve; lam = inf gives 0."""
    k = np.asarray(k, dtype=float)
    n = k.shape[0]
    if np.isinf(lam):
        return np.zeros_like(k)
    if lam == 0.0:
        return k @ np.linalg.pinv(k, rcond=1e-12)
    return np.linalg.solve((k + n * lam * np.eye(n)).T, k.T).T


def dense_multitask_smoother(k, m):
    """A_M = (M^-1 (x) K) ((M^-1 (x) K) + np I)^-1, materialized."""
    k = np.asarray(k, dtype=float)
    m = np.asarray(m, dtype=float)
    n = k.shape[0]
    p = m.shape[0]
    g = np.kron(np.linalg.inv(m), k)
    return g @ np.linalg.inv(g + n * p * np.eye(n * p))


def dense_penalty(k, m, s, n=None):
    """(2 / np) tr(A_M (S (x) I_n))."""
    k = np.asarray(k, dtype=float)
    n_obs = k.shape[0]
    p = np.asarray(m).shape[0]
    a = dense_multitask_smoother(k, m)
    return 2.0 / (n_obs * p) * float(np.trace(a @ np.kron(s, np.eye(n_obs))))


def dense_bias_variance(k, m, f_true, sigma):
    """(b, v) with b = ||(A_M - I) vec(f)||^2, v = tr(A_M^T A_M (Sigma (x) I))."""
    f_true = np.asarray(f_true, dtype=float)
    n, p = f_true.shape
    a = dense_multitask_smoother(k, m)
    r = (a - np.eye(n * p)) @ vec(f_true)
    b = float(r @ r)
    v = float(np.trace(a.T @ a @ np.kron(sigma, np.eye(n))))
    return b, v


def random_orthogonal(p, rng):
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))[None, :]


def random_spd(p, rng, cond_cap=50.0):
    q = random_orthogonal(p, rng)
    w = rng.uniform(1.0, cond_cap, size=p)
    return (q * w[None, :]) @ q.T
