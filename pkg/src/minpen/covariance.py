"""Reconstruction of the p x p noise covariance from directional variances.

The full estimator runs the one-dimensional calibration on the p canonical
projections Y e_i and the p(p-1)/2 pairwise sums Y (e_i + e_j), then inverts
the polarization identity (the J map).  The basis variant estimates only the
p variances along the rows of a known orthogonal basis P and conjugates the
diagonal back.

The full estimator may be indefinite in small samples; it is kept raw for
use inside penalties (which are linear in the matrix) and a thresholded PSD
version is available as a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibrate import estimate_variance, project_responses
from .errors import CalibrationError, InputError
from .kernel import smoother_table


@dataclass(frozen=True)
class CovarianceEstimate:
    """A symmetric p x p estimate with its raw directional variances.

    method: 'full', 'simple', or 'hm'.
    raw_a_values: direction key -> a(z); keys are (i,) for e_i, (i, j) with
        i < j for e_i + e_j, and ('u', j) for basis rows.
    degenerate_directions: keys whose calibration hit the degenerate floor.
    """

    matrix: np.ndarray
    method: str
    raw_a_values: dict
    degenerate_directions: tuple

    @property
    def p(self):
        return self.matrix.shape[0]

    def psd_projected(self):
        return psd_threshold(self.matrix)


def canonical_directions(p):
    """The ordered projection set: e_1..e_p, then e_i + e_j for i < j."""
    if p < 1:
        raise InputError("p must be >= 1")
    eye = np.eye(p)
    dirs = [((i,), eye[i]) for i in range(p)]
    for i in range(p):
        for j in range(i + 1, p):
            dirs.append(((i, j), eye[i] + eye[j]))
    return dirs


def j_map(a, p):
    """Assemble a symmetric matrix from directional variances.

    a holds the p diagonal variances followed by the p(p-1)/2 pairwise-sum
    variances in the canonical order; the off-diagonal entries come from the
    polarization identity (a_ij - a_i - a_j) / 2.
    """
    a = np.asarray(a, dtype=float).ravel()
    expected = p * (p + 1) // 2
    if a.size != expected:
        raise InputError(f"need {expected} values for p={p}, got {a.size}")
    b = np.zeros((p, p))
    for i in range(p):
        b[i, i] = a[i]
    k = p
    for i in range(p):
        for j in range(i + 1, p):
            val = 0.5 * (a[k] - a[i] - a[j])
            b[i, j] = val
            b[j, i] = val
            k += 1
    return b


def j_inverse(b):
    """Directional variances of a symmetric matrix (inverse of j_map)."""
    b = np.asarray(b, dtype=float)
    _require_symmetric(b)
    p = b.shape[0]
    out = [b[i, i] for i in range(p)]
    for i in range(p):
        for j in range(i + 1, p):
            out.append(b[i, i] + b[j, j] + 2.0 * b[i, j])
    return np.array(out)


def _require_symmetric(s, tol=1e-10):
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError(f"expected a square matrix, got shape {s.shape}")
    if not np.allclose(s, s.T, atol=tol, rtol=0.0):
        raise InputError("matrix is not symmetric")
    return s


def estimate_sigma_full(spectrum, Y, table=None, refine=1):
    """Covariance estimate from all p(p+1)/2 canonical projections.

    Calibration failures are collected across directions and raised together;
    degenerate (floor) directions are flagged, not errors.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise InputError(f"Y must be (n, p), got {Y.shape}")
    p = Y.shape[1]
    if table is None:
        table = smoother_table(spectrum, refine=refine)

    a_values = {}
    degenerate = []
    failures = []
    for key, z in canonical_directions(p):
        try:
            a, path = estimate_variance(spectrum, project_responses(Y, z), table=table)
        except CalibrationError as exc:
            failures.append((key, str(exc)))
            continue
        a_values[key] = a
        if path.degenerate:
            degenerate.append(key)
    if failures:
        names = ", ".join(_direction_name(k) for k, _ in failures)
        raise CalibrationError(
            f"calibration failed for direction(s) {names}: {failures[0][1]}",
            directions=[k for k, _ in failures],
        )

    flat = [a_values[(i,)] for i in range(p)]
    for i in range(p):
        for j in range(i + 1, p):
            flat.append(a_values[(i, j)])
    return CovarianceEstimate(
        matrix=j_map(flat, p),
        method="full",
        raw_a_values=a_values,
        degenerate_directions=tuple(degenerate),
    )


def estimate_sigma_basis(spectrum, Y, basis, method="hm", table=None, refine=1):
    """Covariance estimate diagonal in a known orthogonal basis.

    The variance along each basis row u_j = basis[j] is estimated from the
    projection Y @ u_j, and the result is basis.T @ diag(a) @ basis, so that
    (basis @ Sigma_hat @ basis.T)_jj = a(u_j) exactly.
    """
    Y = np.asarray(Y, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if Y.ndim != 2:
        raise InputError(f"Y must be (n, p), got {Y.shape}")
    p = Y.shape[1]
    if basis.shape != (p, p):
        raise InputError(f"basis must be ({p}, {p}), got {basis.shape}")
    if np.abs(basis @ basis.T - np.eye(p)).max() > 1e-8:
        raise InputError("basis is not orthogonal within 1e-8")
    if method not in ("hm", "simple"):
        raise InputError(f"method must be 'hm' or 'simple', got {method!r}")
    if table is None:
        table = smoother_table(spectrum, refine=refine)

    a = np.empty(p)
    degenerate = []
    failures = []
    raw = {}
    for j in range(p):
        try:
            a[j], path = estimate_variance(
                spectrum, project_responses(Y, basis[j]), table=table
            )
        except CalibrationError as exc:
            failures.append((("u", j), str(exc)))
            continue
        raw[("u", j)] = a[j]
        if path.degenerate:
            degenerate.append(("u", j))
    if failures:
        names = ", ".join(_direction_name(k) for k, _ in failures)
        raise CalibrationError(
            f"calibration failed for direction(s) {names}: {failures[0][1]}",
            directions=[k for k, _ in failures],
        )

    # accumulate rank-one terms so the result is exactly symmetric
    m = np.zeros((p, p))
    for j in range(p):
        m += a[j] * np.outer(basis[j], basis[j])
    return CovarianceEstimate(
        matrix=m, method=method, raw_a_values=raw, degenerate_directions=tuple(degenerate)
    )


def _direction_name(key):
    if key and key[0] == "u":
        return f"u_{key[1] + 1}"
    if len(key) == 1:
        return f"e_{key[0] + 1}"
    return f"e_{key[0] + 1}+e_{key[1] + 1}"


def psd_threshold(s):
    """Project onto the PSD cone by clamping negative eigenvalues at zero."""
    s = _require_symmetric(s)
    w, v = np.linalg.eigh(s)
    w = np.where(w < 0.0, 0.0, w)
    p = s.shape[0]
    out = np.zeros((p, p))
    for k in range(p):
        if w[k] != 0.0:
            out += w[k] * np.outer(v[:, k], v[:, k])
    return out


def matrix_diagnostics(s):
    """(operator norm, condition number, smallest eigenvalue) of a symmetric matrix.

    The condition number is inf unless the matrix is positive definite.
    """
    s = _require_symmetric(s)
    w = np.linalg.eigvalsh(s)
    op_norm = float(np.abs(w).max())
    min_eig = float(w[0])
    cond = float(w[-1] / w[0]) if min_eig > 0.0 else np.inf
    return op_norm, cond, min_eig


# === plain-text serialization ================================================


def sigma_text(s):
    """Serialize a symmetric matrix: 'p=<int>' header, then row-major values."""
    s = _require_symmetric(s)
    p = s.shape[0]
    lines = [f"p={p}"]
    for i in range(p):
        lines.append(" ".join(repr(float(v)) for v in s[i]))
    return "\n".join(lines) + "\n"


def parse_sigma_text(text, source="<string>"):
    """Inverse of sigma_text."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("p="):
        raise InputError(f"{source}: expected a 'p=<int>' header")
    try:
        p = int(lines[0][2:])
    except ValueError as exc:
        raise InputError(f"{source}: bad header {lines[0]!r}") from exc
    if len(lines) != p + 1:
        raise InputError(f"{source}: expected {p} matrix rows, got {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        try:
            vals = [float(tok) for tok in ln.split()]
        except ValueError as exc:
            raise InputError(f"{source}: non-numeric matrix entry") from exc
        if len(vals) != p:
            raise InputError(f"{source}: row with {len(vals)} entries, expected {p}")
        rows.append(vals)
    s = np.array(rows)
    return _require_symmetric(s)


def write_sigma(path, s):
    """Write a symmetric matrix in the plain-text format."""
    text = sigma_text(s)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def read_sigma(path):
    """Read a matrix written by write_sigma."""
    with open(path, "r", encoding="ascii") as fh:
        return parse_sigma_text(fh.read(), source=str(path))
