"""Small dense linear-algebra kernel shared by the control and estimation code.

Everything is float64 numpy. The helpers exist mostly to pin down error
behaviour (dimension checks, SPD failures) in one place.
"""
import numpy as np
from scipy import linalg

__all__ = [
    "NotPositiveDefiniteError",
    "as_matrix",
    "mat_mul",
    "kron_with_identity",
    "spd_solve",
    "is_spd",
    "trace",
    "transpose",
    "frobenius_sq",
    "vec",
    "unvec",
    "spectral_radius",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Cholesky factorization hits a non-positive pivot."""


def as_matrix(a, name="matrix"):
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def mat_mul(a, b):
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def kron_with_identity(v, n=None):
    """Return ``v ⊗ I_n`` (shape n²×n).

    With column-stacked ``vec``, ``kron_with_identity(x).T @ vec(A) == A @ x``.
    """
    v = np.asarray(v, dtype=float).ravel()
    if n is None:
        n = v.size
    if n < 1:
        raise ValueError("n must be at least 1")
    if v.size != n:
        raise ValueError(f"vector has dim {v.size}, expected {n}")
    return np.kron(v.reshape(-1, 1), np.eye(n))


def _check_symmetric(m, rtol=1e-9):
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got {m.shape}")
    scale = max(np.max(np.abs(m)), 1.0) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > rtol * scale:
        raise ValueError("matrix is not symmetric")


def spd_solve(m, b):
    """Solve ``m @ x = b`` for symmetric positive-definite ``m`` via Cholesky."""
    m = as_matrix(m, "M")
    b_arr = np.asarray(b, dtype=float)
    vector_rhs = b_arr.ndim == 1
    b2 = as_matrix(b_arr, "b")
    _check_symmetric(m)
    if b2.shape[0] != m.shape[0]:
        raise ValueError(f"dimension mismatch: {m.shape} vs rhs {b2.shape}")
    try:
        factor = linalg.cho_factor(m, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc
    x = linalg.cho_solve(factor, b2, check_finite=False)
    return x.ravel() if vector_rhs else x


def is_spd(m, tol=0.0):
    """True if ``m`` is symmetric and its smallest eigenvalue exceeds ``tol``."""
    m = np.asarray(m, dtype=float)
    try:
        _check_symmetric(m)
    except ValueError:
        return False
    return bool(np.linalg.eigvalsh((m + m.T) / 2).min() > tol)


def trace(m):
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"trace needs a square matrix, got {m.shape}")
    return float(np.trace(m))


def transpose(m):
    return as_matrix(m).T.copy()


def frobenius_sq(m):
    m = np.asarray(m)
    return float(np.sum(m * m))


def vec(m):
    """Column-stacked vectorization."""
    return np.asarray(m, dtype=float).reshape(-1, order="F")


def unvec(v, n):
    v = np.asarray(v, dtype=float).ravel()
    if v.size % n:
        raise ValueError(f"cannot reshape {v.size} entries into {n} rows")
    return v.reshape(n, -1, order="F")


def spectral_radius(a):
    return float(np.max(np.abs(np.linalg.eigvals(as_matrix(a)))))
