#!/usr/bin/env python3
"""
Dense real matrix arithmetic for the harness.

Matrices and vectors are float64 numpy arrays. Two norms carry everything
else: the operator norm (largest singular value) and the Schatten p-norm
(l_p norm of the singular values). Diads follow one fixed orientation:
``outer(u, v)`` is the matrix ``v u^T``, so ``outer(u, v) @ x == <u, x> v``.
"""

import math
from typing import Any, Dict, Optional, Tuple

import numpy as np

from utils.logger import get_logger

logger = get_logger(__name__)

BACKENDS = ("numpy", "jacobi")
NORM_METHODS = BACKENDS + ("power",)

_settings: Dict[str, Any] = {
    "backend": "numpy",
    "jacobi_tol": 1e-15,
    "jacobi_max_sweeps": 100,
    "power_max_iter": 10_000,
    "power_rel_tol": 1e-12,
}


class LinalgError(ValueError):
    """Raised when an input violates a linear-algebra precondition."""


class DimensionMismatchError(LinalgError):
    """Raised when operand shapes are incompatible."""


def configure_linalg(**settings: Any) -> Dict[str, Any]:
    """Update process-wide defaults (backend, Jacobi and power-iteration limits); returns the previous values."""
    unknown = set(settings) - set(_settings)
    if unknown:
        raise LinalgError(f"Unknown linalg settings: {sorted(unknown)}")
    backend = settings.get("backend")
    if backend is not None and backend not in NORM_METHODS:
        raise LinalgError(f"Unknown eigen backend: {backend}")
    previous = dict(_settings)
    _settings.update({k: v for k, v in settings.items() if v is not None})
    return previous


def linalg_settings() -> Dict[str, Any]:
    return dict(_settings)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise LinalgError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LinalgError(f"{name} has non-finite entries")
    return arr


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Return ``a`` as a finite 1-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise LinalgError(f"{name} must be a non-empty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LinalgError(f"{name} has non-finite entries")
    return arr


def _require_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    return a


def identity(d: int) -> np.ndarray:
    """Identity matrix of size ``d``."""
    return np.eye(d, dtype=np.float64)


def basis_vector(d: int, i: int) -> np.ndarray:
    """Standard basis vector e_i in R^d (0-based index)."""
    e = np.zeros(d, dtype=np.float64)
    e[i] = 1.0
    return e


def outer(u, v) -> np.ndarray:
    """Diad u (x) v, i.e. the matrix M with M[r, c] = v[r] * u[c]."""
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.shape != v.shape:
        raise DimensionMismatchError(f"diad operands differ in dimension: {u.shape[0]} vs {v.shape[0]}")
    return np.outer(v, u)


def trace(a) -> float:
    """Sum of the diagonal entries of a square matrix."""
    a = _require_square(a)
    return float(np.trace(a))


def jacobi_eigh(s, tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(w, V)`` with eigenvalues ascending and eigenvectors in the
    columns of ``V``. Only the symmetric part of ``s`` is used.
    """
    tol = _settings["jacobi_tol"] if tol is None else tol
    max_sweeps = _settings["jacobi_max_sweeps"] if max_sweeps is None else max_sweeps
    a = _require_square(s)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n, dtype=np.float64)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    for sweep in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s_ = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s_ * col_q
                a[:, q] = s_ * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s_ * row_q
                a[q, :] = s_ * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s_ * vec_q
                v[:, q] = s_ * vec_p + c * vec_q
    else:
        logger.warning(f"Jacobi eigensolver hit {max_sweeps} sweeps without converging (n={n})")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def symmetric_eigenvalues(s, backend: str = "numpy") -> np.ndarray:
    """Eigenvalues (ascending) of the symmetric part of ``s``."""
    a = _require_square(s)
    sym = 0.5 * (a + a.T)
    if backend == "numpy":
        return np.linalg.eigvalsh(sym)
    if backend == "jacobi":
        return jacobi_eigh(sym)[0]
    raise LinalgError(f"Unknown eigen backend: {backend}")


def singular_values(a, backend: str = "numpy") -> np.ndarray:
    """Singular values of ``a`` in descending order."""
    a = as_matrix(a)
    if backend == "numpy":
        return np.linalg.svd(a, compute_uv=False)
    if backend == "jacobi":
        w = jacobi_eigh(a.T @ a)[0]
        return np.sqrt(np.clip(w, 0.0, None))[::-1]
    raise LinalgError(f"Unknown eigen backend: {backend}")


def power_operator_norm(
    a,
    rng: Optional[np.random.Generator] = None,
    max_iter: Optional[int] = None,
    rel_tol: Optional[float] = None,
) -> float:
    """Largest singular value by power iteration on A^T A from a random start."""
    max_iter = _settings["power_max_iter"] if max_iter is None else max_iter
    rel_tol = _settings["power_rel_tol"] if rel_tol is None else rel_tol
    a = as_matrix(a)
    rng = rng if rng is not None else np.random.default_rng(0)
    gram = a.T @ a
    x = rng.standard_normal(gram.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = gram @ x
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            return 0.0
        x = y / norm_y
        lam_next = float(x @ gram @ x)
        if abs(lam_next - lam) <= rel_tol * lam_next:
            lam = lam_next
            break
        lam = lam_next
    else:
        logger.debug(f"power iteration used all {max_iter} iterations")
    return math.sqrt(max(lam, 0.0))


def operator_norm(a, method: Optional[str] = None, rng: Optional[np.random.Generator] = None) -> float:
    """
    Operator (spectral) norm of a square matrix.

    ``method`` is ``numpy`` (LAPACK SVD), ``jacobi`` (cyclic Jacobi on
    A^T A, the reference answer) or ``power`` (power iteration); the
    configured default applies when omitted.
    """
    a = _require_square(a)
    method = _settings["backend"] if method is None else method
    if method == "power":
        return power_operator_norm(a, rng=rng)
    return float(singular_values(a, backend=method)[0])


def top_singular_pair(a) -> Tuple[float, np.ndarray, np.ndarray]:
    """Largest singular value with its left and right singular vectors."""
    a = as_matrix(a)
    u, s, vt = np.linalg.svd(a)
    # numpy sorts descending, so index 0 is the first of any tied maxima
    return float(s[0]), u[:, 0], vt[0]


def schatten_norm(a, p: float, backend: str = "numpy") -> float:
    """Schatten p-norm: the l_p norm of the singular values, p >= 1."""
    if p < 1:
        raise LinalgError(f"Schatten norm needs p >= 1, got p={p}")
    a = _require_square(a)
    s = singular_values(a, backend=backend)
    top = float(s[0])
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return top
    return top * float(np.sum((s / top) ** p)) ** (1.0 / p)


def psd_sqrt_schatten(s, p: float, backend: str = "numpy") -> float:
    """||S^{1/2}||_{S_p} for a positive semi-definite S."""
    if p < 1:
        raise LinalgError(f"Schatten norm needs p >= 1, got p={p}")
    w = np.clip(symmetric_eigenvalues(s, backend=backend), 0.0, None)
    roots = np.sqrt(w)
    top = float(roots.max())
    if top == 0.0:
        return 0.0
    return top * float(np.sum((roots / top) ** p)) ** (1.0 / p)


def effective_p(d: int) -> float:
    """The exponent ln d, clamped below at 2."""
    return max(2.0, math.log(d))


def is_psd(s, tol: float = 1e-10, backend: str = "numpy") -> bool:
    """True iff ``s`` is symmetric within ``tol`` and has no eigenvalue below -tol(1+||s||)."""
    try:
        a = _require_square(s)
    except LinalgError as e:
        logger.debug(f"is_psd rejected input: {e}")
        return False
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol * (1.0 + float(np.max(np.abs(a)))):
        return False
    w = symmetric_eigenvalues(a, backend=backend)
    norm = float(np.max(np.abs(w)))
    return bool(w[0] >= -tol * (1.0 + norm))
