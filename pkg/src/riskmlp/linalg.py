"""Minimal dense linear algebra: products, SPD solves, symmetric eigendecomposition.

Matrices are dense 64-bit float numpy arrays in row-major layout. The
eigensolver is a cyclic Jacobi rotation scheme (all matrices here are
small and symmetric); SPD systems are solved by an explicit Cholesky
factorization whose pivot check drives the Levenberg-Marquardt damping
logic upstream.
"""

from __future__ import annotations

import numpy as np

SYMMETRY_TOL = 1e-10
JACOBI_OFFDIAG_TOL = 1e-12


class ShapeError(ValueError):
    """Operand dimensions are incompatible."""


class SymmetryError(ValueError):
    """Matrix is not symmetric within tolerance."""


class DefinitenessError(ValueError):
    """Cholesky factorization hit a non-positive pivot."""


def as_matrix(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate and return a 2-D float64 matrix; entries must be finite."""
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if rows is not None and a.shape[0] != rows:
        raise ShapeError(f"expected {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ShapeError(f"expected {cols} cols, got {a.shape[1]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def mat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def _check_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got {a.shape[0]}x{a.shape[1]}")
    if np.max(np.abs(a - a.T)) > tol:
        raise SymmetryError(f"matrix asymmetric beyond {tol}")
    return a


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L^T = a.

    Raises DefinitenessError when a pivot is <= 0, which callers treat as
    "not positive definite" (the LM trainer responds by raising damping).
    """
    a = _check_symmetric(a)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if d <= 0.0:
            raise DefinitenessError(f"non-positive pivot {d:.3e} at row {j}")
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for symmetric positive-definite a via Cholesky."""
    a = _check_symmetric(a)
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != a.shape[0]:
        raise ShapeError(f"rhs length {b.shape} does not match matrix order {a.shape[0]}")
    L = cholesky(a)
    # forward then backward substitution
    y = np.zeros_like(b)
    for i in range(len(b)):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.zeros_like(b)
    for i in range(len(b) - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def sym_eig(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues descending, eigenvectors as columns, orthonormal).
    Ties are broken by original diagonal position; each eigenvector's first
    nonzero component is made positive so downstream loadings are
    deterministic.
    """
    s = _check_symmetric(s)
    n = s.shape[0]
    a = 0.5 * (s + s.T)  # exact symmetry for the sweep
    v = np.eye(n)
    for _ in range(100):  # sweeps; small matrices converge in a handful
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                off = max(off, abs(apq))
                if abs(apq) < JACOBI_OFFDIAG_TOL:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
                v = v @ rot
        if off < JACOBI_OFFDIAG_TOL:
            break
    diag = np.diag(a).copy()
    order = sorted(range(n), key=lambda i: (-diag[i], i))
    eigvals = diag[order]
    eigvecs = v[:, order]
    for k in range(n):
        col = eigvecs[:, k]
        nz = np.nonzero(col)[0]
        if len(nz) and col[nz[0]] < 0:
            eigvecs[:, k] = -col
    return eigvals, eigvecs
