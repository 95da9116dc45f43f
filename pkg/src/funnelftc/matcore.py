"""Dense linear algebra for the small (<= 6x6) matrices used by the toolkit.

Eigenvalues of symmetric matrices are computed with cyclic Jacobi rotations;
singular values come from the eigenvalues of the smaller Gram matrix. The
matrices handled here (gain matrices, allocation matrices, auxiliary
candidates) never exceed 6x6, so simplicity and bit-level determinism are
worth more than speed.
"""

import numpy as np

from .errors import ValidationError

# Entrywise tolerance on |m - m^T| for accepting a matrix as symmetric.
SYMMETRY_TOL = 1e-9
# Jacobi sweep convergence: off-diagonal Frobenius norm below this stops.
JACOBI_OFFDIAG_TOL = 1e-12
# Hard cap on Jacobi sweeps; 6x6 symmetric matrices converge in < 10.
JACOBI_MAX_SWEEPS = 60


def as_matrix(m):
    """Validate and return `m` as a finite 2-D float64 array."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"expected a nonempty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix contains non-finite entries")
    return a


def require_square(m):
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def _jacobi_eigvals(a):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = a.copy()
    n = a.shape[0]
    if n == 1:
        return a[0, :1].copy()
    scale = max(1.0, float(np.abs(a).max()))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.square(a - np.diag(np.diag(a)))))
        if off <= JACOBI_OFFDIAG_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # Rotate rows/columns p and q: a <- J^T a J.
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.sort(np.diag(a))


def sym_eigvals(m):
    """All eigenvalues (ascending) of a symmetric matrix.

    The input must be square and symmetric within SYMMETRY_TOL entrywise.
    """
    a = require_square(m)
    if np.abs(a - a.T).max() > SYMMETRY_TOL:
        raise ValidationError("matrix is not symmetric within tolerance")
    return _jacobi_eigvals(0.5 * (a + a.T))


def sym_eig_min(m):
    """Minimum eigenvalue of a symmetric matrix (> 0 iff positive definite)."""
    return float(sym_eigvals(m)[0])


def _gram_eigvals(m):
    a = as_matrix(m)
    if a.shape[0] <= a.shape[1]:
        g = a @ a.T
    else:
        g = a.T @ a
    return _jacobi_eigvals(0.5 * (g + g.T))


def min_singular(m):
    """Smallest singular value (of the min(rows, cols) singular values)."""
    ev = _gram_eigvals(m)
    return float(np.sqrt(max(ev[0], 0.0)))


def spectral_norm(m):
    """Largest singular value, i.e. the induced 2-norm."""
    ev = _gram_eigvals(m)
    return float(np.sqrt(max(ev[-1], 0.0)))


def sym_skew_split(m):
    """Split a square matrix into (symmetric, skew-symmetric) parts.

    Returns (S, K) with S = (m + m^T)/2 and K = (m - m^T)/2, so S + K = m
    exactly and x^T K x = 0 for every vector x.
    """
    a = require_square(m)
    s = 0.5 * (a + a.T)
    k = 0.5 * (a - a.T)
    return s, k
