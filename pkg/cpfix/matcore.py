"""Dense complex matrix kernel.

Matrices are plain ``numpy`` complex128 arrays. Every spectrum the toolkit needs is the
spectrum of a Hermitian matrix (including ``A*A`` for norms and nullspaces), so the only
eigensolver is a cyclic Jacobi iteration for complex Hermitian input.

Tolerances are absolute against ``max(1, ||operand||)``.
"""
import logging
from functools import lru_cache

import numpy as np

from .exceptions import NoConvergence, NotHermitian, NotPSD, ShapeMismatch

logger = logging.getLogger(__name__)

CMatrix = np.ndarray

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-10
MAX_SWEEPS = 100

# off-diagonal Frobenius mass (relative) at which a Jacobi sweep loop stops
_OFF_DIAGONAL_STOP = 1e-13


def as_cmatrix(a):
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def scale_of(a):
    """``max(1, ||a||_F)``, the reference scale for absolute tolerances."""
    return max(1.0, float(np.linalg.norm(a)))


def dagger(a):
    return np.conj(a).T


def hermitian_defect(a):
    return float(np.linalg.norm(a - dagger(a)))


def check_hermitian(a, hermitian_tol=HERMITIAN_TOL):
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {a.shape}")
    defect = hermitian_defect(a)
    if defect > hermitian_tol * scale_of(a):
        raise NotHermitian(f"||A - A*|| = {defect:.3e} exceeds tolerance {hermitian_tol:.1e}")
    return (a + dagger(a)) / 2


@lru_cache(maxsize=None)
def _round_robin(n):
    """Disjoint index pairs for each round of a round-robin tournament on ``n`` indices."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append(np.array(pairs, dtype=int).reshape(-1, 2))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_diagonal(a):
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def eig_hermitian(a, hermitian_tol=HERMITIAN_TOL, max_sweeps=MAX_SWEEPS):
    """Eigen-decomposition ``A = U diag(w) U*`` of a Hermitian matrix, ``w`` ascending.

    Each sweep visits every (p, q) pair once; the pairs of one round-robin round are
    disjoint, so their rotations are applied together as a single unitary product.
    """
    a = check_hermitian(a, hermitian_tol)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n <= 1:
        return np.real(np.diag(a)).copy(), v

    fro = float(np.linalg.norm(a))
    skip = 1e-18 * fro
    for sweep in range(max_sweeps + 1):
        if _off_diagonal(a) <= _OFF_DIAGONAL_STOP * fro:
            break
        if sweep == max_sweeps:
            raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps",
                                iterations=max_sweeps)
        for pairs in _round_robin(n):
            p, q = pairs[:, 0], pairs[:, 1]
            z = a[p, q]
            r = np.abs(z)
            active = r > skip
            if not np.any(active):
                continue
            p, q, z, r = p[active], q[active], z[active], r[active]
            phase = np.conj(z / r)
            tau = (np.real(a[q, q]) - np.real(a[p, p])) / (2.0 * r)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c

            g = np.eye(n, dtype=np.complex128)
            g[p, p] = c
            g[p, q] = s
            g[q, p] = -s * phase
            g[q, q] = c * phase
            a = dagger(g) @ a @ g
            a[p, q] = 0.0
            a[q, p] = 0.0
            v = v @ g
        a = (a + dagger(a)) / 2
    logger.debug("Jacobi converged for n=%d after %d sweeps", n, sweep)

    w = np.real(np.diag(a))
    order = np.argsort(w, kind='stable')
    return w[order].copy(), v[:, order]


def op_norm(a):
    """Largest singular value, the square root of the top eigenvalue of ``A*A``."""
    a = as_cmatrix(a)
    if a.size == 0:
        return 0.0
    w, _ = eig_hermitian(dagger(a) @ a)
    return float(np.sqrt(max(w[-1], 0.0)))


def nullspace(matrix, tol):
    """Orthonormal columns spanning the directions ``v`` with ``||L v|| <= tol * max(1, ||L||)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    matrix = as_cmatrix(matrix)
    cols = matrix.shape[1]
    if cols == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    w, u = eig_hermitian(dagger(matrix) @ matrix)
    norm = float(np.sqrt(max(w[-1], 0.0)))
    threshold = tol * max(1.0, norm)
    residuals = np.linalg.norm(matrix @ u, axis=0)
    return u[:, residuals <= threshold]


def min_eigenvalue(a, hermitian_tol=HERMITIAN_TOL):
    a = as_cmatrix(a)
    if a.size == 0:
        return 0.0
    w, _ = eig_hermitian(a, hermitian_tol)
    return float(w[0])


def is_psd(a, tol=1e-9, hermitian_tol=HERMITIAN_TOL):
    return min_eigenvalue(a, hermitian_tol) >= -tol


def psd_sqrt(a, psd_tol=PSD_TOL, hermitian_tol=HERMITIAN_TOL):
    """Hermitian PSD square root; eigenvalues in ``[-psd_tol, 0)`` are clamped to zero."""
    a = as_cmatrix(a)
    if a.size == 0:
        return a.copy()
    w, u = eig_hermitian(a, hermitian_tol)
    if w[0] < -psd_tol * scale_of(a):
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} below -{psd_tol:.1e}")
    root = np.sqrt(np.clip(w, 0.0, None))
    return (u * root) @ dagger(u)


def exp_i_hermitian(h, t=1.0):
    """``exp(i t H)`` for Hermitian ``H``, through its eigen-decomposition."""
    w, u = eig_hermitian(h)
    return (u * np.exp(1j * t * w)) @ dagger(u)


def random_hermitian(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + dagger(g)) / 2


def random_unitary(n, rng):
    """Haar-distributed unitary from the QR factorization of a Ginibre matrix."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def is_unitary(u, tol=1e-9):
    u = as_cmatrix(u)
    return u.shape[0] == u.shape[1] and np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])) <= tol
