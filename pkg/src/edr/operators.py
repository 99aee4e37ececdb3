"""Dense Hermitian linear algebra on small Hilbert spaces.

Operators are plain ``numpy`` complex arrays of shape ``(N, N)``. The helpers
here validate them and wrap the handful of spectral primitives the rest of the
package needs.
"""

from __future__ import annotations

import numpy as np

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
RECON_TOL = 1e-9

MIN_DIM = 2
MAX_DIM = 16


class OperatorError(ValueError):
    """Raised for malformed or out-of-contract operators."""


def as_matrix(matrix) -> np.ndarray:
    """Coerce ``matrix`` to a square complex array with ``2 <= N <= 16``."""
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    if not MIN_DIM <= n <= MAX_DIM:
        raise OperatorError(f"dimension {n} outside [{MIN_DIM}, {MAX_DIM}]")
    if not np.all(np.isfinite(arr)):
        raise OperatorError("matrix has non-finite entries")
    return arr


def hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def as_hermitian(matrix, tol: float = HERM_TOL) -> np.ndarray:
    """Validate ``matrix`` as Hermitian and return its symmetrized copy."""
    arr = as_matrix(matrix)
    defect = hermiticity_defect(arr)
    if defect > tol:
        raise OperatorError(f"matrix is not Hermitian (defect {defect:.3g})")
    return 0.5 * (arr + arr.conj().T)


def as_density(rho, psd_tol: float = PSD_TOL, trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a density operator: Hermitian, PSD and unit trace."""
    rho = as_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise OperatorError(f"density operator has trace {tr!r}")
    if not is_psd(rho, psd_tol):
        raise OperatorError("density operator is not positive semidefinite")
    return rho


def eigendecompose(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns) of ``h``.

    LAPACK's ``heevd`` does the work; its convergence failures are re-raised as
    :class:`OperatorError`.
    """
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise OperatorError(f"eigensolver did not converge: {exc}") from exc
    return vals, vecs


def eigenvalues(h: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise OperatorError(f"eigensolver did not converge: {exc}") from exc


def operator_norm(h: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian operator."""
    vals = eigenvalues(h)
    return float(max(abs(vals[0]), abs(vals[-1])))


def min_eigenvalue(h: np.ndarray) -> float:
    return float(eigenvalues(h)[0])


def is_psd(h: np.ndarray, tol: float = PSD_TOL) -> bool:
    if tol < 0:
        raise OperatorError("tolerance must be nonnegative")
    return min_eigenvalue(h) >= -tol


def trace_product(a: np.ndarray, b: np.ndarray) -> float:
    """``Re tr(AB)`` for Hermitian ``a`` and ``b``; the imaginary part must vanish."""
    if a.shape != b.shape:
        raise OperatorError(f"dimension mismatch: {a.shape} vs {b.shape}")
    # tr(AB) = sum_ij A_ij B_ji
    value = np.sum(a * b.T)
    if abs(value.imag) > HERM_TOL:
        raise OperatorError(f"tr(AB) has imaginary part {value.imag:.3g}")
    return float(value.real)


def projector(vector) -> np.ndarray:
    """``|v><v|`` for a unit vector ``v``."""
    v = np.asarray(vector, dtype=complex)
    return np.outer(v, v.conj())


def inverse_sqrt(h: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """``h^{-1/2}`` for positive definite ``h``; raises if ``min eig <= floor``."""
    vals, vecs = eigendecompose(h)
    if vals[0] <= floor:
        raise OperatorError(f"matrix is numerically singular (min eigenvalue {vals[0]:.3g})")
    return (vecs / np.sqrt(vals)) @ vecs.conj().T


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (g + g.conj().T)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with the phase fix of Mezzadri."""
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
