"""Dense complex linear algebra at small fixed dimension.

Matrices and vectors are plain ``numpy`` complex128 arrays. The basis order
for two-qubit objects is |00>, |01>, |10>, |11> with the photon as the first
tensor factor.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

MAX_DIM = 8
HERMITIAN_TOL = 1e-12
STATE_NORM_TOL = 1e-12

PHOTON = 0
ATOM = 1


class LinalgError(ValueError):
    """Raised for shape, finiteness or structure violations."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise LinalgError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError(f"{name} has non-finite entries")
    return m


def as_vector(v, name: str = "vector") -> np.ndarray:
    x = np.asarray(v, dtype=np.complex128)
    if x.ndim != 1:
        raise LinalgError(f"{name} must be 1-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise LinalgError(f"{name} has non-finite entries")
    return x


def as_state(v, name: str = "state") -> np.ndarray:
    """Validate a normalised pure state (norm 1 within 1e-12)."""
    x = as_vector(v, name)
    nrm = np.linalg.norm(x)
    if abs(nrm - 1.0) > STATE_NORM_TOL:
        raise LinalgError(f"{name} is not normalised (norm = {nrm!r})")
    return x


def normalize(v) -> np.ndarray:
    x = as_vector(v)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise LinalgError("cannot normalise the zero vector")
    return x / nrm


def mat_mul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise LinalgError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(a⊗b)[i*db + k, j*db + l] = a[i, j] * b[k, l]``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    return float(np.max(np.abs(a - a.conj().T))) <= tol * scale


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    return a @ b - b @ a


def hermitian_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns.

    Uses the cyclic complex Jacobi kernel. Input must be square, at most
    8x8 and Hermitian within 1e-12.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise LinalgError(f"hermitian_eig needs a square matrix, got {a.shape}")
    if n > MAX_DIM:
        raise LinalgError(f"dimension {n} exceeds the supported maximum {MAX_DIM}")
    if not is_hermitian(a):
        raise LinalgError("hermitian_eig: input is not Hermitian within 1e-12")
    h = 0.5 * (a + a.conj().T)
    w, v, sweeps = _kernels.jacobi_eigh(h)
    if sweeps > _kernels.JACOBI_MAX_SWEEPS:
        raise LinalgError("Jacobi iteration did not converge")
    return w, v


def mat_exp_i_hermitian(h, t: float) -> np.ndarray:
    """``exp(i h t)`` for Hermitian ``h`` via its eigendecomposition."""
    w, v = hermitian_eig(h)
    return (v * np.exp(1j * w * t)) @ v.conj().T


def operator_norm(a) -> float:
    """Largest singular value, sqrt of the top eigenvalue of a^† a."""
    a = as_matrix(a)
    w, _ = hermitian_eig(a.conj().T @ a)
    return float(np.sqrt(max(w[-1], 0.0)))


def singular_values(a) -> np.ndarray:
    a = as_matrix(a)
    w, _ = hermitian_eig(a.conj().T @ a)
    return np.sqrt(np.clip(w, 0.0, None))[::-1]


def numeric_rank(a, tol: float = 1e-6) -> int:
    return int(np.sum(singular_values(a) > tol))


def projector_from_state(v) -> np.ndarray:
    """Rank-one projector |v><v|."""
    x = as_vector(v, "v")
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise LinalgError("projector_from_state: zero vector")
    if abs(nrm - 1.0) > STATE_NORM_TOL:
        raise LinalgError(f"projector_from_state: vector not normalised (norm = {nrm!r})")
    return np.outer(x, x.conj())


def mat_pow(a, n: int) -> np.ndarray:
    """``a**n`` by binary exponentiation (repeated squaring)."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise LinalgError("mat_pow needs a square matrix")
    if n < 0:
        raise LinalgError("mat_pow: negative exponent")
    result = np.eye(a.shape[0], dtype=np.complex128)
    base = a.copy()
    while n:
        if n & 1:
            result = result @ base
        n >>= 1
        if n:
            base = base @ base
    return result


def _subsystem_index(keep) -> int:
    if keep in (PHOTON, "photon", "f"):
        return PHOTON
    if keep in (ATOM, "atom", "a"):
        return ATOM
    raise LinalgError(f"unknown subsystem {keep!r}; use 'photon' (0) or 'atom' (1)")


def partial_trace(rho, keep=PHOTON) -> np.ndarray:
    """Reduce a two-qubit density matrix to the kept qubit."""
    rho = as_matrix(rho, "rho")
    if rho.shape != (4, 4):
        raise LinalgError(f"partial_trace expects a 4x4 matrix, got {rho.shape}")
    r = rho.reshape(2, 2, 2, 2)
    if _subsystem_index(keep) == PHOTON:
        return np.einsum("ikjk->ij", r)
    return np.einsum("kikj->ij", r)
