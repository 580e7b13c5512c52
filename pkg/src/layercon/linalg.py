"""Dense linear-algebra kernels used by every other module.

Matrices are plain float ndarrays (row-major).  All functions validate
finiteness and shapes up front and raise rather than propagate NaNs.
"""

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionError

__all__ = [
    "as_matrix",
    "expm",
    "spectral_radius",
    "spectral_norm",
    "solve_discrete_lyapunov",
    "solve_linear_lstsq",
]


def as_matrix(A, name="matrix", square=False):
    """Coerce to a 2-D float array; reject non-finite entries."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got {A.shape}")
    return A


def expm(A):
    """Matrix exponential (scaling-and-squaring with Pade approximant)."""
    A = as_matrix(A, "A", square=True)
    E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise ConvergenceError(f"expm overflowed for norm {np.linalg.norm(A):.3e}")
    return E


def spectral_radius(A):
    """Largest eigenvalue modulus of a square matrix."""
    A = as_matrix(A, "A", square=True)
    if A.size == 0:
        return 0.0
    try:
        # LAPACK: Hessenberg reduction followed by shifted QR.
        w = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    return float(np.max(np.abs(w)))


def spectral_norm(A):
    """Largest singular value."""
    A = as_matrix(A, "A")
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def solve_discrete_lyapunov(F, Qrhs):
    """Solve F' N F - N = -Qrhs for N.

    Requires spectral_radius(F) < 1; solved by Kronecker vectorization
    (dense n^2 linear system), which is exact at the sizes used here.
    """
    F = as_matrix(F, "F", square=True)
    Qrhs = as_matrix(Qrhs, "Qrhs", square=True)
    if F.shape != Qrhs.shape:
        raise DimensionError(f"F is {F.shape} but Qrhs is {Qrhs.shape}")
    rho = spectral_radius(F)
    if rho >= 1.0:
        raise ValueError(f"spectral radius {rho:.6g} >= 1; no unique solution")
    # scipy solves a X a' - X + q = 0; with a = F' this is F' N F - N = -q.
    N = scipy.linalg.solve_discrete_lyapunov(F.T, Qrhs, method="direct")
    N = 0.5 * (N + N.T)
    resid = np.linalg.norm(F.T @ N @ F - N + Qrhs)
    qnorm = max(np.linalg.norm(Qrhs), 1e-30)
    if resid > 1e-8 * max(qnorm, 1.0):
        raise ConvergenceError(f"Lyapunov residual {resid:.3e} exceeds tolerance")
    return N


def solve_linear_lstsq(A, B):
    """Minimum-norm least-squares solution of A X = B.

    Returns (X, residual) where residual is the Frobenius norm of A X - B.
    Rank deficiency is not an error; the minimum-norm solution is returned.
    """
    A = as_matrix(A, "A")
    B = np.asarray(B, dtype=float)
    b2d = np.atleast_2d(B.T).T if B.ndim == 1 else B
    if b2d.shape[0] != A.shape[0]:
        raise DimensionError(f"A has {A.shape[0]} rows but B has {b2d.shape[0]}")
    X, _, _, _ = np.linalg.lstsq(A, b2d, rcond=None)
    resid = float(np.linalg.norm(A @ X - b2d))
    if B.ndim == 1:
        X = X.ravel()
    return X, resid
