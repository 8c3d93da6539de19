"""
Dense linear algebra shared by the solvers: energy-truncated SVD,
orthonormalization, saddle-point solves, minimum-norm least squares and NNLS.
"""
import numpy as np
import scipy.linalg
import scipy.optimize

from .lib.errors import NumericalFailure
from .models.basis import TruncatedBasis

# relative singular value cutoff for numerically null directions
ORTH_RCOND = 1e-12
PINV_RCOND = 1e-12
# relative rank cutoff on the active constraint block
DEPENDENT_RCOND = 1e-10


class EmptyBasisError(NumericalFailure):
    pass


class DependentConstraintsError(NumericalFailure):
    pass


def truncated_svd(A, delta):
    """
    Left singular vectors of ``A`` that carry at least ``1 - delta`` of its
    energy (sum of squared singular values), using the smallest such rank.
    """
    A = np.asarray(A, dtype=float)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"Truncation tolerance must be in (0, 1), got {delta}")
    if A.size == 0 or not np.any(A):
        raise EmptyBasisError("empty basis")
    U, s, _ = scipy.linalg.svd(A, full_matrices=False)
    energy = np.cumsum(s**2)
    target = (1.0 - delta) * energy[-1]
    r = int(np.searchsorted(energy, target, side="left")) + 1
    r = min(r, len(s))
    return TruncatedBasis(
        vectors=U[:, :r].copy(),
        singular_values=s[:r].copy(),
        delta=float(delta),
        spectrum=s,
    )


def orthonormalize(A, rcond=ORTH_RCOND):
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.size == 0 or not np.any(A):
        raise EmptyBasisError("cannot orthonormalize a zero matrix")
    U, s, _ = scipy.linalg.svd(A, full_matrices=False)
    keep = s > rcond * s[0]
    return U[:, keep].copy()


def min_norm_solve(A, b, rcond=PINV_RCOND):
    """``pinv(A) @ b`` through the SVD, dropping tiny singular values."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.zeros(A.shape[1])
    U, s, Vt = scipy.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1])
    keep = s > rcond * s[0]
    coef = (U[:, keep].T @ b) / s[keep]
    return Vt[keep].T @ coef


def solve_saddle(Kr, Cr, fr, gr):
    """
    Solve [[Kr, Cr^T], [Cr, 0]] [u; lam] = [fr; gr] by LU with partial
    pivoting on the whole block.
    """
    Kr = np.atleast_2d(np.asarray(Kr, dtype=float))
    fr = np.atleast_1d(np.asarray(fr, dtype=float))
    n = Kr.shape[0]
    Cr = np.asarray(Cr, dtype=float).reshape(-1, n)
    gr = np.atleast_1d(np.asarray(gr, dtype=float))
    m = Cr.shape[0]
    if m == 0:
        try:
            u = scipy.linalg.solve(Kr, fr, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            u = scipy.linalg.solve(Kr, fr)
        return u, np.zeros(0)
    s = scipy.linalg.svdvals(Cr)
    if s[0] == 0.0 or np.sum(s > DEPENDENT_RCOND * s[0]) < m:
        raise DependentConstraintsError("dependent active constraints")
    M = np.zeros((n + m, n + m))
    M[:n, :n] = Kr
    M[:n, n:] = Cr.T
    M[n:, :n] = Cr
    rhs = np.concatenate([fr, gr])
    try:
        lu = scipy.linalg.lu_factor(M)
        sol = scipy.linalg.lu_solve(lu, rhs)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise DependentConstraintsError(f"singular saddle system: {e}") from e
    if not np.all(np.isfinite(sol)):
        raise DependentConstraintsError("singular saddle system")
    return sol[:n], sol[n:]


def nnls(D, x):
    """Lawson-Hanson nonnegative least squares; never returns a negative."""
    D = np.asarray(D, dtype=float)
    x = np.asarray(x, dtype=float)
    if D.ndim != 2 or D.shape[1] == 0:
        raise ValueError("NNLS needs a nonempty matrix")
    n = D.shape[1]
    alpha, _ = scipy.optimize.nnls(D, x, maxiter=max(50 * n, 500))
    return np.maximum(alpha, 0.0)


def spd_solver(K):
    """Cholesky factor of an SPD matrix, returned as a solve callable."""
    try:
        factor = scipy.linalg.cho_factor(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"matrix is not positive definite: {e}") from e

    def solve(b):
        return scipy.linalg.cho_solve(factor, b, check_finite=False)

    return solve
