"""
Sparse regression kernels: orthogonal matching pursuit, FOCUSS, the
nonnegative FOCUSS variant and randomized range sketching.
"""
import numpy as np
import scipy.linalg

from .densela import min_norm_solve, nnls, orthonormalize
from .lib.errors import NumericalFailure
from .lib.logger import debug, warn
from .models.sparse import SparseCoeffs

FOCUSS_TOL = 1e-10
FOCUSS_MAX_ITER = 500
# entries below this fraction of max |alpha| are set to zero
SUPPORT_RTOL = 1e-12
# iterate norm growth treated as divergence
_BLOWUP = 1e12


class FocussDivergenceError(NumericalFailure):
    pass


def _hard_zero(alpha):
    peak = np.max(np.abs(alpha), initial=0.0)
    if peak > 0.0:
        alpha[np.abs(alpha) < SUPPORT_RTOL * peak] = 0.0
    return alpha


def omp(D, x, eps=1e-10, max_terms=None):
    """
    Orthogonal matching pursuit. Columns are normalized internally; the
    returned coefficients apply to the original columns, and ``scale`` holds
    the column norms used.
    """
    D = np.asarray(D, dtype=float)
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(D, axis=0)
    usable = norms > 0.0
    Dn = D / np.where(usable, norms, 1.0)
    if max_terms is None:
        max_terms = min(D.shape)

    support = []
    coef = np.zeros(0)
    r = x.copy()
    rnorm = float(np.linalg.norm(r))
    while rnorm >= eps and len(support) < max_terms:
        corr = np.abs(Dn.T @ r)
        corr[~usable] = -1.0
        corr[support] = -1.0
        j = int(np.argmax(corr))
        if corr[j] <= 0.0:
            break
        support.append(j)
        coef = scipy.linalg.lstsq(Dn[:, support], x)[0]
        r = x - Dn[:, support] @ coef
        rnorm = float(np.linalg.norm(r))

    values = np.zeros(D.shape[1])
    values[support] = coef / norms[support]
    return SparseCoeffs(
        values=values,
        support=np.array(support, dtype=np.int64),
        iterations=len(support),
        residual_norm=rnorm,
        converged=rnorm < eps or rnorm == 0.0,
        scale=norms,
    )


def _check_growth(alpha, bound):
    if not np.all(np.isfinite(alpha)) or np.linalg.norm(alpha) > bound:
        raise FocussDivergenceError("FOCUSS iterates diverged")


def _finish(D, x, alpha, iterations, converged):
    return SparseCoeffs(
        values=alpha,
        support=np.flatnonzero(alpha),
        iterations=iterations,
        residual_norm=float(np.linalg.norm(D @ alpha - x)),
        converged=converged,
    )


def focuss(D, x, alpha0=None, tol=FOCUSS_TOL, max_iter=FOCUSS_MAX_ITER):
    """
    FOCUSS: reweighted minimum-norm iterations alpha <- W pinv(D W) x with
    W = diag(alpha). Zero entries stay zero.
    """
    D = np.asarray(D, dtype=float)
    x = np.asarray(x, dtype=float)
    if alpha0 is None:
        alpha = min_norm_solve(D, x)
    else:
        alpha = np.array(alpha0, dtype=float)
    bound = _BLOWUP * max(np.linalg.norm(alpha), np.linalg.norm(x), 1.0)
    _check_growth(alpha, bound)

    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        new = alpha * min_norm_solve(D * alpha, x)
        _check_growth(new, bound)
        new = _hard_zero(new)
        norm = np.linalg.norm(new)
        change = np.linalg.norm(new - alpha) / norm if norm > 0.0 else 0.0
        alpha = new
        if change < tol:
            converged = True
            break
    debug(f"SPARSE: FOCUSS {k} iterations, {np.count_nonzero(alpha)} nonzeros")
    return _finish(D, x, alpha, k, converged)


def nnfocuss(D, x, tol=FOCUSS_TOL, max_iter=FOCUSS_MAX_ITER, trace=None):
    """
    Nonnegative FOCUSS started from NNLS. An update that would turn an entry
    negative is cut back along its direction to the first zero crossing, so
    every iterate is nonnegative. Pass a list as ``trace`` to collect the
    iterates.
    """
    D = np.asarray(D, dtype=float)
    x = np.asarray(x, dtype=float)
    alpha = nnls(D, x)
    if trace is not None:
        trace.append(alpha.copy())
    bound = _BLOWUP * max(np.linalg.norm(alpha), np.linalg.norm(x), 1.0)

    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        new = alpha * min_norm_solve(D * alpha, x)
        _check_growth(new, bound)
        if new.min() < 0.0:
            step = new - alpha
            shrinking = step < 0.0
            s = min(1.0, float(np.min(alpha[shrinking] / -step[shrinking])))
            new = alpha + s * step
        new = _hard_zero(np.maximum(new, 0.0))
        norm = np.linalg.norm(new)
        change = np.linalg.norm(new - alpha) / norm if norm > 0.0 else 0.0
        alpha = new
        if trace is not None:
            trace.append(alpha.copy())
        if change < tol:
            converged = True
            break
    debug(
        f"SPARSE: nnFOCUSS {k} iterations, {np.count_nonzero(alpha)} nonzeros"
    )
    return _finish(D, x, alpha, k, converged)


def random_sketch(D, L, seed=0):
    """Orthonormal basis of D R with R uniform on [0, 1], ``L`` columns."""
    D = np.asarray(D, dtype=float)
    if not 1 <= L <= D.shape[1]:
        raise ValueError(f"sketch size {L} outside [1, {D.shape[1]}]")
    rng = np.random.default_rng(seed)
    R = rng.uniform(0.0, 1.0, size=(D.shape[1], L))
    B = orthonormalize(D @ R)
    if B.shape[1] < L:
        warn(
            f"SKETCH: asked for {L} directions, "
            f"numerical rank is {B.shape[1]}"
        )
    return B
