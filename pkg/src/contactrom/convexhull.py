"""
Convex-hull approximation with monolithic dictionaries, and the rope over an
obstacle it is meant for.

When the contact operators do not depend on the configuration, the feasible
set is convex, so any convex combination of feasible snapshots is feasible.
A query is then solved for the combination weights directly: nonnegative,
summing to one, sparse.
"""
import numpy as np

from .contact import detect_pairs, kkt_residuals
from .densela import nnls, truncated_svd
from .fem import assemble_load_and_bc, assemble_stiffness, check_parameters
from .lib.benchit import benchit
from .lib.errors import UsageError
from .lib.logger import debug
from .meshes import interval
from .models.convex import ConvexResult, MonolithicDictionary
from .models.problem import DirichletCondition, ElasticProblem, RigidObstacle
from .sparse import nnfocuss, random_sketch

# uniform downward load per unit length
ROPE_LOAD = -400.0
ROPE_NODES = 201
ROPE_GAMMA_RANGE = (10.0, 50.0)
# modulus right of x = 0.5
ROPE_RIGHT_MODULUS = 30.0

DELTA_B = 1e-7
# sum-to-one row weight, relative to the operator norm
CONVEXITY_WEIGHT = 1e6


def default_obstacle(x, offset=-0.5):
    return -0.2 * (np.sin(np.pi * x) - np.sin(3.0 * np.pi * x)) + offset


def rope_problem(gamma=None, n_nodes=ROPE_NODES, obstacle=None, offset=-0.5):
    """
    A string on [0, 1] fixed at both ends, modulus ``gamma`` left of the
    middle and 30 right of it, pulled down onto a rigid obstacle that every
    interior node must stay above. ``gamma`` only sets the reference point;
    it stays the problem parameter.
    """
    mesh = interval(n_nodes)
    x = mesh.node_coords[:, 0]
    interior = np.arange(1, n_nodes - 1)
    shape = obstacle or (lambda s: default_obstacle(s, offset))
    heights = np.asarray(shape(x[interior]), dtype=float)

    def modulus(centroids, mu):
        return np.where(centroids[:, 0] < 0.5, mu[0], ROPE_RIGHT_MODULUS)

    return ElasticProblem(
        problem_id="rope",
        mesh=mesh,
        youngs_modulus=(ROPE_RIGHT_MODULUS,),
        poisson_ratio=0.0,
        dirichlet=[DirichletCondition([0, n_nodes - 1], 0, 0.0)],
        contact=RigidObstacle("line", interior, heights),
        parameter_box=(ROPE_GAMMA_RANGE,),
        parameter_names=("gamma",),
        line_load=ROPE_LOAD,
        modulus_field=modulus,
        reference_mu=None if gamma is None else (float(gamma),),
    )


def monolithic_dictionary(snaps):
    """Each column pairs a displacement snapshot with its contact snapshot."""
    return MonolithicDictionary(
        D_u=snaps.U.copy(), D_lam=snaps.Lam.copy(), labels=snaps.design.points
    )


def _with_sum_row(A, b, weight):
    w = weight * max(np.linalg.norm(A, 2), 1.0)
    return (
        np.vstack([A, np.full((1, A.shape[1]), w)]),
        np.concatenate([b, [w]]),
    )


@benchit
def chls_test(D_u, weight=CONVEXITY_WEIGHT):
    """
    Leave-one-out distance of every column to the convex hull of the others,
    relative to the column norm.
    """
    D_u = np.asarray(D_u, dtype=float)
    n = D_u.shape[1]
    if n < 2:
        raise UsageError("the hull test needs at least two columns")
    errors = np.zeros(n)
    for j in range(n):
        d = D_u[:, j]
        rest = np.delete(D_u, j, axis=1)
        A, b = _with_sum_row(rest, d, weight)
        alpha = nnls(A, b)
        norm = np.linalg.norm(d)
        gap = np.linalg.norm(rest @ alpha - d)
        errors[j] = gap / norm if norm > 0.0 else gap
        debug(f"CHLS: column {j} error {errors[j]:.3e}")
    return errors


def _test_space(dictionary, free, delta_B, sketch_size, seed):
    if sketch_size:
        return random_sketch(dictionary.D_u[free], sketch_size, seed)
    return truncated_svd(dictionary.D_u[free], delta_B).vectors


def convex_solve(
    dictionary,
    problem,
    mu,
    delta_B=DELTA_B,
    sketch_size=None,
    seed=0,
    weight=CONVEXITY_WEIGHT,
):
    """
    Sparse convex combination of dictionary columns that balances the
    monolithic residual ``K D_u a + C^T D_lam a = f``, tested against a
    truncated SVD basis of the displacement snapshots (or a random sketch of
    ``sketch_size`` columns).
    """
    mu = check_parameters(problem, mu)
    K = assemble_stiffness(problem, mu)
    bc = assemble_load_and_bc(problem, mu)
    contact = detect_pairs(problem)
    free = bc.free

    K_mono = K @ dictionary.D_u + contact.C.T @ dictionary.D_lam
    B = _test_space(dictionary, free, delta_B, sketch_size, seed)
    A, b = _with_sum_row(B.T @ K_mono[free], B.T @ bc.f[free], weight)
    coeffs = nnfocuss(A, b)

    alpha = coeffs.values
    u = dictionary.D_u @ alpha
    lam = dictionary.D_lam @ alpha
    residuals = kkt_residuals(problem, u, lam, mu, contact)
    return ConvexResult(
        alpha=alpha,
        convex_defect=abs(float(alpha.sum()) - 1.0),
        penetration=residuals.penetration,
        slackness=residuals.slackness,
        sparsity=int(np.count_nonzero(alpha)),
        u=u,
        lam=lam,
        iterations=coeffs.iterations,
    )
