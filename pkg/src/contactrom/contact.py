"""
Node-to-segment contact kinematics and the high-fidelity contact solver.

Constraints are written ``C u - g <= 0`` with multipliers ``lam >= 0`` and
equilibrium ``K u - f + C^T lam = 0``. Pairs are found in the deformed
configuration; gaps are measured between reference positions of the paired
points.
"""
import time

import numpy as np
import scipy.linalg

from .densela import nnls, spd_solver
from .fem import (
    assemble_load_and_bc,
    assemble_stiffness,
    check_parameters,
    dual_weights,
    surface_weights,
)
from .lib.errors import NumericalFailure, UsageError
from .lib.logger import debug
from .models.contact import ContactSystem, HFSolution, KKTResiduals
from .models.problem import RigidObstacle

HF_TOL = 1e-8
MAX_OUTER = 30

# distances within this fraction of the mean master segment length tie
_TIE_TOL = 1e-10
# a slave past a free end of the master polyline by more than this fraction
# of the end segment is unpaired
END_SLACK = 0.25


class EmptyMasterSurfaceError(UsageError):
    pass


class HFConvergenceError(NumericalFailure):
    def __init__(self, message, solution=None, residuals=None):
        super().__init__(message)
        self.solution = solution
        self.residuals = residuals


def _closest_segments(points, a, b, tie):
    """
    Closest segment per point, with lowest index winning distances within
    ``tie`` of the minimum. Returns (segment, clamped xi, unclamped xi,
    distance).
    """
    t = b - a
    tt = np.maximum(np.einsum("sd,sd->s", t, t), np.finfo(float).tiny)
    raw = np.einsum("msd,sd->ms", points[:, None, :] - a[None], t) / tt
    xi = np.clip(raw, 0.0, 1.0)
    proj = (1.0 - xi)[..., None] * a[None] + xi[..., None] * b[None]
    dist = np.linalg.norm(points[:, None, :] - proj, axis=2)
    dmin = dist.min(axis=1)
    seg = np.argmax(dist <= dmin[:, None] + tie, axis=1)
    rows = np.arange(len(points))
    return seg, xi[rows, seg], raw[rows, seg], dmin


def _vertex_normals(n_nodes, master, a, b):
    """Unit outward normal per master node, weighted by segment length."""
    t = b - a
    seg_normals = np.column_stack([t[:, 1], -t[:, 0]])
    nv = np.zeros((n_nodes, 2))
    np.add.at(nv, master[:, 0], seg_normals)
    np.add.at(nv, master[:, 1], seg_normals)
    norms = np.linalg.norm(nv, axis=1)
    return nv / np.where(norms > 0.0, norms, 1.0)[:, None]


def _segment_pairs(problem, u, hold=None):
    mesh = problem.mesh
    pair = problem.contact
    master = mesh.surfaces.get(pair.master)
    if master is None or len(master) == 0:
        raise EmptyMasterSurfaceError(
            f"master surface '{pair.master}' is empty or missing"
        )
    slaves = mesh.surface_nodes(pair.slave)
    X = mesh.node_coords
    x = X + u.reshape(-1, 2)
    a, b = x[master[:, 0]], x[master[:, 1]]
    tie = _TIE_TOL * float(np.mean(np.linalg.norm(b - a, axis=1)))
    seg, xi, raw, dist = _closest_segments(x[slaves], a, b, tie)

    # free ends are master nodes on a single segment
    free_end = np.bincount(master.ravel(), minlength=mesh.n_nodes) == 1
    overshoot = np.maximum(
        np.where(free_end[master[seg, 0]], -raw, -np.inf),
        np.where(free_end[master[seg, 1]], raw - 1.0, -np.inf),
    )
    unpaired = overshoot > END_SLACK
    if hold is not None:
        unpaired &= ~np.asarray(hold, dtype=bool)

    # normals interpolated between vertex normals are continuous across
    # shared vertices
    m1, m2 = master[seg, 0], master[seg, 1]
    nv = _vertex_normals(mesh.n_nodes, master, a, b)
    w1, w2 = 1.0 - xi, xi
    normals = w1[:, None] * nv[m1] + w2[:, None] * nv[m2]
    normals /= np.linalg.norm(normals, axis=1)[:, None]

    row_dofs = np.column_stack(
        [2 * slaves, 2 * slaves + 1, 2 * m1, 2 * m1 + 1, 2 * m2, 2 * m2 + 1]
    )
    row_coefs = np.column_stack(
        [
            -normals,
            w1[:, None] * normals,
            w2[:, None] * normals,
        ]
    )
    ref_point = w1[:, None] * X[m1] + w2[:, None] * X[m2]
    g = np.einsum("md,md->m", normals, X[slaves] - ref_point)

    row_coefs[unpaired] = 0.0
    g[unpaired] = np.inf
    seg = np.where(unpaired, -1, seg)
    return ContactSystem(
        slave_nodes=slaves,
        segments=seg,
        xi=xi,
        normals=normals,
        g=g,
        distance=dist,
        weights=surface_weights(mesh, pair.slave),
        row_dofs=row_dofs,
        row_coefs=row_coefs,
        n_dofs=mesh.n_dofs,
    )


def _obstacle_pairs(problem, u):
    mesh = problem.mesh
    obstacle = problem.contact
    nodes = obstacle.nodes
    comp = mesh.dofs_per_node - 1
    dofs = mesh.node_dofs(nodes, comp)
    if mesh.dim == 2:
        ref = mesh.node_coords[nodes, 1]
    else:
        ref = np.zeros(len(nodes))
    g = ref - obstacle.heights
    normals = np.zeros((len(nodes), mesh.dim))
    normals[:, comp] = 1.0
    return ContactSystem(
        slave_nodes=nodes,
        segments=np.full(len(nodes), -1),
        xi=np.zeros(len(nodes)),
        normals=normals,
        g=g,
        distance=np.abs(g + u[dofs]),
        weights=dual_weights(mesh, obstacle.surface, nodes),
        row_dofs=dofs[:, None],
        row_coefs=-np.ones((len(nodes), 1)),
        n_dofs=mesh.n_dofs,
    )


def detect_pairs(problem, u=None, hold=None):
    """
    Pair every slave node with its closest master segment at ``u``.

    Rows flagged in ``hold`` stay paired however far they slide past a free
    end of the master surface.
    """
    if u is None:
        u = np.zeros(problem.mesh.n_dofs)
    u = np.asarray(u, dtype=float)
    if u.shape != (problem.mesh.n_dofs,):
        raise ValueError(
            f"displacement has {u.shape[0]} entries, "
            f"mesh has {problem.mesh.n_dofs} dofs"
        )
    if isinstance(problem.contact, RigidObstacle):
        return _obstacle_pairs(problem, u)
    return _segment_pairs(problem, u, hold)


def contact_force(contact, lam):
    """C^T lam."""
    out = np.zeros(contact.n_dofs)
    np.add.at(
        out,
        contact.row_dofs.ravel(),
        (contact.row_coefs * np.asarray(lam)[:, None]).ravel(),
    )
    return out


def kkt_residuals(problem, u, lam, mu=None, contact=None):
    """
    Max-norm violations of equilibrium (free dofs), non-penetration,
    multiplier sign and complementary slackness at ``(u, lam)``.
    """
    if mu is None:
        mu = problem.reference_mu
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    K = assemble_stiffness(problem, mu)
    bc = assemble_load_and_bc(problem, mu)
    if contact is None:
        # rows carrying pressure stay paired, as in the solver
        contact = detect_pairs(problem, u, hold=lam > 0.0)
    r = K @ u - bc.f + contact_force(contact, lam)
    equilibrium = float(np.max(np.abs(r[bc.free]), initial=0.0))

    paired = contact.paired
    # unpaired rows measure against their current distance
    slack = np.where(paired, contact.g - contact.apply(u), contact.distance)
    penetration = float(max(0.0, np.max(-slack[paired], initial=0.0)))
    negativity = float(max(0.0, -np.min(lam, initial=0.0)))
    slackness = float(np.max(np.abs(lam * slack), initial=0.0))
    return KKTResiduals(equilibrium, penetration, negativity, slackness)


def load_scale(problem, mu=None):
    """Size of the unconstrained free-dof load, for relative residuals."""
    if mu is None:
        mu = problem.reference_mu
    K = assemble_stiffness(problem, mu)
    bc = assemble_load_and_bc(problem, mu)
    rhs = bc.f[bc.free] - K[np.ix_(bc.free, bc.constrained)] @ bc.values
    return max(float(np.max(np.abs(rhs), initial=0.0)), 1.0)


def _free_solver(problem, K, free):
    if not problem.is_stiffness_parametric and "solver" in problem._cache:
        return problem._cache["solver"]
    solve = spd_solver(K[np.ix_(free, free)])
    if not problem.is_stiffness_parametric:
        problem._cache["solver"] = solve
    return solve


def _lcp_nnls(S, q):
    """min 1/2 lam^T S lam + q^T lam, lam >= 0, as an NNLS problem."""
    jitter = 1e-14 * max(float(np.trace(S)), 1.0)
    L = scipy.linalg.cholesky(S + jitter * np.eye(len(q)), lower=True)
    c = scipy.linalg.solve_triangular(L, q, lower=True)
    return nnls(L.T, -c)


def solve_lcp(S, q):
    """
    Find lam >= 0 with w = q + S lam >= 0 and lam^T w = 0, S symmetric
    positive definite. Primal-dual active set: activate violated rows,
    release negative multipliers. Falls back to NNLS when it cycles.
    """
    m = len(q)
    if m == 0:
        return np.zeros(0)
    eps = 1e-14 * (1.0 + float(np.max(np.abs(q))))
    active = q < -eps
    seen = {active.tobytes()}
    for _ in range(4 * m + 10):
        lam = np.zeros(m)
        idx = np.flatnonzero(active)
        if idx.size:
            try:
                lam[idx] = scipy.linalg.solve(
                    S[np.ix_(idx, idx)], -q[idx], assume_a="pos"
                )
            except (np.linalg.LinAlgError, ValueError):
                break
        w = q + S @ lam
        update = np.where(active, lam > 0.0, w < -eps)
        if np.array_equal(update, active):
            return lam
        key = update.tobytes()
        if key in seen:
            break
        seen.add(key)
        active = update
    debug("HF: active set cycled, switching to NNLS")
    return _lcp_nnls(S, q)


def _solve_frozen(contact, solve, u0_free, bc):
    """Contact solve for one frozen pairing, reduced to an LCP in lam."""
    free, cons = bc.free, bc.constrained
    lam = np.zeros(contact.n_rows)
    C = contact.C
    C_f = C[:, free]
    rows = contact.paired & np.any(C_f != 0.0, axis=1)
    u_free = u0_free
    if rows.any():
        C_f = C_f[rows]
        g_eff = contact.g[rows] - C[np.ix_(rows, cons)] @ bc.values
        Z = solve(C_f.T)
        S = C_f @ Z
        S = 0.5 * (S + S.T)
        q = g_eff - C_f @ u0_free
        lam_rows = solve_lcp(S, q)
        lam[rows] = lam_rows
        u_free = u0_free - Z @ lam_rows
    u = np.zeros(contact.n_dofs)
    u[cons] = bc.values
    u[free] = u_free
    return u, lam


def solve_hf(problem, mu, tol=HF_TOL, max_outer=MAX_OUTER):
    """
    High-fidelity frictionless contact solve at ``mu``.

    Outer loop: detect pairs at the current displacement, solve the KKT
    system exactly for that pairing, repeat until the constraint rows of active
    nodes are stable, the displacement update is below ``tol`` and the
    re-detected configuration neither penetrates nor carries negative
    multipliers. The first pairing is taken at the unconstrained solution.
    """
    t0 = time.perf_counter()
    mu = check_parameters(problem, mu)
    K = assemble_stiffness(problem, mu)
    bc = assemble_load_and_bc(problem, mu)
    solve = _free_solver(problem, K, bc.free)
    K_fc = K[np.ix_(bc.free, bc.constrained)]
    u0_free = solve(bc.f[bc.free] - K_fc @ bc.values)

    u = np.zeros(problem.mesh.n_dofs)
    u[bc.constrained] = bc.values
    u[bc.free] = u0_free
    contact = detect_pairs(problem, u)
    length = 1.0 + float(np.max(np.abs(u), initial=0.0))
    # active rows moving less than this between re-detections count as the
    # same pairing
    row_tol = np.sqrt(tol)

    solution, residuals = None, None
    for it in range(1, max_outer + 1):
        u_new, lam = _solve_frozen(contact, solve, u0_free, bc)
        active = lam > 0.0
        contact_new = detect_pairs(problem, u_new, hold=active)
        residuals = kkt_residuals(problem, u_new, lam, mu, contact_new)
        norm = np.linalg.norm(u_new)
        du = np.linalg.norm(u_new - u) / norm if norm > 0.0 else 0.0
        stable = contact_new.same_pairing(contact, rows=active, atol=row_tol)
        u, contact = u_new, contact_new
        solution = HFSolution(
            u=u,
            lam=lam,
            active_set=np.flatnonzero(active),
            iterations=it,
            residuals=residuals,
            contact=contact,
            solve_time=time.perf_counter() - t0,
        )
        if (
            stable
            and du < tol
            and residuals.penetration < tol * length
            and residuals.negativity <= tol
        ):
            debug(
                f"HF: {problem.problem_id} mu={mu.tolist()} "
                f"{len(solution.active_set)} active, {it} outer iterations"
            )
            return solution
    raise HFConvergenceError(
        f"HF solve at mu={mu.tolist()} did not converge in {max_outer} "
        f"outer iterations (residuals {tuple(residuals)})",
        solution,
        residuals,
    )
