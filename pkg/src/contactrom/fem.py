"""
Small-strain linear elasticity on plane-strain bilinear quads and 1D bars.

Displacement dofs are interleaved per node. Dirichlet data is eliminated, not
penalized: the solvers work on the free dofs and lift the imposed values.
"""
import weakref
from typing import NamedTuple

import numpy as np

from .lib.errors import NumericalFailure, UsageError
from .lib.logger import debug

# corner natural coordinates, counter-clockwise
_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA = np.array([-1.0, -1.0, 1.0, 1.0])
_GP = 1.0 / np.sqrt(3.0)
_GAUSS = np.array([[-_GP, -_GP], [_GP, -_GP], [_GP, _GP], [-_GP, _GP]])

# box membership slack, relative to the box width
_BOX_RTOL = 1e-12

_NORM_CACHE = weakref.WeakKeyDictionary()


class InvertedElementError(NumericalFailure):
    pass


class ParameterOutOfBoxError(UsageError):
    pass


class ZeroReferenceError(UsageError):
    pass


class LoadAndBC(NamedTuple):
    f: np.ndarray
    constrained: np.ndarray
    values: np.ndarray
    free: np.ndarray


def _shape_data():
    xi, eta = _GAUSS[:, 0:1], _GAUSS[:, 1:2]
    N = 0.25 * (1 + _XI * xi) * (1 + _ETA * eta)
    dN = np.empty((4, 2, 4))
    dN[:, 0, :] = 0.25 * _XI * (1 + _ETA * eta)
    dN[:, 1, :] = 0.25 * _ETA * (1 + _XI * xi)
    return N, dN


_N, _DN = _shape_data()


def plane_strain_matrix(E, nu):
    c = E / ((1 + nu) * (1 - 2 * nu))
    return c * np.array(
        [
            [1 - nu, nu, 0.0],
            [nu, 1 - nu, 0.0],
            [0.0, 0.0, 0.5 * (1 - 2 * nu)],
        ]
    )


def check_parameters(problem, mu):
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.shape != (problem.n_parameters,):
        raise ParameterOutOfBoxError(
            f"{problem.problem_id} takes {problem.n_parameters} parameter(s), "
            f"got {mu.tolist()}"
        )
    for value, (lo, hi), name in zip(
        mu, problem.parameter_box, problem.parameter_names
    ):
        slack = _BOX_RTOL * max(hi - lo, 1.0)
        if not lo - slack <= value <= hi + slack:
            raise ParameterOutOfBoxError(
                f"{name} = {value} is outside [{lo}, {hi}]"
            )
    return mu


def _resolve_mu(problem, mu):
    if mu is None:
        mu = problem.reference_mu
    return check_parameters(problem, mu)


def element_moduli(problem, mu=None):
    mesh = problem.mesh
    if problem.modulus_field is not None:
        mu = _resolve_mu(problem, mu)
        E = np.asarray(problem.modulus_field(mesh.centroids(), mu), dtype=float)
        return np.broadcast_to(E, (mesh.n_elements,)).copy()
    return np.asarray(problem.youngs_modulus)[mesh.element_body]


def quad_geometry(coords):
    """Physical shape gradients (ne, 4, 2, 4) and Jacobians (ne, 4)."""
    J = np.einsum("gia,eaj->egij", _DN, coords)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    bad = np.flatnonzero(np.any(det <= 0.0, axis=1))
    if bad.size:
        raise InvertedElementError(
            f"element {int(bad[0])} is inverted or degenerate"
        )
    inv = np.empty_like(J)
    inv[..., 0, 0] = J[..., 1, 1]
    inv[..., 0, 1] = -J[..., 0, 1]
    inv[..., 1, 0] = -J[..., 1, 0]
    inv[..., 1, 1] = J[..., 0, 0]
    inv /= det[..., None, None]
    dNdx = np.einsum("egij,gja->egia", inv, _DN)
    return dNdx, det


def _strain_operator(dNdx):
    ne = dNdx.shape[0]
    B = np.zeros((ne, 4, 3, 8))
    B[:, :, 0, 0::2] = dNdx[:, :, 0, :]
    B[:, :, 1, 1::2] = dNdx[:, :, 1, :]
    B[:, :, 2, 0::2] = dNdx[:, :, 1, :]
    B[:, :, 2, 1::2] = dNdx[:, :, 0, :]
    return B


def _bar_lengths(mesh):
    x = mesh.node_coords[:, 0]
    h = x[mesh.elements[:, 1]] - x[mesh.elements[:, 0]]
    bad = np.flatnonzero(h <= 0.0)
    if bad.size:
        raise InvertedElementError(
            f"element {int(bad[0])} is inverted or degenerate"
        )
    return h


def element_dofs(mesh):
    ndpn = mesh.dofs_per_node
    nen = mesh.elements.shape[1]
    return (mesh.elements[:, :, None] * ndpn + np.arange(ndpn)).reshape(
        -1, nen * ndpn
    )


def _scatter(n, edofs, Ke):
    K = np.zeros((n, n))
    np.add.at(K, (edofs[:, :, None], edofs[:, None, :]), Ke)
    return 0.5 * (K + K.T)


def _element_stiffness(problem, mu):
    mesh = problem.mesh
    E = element_moduli(problem, mu)
    if mesh.dim == 1:
        h = _bar_lengths(mesh)
        k = E / h
        return k[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])
    dNdx, det = quad_geometry(mesh.node_coords[mesh.elements])
    B = _strain_operator(dNdx)
    D = E[:, None, None] * plane_strain_matrix(1.0, problem.poisson_ratio)
    return np.einsum("egki,ekl,eglj,eg->eij", B, D, B, det)


def assemble_stiffness(problem, mu=None):
    """
    Global stiffness over all dofs. Bodies never share elements, so K is
    block diagonal per body. Cached on the problem unless the modulus
    depends on the parameter.
    """
    if not problem.is_stiffness_parametric and "K" in problem._cache:
        return problem._cache["K"]
    K = _scatter(
        problem.mesh.n_dofs,
        element_dofs(problem.mesh),
        _element_stiffness(problem, mu),
    )
    if not problem.is_stiffness_parametric:
        problem._cache["K"] = K
        debug(f"FEM: assembled K ({K.shape[0]} dofs) for {problem.problem_id}")
    return K


def dirichlet_dofs(problem):
    """Sorted constrained dofs and, per dof, the index of its condition."""
    if "bc_dofs" in problem._cache:
        return problem._cache["bc_dofs"]
    mesh = problem.mesh
    owner = {}
    # later conditions win on shared nodes
    for i, bc in enumerate(problem.dirichlet):
        for dof in mesh.node_dofs(bc.nodes, bc.component):
            owner[int(dof)] = i
    dofs = np.array(sorted(owner), dtype=np.int64)
    which = np.array([owner[d] for d in dofs], dtype=np.int64)
    free = np.setdiff1d(np.arange(mesh.n_dofs), dofs)
    problem._cache["bc_dofs"] = (dofs, which, free)
    return dofs, which, free


def assemble_load_and_bc(problem, mu):
    mu = check_parameters(problem, mu)
    mesh = problem.mesh
    f = np.zeros(mesh.n_dofs)
    if problem.line_load and mesh.dim == 1:
        h = _bar_lengths(mesh)
        np.add.at(f, mesh.elements[:, 0], 0.5 * problem.line_load * h)
        np.add.at(f, mesh.elements[:, 1], 0.5 * problem.line_load * h)
    dofs, which, free = dirichlet_dofs(problem)
    per_bc = np.array([bc.evaluate(mu) for bc in problem.dirichlet])
    values = per_bc[which] if len(dofs) else np.zeros(0)
    return LoadAndBC(f, dofs, values, free)


def gauss_stresses(problem, u, mu=None):
    """Stress (sxx, syy, sxy) at each Gauss point, shape (ne, 4, 3)."""
    mesh = problem.mesh
    E = element_moduli(problem, mu)
    ue = np.asarray(u)[element_dofs(mesh)]
    if mesh.dim == 1:
        h = _bar_lengths(mesh)
        return (E * (ue[:, 1] - ue[:, 0]) / h)[:, None, None]
    dNdx, _ = quad_geometry(mesh.node_coords[mesh.elements])
    B = _strain_operator(dNdx)
    strain = np.einsum("egki,ei->egk", B, ue)
    D = E[:, None, None] * plane_strain_matrix(1.0, problem.poisson_ratio)
    return np.einsum("ekl,egl->egk", D, strain)


def _norm_matrix(mesh):
    """Unit-coefficient H1 Gram matrix: gradient stiffness plus mass."""
    if mesh in _NORM_CACHE:
        return _NORM_CACHE[mesh]
    if mesh.dim == 1:
        h = _bar_lengths(mesh)
        ke = (1.0 / h)[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])
        me = (h / 6.0)[:, None, None] * np.array([[2.0, 1.0], [1.0, 2.0]])
        G = _scatter(mesh.n_nodes, mesh.elements, ke + me)
    else:
        dNdx, det = quad_geometry(mesh.node_coords[mesh.elements])
        ke = np.einsum("egia,egib,eg->eab", dNdx, dNdx, det)
        me = np.einsum("ga,gb,eg->eab", _N, _N, det)
        scalar = _scatter(mesh.n_nodes, mesh.elements, ke + me)
        G = np.kron(scalar, np.eye(mesh.dim))
    _NORM_CACHE[mesh] = G
    return G


def h1_norm(mesh, u):
    G = _norm_matrix(mesh)
    return float(np.sqrt(max(u @ G @ u, 0.0)))


def h1_error(mesh, u, u_ref):
    """Relative discrete H1 error (gradient plus L2 part)."""
    u = np.asarray(u, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    ref = h1_norm(mesh, u_ref)
    if ref == 0.0:
        raise ZeroReferenceError("H1 error against a zero reference field")
    return h1_norm(mesh, u - u_ref) / ref


def surface_weights(mesh, tag):
    """Half the summed lengths of the segments adjacent to each surface node."""
    segs = mesh.surfaces[tag]
    X = mesh.node_coords
    lengths = np.linalg.norm(X[segs[:, 1]] - X[segs[:, 0]], axis=1)
    w = np.zeros(len(segs) + 1)
    w[:-1] += 0.5 * lengths
    w[1:] += 0.5 * lengths
    return w


def dual_weights(mesh, tag, nodes=None):
    """Surface weights restricted to ``nodes`` (all surface nodes if None)."""
    w = surface_weights(mesh, tag)
    if nodes is None:
        return w
    position = {int(n): i for i, n in enumerate(mesh.surface_nodes(tag))}
    try:
        return w[[position[int(n)] for n in nodes]]
    except KeyError as e:
        msg = f"node {e.args[0]} is not on surface '{tag}'"
        raise ValueError(msg) from None


def l2_surface_error(mesh, surface, lam, lam_ref, nodes=None):
    """Relative L2 error of a node-centred piecewise-constant surface field."""
    w = dual_weights(mesh, surface, nodes)
    lam = np.asarray(lam, dtype=float)
    lam_ref = np.asarray(lam_ref, dtype=float)
    if lam.shape != w.shape or lam_ref.shape != w.shape:
        raise ValueError(
            f"surface '{surface}' has {len(w)} dual dofs, got "
            f"{lam.shape[0]} and {lam_ref.shape[0]}"
        )
    ref = np.sqrt(np.sum(w * lam_ref**2))
    if ref == 0.0:
        raise ZeroReferenceError("L2 error against a zero reference field")
    return float(np.sqrt(np.sum(w * (lam - lam_ref) ** 2)) / ref)
