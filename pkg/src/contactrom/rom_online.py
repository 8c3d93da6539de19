"""
Online stage: the greedy active-set solver over the dual dictionary.

Each iteration rebuilds the contact pairing at the current reduced
displacement, projects the constraints onto the primal basis and the
dictionary, and solves the reduced saddle system on the selected columns.
A column is added where the projected penetration exceeds ``tau`` the most,
or removed where the coefficient is most negative.
"""
import time
import weakref
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg

from .contact import HF_TOL, detect_pairs, solve_hf
from .densela import DependentConstraintsError, solve_saddle
from .fem import (
    ZeroReferenceError,
    assemble_load_and_bc,
    assemble_stiffness,
    check_parameters,
    h1_error,
    l2_surface_error,
)
from .lib.benchit import Stopwatch
from .lib.errors import NumericalFailure
from .lib.logger import debug, progress, warn
from .models.greedy import GreedyState, OnlineResult, StopReason
from .models.report import QueryPoint, QueryReport
from .rom_offline import check_model, default_workers

K_MAX = 50
CONV_TOL = 1e-5

_FULL_BASIS = weakref.WeakKeyDictionary()


def _full_basis(model):
    """Primal basis padded with zero rows on the constrained dofs."""
    if model in _FULL_BASIS:
        return _FULL_BASIS[model]
    V = np.zeros((model.primal_dict.shape[0], model.rank))
    V[model.free_dofs] = model.phi.vectors
    _FULL_BASIS[model] = V
    return V


def _lift(model, bc):
    u = np.zeros(model.primal_dict.shape[0])
    u[bc.constrained] = bc.values
    return u


def reduced_load(model, problem, mu):
    """
    Reduced stiffness, load and Dirichlet lift at ``mu``. The stiffness is
    reprojected only when it depends on the parameter.
    """
    bc = assemble_load_and_bc(problem, mu)
    V = model.phi.vectors
    if model.stiffness_parametric:
        K = assemble_stiffness(problem, mu)
        Kr = V.T @ K[np.ix_(bc.free, bc.free)] @ V
        Kr = 0.5 * (Kr + Kr.T)
        Kfc = V.T @ K[np.ix_(bc.free, bc.constrained)]
    else:
        Kr, Kfc = model.Kr, model.Kfc
    fr = V.T @ bc.f[bc.free] - Kfc @ bc.values
    return Kr, fr, _lift(model, bc)


def _projected(model, contact, lift):
    CV = contact.project(_full_basis(model))
    # unpaired rows keep their distance as slack
    g = np.where(contact.paired, contact.g, contact.distance)
    g_eff = g - contact.apply(lift)
    D = model.dual_dict
    return D.T @ CV, D.T @ g_eff


def reduce_constraints(model, problem, mu, u_current):
    """
    Projected constraints ``(C_hat, g_hat)`` for the pairing found at
    ``u_current``: ``C_hat = D^T C V`` and ``g_hat = D^T (g - C lift)``.
    """
    mu = check_parameters(problem, mu)
    bc = assemble_load_and_bc(problem, mu)
    contact = detect_pairs(problem, u_current)
    return _projected(model, contact, _lift(model, bc))


def _is_two_cycle(history):
    if len(history) < 4:
        return False
    a, b, c, d = history[-4:]
    return a == c and b == d and a != b


def greedy_active_set(
    model,
    problem,
    mu,
    tau=None,
    k_max=K_MAX,
    conv_tol=CONV_TOL,
    warm_pairing=False,
):
    """
    Greedy sparse solve of the reduced contact problem at ``mu``.

    Stops converged when every selected coefficient is nonnegative, no
    projected penetration exceeds ``tau`` and the reduced displacement moved
    by less than ``conv_tol`` (relative). Otherwise stops at ``k_max``
    iterations or on an add/remove 2-cycle, flagged not converged.
    """
    t0 = time.perf_counter()
    sw = Stopwatch()
    check_model(model, problem)
    mu = check_parameters(problem, mu)
    tau = model.tau if tau is None else float(tau)

    Kr, fr, lift = reduced_load(model, problem, mu)
    V = _full_basis(model)
    N = model.dict_size
    state = GreedyState(
        u_hat=np.zeros(model.rank),
        lam_hat=np.zeros(N),
        k_max=k_max,
        conv_tol=conv_tol,
    )
    if warm_pairing:
        u_current = lift + V @ scipy.linalg.solve(Kr, fr, assume_a="pos")
    else:
        u_current = np.zeros(problem.mesh.n_dofs)

    excluded, dropped, history = set(), [], []
    u_prev = np.zeros(model.rank)
    reason = StopReason.K_MAX
    converged = False
    while state.k < k_max:
        state.k += 1
        with sw.section("operators"):
            # rows carrying reconstructed pressure stay paired
            hold = model.dual_dict @ state.lam_hat > 0.0
            contact = detect_pairs(problem, u_current, hold=hold)
            C_hat, g_hat = _projected(model, contact, lift)

        idx = list(state.active)
        try:
            u_hat, lam_active = solve_saddle(Kr, C_hat[idx], fr, g_hat[idx])
        except DependentConstraintsError:
            last = state.active.pop()
            excluded.add(last)
            dropped.append(last)
            warn(f"ONLINE: dropped dependent column {last}, mu={mu.tolist()}")
            continue

        state.u_hat = u_hat
        state.lam_hat = np.zeros(N)
        state.lam_hat[idx] = lam_active
        u_current = lift + V @ u_hat

        norm = np.linalg.norm(u_hat)
        step = np.linalg.norm(u_hat - u_prev)
        du = step / norm if norm > 0.0 else step
        u_prev = u_hat

        if lam_active.size and lam_active.min() < 0.0:
            # most negative, lowest column on ties
            lowest = lam_active.min()
            p = min(c for c, v in zip(idx, lam_active) if v == lowest)
            state.active.remove(p)
            history.append(("remove", p))
        else:
            v = C_hat @ u_hat - g_hat
            v[idx] = -np.inf
            v[list(excluded)] = -np.inf
            if not np.any(v > tau):
                if du < conv_tol:
                    converged = True
                    reason = StopReason.CONVERGED
                    break
                continue
            p = int(np.argmax(v))
            state.active.add(p)
            history.append(("add", p))

        if _is_two_cycle(history):
            reason = StopReason.OSCILLATION
            break

    if not converged and reason == StopReason.K_MAX and dropped:
        reason = StopReason.DEPENDENT
    u = lift + V @ state.u_hat
    lam = model.dual_dict @ state.lam_hat
    wall = time.perf_counter() - t0
    debug(
        f"ONLINE: mu={mu.tolist()} {reason} after {state.k} iterations, "
        f"active {list(state.active)}"
    )
    return OnlineResult(
        u=u,
        lam=lam,
        coeffs=state,
        converged=converged,
        wall_time=wall,
        per_iter_time=wall / max(state.k, 1),
        operator_time=sw.buckets.get("operators", 0.0),
        reason=reason,
        dropped=dropped,
    )


def _relative(error, approx):
    try:
        return error()
    except ZeroReferenceError:
        return 0.0 if not np.any(approx) else float("nan")


def relative_errors(problem, u, lam, u_ref, lam_ref, nodes=None):
    """
    Relative H1 displacement error and weighted L2 contact-pressure error.
    Each is 0 when both fields vanish and nan when only the reference does.
    """
    mesh = problem.mesh
    surface = problem.slave_surface
    primal = _relative(lambda: h1_error(mesh, u, u_ref), u)
    dual = _relative(
        lambda: l2_surface_error(mesh, surface, lam, lam_ref, nodes), lam
    )
    return primal, dual


def bracket_offset(design, mu, active):
    """
    Largest distance (in dictionary positions) from an active column to the
    two training points that bracket ``mu``. One-parameter designs only.
    """
    if design.points.shape[1] != 1:
        return None
    if not active:
        return 0
    pts = design.points[:, 0]
    hi = int(np.searchsorted(pts, float(mu[0])))
    bracket = {max(hi - 1, 0), min(hi, len(pts) - 1)}
    return max(min(abs(a - b) for b in bracket) for a in active)


def reference_solutions(problem, points, hf_tol=HF_TOL, workers=None):
    """HF solutions at ``points`` in order; a failed point yields None."""
    workers = workers or default_workers()
    assemble_stiffness(problem)

    def run(mu):
        try:
            return solve_hf(problem, mu, tol=hf_tol)
        except NumericalFailure as e:
            warn(f"ONLINE: HF reference at mu={list(mu)} failed: {e}")
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, points))
    return [run(mu) for mu in points]


def evaluate_query_set(
    model,
    problem,
    points,
    references=None,
    hf_tol=HF_TOL,
    workers=None,
    **options,
):
    """
    Greedy solves over ``points`` against fresh HF references. Online
    queries run one after another so their timings are comparable; a
    failure is recorded on its row and the sweep goes on.
    """
    check_model(model, problem)
    points = np.asarray(points, dtype=float).reshape(-1, problem.n_parameters)
    report = QueryReport(
        problem_id=problem.problem_id,
        parameter_names=tuple(problem.parameter_names),
        dict_size=model.dict_size,
        rank=model.rank,
        delta=model.delta,
        tau=model.tau if options.get("tau") is None else options["tau"],
    )
    if len(points) == 0:
        return report
    if references is None:
        references = reference_solutions(problem, points, hf_tol, workers)

    for i, (mu, ref) in enumerate(zip(points, references)):
        if ref is None:
            report.rows.append(_failed_row(mu))
            continue
        try:
            res = greedy_active_set(model, problem, mu, **options)
        except NumericalFailure as e:
            warn(f"ONLINE: query at mu={mu.tolist()} failed: {e}")
            report.rows.append(_failed_row(mu, ref.solve_time))
            continue
        primal, dual = relative_errors(
            problem, res.u, res.lam, ref.u, ref.lam, ref.contact.slave_nodes
        )
        active = sorted(res.active)
        report.rows.append(
            QueryPoint(
                mu=mu,
                primal_err=primal,
                dual_err=dual,
                iterations=res.iterations,
                active=active,
                coeffs=[float(res.coeffs.lam_hat[c]) for c in active],
                converged=res.converged,
                reason=str(res.reason),
                wall_time=res.wall_time,
                per_iter_time=res.per_iter_time,
                operator_time=res.operator_time,
                hf_time=ref.solve_time,
                dropped=list(res.dropped),
                bracket_offset=bracket_offset(model.design, mu, active),
            )
        )
        progress(i + 1, len(points), f"ONLINE: {problem.problem_id} queries")
    return report


def _failed_row(mu, hf_time=float("nan")):
    return QueryPoint(
        mu=mu,
        primal_err=float("nan"),
        dual_err=float("nan"),
        iterations=0,
        active=[],
        coeffs=[],
        converged=False,
        reason="failed",
        hf_time=hf_time,
    )
