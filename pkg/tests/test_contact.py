import numpy as np
import pytest
from lib.oracles import obstacle_by_enumeration
from lib.problems import coarse_hertz, small_rope, stacked_blocks

from contactrom.contact import (
    MAX_OUTER,
    EmptyMasterSurfaceError,
    HFConvergenceError,
    contact_force,
    detect_pairs,
    kkt_residuals,
    load_scale,
    solve_hf,
    solve_lcp,
)
from contactrom.fem import assemble_load_and_bc, assemble_stiffness


def test_stacked_blocks_pair_everywhere_with_zero_gap():
    problem = stacked_blocks()
    contact = detect_pairs(problem)
    assert contact.n_rows == 4
    assert np.all(contact.paired)
    assert np.allclose(contact.g, 0.0)
    assert np.allclose(contact.normals, [0.0, 1.0])
    assert np.allclose(contact.weights.sum(), 1.0)


def test_overhanging_nodes_stay_unpaired():
    problem = stacked_blocks(shift=0.5)
    contact = detect_pairs(problem)
    x = problem.mesh.node_coords[contact.slave_nodes, 0]
    assert np.array_equal(contact.paired, x <= 1.0)
    unpaired = ~contact.paired
    assert np.all(np.isinf(contact.g[unpaired]))
    assert np.all(contact.row_coefs[unpaired] == 0.0)
    assert np.all(contact.segments[unpaired] == -1)
    assert np.allclose(contact.distance[unpaired], x[unpaired] - 1.0)
    assert np.all(contact.C[unpaired] == 0.0)


def test_slave_just_past_free_end_stays_paired():
    problem = stacked_blocks(shift=0.05)
    contact = detect_pairs(problem)
    assert np.all(contact.paired)
    assert np.allclose(contact.g, 0.0)
    assert np.allclose(contact.normals, [0.0, 1.0])


def test_roundoff_overshoot_keeps_corner_paired():
    problem = stacked_blocks()
    contact = detect_pairs(problem)
    xs = problem.mesh.node_coords[contact.slave_nodes, 0]
    corner = contact.slave_nodes[np.argmax(xs)]
    u = np.zeros(problem.mesh.n_dofs)
    u[2 * corner] = 1e-12
    assert np.all(detect_pairs(problem, u).paired)


def test_held_rows_stay_paired_past_free_end():
    problem = stacked_blocks(shift=0.5)
    free = detect_pairs(problem)
    assert not np.all(free.paired)
    held = detect_pairs(problem, hold=np.ones(free.n_rows, dtype=bool))
    assert np.all(held.paired)
    assert np.all(np.isfinite(held.g))
    hold = np.zeros(free.n_rows, dtype=bool)
    hold[-1] = True
    partly = detect_pairs(problem, hold=hold)
    assert partly.paired[-1]
    assert np.array_equal(partly.paired[:-1], free.paired[:-1])


def _master_vertex(problem):
    master = problem.mesh.surfaces[problem.contact.master]
    j = len(master) // 2
    assert master[j, 1] == master[j + 1, 0]
    X = problem.mesh.node_coords
    t = X[master[[j, j + 1], 1]] - X[master[[j, j + 1], 0]]
    n = np.column_stack([t[:, 1], -t[:, 0]]).sum(axis=0)
    return master[j, 1], n / np.linalg.norm(n)


def test_rows_are_continuous_across_shared_vertex():
    problem = coarse_hertz()
    mesh = problem.mesh
    v, n = _master_vertex(problem)
    tangent = np.array([-n[1], n[0]])
    slave = detect_pairs(problem).slave_nodes[0]
    X = mesh.node_coords
    systems = []
    for side in (-1.0, 0.0, 1.0):
        target = X[v] + 1e-3 * n + side * 1e-12 * tangent
        u = np.zeros(mesh.n_dofs)
        u[[2 * slave, 2 * slave + 1]] = target - X[slave]
        systems.append(detect_pairs(problem, u))
    row = np.array([True] + [False] * (systems[0].n_rows - 1))
    for contact in systems:
        assert contact.paired[0]
        assert np.allclose(contact.normals[0], n, atol=1e-9)
    assert systems[0].same_pairing(systems[2], rows=row, atol=1e-9)
    assert systems[1].same_pairing(systems[2], rows=row, atol=1e-9)


def test_residuals_keep_pressured_rows_paired():
    problem = stacked_blocks(shift=0.5)
    free = detect_pairs(problem)
    xs = problem.mesh.node_coords[free.slave_nodes, 0]
    far = int(np.argmax(xs))
    assert not free.paired[far]
    u = np.zeros(problem.mesh.n_dofs)
    lam = np.zeros(free.n_rows)
    lam[far] = 1.0
    held = kkt_residuals(problem, u, lam, (0.0,))
    assert held.slackness < 1e-12
    unheld = kkt_residuals(problem, u, lam, (0.0,), free)
    assert np.isclose(unheld.slackness, xs[far] - 1.0)


def test_same_pairing_compares_rows():
    problem = stacked_blocks(shift=0.2)
    rest = detect_pairs(problem)
    assert rest.same_pairing(detect_pairs(problem))
    u = np.zeros(problem.mesh.n_dofs)
    u[2 * rest.slave_nodes] = 0.1
    slid = detect_pairs(problem, u)
    assert not rest.same_pairing(slid, atol=1e-6)
    # unpaired rows compare by their paired flag only
    unpaired = ~rest.paired
    assert rest.same_pairing(slid, rows=unpaired & ~slid.paired)


def test_constraint_operators_agree():
    problem = stacked_blocks(shift=0.2)
    rng = np.random.default_rng(0)
    u = 1e-3 * rng.normal(size=problem.mesh.n_dofs)
    contact = detect_pairs(problem, u)
    C = contact.C
    assert np.allclose(contact.apply(u), C @ u)
    V = rng.normal(size=(problem.mesh.n_dofs, 3))
    assert np.allclose(contact.project(V), C @ V)
    lam = rng.uniform(size=contact.n_rows)
    assert np.allclose(contact_force(contact, lam), C.T @ lam)


def test_penetration_is_positive_in_constraint_form():
    problem = stacked_blocks()
    contact = detect_pairs(problem)
    u = np.zeros(problem.mesh.n_dofs)
    slaves = problem.mesh.node_dofs(contact.slave_nodes, 1)
    u[slaves] = -0.01
    assert np.all(contact.apply(u) - contact.g > 0.0)


def test_missing_master_surface():
    problem = stacked_blocks(master="lower.nowhere")
    with pytest.raises(EmptyMasterSurfaceError):
        detect_pairs(problem)


def test_displacement_size_is_checked():
    with pytest.raises(ValueError):
        detect_pairs(stacked_blocks(), np.zeros(3))


def test_solve_lcp_complementarity():
    rng = np.random.default_rng(1)
    assert solve_lcp(np.zeros((0, 0)), np.zeros(0)).size == 0
    for _ in range(25):
        M = rng.normal(size=(6, 6))
        S = M @ M.T + 0.5 * np.eye(6)
        q = rng.normal(size=6)
        lam = solve_lcp(S, q)
        w = q + S @ lam
        assert np.all(lam >= 0.0)
        assert np.all(w >= -1e-10)
        assert abs(lam @ w) < 1e-10


def test_blocks_kkt_after_solve():
    problem = stacked_blocks()
    sol = solve_hf(problem, (0.1,))
    res = kkt_residuals(problem, sol.u, sol.lam, (0.1,))
    assert res.equilibrium < 1e-8 * load_scale(problem, (0.1,))
    assert res.penetration < 1e-8
    assert res.negativity == 0.0
    assert res.slackness < 1e-8
    assert sol.active_set.size > 0
    assert np.all(sol.lam[sol.active_set] > 0.0)


def test_blocks_converge_across_push():
    problem = stacked_blocks()
    for d in (0.02, 0.1, 0.2):
        sol = solve_hf(problem, (d,))
        assert sol.iterations < MAX_OUTER
        res = kkt_residuals(problem, sol.u, sol.lam, (d,), sol.contact)
        assert res.penetration < 1e-8
        assert res.negativity == 0.0


def test_overhanging_blocks_converge():
    problem = stacked_blocks(shift=0.5)
    sol = solve_hf(problem, (0.1,))
    assert sol.active_set.size > 0
    assert np.all(sol.contact.paired[sol.active_set])
    res = kkt_residuals(problem, sol.u, sol.lam, (0.1,), sol.contact)
    assert res.equilibrium < 1e-8 * load_scale(problem, (0.1,))
    assert res.penetration < 1e-8


def test_blocks_without_push_stay_at_rest():
    problem = stacked_blocks()
    sol = solve_hf(problem, (0.0,))
    assert np.allclose(sol.u, 0.0)
    assert np.allclose(sol.lam, 0.0)
    assert sol.active_set.size == 0


def test_outer_iteration_limit():
    problem = stacked_blocks()
    with pytest.raises(HFConvergenceError) as info:
        solve_hf(problem, (0.1,), max_outer=1)
    assert info.value.solution is not None
    assert info.value.solution.iterations == 1


def _interior_system(problem, mu):
    K = assemble_stiffness(problem, mu)
    bc = assemble_load_and_bc(problem, mu)
    free = bc.free
    return K[np.ix_(free, free)], bc.f[free], free


def test_rope_matches_enumeration():
    problem = small_rope(n_nodes=10)
    psi = problem.contact.heights
    for gamma in np.linspace(10.0, 50.0, 10):
        sol = solve_hf(problem, (gamma,))
        K, f, free = _interior_system(problem, (gamma,))
        assert np.array_equal(free, problem.contact.nodes)
        u_ref, lam_ref = obstacle_by_enumeration(K, f, psi)
        scale = np.max(np.abs(f))
        assert np.allclose(sol.u[free], u_ref, atol=1e-9)
        assert np.allclose(sol.lam, lam_ref, atol=1e-9 * scale)
        assert np.any(lam_ref > 0.0)


def test_far_obstacle_is_never_touched():
    problem = small_rope(offset=-10.0)
    sol = solve_hf(problem, (30.0,))
    assert np.all(sol.lam == 0.0)
    assert np.all(sol.u[problem.contact.nodes] > problem.contact.heights)


def test_hertz_kkt():
    problem = coarse_hertz()
    mu = (0.15,)
    sol = solve_hf(problem, mu)
    res = kkt_residuals(problem, sol.u, sol.lam, mu)
    scale = load_scale(problem, mu)
    assert res.equilibrium < 1e-8 * scale
    assert res.penetration < 1e-7
    assert res.negativity == 0.0
    assert sol.active_set.size > 0
    # the upper body moves down overall
    upper = problem.mesh.surface_nodes("upper.arc")
    assert np.mean(sol.u[problem.mesh.node_dofs(upper, 1)]) < 0.0


def test_hertz_converges_across_range():
    problem = coarse_hertz()
    for d in (0.05, 0.15, 0.3):
        sol = solve_hf(problem, (d,))
        assert sol.iterations < MAX_OUTER
        res = kkt_residuals(problem, sol.u, sol.lam, (d,), sol.contact)
        assert res.penetration < 1e-7
        assert res.negativity == 0.0
