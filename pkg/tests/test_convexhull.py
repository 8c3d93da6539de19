import numpy as np
import pytest
from lib.problems import small_rope

from contactrom.contact import detect_pairs, solve_hf
from contactrom.convexhull import (
    ROPE_GAMMA_RANGE,
    ROPE_NODES,
    chls_test,
    convex_solve,
    default_obstacle,
    monolithic_dictionary,
    rope_problem,
)
from contactrom.lib.errors import UsageError
from contactrom.rom_offline import (
    explicit_design,
    generate_snapshots,
    uniform_design,
)


def _dictionary(problem, n=4):
    snaps = generate_snapshots(
        problem, uniform_design(problem.parameter_box, n)
    )
    return monolithic_dictionary(snaps), snaps


def test_rope_constraints_are_a_negative_identity():
    problem = small_rope()
    contact = detect_pairs(problem)
    interior = problem.contact.nodes
    assert np.array_equal(interior, np.arange(1, 20))
    assert np.array_equal(contact.C[:, interior], -np.eye(19))
    assert np.all(contact.C[:, [0, 20]] == 0.0)
    x = problem.mesh.node_coords[interior, 0]
    assert np.allclose(contact.g, -default_obstacle(x))
    assert np.isclose(contact.weights.sum(), 19 / 20)


def test_rope_defaults():
    problem = rope_problem()
    assert problem.mesh.n_nodes == ROPE_NODES
    assert problem.parameter_box == (ROPE_GAMMA_RANGE,)
    assert problem.reference_mu == (30.0,)
    assert rope_problem(gamma=12.0).reference_mu == (12.0,)
    flat = rope_problem(n_nodes=11, obstacle=lambda x: -0.3 + 0.0 * x)
    assert np.allclose(flat.contact.heights, -0.3)


@pytest.mark.parametrize("gamma", [10.0, 50.0])
def test_rope_touches_the_obstacle(gamma):
    problem = rope_problem()
    sol = solve_hf(problem, (gamma,))
    assert np.any(sol.lam > 0.0)
    assert np.all(sol.lam >= 0.0)
    gap = sol.u[problem.contact.nodes] - problem.contact.heights
    assert gap.min() > -1e-8
    assert np.allclose(sol.lam * gap, 0.0, atol=1e-8)


def test_lowered_obstacle_is_never_touched():
    problem = small_rope(offset=-10.0)
    for gamma in ROPE_GAMMA_RANGE:
        assert np.all(solve_hf(problem, (gamma,)).lam == 0.0)


def test_monolithic_dictionary():
    problem = small_rope()
    dictionary, snaps = _dictionary(problem, 3)
    assert dictionary.size == 3
    assert np.array_equal(dictionary.D_u, snaps.U)
    assert np.array_equal(dictionary.D_lam, snaps.Lam)
    assert dictionary.labels.shape == (3, 1)


def test_chls_duplicate_and_orthogonal_columns():
    e1, e2 = np.eye(3)[:, 0], np.eye(3)[:, 1]
    errors = chls_test(np.column_stack([e1, e1, e2]))
    assert errors[0] < 1e-8
    assert errors[1] < 1e-8
    assert np.isclose(errors[2], np.sqrt(2.0), rtol=1e-6)


def test_chls_midpoint_is_inside():
    a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    errors = chls_test(np.column_stack([a, 0.5 * (a + b), b]))
    assert errors[1] < 1e-8
    assert errors[0] > 0.1 and errors[2] > 0.1


def test_chls_needs_two_columns():
    with pytest.raises(UsageError):
        chls_test(np.ones((3, 1)))


def test_chls_on_rope_snapshots():
    dictionary, _ = _dictionary(small_rope(), 5)
    errors = chls_test(dictionary.D_u)
    assert errors.shape == (5,)
    assert np.all(errors >= 0.0)


def test_single_snapshot_weight_is_one():
    problem = small_rope()
    snaps = generate_snapshots(
        problem, explicit_design(problem.parameter_box, [[25.0]])
    )
    result = convex_solve(monolithic_dictionary(snaps), problem, (25.0,))
    assert np.allclose(result.alpha, [1.0], atol=1e-8)
    assert result.convex_defect < 1e-8
    assert result.sparsity == 1


def test_convex_solve_stays_feasible():
    problem = small_rope()
    dictionary, snaps = _dictionary(problem)
    for mu in ([30.0], [36.0]):
        result = convex_solve(dictionary, problem, mu)
        assert np.all(result.alpha >= 0.0)
        assert result.convex_defect < 1e-6
        assert result.penetration < 1e-6
        assert np.allclose(result.u, dictionary.D_u @ result.alpha)
        assert np.allclose(result.lam, dictionary.D_lam @ result.alpha)


def test_convex_solve_with_a_sketch():
    problem = small_rope()
    dictionary, _ = _dictionary(problem)
    result = convex_solve(dictionary, problem, (18.0,), sketch_size=2)
    assert np.all(result.alpha >= 0.0)
    assert result.convex_defect < 1e-6
    assert result.sparsity >= 1
