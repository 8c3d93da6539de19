import numpy as np
import pytest
from lib.oracles import nnls_by_enumeration

from contactrom.densela import (
    DependentConstraintsError,
    EmptyBasisError,
    min_norm_solve,
    nnls,
    orthonormalize,
    solve_saddle,
    spd_solver,
    truncated_svd,
)
from contactrom.lib.errors import NumericalFailure


def _energy_rank(s, delta):
    energy = np.cumsum(s**2)
    for r in range(1, len(s) + 1):
        if energy[r - 1] >= (1 - delta) * energy[-1]:
            return r


def test_truncated_svd_identity():
    basis = truncated_svd(np.eye(3), 1e-6)
    assert basis.rank == 3
    assert np.allclose(basis.singular_values, [1.0, 1.0, 1.0])


def test_truncated_svd_rank_one():
    rng = np.random.default_rng(0)
    A = np.outer(rng.normal(size=8), rng.normal(size=5))
    for delta in (1e-12, 1e-6, 0.5):
        assert truncated_svd(A, delta).rank == 1


def test_truncated_svd_matches_energy_rule():
    rng = np.random.default_rng(1)
    Q1, _ = np.linalg.qr(rng.normal(size=(10, 10)))
    Q2, _ = np.linalg.qr(rng.normal(size=(10, 10)))
    s = 10.0 ** -np.arange(0, 20, 2)
    A = Q1 @ np.diag(s) @ Q2.T
    basis = truncated_svd(A, 1e-6)
    expected = _energy_rank(np.linalg.svd(A, compute_uv=False), 1e-6)
    assert basis.rank == expected
    V = basis.vectors
    assert np.allclose(V.T @ V, np.eye(basis.rank), atol=1e-12)
    assert np.all(np.diff(basis.singular_values) <= 0)


def test_truncated_svd_keeps_the_smallest_rank():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(12, 6))
    delta = 1e-3
    basis = truncated_svd(A, delta)
    s = basis.spectrum
    kept = np.sum(basis.singular_values**2) / np.sum(s**2)
    assert kept >= 1 - delta
    if basis.rank > 1:
        one_less = np.sum(s[: basis.rank - 1] ** 2) / np.sum(s**2)
        assert one_less < 1 - delta


def test_truncated_svd_rejects_zero_and_bad_delta():
    with pytest.raises(EmptyBasisError):
        truncated_svd(np.zeros((4, 3)), 1e-6)
    with pytest.raises(ValueError):
        truncated_svd(np.eye(2), 0.0)
    with pytest.raises(ValueError):
        truncated_svd(np.eye(2), 1.0)


def test_orthonormalize_collapses_dependent_columns():
    v = np.array([1.0, 2.0, 2.0])
    B = orthonormalize(np.column_stack([v, 2 * v]))
    assert B.shape == (3, 1)
    assert np.allclose(np.abs(B[:, 0]), v / 3.0)


def test_orthonormalize_spans_the_input():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(20, 5))
    B = orthonormalize(A)
    assert np.allclose(B.T @ B, np.eye(5), atol=1e-12)
    assert np.linalg.norm(A - B @ (B.T @ A)) < 1e-10 * np.linalg.norm(A)


def test_orthonormalize_zero_matrix():
    with pytest.raises(EmptyBasisError):
        orthonormalize(np.zeros((3, 2)))


def test_min_norm_solve_underdetermined():
    A = np.array([[1.0, 1.0]])
    assert np.allclose(min_norm_solve(A, np.array([2.0])), [1.0, 1.0])
    assert np.allclose(min_norm_solve(np.zeros((2, 3)), np.ones(2)), 0.0)


def test_solve_saddle_hand_case():
    u, lam = solve_saddle([[2.0]], [[1.0]], [0.0], [1.0])
    assert np.allclose(u, [1.0])
    assert np.allclose(lam, [-2.0])


def test_solve_saddle_without_constraints():
    K = np.array([[4.0, 1.0], [1.0, 3.0]])
    f = np.array([1.0, 2.0])
    u, lam = solve_saddle(K, np.zeros((0, 2)), f, np.zeros(0))
    assert lam.size == 0
    assert np.allclose(K @ u, f)


def test_solve_saddle_residuals():
    rng = np.random.default_rng(4)
    M = rng.normal(size=(6, 6))
    K = M @ M.T + 6 * np.eye(6)
    C = rng.normal(size=(2, 6))
    f, g = rng.normal(size=6), rng.normal(size=2)
    u, lam = solve_saddle(K, C, f, g)
    scale = 1 + np.linalg.norm(f) + np.linalg.norm(g)
    assert np.linalg.norm(K @ u + C.T @ lam - f) < 1e-10 * scale
    assert np.linalg.norm(C @ u - g) < 1e-10 * scale


def test_solve_saddle_dependent_rows():
    K = np.eye(3)
    C = np.array([[1.0, 0.0, 1.0], [2.0, 0.0, 2.0]])
    with pytest.raises(DependentConstraintsError):
        solve_saddle(K, C, np.ones(3), np.ones(2))


def test_nnls_consistent_case():
    rng = np.random.default_rng(5)
    D = rng.normal(size=(8, 3))
    alpha = np.array([0.5, 0.0, 2.0])
    assert np.allclose(nnls(D, D @ alpha), alpha, atol=1e-10)


def test_nnls_outside_the_cone():
    assert np.array_equal(nnls(np.array([[1.0], [0.0]]), [-1.0, 0.0]), [0.0])


def test_nnls_matches_enumeration():
    rng = np.random.default_rng(6)
    for _ in range(20):
        D = rng.normal(size=(5, 3))
        x = rng.normal(size=5)
        alpha = nnls(D, x)
        assert np.all(alpha >= 0.0)
        assert np.allclose(alpha, nnls_by_enumeration(D, x), atol=1e-10)
        grad = D.T @ (D @ alpha - x)
        assert np.all(grad >= -1e-10)
        assert np.allclose(grad[alpha > 0], 0.0, atol=1e-10)


def test_spd_solver():
    K = np.array([[4.0, 1.0], [1.0, 3.0]])
    solve = spd_solver(K)
    assert np.allclose(K @ solve(np.array([1.0, 2.0])), [1.0, 2.0])
    with pytest.raises(NumericalFailure):
        spd_solver(np.array([[1.0, 2.0], [2.0, 1.0]]))
