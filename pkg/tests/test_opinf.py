import numpy as np
import pytest
from numpy.testing import assert_allclose

from gridlearn.errors import DimensionError, RankDeficiencyWarning
from gridlearn.opinf import (ReducedQuadraticModel, assemble_problem, compact_kron, compact_size, compress_h,
                             expand_h, infer, solve, symmetrize_h)


def quadratic_data(a, h_tilde, b, num_samples=60, seed=0):
    """Exact (x, dx/dt, u) samples of a known quadratic system at random points."""
    rng = np.random.default_rng(seed)
    r = a.shape[0]
    X = rng.normal(size=(r, num_samples))
    U = rng.normal(size=(b.shape[1], num_samples))
    Xdot = a @ X + h_tilde @ compact_kron(X) + b @ U
    return X, Xdot, U


def random_system(r, q=1, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(r, r)), rng.normal(size=(r, compact_size(r))), rng.normal(size=(r, q))


def test_compact_kron_examples():
    assert_allclose(compact_kron(np.array([2.0, 3.0])), [4.0, 6.0, 9.0])
    assert_allclose(compact_kron(np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0, 4.0, 6.0, 9.0])
    assert_allclose(compact_kron(np.array([5.0])), [25.0])


def test_compact_kron_columnwise(rng):
    X = rng.normal(size=(4, 7))
    K = compact_kron(X)
    assert K.shape == (10, 7)
    for k in range(7):
        assert_allclose(K[:, k], compact_kron(X[:, k]))


def test_expand_h_example():
    h = expand_h(np.array([[1.0, 2.0, 3.0]]).repeat(2, axis=0))
    assert_allclose(h[0], [1.0, 1.0, 1.0, 3.0])


@pytest.mark.parametrize("r", [1, 2, 3, 5, 8])
def test_expand_then_compress(r, rng):
    h_tilde = rng.normal(size=(r, compact_size(r)))
    assert_allclose(compress_h(expand_h(h_tilde)), h_tilde, rtol=1e-14)
    h = expand_h(h_tilde)
    for _ in range(5):
        x = rng.normal(size=r)
        assert_allclose(h @ np.kron(x, x), h_tilde @ compact_kron(x), rtol=1e-12, atol=1e-12)


def test_symmetrize_keeps_the_quadratic_form(rng):
    h = rng.normal(size=(3, 9))
    x = rng.normal(size=3)
    assert_allclose(symmetrize_h(h) @ np.kron(x, x), h @ np.kron(x, x), rtol=1e-12)


def test_assemble_scalar_example():
    problem = assemble_problem(np.array([[1.0, 2.0]]), np.array([[0.5, 0.7]]), np.array([1.0, 1.0]), mu=0.0)
    assert_allclose(problem.coeff, [[1.0, 1.0, 1.0], [2.0, 4.0, 1.0]])
    assert_allclose(problem.rhs, [[0.5], [0.7]])


@pytest.mark.parametrize("r, expected", [(2, 6), (3, 10), (5, 21)])
def test_unknowns_per_row(r, expected, rng):
    problem = assemble_problem(rng.normal(size=(r, 30)), rng.normal(size=(r, 30)), np.ones(30))
    assert problem.num_unknowns == expected


def test_zero_data_gives_zero_operators():
    model = infer(np.zeros((2, 10)), np.zeros((2, 10)), np.zeros(10), mu=1e-3)
    assert np.all(model.a_r == 0) and np.all(model.h_tilde_r == 0) and np.all(model.b_r == 0)


def test_zero_input_gives_zero_input_operator(rng):
    a, h_tilde, b = random_system(3)
    X, Xdot, _ = quadratic_data(a, h_tilde, np.zeros_like(b))
    with pytest.warns(RankDeficiencyWarning):
        model = infer(X, Xdot, np.zeros(X.shape[1]), mu=0.0)
    assert_allclose(model.b_r, 0.0, atol=1e-12)
    assert_allclose(model.a_r, a, rtol=1e-8, atol=1e-10)


def test_recovers_known_operators():
    a, h_tilde, b = random_system(3)
    X, Xdot, U = quadratic_data(a, h_tilde, b)
    model = infer(X, Xdot, U, mu=0.0)
    assert_allclose(model.a_r, a, atol=1e-8)
    assert_allclose(model.h_tilde_r, h_tilde, atol=1e-8)
    assert_allclose(model.b_r, b, atol=1e-8)
    assert model.diagnostics["rank"] == model.diagnostics["num_unknowns"] == 10


def test_scalar_system():
    rng = np.random.default_rng(9)
    x = rng.normal(size=20)
    u = rng.normal(size=20)
    xdot = -0.5 * x + 0.25 * x ** 2 + 2.0 * u
    model = infer(x[None], xdot[None], u, mu=0.0)
    assert_allclose([model.a_r[0, 0], model.h_tilde_r[0, 0], model.b_r[0, 0]], [-0.5, 0.25, 2.0], atol=1e-10)


def test_columnwise_solve_matches_joint(rng):
    X, Xdot, U = rng.normal(size=(4, 50)), rng.normal(size=(4, 50)), rng.normal(size=(1, 50))
    problem = assemble_problem(X, Xdot, U, mu=1e-2)
    joint, split = solve(problem), solve(problem, columnwise=True)
    assert_allclose(split.stacked, joint.stacked, atol=1e-12)


def test_regularization_shrinks_solution(rng):
    X, Xdot, U = rng.normal(size=(3, 40)), rng.normal(size=(3, 40)), rng.normal(size=(1, 40))
    norms = [solve(assemble_problem(X, Xdot, U, mu)).norm for mu in (1e-6, 1e-3, 1.0, 1e3)]
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_regularization_matches_normal_equations(rng):
    X, Xdot, U = rng.normal(size=(2, 30)), rng.normal(size=(2, 30)), rng.normal(size=(1, 30))
    mu = 0.1
    problem = assemble_problem(X, Xdot, U, mu)
    D = problem.coeff
    expected = np.linalg.solve(D.T @ D + mu * np.eye(D.shape[1]), D.T @ problem.rhs)
    assert_allclose(solve(problem).stacked, expected, rtol=1e-9, atol=1e-12)


def test_rank_deficiency_warns_without_regularization():
    X = np.ones((2, 10))
    with pytest.warns(RankDeficiencyWarning):
        sol = solve(assemble_problem(X, X, np.ones(10), mu=0.0))
    assert sol.rank_deficient
    assert np.all(np.isfinite(sol.stacked))


def test_basis_sign_flip_is_undone_by_the_operators():
    a, h_tilde, b = random_system(3, seed=3)
    X, Xdot, U = quadratic_data(a, h_tilde, b, seed=3)
    plain = infer(X, Xdot, U, mu=0.0)
    flip = np.diag([1.0, -1.0, 1.0])
    flipped = infer(flip @ X, flip @ Xdot, U, mu=0.0)
    x = np.array([0.3, -0.2, 0.5])
    ref = plain.a_r @ x + plain.h_tilde_r @ compact_kron(x) + plain.b_r[:, 0]
    fx = flip @ x
    got = flipped.a_r @ fx + flipped.h_tilde_r @ compact_kron(fx) + flipped.b_r[:, 0]
    assert_allclose(flip @ got, ref, atol=1e-10)


def test_output_operator_is_passed_through(rng):
    X, Xdot, U = rng.normal(size=(2, 20)), rng.normal(size=(2, 20)), rng.normal(size=(1, 20))
    model = infer(X, Xdot, U, c_r=[[1.0, 2.0]], basis_id="pod-x")
    assert model.p == 1 and model.q == 1 and model.r == 2
    assert_allclose(model.c_r, [[1.0, 2.0]])
    assert model.basis_id == "pod-x" and model.source == "inferred" and model.mu == 1e-3
    with pytest.raises(DimensionError):
        infer(X, Xdot, U, c_r=[[1.0, 2.0, 3.0]])


def test_shape_checks(rng):
    with pytest.raises(DimensionError):
        assemble_problem(rng.normal(size=(2, 10)), rng.normal(size=(2, 9)), np.ones(10))
    with pytest.raises(DimensionError):
        assemble_problem(rng.normal(size=(2, 10)), rng.normal(size=(2, 10)), np.ones(9))
    with pytest.raises(ValueError):
        assemble_problem(rng.normal(size=(2, 10)), rng.normal(size=(2, 10)), np.ones(10), mu=-1.0)
    with pytest.raises(DimensionError):
        ReducedQuadraticModel(np.eye(2), np.zeros((2, 4)), np.zeros(2), np.zeros((1, 2)))


def test_model_arrays_are_read_only():
    model = ReducedQuadraticModel(np.eye(2), np.zeros((2, 3)), np.zeros(2), np.zeros((1, 2)))
    assert model.h_r.shape == (2, 4)
    with pytest.raises(ValueError):
        model.a_r[0, 0] = 1.0
