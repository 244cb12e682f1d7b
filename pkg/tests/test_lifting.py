import numpy as np
import pytest
from numpy.testing import assert_allclose

from gridlearn.errors import DimensionError
from gridlearn.lifting import (assemble_lifted_operators, chain_rule_columns, chain_rule_derivative,
                               lift_columns, lift_state, lifted_blocks_pattern, lifted_rhs,
                               lifted_rhs_columns, unlift)
from gridlearn.swing_model import SwingNetwork, SwingState, mean_output_weights, swing_output, swing_rhs
from gridlearn.synthetic import random_network, synthetic_network


def uncoupled(n):
    return SwingNetwork(n, 100.0, np.full(n, 2.0), np.full(n, 3.0), np.zeros((n, n)),
                        np.zeros((n, n)), np.ones(n), mean_output_weights(n))


def test_lift_state_at_rest():
    x = lift_state(np.zeros(2), np.zeros(2))
    assert_allclose(x.values, [0, 0, 0, 0, 0, 0, 1, 1])
    assert x.n == 2


def test_lift_state_quarter_turn():
    x = lift_state([np.pi / 2], [3.0])
    assert_allclose(x.values, [np.pi / 2, 3.0, 1.0, 0.0], atol=1e-15)
    assert_allclose(x.block(3), [1.0])


def test_lift_state_on_unit_circle(rng):
    x = lift_state(rng.uniform(-10, 10, 50), rng.normal(size=50))
    assert_allclose(x.block(3) ** 2 + x.block(4) ** 2, 1.0, atol=1e-15)


def test_lift_state_length_mismatch():
    with pytest.raises(DimensionError):
        lift_state(np.zeros(2), np.zeros(3))


def test_lift_columns_matches_lift_state(rng):
    Z = rng.normal(size=(6, 5))
    X = lift_columns(Z)
    for k in range(5):
        assert_allclose(X[:, k], lift_state(Z[:3, k], Z[3:, k]).values)


def test_uncoupled_network_has_no_block2_quadratic_terms():
    ops = assemble_lifted_operators(uncoupled(4))
    n = 4
    assert not np.any((ops.h_rows >= n) & (ops.h_rows < 2 * n))


def test_single_oscillator_kinematics():
    ops = assemble_lifted_operators(uncoupled(1))
    entries = sorted(zip(ops.h_rows.tolist(), ops.h_i.tolist(), ops.h_j.tolist(), ops.h_vals.tolist()))
    # x3' = x4 x2, x4' = -x3 x2 (zero-based rows 2 and 3)
    assert entries == [(2, 3, 1, 1.0), (3, 2, 1, -1.0)]


def test_lifted_rhs_homogeneous_and_input(small_network):
    ops = assemble_lifted_operators(small_network)
    assert_allclose(lifted_rhs(ops, np.zeros(12), 0.0), np.zeros(12))
    assert_allclose(lifted_rhs(ops, np.zeros(12), 1.0), ops.b)


def test_input_column_carries_inverse_mass(small_network):
    ops = assemble_lifted_operators(small_network)
    n = small_network.n
    assert_allclose(ops.b[n:2 * n], small_network.power / small_network.mass)


@pytest.mark.parametrize("n", [3, 5, 10, 20, 50])
def test_lifting_is_exact(n):
    rng = np.random.default_rng(n)
    for net in (random_network(n, seed=n), synthetic_network(n, seed=n)):
        ops = assemble_lifted_operators(net)
        for _ in range(100):
            delta = rng.uniform(-np.pi, np.pi, n)
            ddelta = rng.normal(size=n)
            u = rng.normal()
            ref = chain_rule_derivative(net, delta, ddelta, u)
            got = lifted_rhs(ops, lift_state(delta, ddelta), u)
            assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-11


def test_output_block(small_network, rng):
    ops = assemble_lifted_operators(small_network)
    delta, ddelta = rng.normal(size=3), rng.normal(size=3)
    assert_allclose(ops.c @ lift_state(delta, ddelta).values,
                    swing_output(small_network, SwingState(delta, ddelta)), rtol=1e-15)


def test_block_sparsity(small_network):
    pattern = lifted_blocks_pattern(assemble_lifted_operators(small_network))
    assert pattern["a"] == [(1, 2), (2, 2)]
    assert pattern["b"] == [2]
    assert pattern["c"] == [1]
    rows = {blk for blk, _, _ in pattern["h"]}
    assert rows == {2, 3, 4}
    assert {(i, j) for blk, i, j in pattern["h"] if blk == 2} == {(3, 3), (3, 4), (4, 3), (4, 4)}
    assert {(i, j) for blk, i, j in pattern["h"] if blk == 3} == {(4, 2)}
    assert {(i, j) for blk, i, j in pattern["h"] if blk == 4} == {(3, 2)}


def test_sparse_matrix_form_agrees(rng):
    net = random_network(2, seed=5)
    ops = assemble_lifted_operators(net)
    x = lift_state(rng.normal(size=2), rng.normal(size=2)).values
    assert ops.h_matrix().shape == (8, 64)
    assert_allclose(ops.h_matrix() @ np.kron(x, x), ops.quadratic(x), rtol=1e-13, atol=1e-14)


def test_columnwise_evaluation(small_network, rng):
    ops = assemble_lifted_operators(small_network)
    Z = rng.normal(size=(6, 7))
    U = rng.normal(size=(1, 7))
    X = lift_columns(Z)
    batched = lifted_rhs_columns(ops, X, U)
    for k in range(7):
        assert_allclose(batched[:, k], lifted_rhs(ops, X[:, k], U[0, k]), rtol=1e-13, atol=1e-13)
    assert_allclose(chain_rule_columns(small_network, Z, U), batched, rtol=1e-11, atol=1e-11)


def test_lifted_rhs_dimension_check(small_network):
    with pytest.raises(DimensionError):
        lifted_rhs(assemble_lifted_operators(small_network), np.zeros(8), 0.0)


def test_unlift_recovers_angles(rng):
    delta = rng.uniform(-10, 10, 5)
    ddelta = rng.normal(size=5)
    x = lift_state(delta, ddelta).values
    got, got_dot = unlift(x)
    assert np.array_equal(got, delta) and np.array_equal(got_dot, ddelta)

    noisy = x.copy()
    noisy[:5] += 0.3
    trig, _ = unlift(noisy, from_trig=True)
    assert_allclose(trig, delta, atol=1e-12)


def test_unlift_columns_and_shape_check(rng):
    Z = rng.normal(size=(4, 6))
    delta, ddelta = unlift(lift_columns(Z), from_trig=True)
    assert_allclose(delta, Z[:2], atol=1e-12)
    assert_allclose(ddelta, Z[2:])
    with pytest.raises(DimensionError):
        unlift(np.zeros(6))


def test_chain_rule_shares_swing_acceleration(small_network, rng):
    delta, ddelta = rng.normal(size=3), rng.normal(size=3)
    lifted = chain_rule_derivative(small_network, delta, ddelta, 0.7)
    assert np.array_equal(lifted[:6], swing_rhs(small_network, SwingState(delta, ddelta), 0.7))
    assert_allclose(lifted[6:9], np.cos(delta) * ddelta)
