import numpy as np
import pytest
import scipy.linalg

from cumulyap.graphs import DirectedGraph
from cumulyap.lyapunov import (
    ModelParameters,
    SingularSystemError,
    _integral_cumulant,
    eigenvalue_sum_margin,
    forward_map,
    is_stable,
    lyapunov_operator_matrix,
    solve_lyapunov,
    special_drift_matrix,
    trek_closed_form,
)
from cumulyap.tensors import SymmetricTensor, n_mode_product


def random_stable(rng, d):
    return rng.normal(size=(d, d)) - 2.0 * d * np.eye(d)


def test_is_stable():
    assert is_stable(-np.eye(2))
    assert not is_stable(np.array([[0.0, 1.0], [-1.0, 0.0]]))  # purely imaginary
    assert not is_stable(np.array([[1.0]]))


def test_solve_lyapunov_order2_matches_scipy():
    rng = np.random.default_rng(2)
    for d in (2, 3, 5):
        M = random_stable(rng, d)
        C = rng.normal(size=(d, d))
        C = C @ C.T
        K = solve_lyapunov(M, C).to_dense()
        expected = scipy.linalg.solve_continuous_lyapunov(M, -C)
        assert np.allclose(K, expected, rtol=1e-10)


def test_solve_lyapunov_order3_matches_quadrature():
    import scipy.integrate

    rng = np.random.default_rng(3)
    M = random_stable(rng, 2)
    C = SymmetricTensor.from_diagonal(rng.uniform(0.5, 2.0, 2), 3)
    K = solve_lyapunov(M, C)
    horizon = float(np.log(1e-14) / np.max(np.linalg.eigvals(M).real))
    dense_C = C.to_dense()

    def entry(t, idx):
        E = scipy.linalg.expm(M * t)
        T = dense_C
        for mode in range(3):
            T = n_mode_product(T, E, mode)
        return T[idx]

    for idx in K.indices:
        ref, err = scipy.integrate.quad(entry, 0.0, horizon, args=(idx,), limit=200)
        assert K[idx] == pytest.approx(ref, rel=1e-8, abs=1e-10)

    # the coarse trapezoid reference agrees at its own accuracy
    coarse = _integral_cumulant(M, dense_C, horizon, n_nodes=4000)
    assert np.allclose(K.to_dense(), coarse, rtol=1e-4, atol=1e-5)


def test_solve_lyapunov_residual_invariant():
    rng = np.random.default_rng(4)
    for d, k in [(2, 2), (3, 3), (2, 4)]:
        M = random_stable(rng, d)
        C = SymmetricTensor(d, k, rng.normal(size=len(SymmetricTensor(d, k).values)))
        K = solve_lyapunov(M, C).to_dense()
        residual = sum(n_mode_product(K, M, mode) for mode in range(k)) + C.to_dense()
        assert np.max(np.abs(residual)) < 1e-10 * max(1.0, np.max(np.abs(K)))


def test_solve_lyapunov_singular_system():
    # eigenvalues 1 and -1 sum to zero at order 2
    with pytest.raises(SingularSystemError):
        solve_lyapunov(np.diag([1.0, -1.0]), np.eye(2))
    # -1, -1, 2 sum to zero at order 3
    M = np.diag([-1.0, -1.0, 2.0])
    with pytest.raises(SingularSystemError):
        solve_lyapunov(M, SymmetricTensor.identity(3, 3))
    # but the same drift is fine at order 2
    solve_lyapunov(M, np.eye(3))


def test_eigenvalue_sum_margin():
    M = np.diag([-1.0, -2.0])
    assert eigenvalue_sum_margin(M, 2) == pytest.approx(2.0)
    assert eigenvalue_sum_margin(np.diag([1.0, -1.0]), 2) == pytest.approx(0.0)


def test_solve_lyapunov_input_validation():
    with pytest.raises(ValueError):
        solve_lyapunov(np.ones((2, 3)), np.eye(2))
    with pytest.raises(ValueError):
        solve_lyapunov(-np.eye(3), np.eye(2))


def test_lyapunov_operator_matrix_d2_example():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    B = lyapunov_operator_matrix(M, 2)
    expected = np.array(
        [
            [2 * 1.0, 2 * 2.0, 0.0],
            [3.0, 1.0 + 4.0, 2.0],
            [0.0, 2 * 3.0, 2 * 4.0],
        ]
    )
    assert np.array_equal(B, expected)


def test_lyapunov_operator_matrix_matches_mode_products():
    rng = np.random.default_rng(5)
    for d, k in [(2, 3), (3, 2), (3, 4)]:
        M = rng.normal(size=(d, d))
        K = SymmetricTensor(d, k, rng.normal(size=len(SymmetricTensor(d, k).values)))
        image = sum(n_mode_product(K.to_dense(), M, mode) for mode in range(k))
        lhs = lyapunov_operator_matrix(M, k) @ K.vec_unique()
        rhs = SymmetricTensor.from_dense(image, symmetrize=True).vec_unique()
        assert np.allclose(lhs, rhs)


def test_solver_and_operator_agree():
    rng = np.random.default_rng(6)
    M = random_stable(rng, 3)
    C = SymmetricTensor.from_diagonal(rng.uniform(0.5, 1.5, 3), 3)
    K = solve_lyapunov(M, C)
    resid = lyapunov_operator_matrix(M, 3) @ K.vec_unique() + C.vec_unique()
    assert np.max(np.abs(resid)) < 1e-12 * np.max(np.abs(K.vec_unique()))


def test_model_parameters_validation():
    params = ModelParameters(-np.eye(2), {2: np.eye(2)})
    assert params.d == 2 and params.orders == [2]
    with pytest.raises(ValueError):
        ModelParameters(np.ones((2, 3)))
    with pytest.raises(ValueError):
        ModelParameters(-np.eye(2), {3: np.eye(2)})  # order mismatch
    with pytest.raises(ValueError):
        ModelParameters(-np.eye(2), {2: np.eye(3)})  # dimension mismatch


def test_forward_map():
    rng = np.random.default_rng(7)
    M = random_stable(rng, 2)
    params = ModelParameters(
        M, {2: np.eye(2), 3: SymmetricTensor.identity(2, 3)}
    )
    out = forward_map(params)
    assert sorted(out) == [2, 3]
    assert out[2].allclose(solve_lyapunov(M, np.eye(2)))
    with pytest.raises(KeyError):
        forward_map(params, orders=[4])


def test_special_drift_matrix():
    g = DirectedGraph(2, [(0, 0), (1, 1), (0, 1)])
    M = special_drift_matrix(g, 3, 0.5)
    assert np.allclose(M, [[-2.0 / 3.0, 0.0], [1.0, -2.0 / 3.0]])
    with pytest.raises(ValueError):
        special_drift_matrix(DirectedGraph(2, [(0, 1)]), 3, 1.0)


def test_trek_closed_form_two_node_frozen_values():
    g = DirectedGraph(2, [(0, 0), (1, 1), (0, 1)])
    for zeta in (0.5, 1.0, 2.0):
        sigma = trek_closed_form(g, 2, 3, zeta)
        assert sigma[0, 0] == pytest.approx(1.5 * zeta)
        assert sigma[0, 1] == pytest.approx(2.25 * zeta**2)
        assert sigma[1, 1] == pytest.approx(1.5 * zeta + 6.75 * zeta**3)
        kappa = trek_closed_form(g, 3, 3, zeta)
        assert kappa[0, 0, 0] == pytest.approx(zeta)
        assert kappa[0, 0, 1] == pytest.approx(zeta**2)
        assert kappa[0, 1, 1] == pytest.approx(2 * zeta**3)
        assert kappa[1, 1, 1] == pytest.approx(zeta + 6 * zeta**4)


def test_trek_closed_form_matches_solver_on_a_tree():
    # polytree with a fork: 0 -> 1, 0 -> 2, plus 3 <- 1
    g = DirectedGraph(4, [(i, i) for i in range(4)] + [(0, 1), (0, 2), (1, 3)])
    r, zeta = 4, 0.8
    M = special_drift_matrix(g, r, zeta)
    for k in (2, r):
        expected = solve_lyapunov(M, SymmetricTensor.identity(4, k))
        assert trek_closed_form(g, k, r, zeta).allclose(expected, rtol=1e-10)


def test_trek_closed_form_needs_self_loops():
    with pytest.raises(ValueError):
        trek_closed_form(DirectedGraph(2, [(0, 1), (0, 0)]), 2, 3, 1.0)
