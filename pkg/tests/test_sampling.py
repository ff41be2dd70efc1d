import numpy as np
import pytest
import scipy.stats

from cumulyap.lyapunov import is_stable, solve_lyapunov
from cumulyap.sampling import (
    BetaJumps,
    ConstantJumps,
    LevySpec,
    population_state_cumulants,
    sample_steady_state,
    steady_state_mean,
    study_covariance,
    study_drift_matrix,
    two_point_jumps,
)
from cumulyap.tensors import SymmetricTensor


def two_point_moment(law, k):
    return law.p * law.a**k + (1 - law.p) * law.b**k


@pytest.mark.parametrize(
    "c2,cr,r",
    [
        (1.0, 4.0, 3),  # large positive third moment: one point at zero
        (1.0, -4.0, 3),  # large negative third moment
        (2.0, 0.5, 3),  # small odd moment: symmetric points
        (2.0, -0.5, 3),
        (1.0, 5.0, 4),  # even order above the floor
        (0.7, 0.7**2.5, 5),  # exactly at the threshold
    ],
)
def test_two_point_jumps_exact_moments(c2, cr, r):
    law = two_point_jumps(c2, cr, r)
    assert 0.0 <= law.p <= 1.0
    assert two_point_moment(law, 2) == pytest.approx(c2, rel=1e-12)
    assert two_point_moment(law, r) == pytest.approx(cr, rel=1e-12)
    assert law.raw_moment(2) == pytest.approx(c2, rel=1e-12)
    assert law.raw_moment(r) == pytest.approx(cr, rel=1e-12)


def test_two_point_jumps_validation():
    with pytest.raises(ValueError):
        two_point_jumps(-1.0, 1.0, 3)
    with pytest.raises(ValueError):
        two_point_jumps(1.0, 1.0, 2)
    with pytest.raises(ValueError):
        two_point_jumps(1.0, 0.5, 4)  # even order below the power-mean floor


def test_jump_law_samples_match_moments():
    rng = np.random.default_rng(40)
    law = two_point_jumps(1.0, 2.0, 3)
    draws = law.sample(rng, 200_000)
    assert set(np.round(np.unique(draws), 10)) <= {round(law.a, 10), round(law.b, 10)}
    assert draws.mean() == pytest.approx(law.raw_moment(1), abs=0.02)

    beta = BetaJumps(0.8, 1.0)
    dist = scipy.stats.beta(0.8 * 1.0, 0.2 * 1.0)
    for k in range(1, 5):
        assert beta.raw_moment(k) == pytest.approx(dist.moment(k), rel=1e-12)
    bdraws = beta.sample(rng, 200_000)
    assert bdraws.mean() == pytest.approx(0.8, abs=0.005)

    const = ConstantJumps(2.5)
    assert const.raw_moment(3) == pytest.approx(2.5**3)
    assert np.all(const.sample(rng, 5) == 2.5)


def test_levy_spec_validation_and_cumulants():
    with pytest.raises(ValueError):
        LevySpec(np.array([-0.1, 1.0]), ConstantJumps(1.0))
    with pytest.raises(ValueError):
        LevySpec(np.zeros(2), ConstantJumps(1.0))
    levy = LevySpec(np.array([0.5, 2.0]), ConstantJumps(3.0))
    cums = levy.noise_cumulants([2, 3])
    assert cums[2][0, 0] == pytest.approx(0.5 * 9.0)
    assert cums[3][1, 1, 1] == pytest.approx(2.0 * 27.0)
    assert cums[2][0, 1] == 0.0


def test_study_drift_matrix_stable_across_grid():
    for d in (2, 3, 5):
        for gamma in (0.0, 1.0, 10.0):
            for rho in (0.0, 0.2, 0.9):
                assert is_stable(study_drift_matrix(d, gamma, rho))
    with pytest.raises(ValueError):
        study_drift_matrix(3, 1.0, 1.0)
    with pytest.raises(ValueError):
        study_drift_matrix(3, 1.0, -0.2)


def test_study_covariance_solves_lyapunov():
    d, gamma, rho, c2 = 3, 10.0, 0.2, 1.25
    M = study_drift_matrix(d, gamma, rho)
    Sigma = study_covariance(d, rho, c2)
    direct = solve_lyapunov(M, SymmetricTensor.from_dense(c2 * np.eye(d)))
    assert np.allclose(Sigma, direct.to_dense(), rtol=1e-12)
    # rotation strength must not enter the covariance
    Sigma_other = solve_lyapunov(
        study_drift_matrix(d, 2.0, rho), SymmetricTensor.from_dense(c2 * np.eye(d))
    )
    assert np.allclose(Sigma, Sigma_other.to_dense(), rtol=1e-10)


def test_steady_state_mean():
    M = np.array([[-2.0, 0.0], [1.0, -1.0]])
    levy = LevySpec(np.array([1.0, 3.0]), ConstantJumps(2.0))
    mean = steady_state_mean(M, levy)
    assert np.allclose(M @ mean, -levy.rates * 2.0)


def test_population_state_cumulants():
    M = study_drift_matrix(3, 10.0, 0.2)
    levy = LevySpec(np.full(3, 0.5), BetaJumps(0.8, 1.0))
    out = population_state_cumulants(M, levy, [1, 2, 3])
    assert np.allclose(out[1].vec_unique(), steady_state_mean(M, levy))
    c2 = 0.5 * BetaJumps(0.8, 1.0).raw_moment(2)
    assert np.allclose(out[2].to_dense(), study_covariance(3, 0.2, c2), rtol=1e-12)
    assert out[3].k == 3


def test_sampler_deterministic_and_shaped():
    M = study_drift_matrix(2, 4.0, 0.3)
    levy = LevySpec(np.array([0.5, 0.5]), BetaJumps(0.8, 1.0))
    X1 = sample_steady_state(M, levy, 500, seed=41)
    X2 = sample_steady_state(M, levy, 500, seed=41)
    X3 = sample_steady_state(M, levy, 500, seed=42)
    assert X1.shape == (500, 2)
    assert np.array_equal(X1, X2)
    assert not np.array_equal(X1, X3)


def test_sampler_matches_population_moments():
    d = 3
    M = study_drift_matrix(d, 10.0, 0.2)
    levy = LevySpec(np.full(d, 0.5), BetaJumps(0.8, 1.0))
    n = 20_000
    X = sample_steady_state(M, levy, n, seed=43)
    mean = steady_state_mean(M, levy)
    c2 = 0.5 * BetaJumps(0.8, 1.0).raw_moment(2)
    Sigma = study_covariance(d, 0.2, c2)
    # 6 monte carlo standard errors on each coordinate mean
    se = np.sqrt(np.diag(Sigma) / n)
    assert np.all(np.abs(X.mean(axis=0) - mean) < 6 * se)
    centered = X - mean
    for i in range(d):
        for j in range(i, d):
            prods = centered[:, i] * centered[:, j]
            assert abs(prods.mean() - Sigma[i, j]) < 6 * prods.std() / np.sqrt(n)


def test_sampler_input_validation():
    levy = LevySpec(np.array([0.5, 0.5]), ConstantJumps(1.0))
    with pytest.raises(ValueError):
        sample_steady_state(np.eye(2), levy, 10, seed=0)  # unstable
    with pytest.raises(ValueError):
        sample_steady_state(study_drift_matrix(3, 1.0, 0.1), levy, 10, seed=0)
    near_defective = np.array([[-1.0, 1.0], [0.0, -1.0 + 1e-12]])
    with pytest.raises(ValueError):
        sample_steady_state(near_defective, levy, 10, seed=0)


def test_sampler_accepts_seed_sequence():
    M = study_drift_matrix(2, 4.0, 0.3)
    levy = LevySpec(np.array([0.5, 0.5]), ConstantJumps(1.0))
    root = np.random.SeedSequence(44)
    X1 = sample_steady_state(M, levy, 100, seed=root)
    X2 = sample_steady_state(M, levy, 100, seed=np.random.SeedSequence(44))
    assert np.array_equal(X1, X2)
