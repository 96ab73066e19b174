import numpy as np
import pytest

from lvggm.model import InputError, is_positive_definite
from lvggm.metrics import spikiness
from lvggm.synth import (
    GenericSpec,
    LvggmSpec,
    generate_generic,
    generate_lvggm,
    lvggm_from_joint,
    sample_gaussian,
)


def test_schur_complement_example():
    joint = np.array([[2.0, 0, 1], [0, 2, 1], [1, 1, 2]])
    gt = lvggm_from_joint(joint, 2, 1)
    np.testing.assert_allclose(gt.S_star, [[2, 0], [0, 2]])
    np.testing.assert_allclose(gt.L_star, -0.5 * np.ones((2, 2)), atol=1e-15)
    np.testing.assert_allclose(gt.Omega_star, [[1.5, -0.5], [-0.5, 1.5]], atol=1e-15)
    z = gt.Z_star[:, 0] * np.sign(gt.Z_star[0, 0])
    np.testing.assert_allclose(z, [2 ** -0.5, 2 ** -0.5], atol=1e-12)
    assert gt.sign == -1


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("d, r", [(10, 1), (30, 2), (60, 4)])
def test_lvggm_invariants(seed, d, r):
    gt = generate_lvggm(LvggmSpec(d, r, seed=seed))
    assert is_positive_definite(gt.Omega_star)
    assert np.linalg.norm(gt.S_star + gt.L_star - gt.Omega_star) < 1e-10
    w = np.linalg.eigvalsh(gt.L_star)
    assert w[-1] <= 1e-12  # negative semidefinite
    mags = np.sort(np.abs(w))[::-1]
    assert np.all(mags[r:] < 1e-8 * mags[0])
    np.testing.assert_allclose(-gt.Z_star @ gt.Z_star.T, gt.L_star, atol=1e-10)
    assert gt.s_star == np.count_nonzero(gt.S_star)
    assert gt.s_star == max(d, round(0.02 * d * d)) - (max(d, round(0.02 * d * d)) - d) % 2


@pytest.mark.parametrize("seed", range(6))
def test_generic_invariants(seed):
    gt = generate_generic(GenericSpec(40, 3, seed=seed))
    assert gt.sign == 1 and is_positive_definite(gt.Omega_star)
    w = np.linalg.eigvalsh(gt.L_star)
    assert w[0] >= -1e-12 and np.sum(w > 1e-8 * w[-1]) <= 3
    assert np.isfinite(spikiness(gt.L_star))


def test_generators_deterministic():
    a, b = generate_lvggm(LvggmSpec(25, 2, seed=7)), generate_lvggm(LvggmSpec(25, 2, seed=7))
    assert np.array_equal(a.Omega_star, b.Omega_star) and np.array_equal(a.Z_star, b.Z_star)
    c = generate_lvggm(LvggmSpec(25, 2, seed=8))
    assert not np.array_equal(a.Omega_star, c.Omega_star)
    g1, g2 = generate_generic(GenericSpec(25, 2, seed=3)), generate_generic(GenericSpec(25, 2, seed=3))
    assert np.array_equal(g1.Omega_star, g2.Omega_star)


def test_spec_validation():
    with pytest.raises(InputError):
        LvggmSpec(5, 5)
    with pytest.raises(InputError):
        LvggmSpec(10, 2, s_star_target=5)
    with pytest.raises(InputError):
        GenericSpec(10, 2, pd_margin=0)


def test_unscaled_mode_uses_raw_uniform_entries():
    gt = generate_lvggm(LvggmSpec(30, 2, seed=0, latent_scale=1.0, sparse_scale=1.0, s_star_target=100))
    off = gt.S_star[~np.eye(30, dtype=bool)]
    assert np.max(np.abs(off)) <= 1.0 and np.max(np.abs(off)) > 0.5


def test_sampler_law_of_large_numbers():
    X = sample_gaussian(np.eye(2), 10**6, 0).samples
    np.testing.assert_allclose(X.T @ X / X.shape[0], np.eye(2), atol=0.01)


def test_sampler_mean_and_determinism():
    n = 20000
    X = sample_gaussian(np.eye(3), n, 11).samples
    assert np.all(np.abs(X.mean(axis=0)) < 4 / np.sqrt(n))
    assert np.array_equal(X, sample_gaussian(np.eye(3), n, 11).samples)


def test_sampler_covariance_matches_truth():
    gt = generate_lvggm(LvggmSpec(8, 2, seed=1))
    X = sample_gaussian(gt, 200000, 5).samples
    emp = X.T @ X / X.shape[0]
    np.testing.assert_allclose(emp, np.linalg.inv(gt.Omega_star), atol=0.02)
