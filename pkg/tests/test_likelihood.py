import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lvggm.likelihood import grad_s, grad_z, gradients, objective, sample_covariance
from lvggm.model import CovarianceEstimate, Decomposition, InputError, NotPositiveDefinite

from conftest import random_orthogonal, random_spd


def cov(M):
    return CovarianceEstimate(np.array(M, dtype=float))


@pytest.mark.parametrize(
    "X, expected",
    [([[1, 0], [-1, 0]], [[1, 0], [0, 0]]), ([[1, 1], [1, 1], [-2, -2]], [[2, 2], [2, 2]])],
)
def test_sample_covariance_examples(X, expected):
    np.testing.assert_allclose(sample_covariance(np.array(X, float)).matrix, expected, atol=1e-15)


def test_sample_covariance_needs_two_samples():
    with pytest.raises(InputError):
        sample_covariance(np.array([[2.0]]))


def test_sample_covariance_center_flag():
    X = np.array([[1.0, 2.0], [3.0, 2.0]])
    np.testing.assert_allclose(sample_covariance(X, center=True).matrix, [[1, 0], [0, 0]])


@given(st.integers(2, 30), st.integers(2, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_sample_covariance_is_psd(n, d, seed):
    X = np.random.default_rng(seed).standard_normal((n, d))
    assert np.linalg.eigvalsh(sample_covariance(X).matrix)[0] >= -1e-10


def test_objective_examples():
    assert objective(cov(np.eye(4)), Decomposition(np.eye(4), np.zeros((4, 1)))) == pytest.approx(4.0)
    val = objective(cov([[2.0]]), Decomposition(np.array([[0.5]]), np.array([[0.0]])))
    assert val == pytest.approx(1 + math.log(2), abs=1e-12)
    with pytest.raises(NotPositiveDefinite):
        objective(cov(np.eye(2)), Decomposition(np.zeros((2, 2)), np.array([[1.0], [0.0]])))


@pytest.mark.parametrize("sigma, expected", [(2.0, 0.0), (1.0, -1.0)])
def test_grad_s_scalar_examples(sigma, expected):
    g = grad_s(cov([[sigma]]), Decomposition(np.array([[0.5]]), np.array([[0.0]])))
    np.testing.assert_allclose(g, [[expected]], atol=1e-14)


@pytest.mark.parametrize("z, expected", [(1.0, 0.0), (2.0, 3.0)])
def test_grad_z_scalar_examples(z, expected):
    g = grad_z(cov([[1.0]]), Decomposition(np.array([[0.0]]), np.array([[z]]), 1))
    np.testing.assert_allclose(g, [[expected]], atol=1e-14)


def _instance(rng, d, r, sign):
    # PD by construction: the low-rank term is small next to the sparse part
    Z = 0.3 * rng.standard_normal((d, r)) / np.sqrt(d)
    S = random_spd(rng, d, floor=1.0)
    Sigma = random_spd(rng, d, floor=0.2)
    return cov(Sigma), Decomposition(S, Z, sign)


def _fd_grads(c, dec, h=1e-5):
    d, r = dec.Z.shape
    gS = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = h
            # S is stored symmetrically, so perturb the unsymmetrized objective directly
            plus = _raw_objective(c, dec.S + E, dec.Z, dec.sign)
            minus = _raw_objective(c, dec.S - E, dec.Z, dec.sign)
            gS[i, j] = (plus - minus) / (2 * h)
    gZ = np.zeros((d, r))
    for i in range(d):
        for k in range(r):
            E = np.zeros((d, r))
            E[i, k] = h
            plus = _raw_objective(c, dec.S, dec.Z + E, dec.sign)
            minus = _raw_objective(c, dec.S, dec.Z - E, dec.sign)
            gZ[i, k] = (plus - minus) / (2 * h)
    return gS, gZ


def _raw_objective(c, S, Z, sign):
    # independent of the package: slogdet on the unsymmetrized matrix
    Om = S + sign * Z @ Z.T
    sgn, logdet = np.linalg.slogdet(Om)
    assert sgn > 0
    return float(np.trace(c.matrix @ Om)) - logdet


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d, r = int(rng.integers(4, 13)), int(rng.integers(1, 4))
    c, dec = _instance(rng, d, r, int(rng.choice([-1, 1])))
    gS, gZ = gradients(c, dec)
    fS, fZ = _fd_grads(c, dec)
    # the S gradient of tr(Sigma Omega) - log|Omega| w.r.t. an unconstrained S is Sigma - Omega^{-T}
    assert _rel(gS, fS.T) < 1e-5
    assert _rel(gZ, fZ) < 1e-5


def test_stationary_at_population_truth(rng):
    d, r = 8, 2
    Z = 0.2 * rng.standard_normal((d, r))
    S = random_spd(rng, d, floor=1.0)
    for sign in (1, -1):
        dec = Decomposition(S, Z, sign)
        Sigma = np.linalg.inv(dec.Omega)
        gS, gZ = gradients(cov(Sigma), dec)
        assert np.max(np.abs(gS)) < 1e-10
        assert np.max(np.abs(gZ)) < 1e-10


def test_objective_rotation_invariant(rng):
    c, dec = _instance(rng, 9, 3, -1)
    U = random_orthogonal(rng, 3)
    rotated = Decomposition(dec.S, dec.Z @ U, dec.sign)
    assert objective(c, rotated) == pytest.approx(objective(c, dec), abs=1e-10)


def test_gradients_raise_on_indefinite():
    with pytest.raises(NotPositiveDefinite):
        grad_s(cov(np.eye(2)), Decomposition(-np.eye(2), np.zeros((2, 1))))
