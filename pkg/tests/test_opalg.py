import math

import numpy as np
import pytest

from qbsm import opalg

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)


def test_identity_spectrum():
    spec = opalg.eig_hermitian(np.eye(4))
    np.testing.assert_allclose(spec.eigenvalues, np.ones(4))


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_diagonal_spectrum_descending(method):
    spec = opalg.eig_hermitian(np.diag([1.0, -1.0]), method=method)
    np.testing.assert_allclose(spec.eigenvalues, [1.0, -1.0])


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_reconstruction_dim8(rng, method):
    h = opalg.random_hermitian(8, rng)
    spec = opalg.eig_hermitian(h, method=method)
    assert np.max(np.abs(spec.reconstruct() - h)) <= 1e-10
    u = spec.eigenvectors
    assert np.max(np.abs(u.conj().T @ u - np.eye(8))) <= 1e-10


def test_jacobi_matches_lapack(rng):
    for dim in (1, 2, 5, 16):
        h = opalg.random_hermitian(dim, rng)
        a = opalg.eig_hermitian(h, "jacobi").eigenvalues
        b = opalg.eig_hermitian(h, "lapack").eigenvalues
        np.testing.assert_allclose(a, b, atol=1e-10)


def test_rejects_non_hermitian_and_oversize():
    with pytest.raises(ValueError):
        opalg.eig_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        opalg.trace_norm(np.eye(65))
    with pytest.raises(ValueError):
        opalg.trace_norm(np.array([[np.nan]]))


def test_trace_norm_values():
    assert opalg.trace_norm(np.zeros((3, 3))) == 0.0
    assert opalg.trace_norm(opalg.projector(KET0) - opalg.projector(KET1)) == pytest.approx(1.0, abs=1e-14)
    val = opalg.trace_norm(0.5 * opalg.projector(KET0) - 0.5 * opalg.projector(PLUS))
    # pure-state closed form: 1/2 sqrt(1 - |<0|+>|^2)
    assert val == pytest.approx(0.5 * math.sqrt(0.5), abs=1e-12)
    assert val == pytest.approx(0.3535534, abs=1e-7)


def test_trace_norm_non_hermitian_uses_singular_values():
    a = np.array([[0, 2], [0, 0]], dtype=complex)
    assert opalg.trace_norm(a) == pytest.approx(1.0)


def test_trace_norms_batch(rng):
    stack = np.stack([opalg.random_hermitian(3, rng) for _ in range(5)])
    np.testing.assert_allclose(opalg.trace_norms(stack), [opalg.trace_norm(a) for a in stack], atol=1e-13)
    assert opalg.trace_norms(np.zeros((0, 2, 2))).shape == (0,)


def test_psd_sqrt_pinv():
    np.testing.assert_allclose(opalg.psd_sqrt_pinv(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(opalg.psd_sqrt_pinv(np.diag([4.0, 0.0])), np.diag([0.5, 0.0]))


def test_psd_sqrt_pinv_full_rank(rng):
    rho = opalg.random_density(6, rng)
    m = opalg.psd_sqrt_pinv(rho)
    assert np.max(np.abs(m @ rho @ m - np.eye(6))) <= 1e-9
    s = opalg.psd_sqrt(rho)
    assert np.max(np.abs(s @ s - rho)) <= 1e-12


def test_psd_checks(rng):
    with pytest.raises(ValueError):
        opalg.check_psd(np.diag([1.0, -0.5]))
    rho = opalg.random_density(5, rng, rank=2)
    assert opalg.numerical_rank(rho) == 2
    p = opalg.support_projector(rho)
    np.testing.assert_allclose(p @ p, p, atol=1e-12)
    assert np.trace(p).real == pytest.approx(2.0)


def test_variational_distance():
    assert opalg.variational_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert opalg.variational_distance([1, 0, 0], [0, 0, 1]) == 1.0
    assert opalg.variational_distance([0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        opalg.variational_distance([1.0], [0.5, 0.5])


def test_random_objects(rng):
    rho = opalg.random_density(4, rng, rank=3)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert opalg.numerical_rank(rho) == 3
    v = opalg.random_pure(7, rng)
    assert np.linalg.norm(v) == pytest.approx(1.0)
