import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edr.operators import (
    PAULI_I, PAULI_X, PAULI_Z, OperatorError, as_density, as_hermitian, eigendecompose, eigenvalues,
    inverse_sqrt, is_psd, min_eigenvalue, operator_norm, projector, random_density, random_hermitian,
    random_unitary, trace_product,
)
from edr.qubit import canonical_pair

P_PLUS = np.diag([1.0, 0.0]).astype(complex)
P_MINUS = np.diag([0.0, 1.0]).astype(complex)


def eig_2x2(h):
    """Roots of the characteristic polynomial of a Hermitian 2x2 matrix."""
    a, d, b = h[0, 0].real, h[1, 1].real, h[0, 1]
    mid, rad = (a + d) / 2, np.hypot((a - d) / 2, abs(b))
    return np.array([mid - rad, mid + rad])


def test_identity_and_pauli_spectra():
    assert np.allclose(eigenvalues(PAULI_I), [1, 1])
    assert np.allclose(eigenvalues(PAULI_Z), [-1, 1])
    vals, vecs = eigendecompose(PAULI_X)
    assert np.allclose(vals, [-1, 1])
    plus, minus = np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)
    assert abs(abs(np.vdot(vecs[:, 1], plus)) - 1) < 1e-12
    assert abs(abs(np.vdot(vecs[:, 0], minus)) - 1) < 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_two_by_two_matches_characteristic_polynomial(a, d, re, im):
    h = np.array([[a, re + 1j * im], [re - 1j * im, d]])
    assert np.allclose(eigenvalues(h), eig_2x2(h), atol=1e-12)


def test_operator_norm_examples():
    assert operator_norm(np.zeros((3, 3))) == 0.0
    assert operator_norm(PAULI_X / 2) == pytest.approx(0.5, abs=1e-15)
    pair = canonical_pair(np.pi / 4)
    diff = pair.barred.projectors[0] - pair.unbarred.projectors[0]
    assert operator_norm(diff) == pytest.approx(np.sqrt(2) / 2, abs=1e-12)


def test_is_psd_examples():
    assert is_psd(P_PLUS)
    assert not is_psd(-P_PLUS, tol=1e-10)
    h = 0.5 * (PAULI_I + 1.0001 * PAULI_X)
    assert min_eigenvalue(h) == pytest.approx(-5e-5, abs=1e-12)
    assert not is_psd(h, tol=1e-10)
    assert is_psd(h, tol=1e-4)
    with pytest.raises(OperatorError):
        is_psd(h, tol=-1.0)


def test_trace_product_examples():
    assert trace_product(P_PLUS, P_PLUS) == pytest.approx(1.0)
    assert trace_product(P_PLUS, P_MINUS) == pytest.approx(0.0)
    for theta in (0.0, np.pi / 8, np.pi / 4):
        pair = canonical_pair(theta)
        val = trace_product(pair.unbarred.projectors[0], pair.barred.projectors[0])
        assert val == pytest.approx(np.cos(theta) ** 2, abs=1e-12)
    with pytest.raises(OperatorError):
        trace_product(P_PLUS, np.eye(3))


def test_validation_rejects_bad_input():
    with pytest.raises(OperatorError):
        as_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(OperatorError):
        as_hermitian(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(OperatorError):
        as_hermitian(np.ones((2, 3)))
    with pytest.raises(OperatorError):
        as_density(np.eye(2))
    with pytest.raises(OperatorError):
        as_density(np.diag([1.5, -0.5]))


def test_reconstruction_on_many_random_matrices(rng):
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 17))
        h = random_hermitian(n, rng)
        vals, vecs = eigendecompose(h)
        worst = max(worst, np.max(np.abs(vecs @ np.diag(vals) @ vecs.conj().T - h)))
    assert worst < 1e-10


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**32 - 1))
def test_spectral_invariants(n, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(n, rng)
    u = random_unitary(n, rng)
    assert abs(eigenvalues(h).sum() - np.trace(h).real) < 1e-10
    assert abs(operator_norm(h) - operator_norm(-h)) < 1e-12
    assert abs(operator_norm(u.conj().T @ h @ u) - operator_norm(h)) < 1e-10
    rho = random_density(n, rng)
    assert is_psd(rho) and is_psd(u.conj().T @ rho @ u)


def test_projector_and_inverse_sqrt(rng):
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    v /= np.linalg.norm(v)
    p = projector(v)
    assert np.allclose(p @ p, p) and np.trace(p).real == pytest.approx(1.0)
    rho = random_density(4, rng)
    s = inverse_sqrt(rho)
    assert np.allclose(s @ rho @ s, np.eye(4), atol=1e-8)
