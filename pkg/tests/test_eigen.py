import numpy as np
import pytest

from esrkit import ConvergenceError, eigensolve

from oracles import hermitian_eigs_bisection


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return m + m.conj().T


def test_diagonal():
    w, v = eigensolve(np.diag([1.0, 2.0]))
    np.testing.assert_array_equal(w, [1, 2])
    np.testing.assert_array_equal(v, np.eye(2))


def test_pauli_x():
    w, _ = eigensolve([[0, 1], [1, 0]])
    np.testing.assert_allclose(w, [-1, 1], atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_random_8x8_against_bisection_oracle(seed):
    h = random_hermitian(8, seed)
    w, _ = eigensolve(h)
    ref = hermitian_eigs_bisection(h)
    np.testing.assert_allclose(w, ref, rtol=1e-9, atol=1e-9 * np.max(np.abs(ref)))


@pytest.mark.parametrize("n", [1, 2, 3, 6, 12])
def test_unitarity_and_trace(n):
    h = random_hermitian(n, 100 + n)
    w, v = eigensolve(h)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(v.conj().T @ h @ v, np.diag(w), atol=1e-12 * np.linalg.norm(h))
    assert np.sum(w) == pytest.approx(np.trace(h).real, rel=1e-10, abs=1e-12)
    assert np.all(np.diff(w) >= 0)


def test_degenerate_spectrum():
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    h = q @ np.diag([1, 1, 1, 3, 3]) @ q.conj().T
    w, v = eigensolve(h)
    np.testing.assert_allclose(w, [1, 1, 1, 3, 3], atol=1e-12)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(5), atol=1e-12)


def test_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        eigensolve([[0, 1], [0, 0]])


def test_rejects_non_square():
    with pytest.raises(ValueError):
        eigensolve(np.zeros((2, 3)))


def test_sweep_budget_reports_residual():
    with pytest.raises(ConvergenceError) as info:
        eigensolve(random_hermitian(6, 3), max_sweeps=1)
    assert info.value.residual > 0
    assert info.value.sweeps == 1
