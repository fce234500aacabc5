import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crspec.matkernel import herm_eig, inv_sqrt_psd, null_projector, svd
from conftest import cscg


@settings(max_examples=60, deadline=None)
@given(m=st.integers(1, 5), n=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_svd_reconstructs_and_is_orthonormal(m, n, seed):
    M = cscg(np.random.default_rng(seed), (m, n))
    f = svd(M)
    assert np.allclose(f.reconstruct(), M, atol=1e-12)
    assert np.allclose(f.U.conj().T @ f.U, np.eye(f.rank), atol=1e-12)
    assert np.allclose(f.Q.conj().T @ f.Q, np.eye(f.rank), atol=1e-12)
    assert np.all(np.diff(f.lam) <= 1e-12) and np.all(f.lam > 0)


def test_svd_phase_convention_is_deterministic(rng):
    M = cscg(rng, (3, 4))
    a, b = svd(M), svd(M * np.exp(0.7j))
    lead = a.U[np.argmax(np.abs(a.U) > 1e-10, axis=0), np.arange(a.rank)]
    assert np.allclose(lead.imag, 0) and np.all(lead.real > 0)
    assert np.allclose(a.U, b.U)


def test_svd_drops_rank_deficient_directions(rng):
    u = cscg(rng, (4, 1))
    f = svd(u @ cscg(rng, (1, 3)))
    assert f.rank == 1


def test_svd_rejects_zero():
    with pytest.raises(ValueError):
        svd(np.zeros((2, 2)))


def test_herm_eig_sorted_and_rejects_non_hermitian(rng):
    X = cscg(rng, (4, 4))
    V, d = herm_eig(X @ X.conj().T)
    assert np.all(np.diff(d) <= 0)
    assert np.allclose((V * d) @ V.conj().T, X @ X.conj().T)
    with pytest.raises(ValueError):
        herm_eig(X)


def test_null_projector_annihilates_span(rng):
    Q, _ = np.linalg.qr(cscg(rng, (5, 2)))
    P = null_projector(Q)
    assert np.allclose(P @ Q, 0, atol=1e-14)
    assert np.allclose(P @ P, P)
    assert np.isclose(np.trace(P).real, 3)
    with pytest.raises(ValueError):
        null_projector(2 * Q)


def test_inv_sqrt_psd(rng):
    X = cscg(rng, (3, 3))
    A = X @ X.conj().T + 0.1 * np.eye(3)
    B = inv_sqrt_psd(A)
    assert np.allclose(B @ A @ B, np.eye(3), atol=1e-12)
    with pytest.raises(ValueError):
        inv_sqrt_psd(np.diag([1.0, 0.0]))
