import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hswme.errors import SingularSystemError
from hswme.linalg import kron_operator, orthonormal_completion, qr, solve_dense, solve_kron, svd_from_gram, truncated_svd
from oracles import random_orthonormal

seeds = st.integers(0, 2**31 - 1)


def _orth_err(Q):
    return np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1]))) if Q.shape[1] else 0.0


def test_qr_orthonormal_input_is_fixed_point():
    A = random_orthonormal(np.random.default_rng(0), 8, 3)
    Q, R = qr(A)
    np.testing.assert_allclose(Q, A, atol=1e-14)
    np.testing.assert_allclose(R, np.eye(3), atol=1e-14)


def test_qr_zero_matrix_gives_canonical_completion():
    Q, R = qr(np.zeros((5, 2)))
    np.testing.assert_array_equal(Q, np.eye(5)[:, :2])
    assert not R.any()


def test_qr_rejects_wide():
    with pytest.raises(ValueError):
        qr(np.zeros((2, 3)))


@settings(max_examples=50)
@given(st.integers(1, 25), st.integers(1, 6), seeds)
def test_qr_properties(m, k, seed):
    if k > m:
        k = m
    A = np.random.default_rng(seed).standard_normal((m, k))
    Q, R = qr(A)
    assert _orth_err(Q) <= 1e-12
    assert np.max(np.abs(A - Q @ R)) <= 1e-12 * max(1.0, np.abs(A).max())
    np.testing.assert_array_equal(R, np.triu(R))
    assert np.all(np.diag(R) >= 0)


@given(st.integers(3, 12), seeds)
def test_qr_rank_deficient(m, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m)
    A = np.stack([x, 2 * x, np.zeros(m)], axis=1)
    Q, R = qr(A)
    assert _orth_err(Q) <= 1e-12
    assert np.max(np.abs(A - Q @ R)) <= 1e-12 * np.abs(A).max()
    assert np.all(np.diag(R) >= 0)


def test_qr_deterministic():
    A = np.random.default_rng(3).standard_normal((20, 4))
    A[:, 2] = A[:, 0]
    a, b = qr(A), qr(A.copy())
    assert np.array_equal(a.Q, b.Q) and np.array_equal(a.R, b.R)


def test_qr_random_reconstruction():
    A = np.random.default_rng(1).standard_normal((20, 3))
    Q, R = qr(A)
    assert np.max(np.abs(A - Q @ R)) <= 1e-12


def test_orthonormal_completion():
    Q = random_orthonormal(np.random.default_rng(2), 6, 2)
    C = orthonormal_completion(Q, 5)
    assert _orth_err(C) <= 1e-12
    np.testing.assert_array_equal(C[:, :2], Q)


def test_truncated_svd_examples():
    s = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(s.sigma, [3, 2], atol=1e-14)
    u, v = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
    s = truncated_svd(np.outer(u, v), 2)
    np.testing.assert_allclose(s.sigma, [15.0, 0.0], atol=1e-12)
    assert _orth_err(s.U) <= 1e-12 and _orth_err(s.Vt.T) <= 1e-12
    A = np.random.default_rng(0).standard_normal((50, 8))
    s = truncated_svd(A, 8)
    assert np.max(np.abs(A - s.U * s.sigma @ s.Vt)) <= 1e-10
    with pytest.raises(ValueError):
        truncated_svd(A, 9)
    with pytest.raises(ValueError):
        truncated_svd(A, 0)


@settings(max_examples=40)
@given(st.integers(4, 30), st.integers(1, 6), seeds)
def test_truncated_svd_recovers_spectrum(m, n, seed):
    if n > m:
        n = m
    rng = np.random.default_rng(seed)
    sig = np.sort(rng.uniform(0.1, 10, n))[::-1]
    A = random_orthonormal(rng, m, n) * sig @ random_orthonormal(rng, n, n).T
    r = int(rng.integers(1, n + 1))
    s = truncated_svd(A, r)
    np.testing.assert_allclose(s.sigma, sig[:r], atol=1e-10)
    assert np.all(np.diff(s.sigma) <= 1e-12)
    assert _orth_err(s.U) <= 1e-12 and _orth_err(s.Vt.T) <= 1e-12
    # best rank-r error equals the first discarded singular value
    err = np.linalg.norm(A - s.U * s.sigma @ s.Vt, 2)
    assert err == pytest.approx(sig[r] if r < n else 0.0, abs=1e-9)


def test_svd_from_gram_without_data():
    A = np.random.default_rng(5).standard_normal((30, 5))
    s = svd_from_gram(A.T @ A, 3)
    np.testing.assert_allclose(s.sigma, np.linalg.svd(A, compute_uv=False)[:3], rtol=1e-12)
    assert s.U.shape == (0, 3)


def test_solve_dense_examples():
    B = np.random.default_rng(0).standard_normal((4, 2))
    np.testing.assert_array_equal(solve_dense(np.eye(4), B), B)
    np.testing.assert_allclose(solve_dense(2 * np.eye(3), np.eye(3)), 0.5 * np.eye(3))
    rng = np.random.default_rng(1)
    A = rng.standard_normal((10, 10)) + 10 * np.eye(10)
    B = rng.standard_normal((10, 3))
    X = solve_dense(A, B)
    assert np.linalg.norm(A @ X - B) <= 1e-10 * np.linalg.norm(B)
    with pytest.raises(SingularSystemError):
        solve_dense(np.ones((3, 3)), np.ones(3))
    with pytest.raises(ValueError):
        solve_dense(np.ones((2, 3)), np.ones(2))


def test_solve_kron_trivial():
    rng = np.random.default_rng(0)
    A1, A2 = rng.standard_normal((2, 3, 3))
    H1, H2 = rng.standard_normal((2, 2, 2))
    R = rng.standard_normal((3, 2))
    np.testing.assert_allclose(solve_kron(A1, H1, A2, H2, 0.0, R), R)
    np.testing.assert_allclose(solve_kron(0 * A1, H1, 0 * A2, H2, 0.3, R), R)


@settings(max_examples=60)
@given(st.integers(1, 4), st.integers(1, 3), seeds)
def test_solve_kron_matches_vec_oracle(n, r, seed):
    rng = np.random.default_rng(seed)
    A1, A2 = rng.standard_normal((2, n, n))
    H1 = rng.standard_normal((r, r))
    H1 = H1 @ H1.T + np.eye(r)
    H2 = rng.standard_normal((r, r))
    R = rng.standard_normal((n, r))
    dt = 0.05
    L = solve_kron(A1, H1, A2, H2, dt, R)
    # residual of the matrix equation itself
    res = L - dt * A1 @ L @ H1 - dt * A2 @ L @ H2 - R
    assert np.max(np.abs(res)) <= 1e-11 * max(1.0, np.abs(L).max())
    # explicit entry-wise assembly of the linear map on vec(L)
    op = np.zeros((n * r, n * r))
    for k in range(n * r):
        E = np.zeros(n * r)
        E[k] = 1.0
        E = E.reshape((n, r), order="F")
        op[:, k] = (E - dt * A1 @ E @ H1 - dt * A2 @ E @ H2).ravel(order="F")
    np.testing.assert_allclose(kron_operator(A1, H1, A2, H2, dt), op, atol=1e-14)
    np.testing.assert_allclose(L, np.linalg.solve(op, R.ravel(order="F")).reshape((n, r), order="F"), atol=1e-11)
