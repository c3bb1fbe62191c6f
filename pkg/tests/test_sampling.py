import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grouplab.errors import RankDeficient, Unsupported
from grouplab.estimates import RunningStats, mean_estimate
from grouplab.sampling import (DenseMatrix, GroupSpec, Quaternion, RngStream, UpperTriangular,
                               expected_chi_norm, gaussian_batch, gmd_batch, gmd_columns,
                               gram_schmidt_batch, haar_batch, over_gaussian_batch, phi_array,
                               phi_embedding, qconj_transpose, qmatmul, qmul, sample_gaussian_matrix,
                               sample_gmd, sample_haar, sample_over_gaussian, special_gram_schmidt)

finite = st.floats(-10, 10, allow_nan=False)
quats = st.builds(Quaternion, finite, finite, finite, finite)


def close(a: Quaternion, b: Quaternion, tol=1e-9) -> bool:
    return np.allclose(a.as_array(), b.as_array(), atol=tol)


class TestQuaternion:
    def test_units(self):
        i, j, k = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0), Quaternion(0, 0, 0, 1)
        assert close(i * j, k)
        assert close(j * i, -k)
        assert close(j * k, i)
        assert close(k * i, j)
        assert close(i * i, Quaternion(-1, 0, 0, 0))

    @given(quats)
    def test_conjugate_norm(self, q):
        prod = q.conjugate() * q
        assert abs(prod.i_part) + abs(prod.j_part) + abs(prod.k_part) < 1e-9 * (1 + q.norm2())
        assert math.isclose(prod.re, q.norm2(), rel_tol=1e-12, abs_tol=1e-12)

    @given(quats, quats, quats)
    def test_associative_distributive(self, a, b, c):
        scale = 1 + a.norm2() * b.norm2() * c.norm2()
        assert np.allclose(((a * b) * c).as_array(), (a * (b * c)).as_array(), atol=1e-9 * scale)
        assert np.allclose((a * (b + c)).as_array(), (a * b + a * c).as_array(), atol=1e-9 * scale)


class TestDenseMatrix:
    def test_json_roundtrip(self):
        rng = RngStream(3)
        for fld in ("real", "complex", "quaternion"):
            M = sample_gaussian_matrix(3, fld, rng)
            back = DenseMatrix.from_json(M.to_json())
            assert back.field == fld
            assert np.array_equal(back.data, M.data)

    def test_shape(self):
        M = DenseMatrix.identity(4, "quaternion")
        assert (M.n_rows, M.n_cols) == (4, 4)
        assert M.entry(0, 0) == Quaternion(1, 0, 0, 0)


class TestGroupSpec:
    def test_fields(self):
        assert GroupSpec("SO", 3).field == "real"
        assert GroupSpec("su", 3).field == "complex"
        assert GroupSpec("Sp", 2).field == "quaternion"
        with pytest.raises(Unsupported):
            GroupSpec("Spin", 5).field

    def test_bounds(self):
        with pytest.raises(ValueError):
            GroupSpec("Spin", 2)
        with pytest.raises(ValueError):
            GroupSpec("SO", 1)


class TestRngStream:
    def test_determinism(self):
        a = sample_gaussian_matrix(2, "real", RngStream(11))
        b = sample_gaussian_matrix(2, "real", RngStream(11))
        assert np.array_equal(a.data, b.data)

    def test_streams_differ(self):
        a = RngStream(11, 0).normal(size=100)
        b = RngStream(11, 1).normal(size=100)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.4

    def test_fork_depends_on_identity_not_state(self):
        r = RngStream(5)
        before = r.fork(2).normal(size=3)
        r.normal(size=10)
        assert np.array_equal(before, r.fork(2).normal(size=3))


class TestGaussian:
    def test_real_variance(self):
        X = gaussian_batch(8, "real", RngStream(1), 100_000)
        assert abs(X.var() - 1.0) < 0.02

    def test_quaternion_parts(self):
        X = gaussian_batch(4, "quaternion", RngStream(2), 100_000)
        for p in range(4):
            assert abs(X[..., p].var() - 0.25) < 0.01
        assert abs((X**2).sum(axis=-1).mean() - 1.0) < 0.02

    def test_complex_parts(self):
        X = gaussian_batch(4, "complex", RngStream(2), 50_000)
        assert abs(X.real.var() - 0.5) < 0.01
        assert abs(X.imag.var() - 0.5) < 0.01


class TestGramSchmidt:
    def test_identity(self):
        assert np.allclose(special_gram_schmidt(DenseMatrix.identity(3)).data, np.eye(3))

    def test_swap_gets_sign_fix(self):
        out = special_gram_schmidt(DenseMatrix(np.array([[0.0, 1.0], [1.0, 0.0]])))
        assert np.allclose(out.data, [[0.0, -1.0], [1.0, 0.0]])

    def test_random_real(self):
        X = sample_gaussian_matrix(8, "real", RngStream(4))
        Q = special_gram_schmidt(X).data
        assert np.abs(Q.T @ Q - np.eye(8)).max() < 1e-10
        assert abs(np.linalg.det(Q) - 1) < 1e-10

    def test_rows_axis(self):
        Y = gaussian_batch(5, "real", RngStream(4), 10)
        Q, T = gram_schmidt_batch(Y, "real", "rows")
        assert np.allclose(T @ Q, Y)
        assert np.allclose(np.triu(T, 1), 0)
        assert np.abs(Q @ np.swapaxes(Q, -1, -2) - np.eye(5)).max() < 1e-10

    def test_quaternion_both_axes(self):
        Y = gaussian_batch(3, "quaternion", RngStream(5), 4)
        Qc, Tc = gram_schmidt_batch(Y, "quaternion", "columns")
        assert np.allclose(qmatmul(Qc, Tc), Y)
        eye = np.zeros((3, 3, 4))
        eye[np.arange(3), np.arange(3), 0] = 1
        assert np.abs(qmatmul(qconj_transpose(Qc), Qc) - eye).max() < 1e-10
        Qr, Tr = gram_schmidt_batch(Y, "quaternion", "rows")
        assert np.allclose(qmatmul(Tr, Qr), Y)
        assert np.abs(qmatmul(Qr, qconj_transpose(Qr)) - eye).max() < 1e-10

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            special_gram_schmidt(DenseMatrix(np.ones((3, 3))))


class TestHaar:
    def test_so8_moments(self):
        X = haar_batch(GroupSpec("SO", 8), RngStream(6), 100_000)
        assert abs(X[:, 0, 0].mean()) < 0.01
        assert abs((X[:, 0, 0] ** 2).mean() - 0.125) < 0.005

    def test_su4_membership(self):
        X = haar_batch(GroupSpec("SU", 4), RngStream(7), 2000)
        err = np.abs(np.conj(np.swapaxes(X, -1, -2)) @ X - np.eye(4)).max()
        assert err < 1e-10
        assert np.abs(np.linalg.det(X) - 1).max() < 1e-10

    def test_sp_unitary_via_phi(self):
        X = haar_batch(GroupSpec("Sp", 3), RngStream(8), 500)
        P = phi_array(X)
        assert np.abs(np.conj(np.swapaxes(P, -1, -2)) @ P - np.eye(6)).max() < 1e-10

    def test_so3_cap(self):
        X = haar_batch(GroupSpec("SO", 3), RngStream(9), 100_000)
        assert abs((X[:, 0, 0] > 0.5).mean() - 0.25) < 0.005

    def test_left_invariance(self):
        g = GroupSpec("SO", 5)
        U = sample_haar(g, RngStream(10)).data
        X = haar_batch(g, RngStream(11), 100_000)
        UX = U @ X
        for A in (X, UX):
            assert abs(A[:, 1, 2].mean()) < 0.01
            assert abs((A[:, 1, 2] ** 2).mean() - 0.2) < 0.006

    def test_spin_unsupported(self):
        with pytest.raises(Unsupported):
            sample_haar(GroupSpec("Spin", 5), RngStream(0))


class TestGMD:
    def test_degenerate(self):
        vals = np.array([sample_gmd(1, "real", RngStream(i)).entries[0, 0] for i in range(4000)])
        assert abs(vals.var() - 1.0) < 0.08

    def test_upper_and_positive(self):
        G = sample_gmd(6, "real", RngStream(1))
        assert isinstance(G, UpperTriangular)
        assert np.all(np.tril(G.entries, -1) == 0)
        assert np.all(G.diagonal()[:-1] > 0)

    def test_moments(self):
        G16 = gmd_batch(16, "real", RngStream(2), 100_000)
        assert abs(G16[:, 0, 0].mean() - expected_chi_norm(16) / 4) < 0.005
        G8 = gmd_batch(8, "real", RngStream(3), 100_000)
        assert abs((G8[:, 0, 1] ** 2).mean() - 0.125) < 0.005
        assert abs(G8[:, 0, 1].mean()) < 0.01

    def test_columns_match_full_law(self):
        full = gmd_batch(6, "real", RngStream(4), 50_000)
        cols = gmd_columns(6, [2, 5], RngStream(5), 50_000)
        for j, c in enumerate([2, 5]):
            assert np.allclose((full[:, :, c] ** 2).mean(0), (cols[:, :, j] ** 2).mean(0), atol=0.02)

    def test_quaternion_gmd(self):
        G = gmd_batch(4, "quaternion", RngStream(6), 50_000)
        assert abs(G[:, 0, 1, 2].var() - 1 / 16) < 0.003
        assert np.all(G[:, 1, 0] == 0)


class TestOverGaussian:
    def test_moments(self):
        Z = over_gaussian_batch(8, RngStream(7), 100_000)
        assert abs(Z[:, 0, 0].mean()) < 0.01
        for j in (1, 7):
            assert abs((Z[:, 0, j] ** 2).mean() - 1.0) < 0.03

    def test_determinism(self):
        assert np.array_equal(sample_over_gaussian(4, RngStream(1)).data,
                              sample_over_gaussian(4, RngStream(1)).data)


class TestCoupling:
    def test_roundtrip(self):
        n = 16
        Y = gaussian_batch(n, "real", RngStream(12), 1000)
        Q, T = gram_schmidt_batch(Y, "real")
        assert np.abs(math.sqrt(n) * Q @ (T / math.sqrt(n)) - Y).max() < 1e-9

    def test_forward_moments(self):
        n = 6
        g = GroupSpec("SO", n)

        def draw(rng, size):
            Z = math.sqrt(n) * haar_batch(g, rng.fork(0), size) @ gmd_batch(n, "real", rng.fork(1), size)
            return np.stack([Z[:, 2, 3], Z[:, 2, 3] ** 2, Z[:, 0, 5] * Z[:, 4, 1]], axis=1)

        stats = RunningStats()
        for i in range(5):
            stats.push(draw(RngStream(13).fork(i), 20_000))
        mean, second, cov = stats.estimates()
        assert mean.contains(0.0) and second.contains(1.0) and cov.contains(0.0)


class TestChiNorm:
    def test_values(self):
        assert math.isclose(expected_chi_norm(1), 0.79788, abs_tol=1e-5)
        assert math.isclose(expected_chi_norm(2), math.sqrt(math.pi / 2), abs_tol=1e-12)
        assert math.isclose(expected_chi_norm(4), 3 * math.sqrt(2 * math.pi) / 4, abs_tol=1e-12)

    @given(st.integers(1, 10**6))
    def test_bracket(self, m):
        v = expected_chi_norm(m)
        assert math.sqrt(m) - 1 / (2 * math.sqrt(m)) - 1e-12 <= v <= math.sqrt(m) + 1e-12


class TestPhi:
    def test_identity_and_j(self):
        assert np.allclose(phi_embedding(DenseMatrix.identity(3, "quaternion")).data, np.eye(6))
        J = DenseMatrix(np.array([[[0.0, 0.0, 1.0, 0.0]]]), "quaternion")
        assert np.allclose(phi_embedding(J).data, [[0, -1], [1, 0]])

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1))
    def test_homomorphism(self, seed):
        rng = RngStream(seed)
        P = gaussian_batch(3, "quaternion", rng.fork(0), 1)[0]
        Q = gaussian_batch(3, "quaternion", rng.fork(1), 1)[0]
        assert np.abs(phi_array(qmatmul(P, Q)) - phi_array(P) @ phi_array(Q)).max() < 1e-12
        assert np.abs(phi_array(qconj_transpose(Q)) - np.conj(phi_array(Q)).T).max() < 1e-12


def test_mean_estimate_chunk_independent_of_sample_split():
    draw = lambda rng, size: rng.normal(size=size)
    a = mean_estimate(draw, 50_000, RngStream(1))
    b = mean_estimate(draw, 50_000, RngStream(1))
    assert a == b
    assert qmul(np.array([0, 1.0, 0, 0]), np.array([0, 0, 1.0, 0]))[3] == 1.0
