import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from conftest import random_matrix, random_psd
from outerfact import linalg
from outerfact.errors import NotPSDError, ValidationError
from outerfact.linalg import EPS, Tolerances


class TestTolerances:
    def test_defaults(self):
        tol = Tolerances()
        assert tol.rank_tol == 1e-10
        assert tol.trunc_limit(1) == 512
        assert tol.trunc_limit(2) == 48
        assert tol.grid_points(1) == 512
        assert tol.grid_points(2) == 64

    @pytest.mark.parametrize("kw", [dict(rank_tol=0), dict(conv_tol=-1.0),
                                    dict(grid_points_per_dim=100), dict(max_trunc=0),
                                    dict(psd_tol=float("nan"))])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValidationError):
            Tolerances(**kw)

    def test_replace(self):
        tol = Tolerances().replace(max_trunc=64)
        assert tol.trunc_limit(2) == 64


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(ValidationError):
        linalg.as_matrix([[1.0, np.nan]])
    with pytest.raises(ValidationError):
        linalg.as_matrix(np.ones((2, 2, 2)))
    assert linalg.as_matrix(3).shape == (1, 1)


class TestPseudoinverse:
    def test_singular_diagonal(self):
        assert_allclose(linalg.pseudoinverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_identity(self):
        assert_allclose(linalg.pseudoinverse(np.eye(3)), np.eye(3))

    def test_zero(self):
        assert_allclose(linalg.pseudoinverse(np.zeros((2, 3))), np.zeros((3, 2)))

    def test_penrose_random_rectangular(self, rng):
        M = random_matrix(rng, 5, 3)
        X = linalg.pseudoinverse(M)
        assert np.linalg.norm(M @ X @ M - M) <= 1e-12

    @pytest.mark.parametrize("shape,rank", [((5, 3), 3), ((4, 7), 2), ((6, 6), 4), ((1, 5), 1)])
    def test_all_four_identities(self, rng, shape, rank):
        for _ in range(20):
            M = random_matrix(rng, shape[0], rank) @ random_matrix(rng, rank, shape[1])
            X = linalg.pseudoinverse(M)
            smax = np.linalg.norm(M, 2)
            xmax = np.linalg.norm(X, 2)
            assert np.linalg.norm(M @ X @ M - M, 2) <= 1e2 * EPS * smax
            # same bound transported to the scale of the pseudoinverse
            assert np.linalg.norm(X @ M @ X - X, 2) <= 1e2 * EPS * smax * xmax ** 2
            assert np.linalg.norm((M @ X).conj().T - M @ X, 2) <= 1e-12
            assert np.linalg.norm((X @ M).conj().T - X @ M, 2) <= 1e-12

    def test_psd_pinv_agrees(self, rng):
        H = random_psd(rng, 6, rank=3)
        assert_allclose(linalg.psd_pinv(H), linalg.pseudoinverse(H), atol=1e-10)


class TestRankFactor:
    def test_rank_one(self):
        C, r = linalg.rank_factor(np.ones((2, 2)))
        assert r == 1
        assert C.shape == (1, 2)
        assert_allclose(C.conj().T @ C, np.ones((2, 2)), atol=1e-14)
        assert_allclose(np.abs(C), [[1.0, 1.0]], atol=1e-14)

    def test_zero(self):
        C, r = linalg.rank_factor(np.zeros((3, 3)))
        assert r == 0 and C.shape == (0, 3)

    def test_wide_gram(self, rng):
        G = random_matrix(rng, 4, 6)
        Y = G.conj().T @ G
        C, r = linalg.rank_factor(Y)
        assert r <= 4
        assert np.linalg.norm(C.conj().T @ C - Y) <= 1e-10 * np.linalg.norm(Y, 2)

    def test_round_trip_sweep(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 13))
            rank = int(rng.integers(0, n + 1))
            Y = random_psd(rng, n, rank=rank, complex_=bool(rng.integers(2)))
            C, r = linalg.rank_factor(Y)
            lam = max(np.linalg.eigvalsh(Y)[-1], 0.0) if n else 0.0
            assert np.linalg.norm(C.conj().T @ C - Y) <= max(1e-10 * lam, 1e-14)
            assert r == rank


class TestRanges:
    def test_same(self):
        assert linalg.range_included(np.eye(2), np.eye(2))

    def test_orthogonal(self):
        e1, e2 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        assert not linalg.range_included(e1, e2)

    def test_constructed(self, rng):
        R = random_matrix(rng, 6, 3)
        assert linalg.range_included(R @ random_matrix(rng, 3, 4), R)
        assert not linalg.range_included(random_matrix(rng, 6, 1), R)

    def test_row_mismatch(self):
        with pytest.raises(ValidationError):
            linalg.range_defect(np.eye(2), np.eye(3))

    def test_mutual_inclusion_means_equal_spaces(self, rng):
        for _ in range(50):
            R = random_matrix(rng, 5, 2)
            Q = R @ random_matrix(rng, 2, 3)
            assert linalg.range_included(Q, R) and linalg.range_included(R, Q)
            gap = linalg.range_projector(Q) - linalg.range_projector(R)
            assert np.linalg.norm(gap) <= 1e-9


class TestLoewner:
    def test_basic(self):
        assert linalg.psd_order_leq(np.zeros((2, 2)), np.eye(2))
        assert not linalg.psd_order_leq(2 * np.eye(2), np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            linalg.psd_order_leq(np.eye(2), np.eye(3))


class TestPSD:
    def test_ensure_psd_symmetrizes(self):
        M = np.array([[2.0, 1.0 + 1e-13], [1.0, 1.0]])
        H = linalg.ensure_psd(M)
        assert_allclose(H, H.conj().T, atol=0)

    def test_ensure_psd_rejects(self):
        with pytest.raises(NotPSDError):
            linalg.ensure_psd(np.diag([1.0, -1e-3]))

    def test_hermitian_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            linalg.hermitian([[1.0, 1.0], [0.0, 1.0]])

    def test_psd_sqrt(self, rng):
        H = random_psd(rng, 5, rank=3)
        S = linalg.psd_sqrt(H)
        assert_allclose(S @ S, H, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_rank_factor_property(n, rank, seed):
    rng = np.random.default_rng(seed)
    rank = min(rank, n)
    Y = random_psd(rng, n, rank=rank)
    C, r = linalg.rank_factor(Y)
    assert r == rank
    scale = max(1.0, np.linalg.norm(Y, 2))
    assert np.linalg.norm(C.conj().T @ C - Y) <= 1e-10 * scale
