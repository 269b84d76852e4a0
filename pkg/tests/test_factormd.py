import itertools

import numpy as np
import pytest
import sympy
from numpy.testing import assert_allclose

from conftest import random_matrix, random_psd
from outerfact.errors import ConditionFailed, NotPSDError, ValidationError
from outerfact.factormd import (check_2var_decomposition, check_gw_stability,
                                check_multi_condition, diagonal_sums, factor_outer_2d,
                                reflected_locations, shift, y0_matrix, zero_locations)
from outerfact.linalg import Tolerances, psd_sqrt
from outerfact.toeplitz_schur import limiting_schur
from outerfact.trigpoly import AnalyticPoly, LaurentPoly, box_indices, eval_poly, torus_grid

P_POS = AnalyticPoly({(0, 0): 4, (1, 0): 1, (0, 1): 1})
Q_POS = P_POS.gram()
Q_NEG = LaurentPoly({(0, 0): 5, (1, 0): 1, (0, 1): 1})

# first verified runs, cross-checked against the algebra oracle below
NEG_MAX_VIOLATION = 0.2470551300252699
NEG_GW_MAX_ENTRY = 0.25288844214380574


def coeff_error(P, expected):
    return max(np.abs(P.coeff(k) - np.atleast_2d(v)).max() for k, v in expected.items())


def phase_aligned(P, expected, zero=(0, 0)):
    """Remove a unimodular constant so the constant coefficients agree in phase."""
    c = P.coeff(zero)[0, 0] / expected[zero]
    u = c / abs(c)
    return AnalyticPoly({k: v / u for k, v in P.items()})


def test_no_single_square_algebra_oracle():
    """Every branch of the coefficient system for ``5 + 2 Re z1 + 2 Re z2`` is inconsistent."""
    a, b, c, d = sympy.symbols("a b c d")
    conj = sympy.conjugate
    # p = a + b z1 + c z2 + d z1 z2;  |p|^2 coefficients at (1,0), (0,1), (1,1), (1,-1)
    eqs = [conj(a) * b + conj(c) * d - 1, conj(a) * c + conj(b) * d - 1,
           conj(a) * d, conj(c) * b]
    branches = [{a: 0, c: 0}, {a: 0, b: 0}, {d: 0, c: 0}, {d: 0, b: 0}]
    for branch in branches:
        reduced = [sympy.expand(e.subs(branch)) for e in eqs]
        assert any(e.is_number and e != 0 for e in reduced), branch


class TestMultiCondition:
    def test_positive(self):
        r = check_multi_condition(Q_POS)
        assert r.passed and r.converged
        assert r.rank_Y == 1
        assert r.max_violation <= 1e-6

    def test_negative(self):
        r = check_multi_condition(Q_NEG)
        assert not r.passed
        assert r.max_violation >= 10 * 1e-8
        assert r.max_violation == pytest.approx(NEG_MAX_VIOLATION, rel=1e-6)
        assert set(r.diag_sum_violation) == {(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)}

    @pytest.mark.parametrize("degree", [(0, 0), (1, 1), (2, 1)])
    def test_constant(self, degree):
        Q0 = np.array([[2.0, 1.0], [1.0, 2.0]])
        r = check_multi_condition(LaurentPoly({(0, 0): Q0}, degree=degree))
        assert r.passed
        h = 2
        Y = r.Y.copy()
        assert_allclose(Y[-h:, -h:], Q0, atol=1e-12)
        Y[-h:, -h:] = 0
        assert_allclose(Y, 0, atol=1e-12)

    def test_rejects_one_variable(self):
        with pytest.raises(ValidationError):
            check_multi_condition(LaurentPoly({0: 5, 1: 2}))

    def test_rejects_non_psd(self):
        with pytest.raises(NotPSDError):
            check_multi_condition(LaurentPoly({(0, 0): 1, (1, 0): 1, (0, 1): 1}))

    def test_padding_coherence(self):
        K = box_indices((1, 1))
        lim = limiting_schur(Q_POS, K)
        direct = limiting_schur(Q_POS, K[:-1])
        assert np.linalg.norm(lim.quotient(K[:-1]) - direct.value) <= 1e-7

    def test_diagonal_sums_match_torus_identity(self, rng):
        for h, degree in [(1, (1, 1)), (2, (1, 2))]:
            K = box_indices(degree)
            Y = random_psd(rng, len(K) * h)
            Q = AnalyticPoly({k: random_matrix(rng, h, h) for k in K}).gram()
            sums = diagonal_sums(Y, K, h)
            worst = max(np.linalg.norm(s - Q.coeff(mu)) for mu, s in sums.items())
            z1, z2 = torus_grid(64, 2)
            n = degree
            Z = np.stack([z1 ** (n[0] - k[0]) * z2 ** (n[1] - k[1]) for k in K], axis=-1)
            Zb = np.kron(Z[..., :, None], np.eye(h))
            zyz = np.conj(np.swapaxes(Zb, -1, -2)) @ Y @ Zb
            diff = np.abs(zyz - eval_poly(Q, z1, z2)).max()
            assert diff <= len(sums) * worst + 1e-10


class TestFactor2D:
    def test_positive(self):
        F = factor_outer_2d(Q_POS)
        assert coeff_error(F.P, {(0, 0): 4, (1, 0): 1, (0, 1): 1, (1, 1): 0}) <= 1e-8
        assert F.residual <= 1e-6
        assert F.outer_certificates["range_defect"] <= 1e-10
        assert F.outer_certificates["schur_gap_0"] <= 1e-6

    def test_negative_raises_with_report(self):
        with pytest.raises(ConditionFailed) as info:
            factor_outer_2d(Q_NEG)
        assert info.value.report is not None
        assert not info.value.report.passed

    def test_constant(self):
        Q0 = np.array([[5.0, 2.0], [2.0, 3.0]])
        F = factor_outer_2d(LaurentPoly({(0, 0): Q0}))
        assert_allclose(F.P.coeff((0, 0)), psd_sqrt(Q0), atol=1e-12)

    def test_matrix_valued(self, rng):
        P = AnalyticPoly({(0, 0): 4 * np.eye(2) + random_psd(rng, 2) / 4,
                          (1, 0): random_matrix(rng, 2, 2) / 3,
                          (0, 1): random_matrix(rng, 2, 2) / 3})
        F = factor_outer_2d(P.gram())
        assert F.residual <= 1e-6
        assert coeff_error(F.P, dict(P.items())) <= 1e-7

    def test_random_stable(self, rng):
        for _ in range(20):
            a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            c = (abs(a) + abs(b)) * rng.uniform(1.25, 3.0)
            expected = {(0, 0): c, (1, 0): a, (0, 1): b, (1, 1): 0}
            Q = AnalyticPoly(expected).gram()
            report = check_multi_condition(Q)
            assert report.passed
            F = factor_outer_2d(Q, report=report)
            assert F.residual <= 1e-6 * Q.scale
            assert coeff_error(phase_aligned(F.P, expected), expected) <= 1e-6
            assert check_gw_stability(Q).stable_factorable

    def test_degenerate_boundary_zero(self):
        # |1 + z1 z2|^2 vanishes on the torus; truncations converge slowly
        tol = Tolerances(conv_tol=1e-3, residual_tol=1e-3)
        Q = AnalyticPoly({(0, 0): 1, (1, 1): 1}).gram()
        report = check_multi_condition(Q, tol)
        F = factor_outer_2d(Q, tol, report=report)
        err = coeff_error(F.P, {(0, 0): 1, (1, 1): 1, (1, 0): 0, (0, 1): 0})
        assert F.residual <= 1e-3
        assert err <= 1e-3 or not F.converged
        assert err <= 2e-2


class TestDecomposition:
    def test_positive(self):
        r = check_2var_decomposition(Q_POS)
        assert r.converged
        assert max(r.schureq1_gap, r.schureq2_gap, r.zero_pattern_gap) <= 1e-6

    def test_constant(self):
        r = check_2var_decomposition(LaurentPoly({(0, 0): np.eye(2)}, degree=(1, 1)))
        assert r.schureq1_gap <= 1e-14
        assert r.schureq2_gap <= 1e-14
        assert r.zero_pattern_gap == 0

    def test_negative(self):
        r = check_2var_decomposition(Q_NEG)
        assert r.max_gap >= 10 * 1e-8
        assert r.zero_pattern_gap == pytest.approx(r.reflected_zero_gap)

    @pytest.mark.parametrize("degree", [(2, 0), (0, 2)])
    def test_one_sided_degree(self, degree):
        P = AnalyticPoly({(0, 0): 3, degree: 1, tuple(min(x, 1) for x in degree): 0.5})
        r = check_2var_decomposition(P.gram())
        assert r.max_gap <= 1e-6
        assert r.zero_pattern_gap == 0

    def test_y0_matches_display(self):
        Q = Q_NEG
        q = {k: Q.coeff(k)[0, 0] for k in [(0, 0), (0, 1), (1, 0), (1, 1), (1, -1)]}
        c = np.conj
        display = np.array([
            [q[0, 0], c(q[0, 1]), c(q[1, 0]), c(q[1, 1])],
            [q[0, 1], 0, c(q[1, -1]), 0],
            [q[1, 0], q[1, -1], 0, 0],
            [q[1, 1], 0, 0, 0],
        ])
        assert_allclose(y0_matrix(Q, box_indices((1, 1))), display)

    def test_y0_from_operator_formula(self, rng):
        # T_Q - T1 T_Q T1* - T2 T_Q T2* + T1 T2 T_Q T2* T1* on a large section, restricted to K
        coeffs = {(0, 0): 6.0}
        for k in [(1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (2, 1), (2, -1)]:
            coeffs[k] = complex(*rng.standard_normal(2)) / 4
        Q = LaurentPoly(coeffs)
        big = box_indices((5, 4))
        T = np.array([[Q.coeff((k[0] - l[0], k[1] - l[1]))[0, 0] for l in big] for k in big])
        pos = {k: i for i, k in enumerate(big)}

        def shift_op(step):
            S = np.zeros_like(T)
            for k in big:
                t = (k[0] + step[0], k[1] + step[1])
                if t in pos:
                    S[pos[t], pos[k]] = 1
            return S

        T1, T2 = shift_op((1, 0)), shift_op((0, 1))
        T12 = T1 @ T2
        Y0 = T - T1 @ T @ T1.T - T2 @ T @ T2.T + T12 @ T @ T12.T
        K = box_indices((2, 1))
        idx = [pos[k] for k in K]
        assert_allclose(Y0[np.ix_(idx, idx)], y0_matrix(Q, K), atol=1e-14)
        # all nonzero blocks lie inside K
        mask = np.ones(len(big), bool)
        mask[idx] = False
        assert np.abs(Y0[mask]).max() <= 1e-14

    def test_shift(self):
        K = box_indices((1, 1))
        X = np.zeros((4, 4))
        X[0, 0] = 1
        assert shift(X, K, (1, 1), 1)[3, 3] == 1
        assert shift(X, K, (1, 0), 1)[2, 2] == 1
        assert shift(X, K, (0, 1), 1)[1, 1] == 1


class TestZeroLocations:
    def test_degree_one_one_coincide(self):
        assert zero_locations((1, 1)) == ([(0, 1)], [(1, 0)])
        rows, cols = reflected_locations((1, 1))
        assert (cols, rows) == zero_locations((1, 1))

    def test_degree_two_one(self):
        assert zero_locations((2, 1)) == ([(0, 1), (1, 1)], [(2, 0)])
        assert reflected_locations((2, 1)) == ([(1, 0), (2, 0)], [(0, 1)])

    def test_empty(self):
        assert zero_locations((0, 3))[0] == []
        assert zero_locations((3, 0))[1] == []

    def test_factorable_degree_two_one(self):
        # stable: the higher coefficients sum to 3.3 < 4
        P = AnalyticPoly({(0, 0): 4, (1, 0): 1, (0, 1): 1, (2, 0): 0.5, (1, 1): 0.5, (2, 1): 0.3})
        Q = P.gram()
        assert check_multi_condition(Q).passed
        r = check_2var_decomposition(Q)
        assert r.max_gap <= 1e-6
        # only the decoupled labels vanish; the reflected set does not
        assert r.reflected_zero_gap > 0.1
        gw = check_gw_stability(Q)
        assert gw.stable_factorable
        assert gw.reflected_max > 0.1

    def test_sum_of_two_squares_degree_two_one(self, rng):
        P1 = AnalyticPoly({k: v for k, v in zip(box_indices((2, 1)), [4, .3, .2, .1, .2, .1])})
        P2 = AnalyticPoly({k: v for k, v in zip(box_indices((2, 1)), [.1, .3, -.2, .3, .1, .2])})
        Q1, Q2 = P1.gram(), P2.gram()
        Q = LaurentPoly({k: v + Q2.coeff(k) for k, v in Q1.canonical_items()})
        assert not check_multi_condition(Q).passed
        assert not check_gw_stability(Q).stable_factorable


class TestGW:
    def test_positive(self):
        stable, entry = check_gw_stability(Q_POS)
        assert stable
        assert entry <= 1e-12

    def test_negative(self):
        stable, entry = check_gw_stability(Q_NEG)
        assert not stable
        assert entry == pytest.approx(NEG_GW_MAX_ENTRY, rel=1e-6)

    @pytest.mark.parametrize("coeffs", [{(0, 0): 5, (1, 0): 2}, {(0, 0): 5, (0, 1): 2},
                                        {(0, 0): 1}])
    def test_vacuous(self, coeffs):
        assert check_gw_stability(LaurentPoly(coeffs)).stable_factorable

    def test_not_strictly_positive(self):
        with pytest.raises(NotPSDError):
            check_gw_stability(AnalyticPoly({(0, 0): 1, (1, 1): 1}).gram())

    def test_matrix_rejected(self):
        with pytest.raises(ValidationError):
            check_gw_stability(LaurentPoly({(0, 0): np.eye(2)}))


def test_exponent_convention_uses_k_minus_l():
    # a symbol whose (1,-1) and (-1,1) coefficients differ exposes a sign flip
    P = AnalyticPoly({(0, 0): 3, (1, 0): 1j, (0, 1): 0.5})
    Q = P.gram()
    assert Q.coeff((1, -1))[0, 0] != Q.coeff((-1, 1))[0, 0]
    r = check_multi_condition(Q)
    assert r.passed
    for mu in itertools.product((-1, 0, 1), repeat=2):
        assert r.diag_sum_violation[mu] <= 1e-8
