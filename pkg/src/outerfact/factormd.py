"""Two-variable factorizability tests and outer factor extraction.

Let ``K = {0..n1} x {0..n2}``, ordered lexicographically, with last element
``n = (n1, n2)``.  ``Q`` is a single square ``P* P`` with ``P`` supported on
``K`` (and the range conditions of an outer factor) exactly when

    Y = S(K) - S(K \\ {n})

reproduces ``Q`` through ``Z_K* Y Z_K``, ``Z_K = (z^{n-k})_k``.  Expanding
the product, the coefficient of ``z^mu`` is the sum of the blocks ``Y_{k,l}``
with ``k - l = mu``; the test is performed on those finitely many sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, schur
from .errors import ConditionFailed, NotPSDError, ValidationError
from .factor1d import OuterFactorization, _extract
from .linalg import DEFAULT_TOL, Tolerances
from .toeplitz_schur import check_torus_psd, limiting_schur, pad_to
from .trigpoly import (AnalyticPoly, LaurentPoly, box_indices, eval_poly, fourier_coeffs,
                       residual, torus_grid)


def _require_2d(Q: LaurentPoly):
    if Q.d != 2:
        raise ValidationError(f"expected a two-variable polynomial, got d={Q.d}")


@dataclass
class MultiConditionReport:
    """Outcome of the ``Z_K* Y Z_K = Q`` test.

    ``diag_sum_violation`` maps every exponent ``mu`` in ``K - K`` to
    ``||sum_{k-l=mu} Y_{k,l} - Q_mu||_F``.
    """

    Y: np.ndarray
    K: list
    diag_sum_violation: dict
    max_violation: float
    rank_Y: int
    passed: bool
    converged: bool
    trunc_used: tuple
    threshold: float


def diagonal_sums(Y: np.ndarray, K, h: int) -> dict:
    """``sum_{k-l=mu} Y_{k,l}`` for every difference ``mu`` of the box `K`."""
    out = {}
    for i, k in enumerate(K):
        for j, l in enumerate(K):
            mu = tuple(a - b for a, b in zip(k, l))
            blk = Y[i * h:(i + 1) * h, j * h:(j + 1) * h]
            out[mu] = out.get(mu, 0) + blk
    return out


def _y_from_schur(Q: LaurentPoly, tol: Tolerances):
    K = box_indices(Q.degree)
    lim = limiting_schur(Q, K, tol, check_psd=False)
    inner = K[:-1]
    prev = pad_to(lim.quotient(inner, tol.rank_tol), inner, K, Q.h) if inner else 0
    Y = lim.value - prev
    return (Y + Y.conj().T) / 2, K, lim


def check_multi_condition(Q: LaurentPoly, tol: Tolerances = DEFAULT_TOL) -> MultiConditionReport:
    """Test whether ``Y = S(K) - S(K \\ {n})`` reproduces ``Q``.

    ``passed`` requires every diagonal-sum violation to be at most
    ``residual_tol * max(1, ||Q_0||)`` and ``rank(Y) <= h``.

    Raises
    ------
    NotPSDError
        If ``Q`` is not PSD on the torus grid.
    """
    _require_2d(Q)
    check_torus_psd(Q, tol)
    Y, K, lim = _y_from_schur(Q, tol)
    sums = diagonal_sums(Y, K, Q.h)
    viol = {mu: float(np.linalg.norm(s - Q.coeff(mu))) for mu, s in sorted(sums.items())}
    worst = max(viol.values())
    _, rank = linalg.rank_factor(Y, tol.rank_tol)
    threshold = tol.residual_tol * Q.scale
    passed = worst <= threshold and rank <= Q.h
    return MultiConditionReport(Y, K, viol, worst, rank, passed, lim.converged,
                                lim.trunc_used, threshold)


def factor_outer_2d(Q: LaurentPoly, tol: Tolerances = DEFAULT_TOL,
                    report: MultiConditionReport | None = None) -> OuterFactorization:
    """Single-square factor ``Q = P* P`` with ``P`` supported on the degree box.

    Raises
    ------
    ConditionFailed
        When :func:`check_multi_condition` fails; the report is attached.
    RankError
        When ``rank(Y)`` exceeds the block size.
    """
    _require_2d(Q)
    if report is None:
        report = check_multi_condition(Q, tol)
    if not report.passed:
        raise ConditionFailed(
            f"Q is not a single square on its degree box "
            f"(max violation {report.max_violation:.3e}, rank {report.rank_Y})", report)
    blocks, basis = _extract(report.Y, report.K, Q.degree, Q.h, tol)
    P = AnalyticPoly(blocks, degree=Q.degree)
    res = residual(Q, P, tol.grid_points(2))
    out = OuterFactorization(P, res, report.Y, report.converged, report.trunc_used, basis=basis)
    out.outer_certificates = outerness_certificates_2d(P, tol)
    return out


def outerness_certificates_2d(P: AnalyticPoly, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Finite surrogates of two-variable outerness.

    * ``range_defect``: largest relative distance of ``ran P_k`` from ``ran P_0``.
    * ``schur_gap_0``: ``||S(T_{P*P}; 0) - P_0* P_0||_F`` relative to ``max(1, ||Q_0||)``.
    """
    zero = (0,) * P.d
    P0 = P.coeff(zero)
    rng = max((linalg.range_defect(v, P0, tol.rank_tol) for k, v in P.items() if k != zero),
              default=0.0)
    Q = P.gram()
    lim = limiting_schur(Q, [zero], tol)
    gap = float(np.linalg.norm(lim.value - P0.conj().T @ P0)) / Q.scale
    return {"range_defect": rng, "schur_gap_0": gap, "converged": lim.converged,
            "trunc_used": list(lim.trunc_used)}


def zero_locations(degree):
    """Block positions ``(rows, cols)`` of ``K \\ {n}`` that must decouple.

    ``rows = {0..n1-1} x {n2}`` and ``cols = {n1} x {0..n2-1}``: the labels
    that belong to only one of the two maximal sub-boxes
    ``{0..n1-1} x {0..n2}`` and ``{0..n1} x {0..n2-1}`` of ``K \\ {n}``.
    For degree ``(1, 1)`` these are ``(0, 1)`` and ``(1, 0)``.
    """
    n1, n2 = degree
    return [(i, n2) for i in range(n1)], [(n1, j) for j in range(n2)]


def reflected_locations(degree):
    """``{1..n1} x {0}`` and ``{0} x {1..n2}``, the images of :func:`zero_locations`
    under ``k -> n - k``; they agree with it for degree ``(1, 1)``."""
    n1, n2 = degree
    return [(i, 0) for i in range(1, n1 + 1)], [(0, j) for j in range(1, n2 + 1)]


def _max_entry(A, K, rows, cols, h=1):
    if not rows or not cols:
        return 0.0
    pos = {k: i for i, k in enumerate(K)}
    ri = schur.scalar_indices([pos[k] for k in rows], h)
    ci = schur.scalar_indices([pos[k] for k in cols], h)
    return float(max(np.max(np.abs(A[np.ix_(ri, ci)])), np.max(np.abs(A[np.ix_(ci, ri)]))))


@dataclass
class TwoVarReport:
    """Schur complements on the sub-boxes of ``K`` and the decomposition gaps.

    All matrices are padded into ``K`` coordinates.  ``zero_pattern_gap`` is
    the largest entry of ``S(K \\ {n})`` at :func:`zero_locations`;
    ``reflected_zero_gap`` is the same quantity at
    :func:`reflected_locations`, which only carries information for degree
    ``(1, 1)`` where both sets coincide.
    """

    K: list
    S0: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S_Kminus: np.ndarray
    S_K: np.ndarray
    Y0: np.ndarray
    schureq1_gap: float
    schureq2_gap: float
    zero_pattern_gap: float
    reflected_zero_gap: float
    converged: bool
    trunc_used: tuple

    @property
    def max_gap(self) -> float:
        return max(self.schureq1_gap, self.schureq2_gap, self.zero_pattern_gap)


def y0_matrix(Q: LaurentPoly, K) -> np.ndarray:
    """``T_Q - T1 T_Q T1* - T2 T_Q T2* + T1 T2 T_Q T2* T1*`` restricted to ``K``.

    Block ``(k, l)`` equals ``Q_{k-l}`` when ``min(k_1, l_1) = 0`` and
    ``min(k_2, l_2) = 0``, and zero otherwise; all nonzero blocks lie in ``K``.
    """
    h = Q.h
    Y0 = np.zeros((len(K) * h, len(K) * h), dtype=complex)
    for i, k in enumerate(K):
        for j, l in enumerate(K):
            if min(k[0], l[0]) == 0 and min(k[1], l[1]) == 0:
                mu = (k[0] - l[0], k[1] - l[1])
                Y0[i * h:(i + 1) * h, j * h:(j + 1) * h] = Q.coeff(mu)
    return Y0


def shift(X: np.ndarray, K, step, h: int) -> np.ndarray:
    """``T X T*`` for the shift ``T: e_k -> e_{k+step}`` on padded ``K`` matrices.

    Blocks leaving ``K`` are dropped (they are zero for the matrices used here).
    """
    pos = {k: i for i, k in enumerate(K)}
    out = np.zeros_like(X)
    src, dst = [], []
    for k in K:
        t = tuple(a + b for a, b in zip(k, step))
        if t in pos:
            src.append(pos[k])
            dst.append(pos[t])
    si, di = schur.scalar_indices(src, h), schur.scalar_indices(dst, h)
    out[np.ix_(di, di)] = X[np.ix_(si, si)]
    return out


def check_2var_decomposition(Q: LaurentPoly, tol: Tolerances = DEFAULT_TOL) -> TwoVarReport:
    """Schur-complement decomposition of a two-variable symbol.

    Computes ``S(K)`` by truncation and ``S0, S1, S2, S(K \\ {n})`` from it by
    the quotient identity, then measures

    * ``schureq1_gap = ||S(K \\ {n}) - (S1 + S2 - S0)||_F``;
    * ``schureq2_gap = ||S(K) - (Y0 + sh1(S1) + sh2(S2) - sh12(S0))||_F``;
    * ``zero_pattern_gap``, the largest entry of ``S(K \\ {n})`` at
      :func:`zero_locations`.
    """
    _require_2d(Q)
    check_torus_psd(Q, tol)
    n1, n2 = Q.degree
    h = Q.h
    K = box_indices(Q.degree)
    lim = limiting_schur(Q, K, tol, check_psd=False)

    def sub(lam):
        lam = list(lam)
        if not lam:
            return np.zeros_like(lim.value)
        return pad_to(lim.quotient(lam, tol.rank_tol), sorted(lam), K, h)

    K1 = [k for k in K if k[0] <= n1 - 1]
    K2 = [k for k in K if k[1] <= n2 - 1]
    K0 = [k for k in K1 if k[1] <= n2 - 1]
    Kminus = K[:-1]
    S0, S1, S2, Sm = sub(K0), sub(K1), sub(K2), sub(Kminus)
    SK = lim.value
    Y0 = y0_matrix(Q, K)
    rhs2 = Y0 + shift(S1, K, (1, 0), h) + shift(S2, K, (0, 1), h) - shift(S0, K, (1, 1), h)
    gap1 = float(np.linalg.norm(Sm - (S1 + S2 - S0)))
    gap2 = float(np.linalg.norm(SK - rhs2))

    zero_gap = _max_entry(Sm, K, *zero_locations(Q.degree), h=h)
    reflected = _max_entry(Sm, K, *reflected_locations(Q.degree), h=h)
    return TwoVarReport(K, S0, S1, S2, Sm, SK, Y0, gap1, gap2, zero_gap, reflected,
                        lim.converged, lim.trunc_used)


@dataclass
class GWReport:
    """Unpacks as ``(stable_factorable, max_entry)``.

    ``reflected_max`` is the largest entry at :func:`reflected_locations`,
    reported for comparison only.
    """

    stable_factorable: bool
    max_entry: float
    inverse_norm: float
    reflected_max: float
    grid_points: int

    def __iter__(self):
        return iter((self.stable_factorable, self.max_entry))


def check_gw_stability(q: LaurentPoly, tol: Tolerances = DEFAULT_TOL) -> GWReport:
    """Stable-factorization test for a strictly positive scalar two-variable symbol.

    Builds the Toeplitz matrix of the Fourier coefficients of ``1/q`` on
    ``K \\ {n}``, inverts it and inspects the entries at
    :func:`zero_locations`.  The symbol is ``|p|^2`` for a ``p`` of degree
    ``n`` without zeros on the closed bidisk iff those entries vanish; here
    "vanish" means at most ``residual_tol * ||inverse||_2``.  An empty
    location set (``n1 == 0`` or ``n2 == 0``) passes.

    Raises
    ------
    NotPSDError
        If ``min q <= 10 * residual_tol`` on the grid.
    """
    _require_2d(q)
    if q.h != 1:
        raise ValidationError("the stability test is for scalar symbols")
    n1, n2 = q.degree
    points = tol.grid_points(2)
    while points < 4 * max(n1, n2, 1):
        points *= 2
    vals = eval_poly(q, *torus_grid(points, 2))[..., 0, 0].real
    if vals.min() <= 10 * tol.residual_tol:
        raise NotPSDError(f"q is not strictly positive (min {vals.min():.3e})")
    c = fourier_coeffs(1.0 / vals, (n1, n2), d=2)
    K = box_indices(q.degree)[:-1]
    if not K:
        return GWReport(True, 0.0, 0.0, 0.0, points)
    T = np.array([[c[(k[0] - l[0], k[1] - l[1])] for l in K] for k in K])
    inv = np.linalg.inv(T)
    max_entry = _max_entry(inv, K, *zero_locations(q.degree))
    reflected = _max_entry(inv, K, *reflected_locations(q.degree))
    norm = float(np.linalg.norm(inv, 2))
    return GWReport(bool(max_entry <= tol.residual_tol * norm), max_entry, norm, reflected, points)
