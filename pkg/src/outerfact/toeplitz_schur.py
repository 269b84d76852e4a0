"""Schur complements of the semi-infinite Toeplitz operator ``T_Q``.

``S(T_Q; lam)`` is approached through finite sections on boxes
``prod {0..N_t}`` with ``N`` doubled until successive values agree.  Finite
sections are nested principal submatrices, so the sequence is nonincreasing
in the Loewner order; every step records the smallest eigenvalue of the
decrement so callers can audit that.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg, schur
from .errors import NotPSDError, ValidationError
from .linalg import DEFAULT_TOL, Tolerances
from .trigpoly import LaurentPoly, _key, toeplitz_truncation, torus_min_eig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncationStep:
    box: tuple[int, ...]
    gap: float | None
    min_decrement_eig: float | None


@dataclass(frozen=True)
class LimitSchur:
    """Limit of truncated Schur complements supported on ``lam``.

    ``value`` is compact, with block rows ordered like ``lam`` (lexicographic).
    """

    lam: tuple[tuple[int, ...], ...]
    value: np.ndarray
    trunc_used: tuple[int, ...]
    converged: bool
    gap: float
    h: int
    history: list[TruncationStep] = field(default_factory=list)

    @property
    def min_decrement_eig(self) -> float:
        """Worst Loewner-monotonicity defect across all doubling steps (relative)."""
        vals = [s.min_decrement_eig for s in self.history if s.min_decrement_eig is not None]
        return min(vals) if vals else 0.0

    def block(self, k, l) -> np.ndarray:
        i, j = self.lam.index(_key(k)), self.lam.index(_key(l))
        h = self.h
        return self.value[i * h:(i + 1) * h, j * h:(j + 1) * h]

    def padded(self, universe) -> np.ndarray:
        return pad_to(self.value, self.lam, universe, self.h)

    def quotient(self, sub, rank_tol: float = DEFAULT_TOL.rank_tol) -> np.ndarray:
        """``S(S(lam); sub)`` in compact form, ordered like ``sorted(sub)``."""
        sub = sorted(_key(k) for k in sub)
        if not sub:
            return np.zeros((0, 0), dtype=complex)
        pos = [self.lam.index(k) for k in sub]
        return schur.schur_of_indices(self.value, schur.scalar_indices(pos, self.h), rank_tol)


def pad_to(value, lam, universe, h: int = 1) -> np.ndarray:
    """Embed a compact block matrix on multi-indices `lam` into `universe` coordinates."""
    universe = [_key(k) for k in universe]
    pos = [universe.index(_key(k)) for k in lam]
    return schur.pad(value, pos, len(universe), h)


def normalize_lambda(lam, d: int) -> tuple[tuple[int, ...], ...]:
    out = sorted({_key(k, d) for k in lam})
    if len(out) != len(list(lam)):
        raise ValidationError("duplicate multi-indices in index set")
    if any(x < 0 for k in out for x in k):
        raise ValidationError("index sets live in the nonnegative orthant")
    return tuple(out)


def truncated_schur(M: np.ndarray, keep: np.ndarray, rank_tol: float) -> np.ndarray:
    """Schur complement of a finite section onto scalar indices `keep`.

    Uses a Cholesky factorization of the complementary block when it is
    comfortably positive definite and the eigendecomposition-based
    pseudoinverse formula otherwise.
    """
    mask = np.ones(M.shape[0], dtype=bool)
    mask[keep] = False
    comp = np.flatnonzero(mask)
    if comp.size == 0:
        top = M[np.ix_(keep, keep)]
        return (top + top.conj().T) / 2
    try:
        L = scipy.linalg.cholesky(M[np.ix_(comp, comp)], lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        L = None
    if L is not None:
        piv = np.abs(np.diag(L)) ** 2
        if piv.min() <= rank_tol * piv.max():
            L = None
    if L is None:
        return schur.schur_of_indices(M, keep, rank_tol)
    X = scipy.linalg.solve_triangular(L, M[np.ix_(comp, keep)], lower=True, check_finite=False)
    S = M[np.ix_(keep, keep)] - X.conj().T @ X
    return (S + S.conj().T) / 2


def check_torus_psd(Q: LaurentPoly, tol: Tolerances) -> float:
    m = torus_min_eig(Q, tol.grid_points(Q.d))
    if m < -tol.psd_tol * Q.scale:
        raise NotPSDError(f"Q is not positive semidefinite on the torus (min eigenvalue {m:.3e})")
    return m


def limiting_schur(Q: LaurentPoly, lam, tol: Tolerances = DEFAULT_TOL,
                   check_psd: bool = True) -> LimitSchur:
    """Limit of ``S(T_Q^(N); lam)`` over a doubling schedule of boxes ``N``.

    The schedule starts at ``max(degree, max lam) + 1`` per variable and
    doubles, capped at ``tol.trunc_limit(d)``.  Iteration stops once two
    successive values differ by at most ``conv_tol * max(1, ||Q_0||)`` in
    Frobenius norm; hitting the cap first returns ``converged=False``.

    Raises
    ------
    NotPSDError
        If ``Q`` takes a non-PSD value on the torus grid.
    """
    if check_psd:
        check_torus_psd(Q, tol)
    lam = normalize_lambda(lam, Q.d)
    if not lam:
        raise ValidationError("empty index set")
    cap = tol.trunc_limit(Q.d)
    box = [max(n, max(k[t] for k in lam)) + 1 for t, n in enumerate(Q.degree)]
    if any(b > cap for b in box):
        raise ValidationError(f"max_trunc {cap} is smaller than the starting box {tuple(box)}")
    history = []
    prev = None
    gap = np.inf
    converged = False
    while True:
        T = toeplitz_truncation(Q, box)
        keep = schur.scalar_indices(T.positions(lam), Q.h)
        S = truncated_schur(T.matrix, keep, tol.rank_tol)
        if prev is None:
            history.append(TruncationStep(tuple(box), None, None))
        else:
            dec = prev - S
            gap = float(np.linalg.norm(dec)) / Q.scale
            mono = linalg.min_eig(dec) / Q.scale
            history.append(TruncationStep(tuple(box), gap, mono))
            if mono < -tol.psd_tol:
                log.warning("Loewner monotonicity violated at box %s (%.3e)", box, mono)
            if gap <= tol.conv_tol:
                converged = True
        prev = S
        if converged or all(b >= cap for b in box):
            break
        box = [min(2 * b, cap) for b in box]
    if not converged:
        log.info("truncation limit %s reached with gap %.3e", tuple(box), gap)
    return LimitSchur(lam, prev, tuple(box), converged, float(gap), Q.h, history)


@dataclass(frozen=True)
class BauerFactors:
    """Coefficients ``F_0..F_m`` of the stationary UL factorization of ``S(m)``."""

    blocks: list[np.ndarray]
    schur: LimitSchur
    assembly_gap: float

    @property
    def converged(self) -> bool:
        return self.schur.converged


def stationary_ul(blocks) -> np.ndarray:
    """``F(m)* F(m)`` for the lower-triangular block Toeplitz ``F(m) = (F_{i-j})``."""
    m = len(blocks) - 1
    r, h = blocks[0].shape
    F = np.zeros(((m + 1) * r, (m + 1) * h), dtype=complex)
    for i in range(m + 1):
        for j in range(i + 1):
            F[i * r:(i + 1) * r, j * h:(j + 1) * h] = blocks[i - j]
    return F.conj().T @ F


def bauer_recursion(Q: LaurentPoly, m: int, tol: Tolerances = DEFAULT_TOL) -> BauerFactors:
    """Stationary UL Cholesky coefficients of the Schur complements ``S(j)``, ``j <= m``.

    ``F_0 = S(0)^{1/2}`` and, step by step, ``F_j = (F_0*)^+ [S(j)]_{j,0}``
    where ``S(j)`` is obtained from ``S(m)`` by the quotient identity.  Each
    ``F_j`` maps into the range of ``F_0``.
    """
    if Q.d != 1:
        raise ValidationError("the Bauer recursion is one-variable")
    m = int(m)
    lim = limiting_schur(Q, range(m + 1), tol)
    h = Q.h
    F0 = linalg.psd_sqrt(lim.quotient([(0,)], tol.rank_tol))
    F0_adj_pinv = linalg.psd_pinv(F0, tol.rank_tol)
    blocks = [F0]
    for j in range(1, m + 1):
        Sj = lim.quotient([(i,) for i in range(j + 1)], tol.rank_tol)
        blocks.append(F0_adj_pinv @ Sj[j * h:(j + 1) * h, :h])
    gap = float(np.linalg.norm(stationary_ul(blocks) - lim.value)) / Q.scale
    return BauerFactors(blocks, lim, gap)


def inheritance_gap(Q: LaurentPoly, m: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest entry of ``S(m) - [[Q_0, B*], [B, S(m-1)]]``, ``B = col(Q_1..Q_m)``.

    ``S(m-1)`` sits in the bottom-right corner; the result is relative to
    ``max(1, ||Q_0||)``.
    """
    if Q.d != 1:
        raise ValidationError("inheritance is a one-variable statement")
    m = int(m)
    if Q.degree[0] > m:
        raise ValidationError(f"degree {Q.degree[0]} exceeds m={m}")
    h = Q.h
    lim = limiting_schur(Q, range(m + 1), tol)
    expected = np.zeros_like(lim.value)
    expected[:h, :h] = Q.coeff(0)
    for i in range(1, m + 1):
        expected[i * h:(i + 1) * h, :h] = Q.coeff(i)
        expected[:h, i * h:(i + 1) * h] = Q.coeff(-i)
    if m:
        expected[h:, h:] = lim.quotient([(i,) for i in range(m)], tol.rank_tol)
    return float(np.max(np.abs(lim.value - expected))) / Q.scale


def inheritance_check(Q: LaurentPoly, m: int, tol: Tolerances = DEFAULT_TOL,
                      atol: float = 1e-8) -> bool:
    """Banded inheritance: ``S(m)`` borders ``S(m-1)`` with the coefficients of ``Q``."""
    return inheritance_gap(Q, m, tol) <= atol
