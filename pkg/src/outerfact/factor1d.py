"""One-variable outer factorization ``Q(z) = P(z)* P(z)``.

The factor is read off ``Y = S(m) - S(m-1)``, where ``S(m-1)`` occupies the
leading block positions ``0..m-1``.  ``Y`` has the rank-``r`` structure
``Y_ij = P_{m-i}* P_{m-j}``, so any rank factor ``C`` of ``Y`` lists the
coefficients in reverse order, ``P_j = C[:, block m-j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import RankError, ValidationError
from .linalg import DEFAULT_TOL, Tolerances
from .toeplitz_schur import check_torus_psd, limiting_schur, pad_to, stationary_ul
from .trigpoly import (AnalyticPoly, LaurentPoly, disk_grid, eval_poly, outer_by_roots,
                       residual, torus_grid)


@dataclass
class OuterFactorization:
    """An outer factor ``P`` of ``Q`` together with its certificates.

    ``P`` is ``r x h`` with ``r`` the numerical rank of ``Y``; see
    :meth:`square_view` for an ``h x h`` embedding.
    """

    P: AnalyticPoly
    residual: float
    Y: np.ndarray
    converged: bool
    trunc_used: tuple[int, ...]
    outer_certificates: dict = field(default_factory=dict)
    basis: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return self.P.h_out

    def square_view(self) -> AnalyticPoly:
        """The factor embedded as ``h x h`` blocks with a PSD constant term."""
        if self.basis is None or self.P.h_out == self.P.h_in:
            return self.P
        return AnalyticPoly({k: self.basis @ v for k, v in self.P.items()}, self.P.degree)


def gauge_normalize(blocks):
    """Fix the left-unitary freedom of a factor so its constant term is PSD.

    Parameters
    ----------
    blocks : dict
        Exponent -> ``r x h`` coefficient; the zero exponent must be present.

    Returns
    -------
    normalized : dict
    basis : ndarray, shape (h, r)
        Isometry with ``basis @ P_0`` PSD.  For ``r == h`` this is the identity
        and ``P_0`` itself is PSD.
    """
    zero = min(blocks)
    B0 = blocks[zero]
    r, h = B0.shape
    U, s, Vh = np.linalg.svd(B0)
    if r == h:
        W = Vh.conj().T @ U.conj().T
        basis = np.eye(h, dtype=complex)
    else:
        V = Vh[:r].conj().T
        # largest entry of each basis vector made real positive
        lead = V[np.argmax(np.abs(V), axis=0), np.arange(r)]
        phase = lead / np.abs(lead)
        basis = V / phase
        W = phase[:, None] * U.conj().T
    normalized = {k: W @ v for k, v in blocks.items()}
    if r == h:
        normalized[zero] = (normalized[zero] + normalized[zero].conj().T) / 2
    return normalized, basis


def _extract(Y, K, n, h, tol: Tolerances):
    """Rank-factor ``Y`` (on box `K`) and read ``P_k`` at box position ``n - k``."""
    C, r = linalg.rank_factor(Y, tol.rank_tol)
    if r > h:
        raise RankError(f"rank of Y is {r}, larger than the block size {h}")
    if r == 0:
        raise RankError("Y vanishes; Q has no nonzero factor")
    pos = {k: i for i, k in enumerate(K)}
    blocks = {}
    for k in K:
        src = tuple(a - b for a, b in zip(n, k))
        i = pos[src]
        blocks[k] = C[:, i * h:(i + 1) * h]
    return gauge_normalize(blocks)


def factor_outer_1d(Q: LaurentPoly, tol: Tolerances = DEFAULT_TOL,
                    certify: bool = True) -> OuterFactorization:
    """Outer factor of a PSD trigonometric polynomial in one variable.

    Parameters
    ----------
    Q : LaurentPoly
        ``d == 1``, PSD on the unit circle.
    tol : Tolerances
    certify : bool
        Also run :func:`outerness_test` on the result and store its
        certificates.

    Returns
    -------
    OuterFactorization
        ``P`` has degree ``m = Q.degree`` and a PSD constant coefficient
        (for ``r < h`` in the square view).

    Raises
    ------
    NotPSDError
        If ``Q`` is not PSD on the torus.
    RankError
        If the numerical rank of ``Y`` exceeds the block size.
    """
    if Q.d != 1:
        raise ValidationError("factor_outer_1d needs a one-variable polynomial")
    check_torus_psd(Q, tol)
    m = Q.degree[0]
    h = Q.h
    K = [(i,) for i in range(m + 1)]
    lim = limiting_schur(Q, K, tol, check_psd=False)
    prev = pad_to(lim.quotient(K[:-1], tol.rank_tol), K[:-1], K, h) if m else 0
    Y = lim.value - prev
    Y = (Y + Y.conj().T) / 2
    blocks, basis = _extract(Y, K, (m,), h, tol)
    P = AnalyticPoly(blocks, degree=(m,))
    res = residual(Q, P, tol.grid_points(1))
    out = OuterFactorization(P, res, Y, lim.converged, lim.trunc_used, basis=basis)
    if certify:
        out.outer_certificates = outerness_test(P, tol)[1]
    return out


def outerness_test(F: AnalyticPoly, tol: Tolerances = DEFAULT_TOL, gap_tol: float = 1e-6):
    """Decide outerness of a one-variable polynomial through Schur complements.

    Forms ``Q = F* F`` exactly and compares the limiting ``S(T_Q; 0)`` with
    ``F_0* F_0``; the block version on ``{0..m}`` against the lower-triangular
    Toeplitz Gram matrix is recorded as well.  Scalars are cross-checked
    against the roots of ``F``.

    Returns
    -------
    is_outer : bool
        ``gap_0 <= gap_tol`` (gaps relative to ``max(1, ||Q_0||)``).
    certificates : dict
    """
    if F.d != 1:
        raise ValidationError("outerness_test is one-variable; see factormd for two variables")
    Q = F.gram()
    m = F.degree[0]
    lim = limiting_schur(Q, [(i,) for i in range(m + 1)], tol)
    F0 = F.coeff(0)
    S0 = lim.quotient([(0,)], tol.rank_tol)
    gap0 = float(np.linalg.norm(S0 - F0.conj().T @ F0)) / Q.scale
    blocks = [F.coeff(j) for j in range(m + 1)]
    gapm = float(np.linalg.norm(lim.value - stationary_ul(blocks))) / Q.scale
    rng = max((linalg.range_defect(F.coeff(j), F0, tol.rank_tol) for j in range(1, m + 1)),
              default=0.0)
    cert = {
        "schur_gap_0": gap0,
        "schur_gap_m": gapm,
        "range_defect": rng,
        "converged": lim.converged,
        "trunc_used": list(lim.trunc_used),
    }
    is_outer = gap0 <= gap_tol
    if (F.h_out, F.h_in) == (1, 1):
        try:
            cert["roots_outer"] = outer_by_roots(F)
        except ValidationError:
            cert["roots_outer"] = None
    cert["is_outer"] = is_outer
    return is_outer, cert


def maximality_test(F: AnalyticPoly, G: AnalyticPoly, disk=None, tol: float = 1e-9,
                    grid_points: int = 512) -> bool:
    """``F(z)* F(z) >= G(z)* G(z)`` on a disk grid, for factors of the same symbol.

    Raises
    ------
    ValidationError
        If ``F* F`` and ``G* G`` differ on the torus by more than `tol`.
    """
    if disk is None:
        disk = disk_grid()
    z = torus_grid(grid_points, 1)[0]
    ff = _gram_values(F, z)
    gg = _gram_values(G, z)
    scale = max(1.0, float(np.max(np.abs(ff))))
    if np.max(np.abs(ff - gg)) > tol * scale:
        raise ValidationError("F and G do not have the same symbol on the torus")
    return maximality_gap(F, G, disk) >= -tol * scale


def maximality_gap(F: AnalyticPoly, G: AnalyticPoly, disk) -> float:
    """Smallest eigenvalue of ``F(z)* F(z) - G(z)* G(z)`` over the points `disk`."""
    diff = _gram_values(F, disk) - _gram_values(G, disk)
    diff = (diff + np.conj(np.swapaxes(diff, -1, -2))) / 2
    return float(np.linalg.eigvalsh(diff)[..., 0].min())


def _gram_values(F, z):
    v = eval_poly(F, np.asarray(z))
    return np.conj(np.swapaxes(v, -1, -2)) @ v


def inner_outer_samples(A: AnalyticPoly, grid_points: int = 512,
                        tol: Tolerances = DEFAULT_TOL):
    """Outer factor of ``A`` and samples of the inner factor on the torus.

    Returns
    -------
    F : OuterFactorization
        Outer factor of ``A* A``.
    V : ndarray, shape (grid_points, h_out, r)
        ``V(z) = A(z) F(z)^+`` at ``z = exp(2 pi i j / grid_points)``.
    iso_defect : float
        ``max_z ||V(z)* V(z) F(z) - F(z)||_F``: `V` acts isometrically on the
        range of ``F(z)``.

    Raises
    ------
    RankError
        If the outer factor fails its residual check.
    """
    Q = A.gram()
    F = factor_outer_1d(Q, tol, certify=False)
    if F.residual > tol.residual_tol * Q.scale:
        raise RankError(f"outer factor residual {F.residual:.3e} too large")
    z = torus_grid(grid_points, 1)[0]
    a = eval_poly(A, z)
    f = eval_poly(F.P, z)
    V = np.stack([ai @ np.linalg.pinv(fi, rcond=tol.rank_tol) for ai, fi in zip(a, f)])
    iso = np.conj(np.swapaxes(V, -1, -2)) @ V @ f - f
    defect = float(np.max(np.linalg.norm(iso.reshape(len(z), -1), axis=1)))
    return F, V, defect
