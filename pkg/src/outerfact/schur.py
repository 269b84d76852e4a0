"""Generalized Schur complements of PSD block matrices.

Rows and columns are addressed by *labels* ``0..n-1``; with block size ``h``
label ``j`` covers scalar rows ``j*h .. j*h+h-1``.  A Schur complement
supported on a label set ``lam`` exists in two views:

* compact: an ``(m*h) x (m*h)`` matrix, ``m = len(lam)``;
* padded: the ``(n*h) x (n*h)`` host-sized matrix with the compact entries
  placed at the labels of ``lam`` and zeros elsewhere.

:func:`pad` and :func:`restrict` convert between the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ValidationError
from .linalg import DEFAULT_TOL, Tolerances


def index_set(labels, n: int) -> tuple[int, ...]:
    """Validate a label set against a host with `n` labels and sort it."""
    labs = [int(x) for x in np.atleast_1d(np.asarray(labels, dtype=int))] if np.size(labels) else []
    if len(set(labs)) != len(labs):
        raise ValidationError(f"duplicate labels in {labs}")
    for x in labs:
        if not 0 <= x < n:
            raise ValidationError(f"label {x} outside 0..{n - 1}")
    return tuple(sorted(labs))


def scalar_indices(labels, h: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int).reshape(-1)
    return (labels[:, None] * h + np.arange(h)[None, :]).reshape(-1)


def pad(compact, lam, n: int, h: int = 1) -> np.ndarray:
    """Embed a compact matrix supported on `lam` into an ``n*h`` square host."""
    out = np.zeros((n * h, n * h), dtype=complex)
    ix = scalar_indices(lam, h)
    out[np.ix_(ix, ix)] = compact
    return out


def restrict(padded, lam, h: int = 1) -> np.ndarray:
    ix = scalar_indices(lam, h)
    return np.asarray(padded)[np.ix_(ix, ix)]


@dataclass(frozen=True)
class SchurResult:
    """Schur complement ``S(M; lam)`` of a host with ``host_size`` labels."""

    lam: tuple[int, ...]
    compact: np.ndarray
    host_size: int
    block: int = 1

    @property
    def padded(self) -> np.ndarray:
        return pad(self.compact, self.lam, self.host_size, self.block)


def schur_of_indices(M: np.ndarray, keep: np.ndarray, rank_tol: float,
                     ref: float | None = None) -> np.ndarray:
    """Unchecked generalized Schur complement onto scalar indices `keep`.

    ``M[keep, keep] - M[keep, c] M[c, c]^+ M[c, keep]`` with the pseudoinverse
    taken through an eigendecomposition of the PSD block ``M[c, c]``.
    Eigenvalues at or below ``rank_tol * max(lambda_max, ref)`` count as zero;
    `ref` defaults to the largest diagonal entry of `M`, so a block that is
    only rounding noise relative to the host is not inverted.
    """
    n = M.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[keep] = False
    comp = np.flatnonzero(mask)
    top = M[np.ix_(keep, keep)]
    if comp.size == 0:
        return (top + top.conj().T) / 2
    w, V = linalg.eigh_desc(M[np.ix_(comp, comp)])
    if ref is None:
        ref = float(np.max(np.abs(np.diag(M))))
    r = w > rank_tol * max(w[0], ref)
    if not r.any():
        return (top + top.conj().T) / 2
    X = V[:, r].conj().T @ M[np.ix_(comp, keep)]
    S = top - X.conj().T @ (X / w[r][:, None])
    return (S + S.conj().T) / 2


def schur_complement(M, lam, tol: Tolerances = DEFAULT_TOL, h: int = 1) -> SchurResult:
    """Generalized Schur complement of a PSD matrix onto the labels `lam`.

    Parameters
    ----------
    M : array_like
        Positive semidefinite matrix of size ``n*h``.
    lam : iterable of int
        Labels the complement is supported on.
    tol : Tolerances
    h : int
        Block size.

    Raises
    ------
    NotPSDError
        When `M` is not PSD within ``tol.psd_tol``.
    """
    H = linalg.ensure_psd(M, tol)
    n = _labels(H, h)
    lam = index_set(lam, n)
    S = schur_of_indices(H, scalar_indices(lam, h), tol.rank_tol)
    return SchurResult(lam, S, n, h)


def _labels(H, h):
    if H.shape[0] % h:
        raise ValidationError(f"size {H.shape[0]} is not a multiple of block size {h}")
    return H.shape[0] // h


def structured_cholesky(M, tol: Tolerances = DEFAULT_TOL, h: int = 1) -> np.ndarray:
    """Block lower-triangular ``P`` with ``M = P* P`` and Schur-complement truncations.

    The leading ``(k+1) x (k+1)`` block corner ``P_k`` of the result satisfies
    ``P_k* P_k = S(M; {0..k})``.  Diagonal blocks are PSD square roots and
    every block row lies in the range of its diagonal block.

    The factor is built from the bottom-right corner upwards: the last block
    row is read off the current Schur complement, whose removal leaves the
    Schur complement on the remaining leading labels.
    """
    H = linalg.ensure_psd(M, tol)
    nb = _labels(H, h)
    P = np.zeros_like(H)
    S = H.copy()
    floor = tol.rank_tol * float(np.max(np.abs(np.diag(H)), initial=0.0))
    for k in range(nb - 1, -1, -1):
        rows = slice(k * h, (k + 1) * h)
        w, V = np.linalg.eigh(S[rows, rows])
        r = w > max(floor, tol.rank_tol * w[-1])
        Vr, root = V[:, r], np.sqrt(w[r])
        Pkk = (Vr * root) @ Vr.conj().T
        row = (Vr / root) @ (Vr.conj().T @ S[rows, : k * h])
        P[rows, rows] = Pkk
        P[rows, : k * h] = row
        S = S[: k * h, : k * h] - row.conj().T @ row
        S = (S + S.conj().T) / 2
    return P


def quotient_gap(M, J, K, tol: Tolerances = DEFAULT_TOL, h: int = 1) -> float:
    """Relative distance between ``S(M;J)`` and ``S(S(M;K); J)``."""
    H = linalg.ensure_psd(M, tol)
    n = _labels(H, h)
    J, K = index_set(J, n), index_set(K, n)
    if not set(J) <= set(K):
        raise ValidationError(f"J={J} is not a subset of K={K}")
    direct = schur_of_indices(H, scalar_indices(J, h), tol.rank_tol)
    SK = schur_of_indices(H, scalar_indices(K, h), tol.rank_tol)
    inner = [K.index(j) for j in J]
    nested = schur_of_indices(SK, scalar_indices(inner, h), tol.rank_tol,
                              ref=float(np.max(np.abs(np.diag(H)))))
    return float(np.linalg.norm(direct - nested) / max(1.0, np.linalg.norm(H, 2)))


def check_quotient_identity(M, J, K, tol: float = 1e-9, h: int = 1,
                            tolerances: Tolerances = DEFAULT_TOL) -> bool:
    """``S(J) = S(S(K); J)`` for nested label sets ``J <= K``."""
    return quotient_gap(M, J, K, tolerances, h) <= tol


def inclusion_exclusion_gaps(M, J, K, tolerances: Tolerances = DEFAULT_TOL, h: int = 1):
    """Measure both sides of the inclusion-exclusion equivalence.

    Returns
    -------
    identity_gap : float
        ``||S(N) - S(K) - S(J) + S(K & J)||_F`` with ``N = K | J``, all padded
        into the host, relative to ``max(1, ||M||)``.
    zero_gap : float
        Largest modulus of ``S(N)`` at positions ``(K\\J) x (J\\K)`` and their
        transposes, relative to the same scale.
    """
    H = linalg.ensure_psd(M, tolerances)
    n = _labels(H, h)
    J, K = index_set(J, n), index_set(K, n)
    N = tuple(sorted(set(J) | set(K)))
    I = tuple(sorted(set(J) & set(K)))

    def padded(lam):
        if not lam:
            return np.zeros_like(H)
        return pad(schur_of_indices(H, scalar_indices(lam, h), tolerances.rank_tol), lam, n, h)

    SN = padded(N)
    scale = max(1.0, float(np.linalg.norm(H, 2)))
    identity_gap = np.linalg.norm(SN - padded(K) - padded(J) + padded(I)) / scale
    only_k = scalar_indices(sorted(set(K) - set(J)), h)
    only_j = scalar_indices(sorted(set(J) - set(K)), h)
    if only_k.size and only_j.size:
        block = SN[np.ix_(only_k, only_j)]
        zero_gap = float(np.max(np.abs(block))) / scale
    else:
        zero_gap = 0.0
    return float(identity_gap), zero_gap


def check_inclusion_exclusion(M, J, K, tol: float = 1e-9, h: int = 1,
                              tolerances: Tolerances = DEFAULT_TOL):
    """Return ``(identity_holds, zero_pattern_holds)``; the two agree for PSD `M`."""
    identity_gap, zero_gap = inclusion_exclusion_gaps(M, J, K, tolerances, h)
    return identity_gap <= tol, zero_gap <= tol


def _factor_mismatch(A, B, C, P, Q, R):
    A, B, C, P, Q, R = map(linalg.as_matrix, (A, B, C, P, Q, R))
    try:
        parts = (
            A - P.conj().T @ P - Q.conj().T @ Q,
            B - Q.conj().T @ R,
            C - R.conj().T @ R,
        )
    except ValueError as exc:
        raise ValidationError(f"incompatible block shapes: {exc}") from None
    scale = max(1.0, np.linalg.norm(A), np.linalg.norm(C))
    return max(np.linalg.norm(x) for x in parts) / scale


def lemma1_predicate(A, B, C, P, Q, R, tol: float = 1e-9) -> bool:
    """Decide whether ``S(0) = P* P`` for ``M = [[A, B], [B*, C]]``.

    The blocks must satisfy ``M = [[P*, Q*], [0, R*]] [[P, 0], [Q, R]]``; the
    answer is then the range inclusion ``ran Q <= ran R``.
    """
    mismatch = _factor_mismatch(A, B, C, P, Q, R)
    if mismatch > tol:
        raise ValidationError(f"blocks do not factor M (mismatch {mismatch:.3e})")
    return linalg.range_defect(Q, R) <= tol


def _lower(P, Q, R):
    P, Q, R = map(linalg.as_matrix, (P, Q, R))
    top = np.hstack([P, np.zeros((P.shape[0], R.shape[1]), dtype=complex)])
    return np.vstack([top, np.hstack([Q, R])]), P.shape[0]


def unique_isometry_factor(P, Q, R, Pt, Qt, Rt, tol: float = 1e-9) -> np.ndarray:
    """Recover the block lower-triangular isometry linking two factorizations.

    Given ``L = [[P, 0], [Q, R]]`` and ``Lt = [[Pt, 0], [Qt, Rt]]`` with
    ``L* L = Lt* Lt`` and ``ran Q <= ran R``, returns ``V = Lt L^+``.  `V`
    satisfies ``V L = Lt``, is isometric on ``ran L`` and its upper-right block
    vanishes.

    Raises
    ------
    ValidationError
        If the Gram matrices differ or the range inclusion fails.
    """
    L, p = _lower(P, Q, R)
    Lt, pt = _lower(Pt, Qt, Rt)
    if L.shape[1] != Lt.shape[1]:
        raise ValidationError("factorizations act on different spaces")
    G, Gt = L.conj().T @ L, Lt.conj().T @ Lt
    scale = max(1.0, np.linalg.norm(G))
    if np.linalg.norm(G - Gt) > tol * scale:
        raise ValidationError("L* L differs from Lt* Lt")
    if linalg.range_defect(Q, R) > tol:
        raise ValidationError("ran Q is not contained in ran R")
    V = Lt @ linalg.pseudoinverse(L)
    proj = linalg.range_projector(L)
    iso_gap = np.linalg.norm(proj @ V.conj().T @ V @ proj - proj)
    upper = V[:pt, p:]
    if iso_gap > np.sqrt(tol) or np.linalg.norm(upper) > np.sqrt(tol):
        raise ValidationError("recovered map is not a block lower-triangular isometry")
    V[:pt, p:] = 0
    return V
