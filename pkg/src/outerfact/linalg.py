"""Dense complex matrix primitives: Hermitian/PSD handling, pseudoinverses,
rank-revealing factorizations and range comparisons.

Every routine accepts array-likes and returns fresh ``complex128`` arrays; no
input is modified in place.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import NotPSDError, ValidationError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the package.

    ``max_trunc`` and ``grid_points_per_dim`` may be left as ``None``; the
    dimension-dependent defaults are then returned by :meth:`trunc_limit` and
    :meth:`grid_points`.
    """

    herm_tol: float = 1e-10
    psd_tol: float = 1e-9
    rank_tol: float = 1e-10
    conv_tol: float = 1e-8
    residual_tol: float = 1e-8
    max_trunc: int | None = None
    grid_points_per_dim: int | None = None

    def __post_init__(self):
        for name in ("herm_tol", "psd_tol", "rank_tol", "conv_tol", "residual_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive, got {value!r}")
        if self.max_trunc is not None and self.max_trunc < 1:
            raise ValidationError(f"max_trunc must be positive, got {self.max_trunc!r}")
        g = self.grid_points_per_dim
        if g is not None and (g < 1 or g & (g - 1)):
            raise ValidationError(f"grid_points_per_dim must be a power of two, got {g!r}")

    def trunc_limit(self, d: int) -> int:
        if self.max_trunc is not None:
            return self.max_trunc
        return 512 if d == 1 else 48

    def grid_points(self, d: int) -> int:
        if self.grid_points_per_dim is not None:
            return self.grid_points_per_dim
        return 512 if d == 1 else 64

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)


DEFAULT_TOL = Tolerances()


def as_matrix(M) -> np.ndarray:
    """Return `M` as a finite 2-D complex array (scalars become 1x1)."""
    A = np.array(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise ValidationError(f"expected a matrix, got array of shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    return A


def hermitian_defect(M) -> float:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A - A.conj().T)))


def hermitian(M, herm_tol: float = DEFAULT_TOL.herm_tol) -> np.ndarray:
    """Symmetrize `M` to ``(M + M*)/2`` after checking its Hermitian defect.

    The defect is measured relative to ``max(1, max|M_ij|)``.
    """
    A = as_matrix(M)
    defect = hermitian_defect(A)
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if defect > herm_tol * scale:
        raise ValidationError(f"matrix is not Hermitian (defect {defect:.3e})")
    return (A + A.conj().T) / 2


def eigh_desc(H):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    w, V = np.linalg.eigh(H)
    return w[::-1], V[:, ::-1]


def min_eig(M) -> float:
    A = as_matrix(M)
    if A.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0])


def ensure_psd(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Symmetrize `M` and verify it is positive semidefinite.

    Raises
    ------
    NotPSDError
        If the smallest eigenvalue is below ``-psd_tol * max(1, lambda_max)``.
    """
    H = hermitian(M, tol.herm_tol)
    if H.size == 0:
        return H
    w = np.linalg.eigvalsh(H)
    if w[0] < -tol.psd_tol * max(1.0, w[-1]):
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    return H


def pseudoinverse(M, rank_tol: float = DEFAULT_TOL.rank_tol) -> np.ndarray:
    """Moore-Penrose pseudoinverse via the SVD.

    Singular values at or below ``rank_tol * sigma_max`` are treated as zero;
    the zero matrix maps to the (transposed) zero matrix.
    """
    A = as_matrix(M)
    if A.size == 0:
        return np.zeros((A.shape[1], A.shape[0]), dtype=complex)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    keep = s > rank_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    return (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T


def psd_pinv(H, rank_tol: float = DEFAULT_TOL.rank_tol) -> np.ndarray:
    """Pseudoinverse of a Hermitian PSD matrix through its eigendecomposition."""
    H = as_matrix(H)
    if H.size == 0:
        return H.copy()
    w, V = eigh_desc((H + H.conj().T) / 2)
    if w[0] <= 0:
        return np.zeros_like(H)
    keep = w > rank_tol * w[0]
    Vk = V[:, keep]
    return (Vk / w[keep]) @ Vk.conj().T


def psd_sqrt(H) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix (negative round-off clipped)."""
    H = as_matrix(H)
    if H.size == 0:
        return H.copy()
    w, V = np.linalg.eigh((H + H.conj().T) / 2)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def rank_factor(Y, rank_tol: float = DEFAULT_TOL.rank_tol):
    """Rank-revealing factorization ``Y = C* C`` of a PSD matrix.

    Parameters
    ----------
    Y : array_like
        Hermitian positive semidefinite matrix.
    rank_tol : float
        Eigenvalues at or below ``rank_tol * lambda_max`` are dropped.

    Returns
    -------
    C : ndarray, shape (r, n)
        Rows are ``sqrt(lambda_i) v_i*`` for the retained eigenpairs, largest
        eigenvalue first.
    r : int
        Numerical rank.
    """
    H = as_matrix(Y)
    n = H.shape[1]
    if H.size == 0:
        return np.zeros((0, n), dtype=complex), 0
    w, V = eigh_desc((H + H.conj().T) / 2)
    if w[0] <= 0:
        return np.zeros((0, n), dtype=complex), 0
    keep = w > rank_tol * w[0]
    C = np.sqrt(w[keep])[:, None] * V[:, keep].conj().T
    return C, int(keep.sum())


def range_basis(R, rank_tol: float = DEFAULT_TOL.rank_tol) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical column space of `R`."""
    A = as_matrix(R)
    if A.size == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    return U[:, s > rank_tol * s[0]]


def range_projector(R, rank_tol: float = DEFAULT_TOL.rank_tol) -> np.ndarray:
    B = range_basis(R, rank_tol)
    return B @ B.conj().T


def range_defect(Q, R, rank_tol: float = DEFAULT_TOL.rank_tol) -> float:
    """``||(I - R R^+) Q||_F / max(1, ||Q||_F)``."""
    Qm, Rm = as_matrix(Q), as_matrix(R)
    if Qm.shape[0] != Rm.shape[0]:
        raise ValidationError(f"row counts differ: {Qm.shape[0]} vs {Rm.shape[0]}")
    B = range_basis(Rm, rank_tol)
    resid = Qm - B @ (B.conj().T @ Qm)
    return float(np.linalg.norm(resid) / max(1.0, np.linalg.norm(Qm)))


def range_included(Q, R, rank_tol: float = DEFAULT_TOL.rank_tol) -> bool:
    """True when the column space of `Q` lies in that of `R`."""
    return range_defect(Q, R, rank_tol) <= rank_tol


def psd_order_leq(A, B, tol: float = DEFAULT_TOL.psd_tol) -> bool:
    """Loewner comparison ``A <= B`` up to ``tol * max(1, ||B||_2)``."""
    Am, Bm = as_matrix(A), as_matrix(B)
    if Am.shape != Bm.shape:
        raise ValidationError(f"shape mismatch: {Am.shape} vs {Bm.shape}")
    if Am.size == 0:
        return True
    scale = max(1.0, float(np.linalg.norm(Bm, 2)))
    return min_eig(Bm - Am) >= -tol * scale


def rel_diff(A, B, scale=None) -> float:
    """Frobenius distance of `A` and `B` divided by ``max(1, scale)``.

    `scale` defaults to ``||A||_F``.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if scale is None:
        scale = np.linalg.norm(A)
    return float(np.linalg.norm(A - B) / max(1.0, scale))
