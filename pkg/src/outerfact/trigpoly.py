"""Matrix-valued trigonometric (Laurent) and analytic polynomials on the d-torus.

Exponents are tuples of ``d`` integers; for ``d == 1`` plain integers are
accepted everywhere and returned by :func:`fourier_coeffs`.  Multi-indices are
always enumerated in lexicographic order (first variable most significant).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ValidationError
from .linalg import DEFAULT_TOL

TORUS_TOL = 1e-12


def _key(k, d=None) -> tuple[int, ...]:
    t = tuple(int(x) for x in np.atleast_1d(k))
    if d is not None and len(t) != d:
        raise ValidationError(f"exponent {k!r} does not have {d} components")
    return t


def is_canonical(k) -> bool:
    """True for the zero exponent and exponents whose first nonzero entry is positive."""
    for x in k:
        if x:
            return x > 0
    return True


def _neg(k):
    return tuple(-x for x in k)


def box_indices(box) -> list[tuple[int, ...]]:
    """Lexicographic enumeration of ``prod {0..box_i}``."""
    return list(itertools.product(*(range(int(b) + 1) for b in box)))


class LaurentPoly:
    """Hermitian trigonometric polynomial ``Q(z) = sum_k Q_k z^k``.

    Only the canonical half of the exponents is stored; ``Q_{-k}`` is always
    ``Q_k*``.  The constructor accepts either half or both halves, provided
    the halves agree.

    Parameters
    ----------
    coeffs : dict
        Exponent -> ``h x h`` matrix (scalars allowed for ``h == 1``).
    degree : sequence of int, optional
        Per-variable degree ``(n_1, ..., n_d)``.  Inferred from the exponents
        when omitted.
    herm_tol : float
        Tolerance for the Hermitian checks, relative to the coefficient size.
    """

    def __init__(self, coeffs, degree=None, herm_tol=DEFAULT_TOL.herm_tol):
        if not coeffs:
            raise ValidationError("no coefficients given")
        items = [(_key(k), linalg.as_matrix(v)) for k, v in dict(coeffs).items()]
        d = len(items[0][0])
        h = items[0][1].shape[0]
        given = {}
        for k, v in items:
            if len(k) != d:
                raise ValidationError("exponents of mixed dimension")
            if v.shape != (h, h):
                raise ValidationError(f"coefficient at {k} has shape {v.shape}, expected {(h, h)}")
            if k in given:
                raise ValidationError(f"duplicate exponent {k}")
            given[k] = v
        scale = max(1.0, max(float(np.max(np.abs(v))) for v in given.values()))
        canon = {}
        for k, v in given.items():
            if is_canonical(k):
                partner = given.get(_neg(k))
                if partner is not None and np.max(np.abs(partner - v.conj().T), initial=0) > herm_tol * scale:
                    raise ValidationError(f"coefficients at {k} and {_neg(k)} are not adjoint")
                canon[k] = v
            elif _neg(k) not in given:
                raise ValidationError(
                    f"exponent {k} is outside the canonical half and its partner {_neg(k)} is missing")
        zero = (0,) * d
        if zero in canon:
            canon[zero] = linalg.hermitian(canon[zero], herm_tol)
        else:
            canon[zero] = np.zeros((h, h), dtype=complex)
        inferred = tuple(max(abs(k[i]) for k in canon) for i in range(d))
        if degree is None:
            degree = inferred
        degree = _key(degree, d)
        if any(a < b for a, b in zip(degree, inferred)):
            raise ValidationError(f"exponents exceed declared degree {degree}")
        self.d = d
        self.h = h
        self.degree = degree
        self._coeffs = dict(sorted(canon.items()))

    @classmethod
    def constant(cls, Q0, d=1):
        return cls({(0,) * d: Q0})

    def coeff(self, k) -> np.ndarray:
        k = _key(k, self.d)
        if is_canonical(k):
            c = self._coeffs.get(k)
            return np.zeros((self.h, self.h), dtype=complex) if c is None else c.copy()
        c = self._coeffs.get(_neg(k))
        return np.zeros((self.h, self.h), dtype=complex) if c is None else c.conj().T

    def canonical_items(self):
        return [(k, v.copy()) for k, v in self._coeffs.items()]

    def full_items(self):
        """All exponents with their coefficients, both halves."""
        out = {}
        for k, v in self._coeffs.items():
            out[k] = v.copy()
            if any(k):
                out[_neg(k)] = v.conj().T
        return sorted(out.items())

    @property
    def scale(self) -> float:
        """``max(1, ||Q_0||_F)``, the reference size for relative tolerances."""
        return max(1.0, float(np.linalg.norm(self.coeff((0,) * self.d))))

    def __call__(self, *z):
        return eval_poly(self, *z)

    def __repr__(self):
        return f"LaurentPoly(d={self.d}, h={self.h}, degree={self.degree}, terms={len(self._coeffs)})"


class AnalyticPoly:
    """Analytic matrix polynomial ``P(z) = sum_{k in K} P_k z^k``, ``K = prod {0..n_i}``."""

    def __init__(self, coeffs, degree=None):
        if not coeffs:
            raise ValidationError("no coefficients given")
        items = {}
        for k, v in dict(coeffs).items():
            k = _key(k)
            if k in items:
                raise ValidationError(f"duplicate exponent {k}")
            items[k] = linalg.as_matrix(v)
        d = len(next(iter(items)))
        shape = next(iter(items.values())).shape
        for k, v in items.items():
            if len(k) != d or any(x < 0 for x in k):
                raise ValidationError(f"exponent {k} is not a valid analytic exponent")
            if v.shape != shape:
                raise ValidationError(f"coefficient at {k} has shape {v.shape}, expected {shape}")
        inferred = tuple(max(k[i] for k in items) for i in range(d))
        degree = inferred if degree is None else _key(degree, d)
        if any(a < b for a, b in zip(degree, inferred)):
            raise ValidationError(f"exponents exceed declared degree {degree}")
        self.d = d
        self.h_out, self.h_in = shape
        self.degree = degree
        self._coeffs = dict(sorted(items.items()))

    def coeff(self, k) -> np.ndarray:
        c = self._coeffs.get(_key(k, self.d))
        return np.zeros((self.h_out, self.h_in), dtype=complex) if c is None else c.copy()

    def items(self):
        return [(k, v.copy()) for k, v in self._coeffs.items()]

    def gram(self) -> LaurentPoly:
        """Coefficients of ``P(z)* P(z)`` on the torus (exact finite convolution)."""
        out = {}
        for a, Pa in self._coeffs.items():
            for b, Pb in self._coeffs.items():
                mu = tuple(y - x for x, y in zip(a, b))
                if is_canonical(mu):
                    out[mu] = out.get(mu, 0) + Pa.conj().T @ Pb
        return LaurentPoly(out, degree=self.degree)

    def __call__(self, *z):
        return eval_poly(self, *z)

    def __repr__(self):
        return (f"AnalyticPoly(d={self.d}, shape={(self.h_out, self.h_in)}, "
                f"degree={self.degree}, terms={len(self._coeffs)})")


def _points(z, d):
    if len(z) == 1 and d > 1:
        z = tuple(np.moveaxis(np.asarray(z[0], dtype=complex), -1, 0))
    if len(z) != d:
        raise ValidationError(f"expected {d} coordinate arrays, got {len(z)}")
    return np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in z))


def eval_poly(poly, *z) -> np.ndarray:
    """Evaluate a Laurent or analytic polynomial at points `z`.

    `z` is one array per variable (broadcast together) or a single array
    whose last axis has length ``d``.  The result has shape
    ``grid_shape + (h_out, h_in)``.

    Raises
    ------
    ValidationError
        For a Laurent polynomial evaluated off the torus.
    """
    zs = _points(z, poly.d)
    if isinstance(poly, LaurentPoly):
        for x in zs:
            if np.any(np.abs(np.abs(x) - 1) > TORUS_TOL):
                raise ValidationError("Laurent polynomials are evaluated on the torus only")
        items = poly.full_items()
    else:
        items = poly.items()
    exps = np.array([k for k, _ in items])
    C = np.stack([v for _, v in items])
    powers = np.ones((len(items),) + zs[0].shape, dtype=complex)
    for i, x in enumerate(zs):
        e = exps[:, i].reshape((-1,) + (1,) * x.ndim)
        pos = x[None] ** np.abs(e)
        # on the torus z^-k = conj(z^k); keeps Q(z) Hermitian to round-off
        powers *= np.where(e >= 0, pos, np.conj(pos))
    return np.einsum("e...,eij->...ij", powers, C)


def torus_grid(points: int, d: int):
    """Uniform grid ``exp(2 pi i j / points)`` per variable, ``indexing='ij'``."""
    z = np.exp(2j * np.pi * np.arange(points) / points)
    if d == 1:
        return (z,)
    return tuple(np.meshgrid(*([z] * d), indexing="ij"))


def disk_grid(n_radii: int = 10, n_angles: int = 10, r_max: float = 0.95) -> np.ndarray:
    """Polar grid on the open unit disk, ``n_radii * n_angles`` points including 0."""
    r = r_max * np.arange(n_radii) / max(1, n_radii - 1)
    t = 2 * np.pi * np.arange(n_angles) / n_angles
    return (r[:, None] * np.exp(1j * t)[None, :]).ravel()


def _grid_points(poly, grid_points):
    return DEFAULT_TOL.grid_points(poly.d) if grid_points is None else int(grid_points)


def torus_min_eig(Q: LaurentPoly, grid_points=None) -> float:
    """Smallest eigenvalue of ``Q(z)`` over a uniform torus grid."""
    vals = eval_poly(Q, *torus_grid(_grid_points(Q, grid_points), Q.d))
    vals = vals.reshape((-1, Q.h, Q.h))
    w = np.linalg.eigvalsh((vals + np.conj(np.swapaxes(vals, -1, -2))) / 2)
    return float(w[:, 0].min())


def residual(Q: LaurentPoly, P: AnalyticPoly, grid_points=None) -> float:
    """``max_z ||Q(z) - P(z)* P(z)||_F`` over a uniform torus grid."""
    if P.d != Q.d or P.h_in != Q.h:
        raise ValidationError(
            f"dimension mismatch: Q is {Q.h}x{Q.h} in {Q.d} variables, "
            f"P is {P.h_out}x{P.h_in} in {P.d}")
    grid = torus_grid(_grid_points(Q, grid_points), Q.d)
    q = eval_poly(Q, *grid)
    p = eval_poly(P, *grid)
    diff = q - np.conj(np.swapaxes(p, -1, -2)) @ p
    return float(np.max(np.linalg.norm(diff.reshape(diff.shape[:-2] + (-1,)), axis=-1)))


@dataclass(frozen=True)
class ToeplitzTruncation:
    """Finite section of the multilevel block Toeplitz matrix ``(Q_{i-j})``.

    ``order[p]`` is the multi-index of block row/column ``p``.
    """

    box: tuple[int, ...]
    order: tuple[tuple[int, ...], ...]
    matrix: np.ndarray
    h: int

    def position(self, k) -> int:
        k = _key(k, len(self.box))
        return int(np.ravel_multi_index(k, tuple(b + 1 for b in self.box)))

    def positions(self, ks) -> list[int]:
        return [self.position(k) for k in ks]


def toeplitz_truncation(Q: LaurentPoly, box) -> ToeplitzTruncation:
    """Block matrix with entry ``Q_{i-j}`` at multi-indices ``(i, j)`` of ``prod {0..N_t}``.

    Raises
    ------
    ValidationError
        When the box is smaller than the degree in some variable.
    """
    box = _key(box, Q.d)
    if any(N < n for N, n in zip(box, Q.degree)):
        raise ValidationError(f"box {box} is smaller than degree {Q.degree}")
    dims = tuple(N + 1 for N in box)
    idx = np.array(np.unravel_index(np.arange(int(np.prod(dims))), dims)).T
    size = idx.shape[0]
    h = Q.h
    M = np.zeros((size * h, size * h), dtype=complex)
    for mu, c in Q.full_items():
        j = idx - np.array(mu)
        ok = np.all((j >= 0) & (j < np.array(dims)), axis=1)
        rows = np.flatnonzero(ok)
        cols = np.ravel_multi_index(tuple(j[ok].T), dims)
        for a in range(h):
            for b in range(h):
                if c[a, b] != 0:
                    M[rows * h + a, cols * h + b] = c[a, b]
    order = tuple(tuple(int(x) for x in row) for row in idx)
    return ToeplitzTruncation(box, order, M, h)


def fourier_coeffs(samples, max_exponent, d: int = 1):
    """Discrete Fourier coefficients of samples on the uniform torus grid.

    Parameters
    ----------
    samples : array_like
        Values on :func:`torus_grid`; the first `d` axes are the grid, any
        trailing axes (matrix blocks) are carried along.
    max_exponent : int or sequence of int
        Largest ``|k_t|`` to return per variable.
    d : int
        Number of variables.

    Returns
    -------
    dict
        Exponent -> coefficient, for every ``|k_t| <= max_exponent_t``.  Keys
        are ints when ``d == 1``.

    Raises
    ------
    ValidationError
        When a grid axis has fewer than ``4 * max_exponent`` points.
    """
    f = np.asarray(samples, dtype=complex)
    m = _key(max_exponent) if np.ndim(max_exponent) else (int(max_exponent),) * d
    if len(m) != d or f.ndim < d:
        raise ValidationError("samples and max_exponent disagree on the dimension")
    for N, mt in zip(f.shape[:d], m):
        if N < max(1, 4 * mt):
            raise ValidationError(f"grid of {N} points is too coarse for exponents up to {mt}")
    F = np.fft.fftn(f, axes=tuple(range(d))) / np.prod(f.shape[:d])
    out = {}
    for k in itertools.product(*(range(-mt, mt + 1) for mt in m)):
        val = F[tuple(kt % N for kt, N in zip(k, f.shape[:d]))]
        out[k[0] if d == 1 else k] = val
    return out


def scalar_roots(p: AnalyticPoly) -> np.ndarray:
    """Roots of a scalar one-variable polynomial (companion-matrix eigenvalues).

    Raises
    ------
    ValidationError
        For the zero polynomial or non-scalar input.
    """
    if p.d != 1 or (p.h_out, p.h_in) != (1, 1):
        raise ValidationError("scalar_roots needs a scalar polynomial in one variable")
    c = np.array([p.coeff(k)[0, 0] for k in range(p.degree[0] + 1)])
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise ValidationError("the zero polynomial has no well-defined roots")
    c = c[: nz[-1] + 1]
    if c.size == 1:
        return np.zeros(0, dtype=complex)
    companion = np.zeros((c.size - 1, c.size - 1), dtype=complex)
    companion[1:, :-1] = np.eye(c.size - 2)
    companion[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(companion)


def outer_by_roots(p: AnalyticPoly, tol: float = 1e-9) -> bool:
    """Scalar outerness oracle: no root inside the open unit disk."""
    roots = scalar_roots(p)
    return bool(roots.size == 0 or np.min(np.abs(roots)) >= 1 - tol)
