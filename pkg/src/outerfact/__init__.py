"""Outer factorizations of PSD matrix-valued trigonometric polynomials via Schur complements."""

from .errors import ConditionFailed, NotPSDError, OuterFactError, RankError, ValidationError
from .factor1d import (OuterFactorization, factor_outer_1d, gauge_normalize,
                       inner_outer_samples, maximality_test, outerness_test)
from .factormd import (GWReport, MultiConditionReport, TwoVarReport, check_2var_decomposition,
                       check_gw_stability, check_multi_condition, factor_outer_2d)
from .linalg import DEFAULT_TOL, Tolerances, pseudoinverse, rank_factor
from .schur import (check_inclusion_exclusion, check_quotient_identity, lemma1_predicate,
                    schur_complement, structured_cholesky, unique_isometry_factor)
from .toeplitz_schur import bauer_recursion, inheritance_check, limiting_schur
from .trigpoly import (AnalyticPoly, LaurentPoly, eval_poly, fourier_coeffs, residual,
                       scalar_roots, toeplitz_truncation, torus_min_eig)

__version__ = "0.1.0"

__all__ = [
    "AnalyticPoly", "ConditionFailed", "DEFAULT_TOL", "GWReport", "LaurentPoly",
    "MultiConditionReport", "NotPSDError", "OuterFactError", "OuterFactorization", "RankError",
    "Tolerances", "TwoVarReport", "ValidationError", "bauer_recursion",
    "check_2var_decomposition", "check_gw_stability", "check_inclusion_exclusion",
    "check_multi_condition", "check_quotient_identity", "eval_poly", "factor_outer_1d",
    "factor_outer_2d", "fourier_coeffs", "gauge_normalize", "inheritance_check",
    "inner_outer_samples", "lemma1_predicate", "limiting_schur", "maximality_test",
    "outerness_test", "pseudoinverse", "rank_factor", "residual", "scalar_roots",
    "schur_complement", "structured_cholesky", "toeplitz_truncation", "torus_min_eig",
    "unique_isometry_factor",
]
