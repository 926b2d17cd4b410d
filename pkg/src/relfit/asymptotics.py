"""Asymptotic covariance matrices and Pearson residuals.

For intensities the scaled estimator Delta[lam^-1/2](lam_hat - lam) has
limiting covariance I - D'(DD')^-1 D, an orthogonal projection of rank
I - K; the plug-in covariance of lam_hat itself follows by unscaling with
Delta[lam^1/2].  For probabilities the scaled estimator sqrt(N)(p_hat - p)
has limiting covariance M Sigma M' with Sigma = Delta[p] - p p',
H = (1, Delta[p^-1] D') and M = I - Delta[p] H (H' Delta[p] H)^-1 H';
when the model carries the overall effect this reduces to
Sigma - D'(D Delta[p^-1] D')^-1 D.

All formulas are basis-invariant: any row-equivalent integer kernel basis
gives the same matrices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    NoOverallEffect,
    NonPositiveFitted,
    NonPositiveParameter,
    NotInModel,
    NotNormalized,
)
from .model_core import RelationalModel

_CONDITION_WARN = 1e12
_NORMALIZATION_TOL = 1e-12
_RANK_TOL = 1e-8


@dataclass(frozen=True)
class AsymptoticSummary:
    """Covariance matrices, standard errors, residuals, and numerical rank.

    ``scaled_cov`` is the covariance of the scaled estimator;
    ``estimate_cov`` is the plug-in covariance of the unscaled estimate
    (delta-method unscaling for intensities, division by the sample size
    for probabilities).  ``std_errors`` are the square roots of the
    ``estimate_cov`` diagonal.  ``residuals`` are Pearson residuals when
    an observed table was supplied, else None.  ``rank`` is the numerical
    rank of ``scaled_cov`` (eigenvalues above 1e-8 of the largest).
    """

    scaled_cov: np.ndarray
    estimate_cov: np.ndarray
    std_errors: np.ndarray
    residuals: np.ndarray | None
    rank: int

    def __post_init__(self):
        for name in ("scaled_cov", "estimate_cov", "std_errors", "residuals"):
            value = getattr(self, name)
            if value is not None:
                value.setflags(write=False)


def pearson_residuals(observed, fitted) -> np.ndarray:
    """Componentwise (u_i - v_i) / sqrt(v_i); squared sum is X^2."""
    u = np.asarray(observed, dtype=float)
    v = np.asarray(fitted, dtype=float)
    if u.ndim != 1 or u.shape != v.shape or u.size == 0:
        raise DimensionMismatch(
            f"observed and fitted must be equal-length vectors, got shapes "
            f"{u.shape} and {v.shape}"
        )
    if (v <= 0).any():
        raise NonPositiveFitted("fitted values must be strictly positive")
    return (u - v) / np.sqrt(v)


def _solve_checked(matrix: np.ndarray, rhs: np.ndarray, label: str) -> np.ndarray:
    cond = np.linalg.cond(matrix)
    if cond > _CONDITION_WARN:
        warnings.warn(
            f"{label} has condition number {cond:.3e}; inverse may be inaccurate",
            RuntimeWarning,
            stacklevel=3,
        )
    return np.linalg.solve(matrix, rhs)


def _numerical_rank(matrix: np.ndarray) -> int:
    if matrix.size == 0:
        return 0
    eigs = np.linalg.eigvalsh((matrix + matrix.T) / 2.0)
    top = float(np.abs(eigs).max())
    if top == 0.0:
        return 0
    return int((np.abs(eigs) > _RANK_TOL * top).sum())


def _check_positive(model: RelationalModel, values, name: str) -> np.ndarray:
    vec = np.asarray(values, dtype=float)
    if vec.ndim != 1 or vec.size != model.n_cells:
        raise DimensionMismatch(
            f"{name} must have length {model.n_cells}, got shape {vec.shape}"
        )
    if not np.isfinite(vec).all() or (vec <= 0).any():
        raise NonPositiveParameter(f"{name} must be strictly positive and finite")
    return vec


def poisson_cov(model: RelationalModel, lam, observed=None) -> AsymptoticSummary:
    """Intensity-scale covariance summary at lam.

    scaled_cov = I - D'(DD')^-1 D; estimate_cov unscales it by
    Delta[lam^1/2] on both sides; residuals compare ``observed`` with lam
    when given.
    """
    lam = _check_positive(model, lam, "lam")
    n = model.n_cells
    d = model.kernel_array
    if model.df > 0:
        scaled = np.eye(n) - d.T @ _solve_checked(d @ d.T, d, "DD'")
    else:
        scaled = np.eye(n)
    root = np.sqrt(lam)
    estimate_cov = scaled * np.outer(root, root)
    residuals = None if observed is None else pearson_residuals(observed, lam)
    return AsymptoticSummary(
        scaled_cov=scaled,
        estimate_cov=estimate_cov,
        std_errors=np.sqrt(np.maximum(np.diag(estimate_cov), 0.0)),
        residuals=residuals,
        rank=_numerical_rank(scaled),
    )


def _check_probability(model: RelationalModel, p, in_model_tol: float) -> np.ndarray:
    p = _check_positive(model, p, "p")
    if abs(p.sum() - 1.0) > _NORMALIZATION_TOL:
        raise NotNormalized(f"p sums to {p.sum()!r}, not 1")
    d = model.kernel_array
    if model.df > 0:
        violation = float(np.abs(d @ np.log(p)).max())
        if violation > in_model_tol:
            raise NotInModel(
                f"p violates the model constraints: |D log p| reaches {violation:.3e}"
            )
    return p


def multinomial_cov(model: RelationalModel, p, n: int = 1, observed=None,
                    in_model_tol: float = 1e-8) -> AsymptoticSummary:
    """Probability-scale covariance summary at an in-model p.

    scaled_cov = M Sigma M'; estimate_cov = scaled_cov / n for a sample of
    size n; residuals compare ``observed`` with n p when given.
    """
    p = _check_probability(model, p, in_model_tol)
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"sample size n must be a positive integer, got {n!r}")
    ident = np.eye(model.n_cells)
    sigma = np.diag(p) - np.outer(p, p)
    d = model.kernel_array
    if model.df > 0:
        h = np.column_stack([np.ones(model.n_cells), (d / p).T])
    else:
        h = np.ones((model.n_cells, 1))
    ph = p[:, None] * h
    gram = h.T @ ph
    m = ident - ph @ _solve_checked(gram, h.T, "H' Delta[p] H")
    scaled = m @ sigma @ m.T
    estimate_cov = scaled / float(n)
    residuals = None if observed is None else pearson_residuals(observed, float(n) * p)
    return AsymptoticSummary(
        scaled_cov=scaled,
        estimate_cov=estimate_cov,
        std_errors=np.sqrt(np.maximum(np.diag(estimate_cov), 0.0)),
        residuals=residuals,
        rank=_numerical_rank(scaled),
    )


def overall_effect_cov(model: RelationalModel, p,
                       in_model_tol: float = 1e-8) -> np.ndarray:
    """Sigma - D'(D Delta[p^-1] D')^-1 D for overall-effect models.

    Equals ``multinomial_cov(model, p).scaled_cov`` whenever the model has
    the overall effect; reduces to Sigma for a saturated model.
    """
    if not model.overall_effect:
        raise NoOverallEffect(
            "the reduced covariance formula needs the overall effect"
        )
    p = _check_probability(model, p, in_model_tol)
    sigma = np.diag(p) - np.outer(p, p)
    if model.df == 0:
        return sigma
    d = model.kernel_array
    w = d @ (d / p).T
    return sigma - d.T @ _solve_checked(w, d, "D Delta[p^-1] D'")
