"""Goodness-of-fit statistics and chi-squared tail probabilities.

Three statistics compare observed u with fitted v > 0:

    pearson  X^2 = sum (u_i - v_i)^2 / v_i
    lr       G^2 = 2 sum u_i log(u_i / v_i)
    bregman  B   = 2 sum { u_i log(u_i / v_i) - (u_i - v_i) }

with the convention 0 log 0 = 0, taken by branching exactly on u_i == 0.
The identity B = G^2 + 2 (1'v - 1'u) ties the three together; B and X^2
are non-negative, while G^2 can turn negative whenever the fitted total
exceeds the observed one, which happens in models without the overall
effect.  A chi-squared reference for G^2 is only trustworthy when the
totals match, so reports carry an explicit support flag for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    NonPositiveFitted,
)
from .mle import FitResult, SolverOptions, as_table, fit_augmented
from .model_core import RelationalModel, SamplingScheme

# at df = 0 the reference law is a point mass at zero; statistics under
# this solver-noise floor count as zero
_DF0_TOL = 1e-9

_MAX_TERMS = 500


@dataclass(frozen=True)
class GofReport:
    """Statistic values, degrees of freedom, and upper-tail probabilities.

    ``p_lr`` is 1.0 for non-positive G^2 values (the upper-tail mass above
    them is all of it); ``lr_reference_supported`` records whether the
    chi-squared reference law applies to G^2 at all for this model and
    scheme.  ``existed`` is false when the statistics were computed
    against the augmented estimate.
    """

    pearson: float
    lr: float
    bregman: float
    df: int
    p_pearson: float
    p_lr: float
    p_bregman: float
    observed_total: float
    fitted_total: float
    lr_reference_supported: bool
    existed: bool
    scheme: SamplingScheme


def _check_pair(observed, fitted) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(observed, dtype=float)
    v = np.asarray(fitted, dtype=float)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape or u.size == 0:
        raise DimensionMismatch(
            f"observed and fitted must be equal-length vectors, got shapes "
            f"{u.shape} and {v.shape}"
        )
    if not np.isfinite(u).all() or not np.isfinite(v).all():
        raise InvalidArgument("observed and fitted must be finite")
    if (u < 0).any():
        raise InvalidArgument("observed values must be non-negative")
    if (v <= 0).any():
        raise NonPositiveFitted("fitted values must be strictly positive")
    return u, v


def pearson_stat(observed, fitted) -> float:
    """X^2 = sum (u_i - v_i)^2 / v_i."""
    u, v = _check_pair(observed, fitted)
    diff = u - v
    return float(np.sum(diff * diff / v))


def lr_stat(observed, fitted) -> float:
    """G^2 = 2 sum u_i log(u_i / v_i); may be negative when totals differ."""
    u, v = _check_pair(observed, fitted)
    total = 0.0
    for ui, vi in zip(u.tolist(), v.tolist()):
        if ui == 0.0:
            continue
        total += ui * math.log(ui / vi)
    return 2.0 * total


def bregman_stat(observed, fitted) -> float:
    """B = 2 sum { u_i log(u_i / v_i) - (u_i - v_i) }; non-negative.

    Each term is a pointwise Bregman divergence and is non-negative, so
    roundoff-negative terms are clamped to zero termwise.
    """
    u, v = _check_pair(observed, fitted)
    total = 0.0
    for ui, vi in zip(u.tolist(), v.tolist()):
        term = vi - ui if ui == 0.0 else ui * math.log(ui / vi) - (ui - vi)
        total += term if term > 0.0 else 0.0
    return 2.0 * total


def _gamma_series_p(a: float, x: float) -> float:
    # lower regularized gamma P(a, x); converges fast for x < a + 1
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_TERMS):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf_q(a: float, x: float) -> float:
    # upper regularized gamma Q(a, x) by modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_TERMS + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        factor = d * c
        h *= factor
        if abs(factor - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _check_sf_args(x, k) -> tuple[float, int]:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise InvalidArgument(f"degrees of freedom must be an integer, got {k!r}")
    if k < 1:
        raise InvalidArgument(f"degrees of freedom must be at least 1, got {k}")
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise InvalidArgument(f"statistic value must be finite and >= 0, got {x}")
    return x, int(k)


def chisq_sf(x, k) -> float:
    """Upper-tail probability of the chi-squared law with k degrees of freedom.

    Regularized incomplete gamma Q(k/2, x/2): series in the lower region
    x < k + 1, continued fraction above, 500 terms at most.  Absolute
    error is at most 1e-10 for x <= 1000, k <= 200.
    """
    x, k = _check_sf_args(x, k)
    if x == 0.0:
        return 1.0
    a = 0.5 * k
    xg = 0.5 * x
    value = 1.0 - _gamma_series_p(a, xg) if x < k + 1.0 else _gamma_cf_q(a, xg)
    return min(1.0, max(0.0, value))


def chisq_cdf(x, k) -> float:
    """Lower-tail chi-squared probability, complement of ``chisq_sf``."""
    x, k = _check_sf_args(x, k)
    if x == 0.0:
        return 0.0
    a = 0.5 * k
    xg = 0.5 * x
    value = _gamma_series_p(a, xg) if x < k + 1.0 else 1.0 - _gamma_cf_q(a, xg)
    return min(1.0, max(0.0, value))


def _tail_probability(stat: float, df: int) -> float:
    if df == 0:
        # point mass at zero
        return 1.0 if stat <= _DF0_TOL else 0.0
    if stat <= 0.0:
        return 1.0
    return chisq_sf(stat, df)


def statistics_for(observed, fitted) -> tuple[float, float, float]:
    """(pearson, lr, bregman) for one observed/fitted pair.

    Tolerates the all-zero corner (both vectors zero, from the degenerate
    augmented estimate) where all three statistics are zero by the
    0 log 0 = 0 convention.
    """
    u = np.asarray(observed, dtype=float)
    v = np.asarray(fitted, dtype=float)
    if u.shape == v.shape and not u.any() and not v.any():
        return 0.0, 0.0, 0.0
    return pearson_stat(u, v), lr_stat(u, v), bregman_stat(u, v)


def gof_test(model: RelationalModel, y, scheme: SamplingScheme,
             opts: SolverOptions | None = None,
             fit: FitResult | None = None) -> GofReport:
    """Fit (or reuse ``fit``) and report all three statistics with p-values.

    Fitted cell values are lam_hat for Poisson and N p_hat for multinomial;
    on the augmented branch these reduce to the constant vectors (1'y/I) 1
    and (N/I) 1.  Degrees of freedom are the model's K with upper-tail
    probabilities from ``chisq_sf``.
    """
    table = as_table(y, model)
    if fit is None:
        fit = fit_augmented(model, table, scheme, opts)
    estimate = fit.estimate_array
    fitted = estimate if scheme is SamplingScheme.POISSON else table.total * estimate
    pearson, lr, bregman = statistics_for(table.counts_array, fitted)
    df = model.df
    return GofReport(
        pearson=pearson,
        lr=lr,
        bregman=bregman,
        df=df,
        p_pearson=_tail_probability(pearson, df),
        p_lr=_tail_probability(lr, df),
        p_bregman=_tail_probability(bregman, df),
        observed_total=float(table.total),
        fitted_total=float(fitted.sum()),
        lr_reference_supported=(
            scheme is SamplingScheme.MULTINOMIAL or model.overall_effect
        ),
        existed=fit.existed,
        scheme=scheme,
    )
