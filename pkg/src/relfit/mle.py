"""Maximum likelihood estimation of cell parameters under a relational model.

Poisson sampling maximizes y'A'theta - 1'exp(A'theta) (strictly concave
under full row rank); multinomial sampling solves the stationarity system
of y'A'theta + a0 (1 - 1'exp(A'theta)) in (theta, a0).  Parameterizing
through theta keeps every iterate inside the model, so acceptance is a
pure matter of constraint residuals.

With zero counts the MLE may fail to exist (the supremum sits on the
boundary of the positive orthant).  Detection is heuristic: a zero count,
a collapsing cell, and a stalled objective together form the certificate;
the thresholds live in ``SolverOptions``.  On detection the augmented
estimate is returned: the constant vector (1'y/I) 1 for intensities,
(1/I) 1 for probabilities, with zero multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    NonConvergence,
    ZeroTotal,
)
from .model_core import RelationalModel, SamplingScheme

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class SolverOptions:
    """Newton solver controls.

    ``tol`` scales the KKT residual test; ``existence_threshold`` is the
    relative cell size below which a zero-count cell counts as collapsed;
    ``stall_improvement`` is the objective improvement under which a
    collapsed iterate is declared a nonexistence certificate.
    """

    tol: float = 1e-10
    max_iter: int = 500
    existence_threshold: float = 1e-12
    stall_improvement: float = 1e-13
    max_step_halvings: int = 60

    def __post_init__(self):
        if self.tol <= 0:
            raise InvalidArgument("tol must be positive")
        if self.max_iter < 1:
            raise InvalidArgument("max_iter must be at least 1")
        if self.existence_threshold <= 0:
            raise InvalidArgument("existence_threshold must be positive")
        if self.max_step_halvings < 1:
            raise InvalidArgument("max_step_halvings must be at least 1")


@dataclass(frozen=True)
class ObservedTable:
    """Non-negative integer counts, one per cell."""

    counts: tuple[int, ...]

    def __post_init__(self):
        clean = []
        for c in self.counts:
            if isinstance(c, bool) or not isinstance(c, (int, np.integer)):
                raise InvalidArgument(f"counts must be integers, got {c!r}")
            if c < 0:
                raise InvalidArgument(f"counts must be non-negative, got {c}")
            clean.append(int(c))
        if not clean:
            raise InvalidArgument("a table needs at least one cell")
        object.__setattr__(self, "counts", tuple(clean))

    @property
    def total(self) -> int:
        return sum(self.counts)

    @cached_property
    def counts_array(self) -> np.ndarray:
        a = np.array(self.counts, dtype=float)
        a.setflags(write=False)
        return a


@dataclass(frozen=True)
class FitResult:
    """Fitted cell parameters with multipliers and diagnostics.

    ``estimate`` holds intensities for Poisson fits and probabilities for
    multinomial fits.  ``lagrange`` has one multiplier per kernel-basis
    row; ``alpha0`` is the multinomial normalization multiplier (None for
    Poisson).  When ``existed`` is false the augmented fallback was
    returned and the multipliers are zero; ``degenerate`` additionally
    marks the no-data corners (all-zero Poisson table, multinomial N = 0)
    where the augmented value itself sits outside the parameter space.
    ``kkt_residual`` is the infinity norm of the stationarity and
    constraint residuals at the returned point; for an augmented result it
    is the subset-sum mismatch of the augmented point, which is not a
    stationary point.  ``gamma`` is the multinomial subset-sum
    proportionality diagnostic, the scalar best fitting
    A p_hat = gamma A (y/N).
    """

    estimate: tuple[float, ...]
    lagrange: tuple[float, ...]
    scheme: SamplingScheme
    existed: bool
    kkt_residual: float
    iterations: int
    alpha0: float | None = None
    gamma: float | None = None
    degenerate: bool = False

    @cached_property
    def estimate_array(self) -> np.ndarray:
        a = np.array(self.estimate, dtype=float)
        a.setflags(write=False)
        return a


def as_table(y, model: RelationalModel | None = None) -> ObservedTable:
    """Coerce a sequence of counts, checking length against the model."""
    table = y if isinstance(y, ObservedTable) else ObservedTable(tuple(y))
    if model is not None and len(table.counts) != model.n_cells:
        raise DimensionMismatch(
            f"table has {len(table.counts)} cells, model has {model.n_cells}"
        )
    return table


def _initial_theta(model: RelationalModel, y: np.ndarray, scale: float) -> np.ndarray:
    # least-squares solve of A'theta = log((y + 1/2)/(N + I/2) * scale);
    # the half offset keeps zero counts inside the domain
    n_cells = model.n_cells
    target = np.log((y + 0.5) / (y.sum() + 0.5 * n_cells) * scale)
    theta, *_ = np.linalg.lstsq(model.design_array.T, target, rcond=None)
    return theta


def _augmented_poisson(model: RelationalModel, table: ObservedTable,
                       iterations: int) -> FitResult:
    n = model.n_cells
    value = table.total / n
    estimate = np.full(n, value)
    a = model.design_array
    residual = float(np.abs(a @ estimate - a @ table.counts_array).max())
    return FitResult(
        estimate=tuple(float(x) for x in estimate),
        lagrange=(0.0,) * model.df,
        scheme=SamplingScheme.POISSON,
        existed=False,
        kkt_residual=residual,
        iterations=iterations,
        degenerate=(value == 0.0),
    )


def _augmented_multinomial(model: RelationalModel, table: ObservedTable,
                           iterations: int, degenerate: bool = False) -> FitResult:
    n = model.n_cells
    estimate = np.full(n, 1.0 / n)
    a = model.design_array
    total = table.total
    if total > 0:
        q = table.counts_array / total
        residual = float(np.abs(a @ estimate - a @ q).max())
        gamma = _proportionality(model, estimate, q)
    else:
        residual = 0.0
        gamma = None
    return FitResult(
        estimate=tuple(float(x) for x in estimate),
        lagrange=(0.0,) * model.df,
        scheme=SamplingScheme.MULTINOMIAL,
        existed=False,
        kkt_residual=residual,
        iterations=iterations,
        alpha0=0.0,
        gamma=gamma,
        degenerate=degenerate,
    )


def _proportionality(model: RelationalModel, p: np.ndarray, q: np.ndarray) -> float:
    # least-squares scalar gamma for A p = gamma A q
    a = model.design_array
    ap, aq = a @ p, a @ q
    denom = float(aq @ aq)
    return float(ap @ aq / denom) if denom > 0 else float("nan")


def fit_poisson(model: RelationalModel, y, opts: SolverOptions | None = None) -> FitResult:
    """Poisson MLE: A lam_hat = A y with D log lam_hat = 0.

    Damped Newton on the strictly concave log likelihood in theta.  The
    multipliers satisfy D' alpha = lam_hat - y, recovered as
    (DD')^-1 D (lam_hat - y).  Returns the augmented estimate with
    ``existed=False`` when the nonexistence certificate fires.
    """
    opts = opts or SolverOptions()
    table = as_table(y, model)
    if table.total == 0:
        # supremum at the origin; the augmented value is the zero vector
        return _augmented_poisson(model, table, iterations=0)
    return _solve(model, table, SamplingScheme.POISSON, opts)


def fit_multinomial(model: RelationalModel, y, opts: SolverOptions | None = None) -> FitResult:
    """Multinomial MLE: maximize y' log p under 1'p = 1 and D log p = 0.

    Solves the stationarity system A y = a0 A p, 1'p = 1 in (theta, a0)
    with p = exp(A'theta) by damped Newton on the squared residual.  The
    fit satisfies the proportionality property A p_hat = gamma A (y/N)
    with gamma = 1 exactly when the model has the overall effect.
    """
    opts = opts or SolverOptions()
    table = as_table(y, model)
    if table.total == 0:
        raise ZeroTotal("multinomial fitting needs a positive total count")
    return _solve(model, table, SamplingScheme.MULTINOMIAL, opts)


def fit_augmented(model: RelationalModel, y, scheme: SamplingScheme,
                  opts: SolverOptions | None = None) -> FitResult:
    """Two-branch estimate: the genuine MLE, else the augmented fallback.

    Never raises on zero-containing data; the only data corner the genuine
    fitters reject, a multinomial table with N = 0, maps to the constant
    probability vector flagged degenerate.
    """
    opts = opts or SolverOptions()
    table = as_table(y, model)
    if scheme is SamplingScheme.POISSON:
        return fit_poisson(model, table, opts)
    if table.total == 0:
        return _augmented_multinomial(model, table, iterations=0, degenerate=True)
    return fit_multinomial(model, table, opts)


def mle_exists(model: RelationalModel, y, scheme: SamplingScheme,
               opts: SolverOptions | None = None) -> bool:
    """True iff the constrained likelihood peaks at a strictly positive vector.

    Delegates to the fitter so the answer always agrees with the
    ``existed`` flag a fit would report.
    """
    return fit_augmented(model, y, scheme, opts).existed


def _solve(model: RelationalModel, table: ObservedTable, scheme: SamplingScheme,
           opts: SolverOptions) -> FitResult:
    a = model.design_array
    y = table.counts_array
    total = table.total
    ay = a @ y
    ay_norm = float(np.abs(ay).max())
    gate = opts.tol * (1.0 + ay_norm)
    poisson = scheme is SamplingScheme.POISSON
    has_zero = bool((y == 0).any())
    # relative cell scale: mean count for intensities, 1/I for probabilities
    cell_scale = total / model.n_cells if poisson else 1.0 / model.n_cells
    collapse_floor = opts.existence_threshold * cell_scale
    suspect_floor = math.sqrt(opts.existence_threshold) * cell_scale

    theta = _initial_theta(model, y, float(total) if poisson else 1.0)
    a0 = float(total)

    def objective(th: np.ndarray, a0_: float) -> float:
        delta = np.exp(a.T @ th)
        if poisson:
            return float(ay @ th - delta.sum())
        g1 = ay - a0_ * (a @ delta)
        g2 = total * (1.0 - delta.sum())
        return float(g1 @ g1 + g2 * g2)

    current = objective(theta, a0)
    iterations = 0
    residual = math.inf

    for iterations in range(1, opts.max_iter + 1):
        delta = np.exp(a.T @ theta)
        a_delta = a @ delta
        if poisson:
            g1 = ay - a_delta
            residual = float(np.abs(g1).max())
            converged = residual <= gate
        else:
            g1 = ay - a0 * a_delta
            g2 = 1.0 - delta.sum()
            residual = max(float(np.abs(g1).max()), abs(g2))
            converged = float(np.abs(g1).max()) <= gate and abs(g2) <= opts.tol

        if converged:
            suspicious = has_zero and float(delta.min()) < suspect_floor
            if not suspicious:
                return _finish(model, table, scheme, delta, a0, residual, iterations - 1)

        # Newton step
        try:
            weighted = (a * delta) @ a.T
            if poisson:
                step = np.linalg.solve(weighted, g1)
                step_a0 = 0.0
            else:
                k = len(a_delta)
                m = np.empty((k + 1, k + 1))
                m[:k, :k] = a0 * weighted
                m[:k, k] = a_delta
                m[k, :k] = a_delta
                m[k, k] = 0.0
                full = np.linalg.solve(m, np.append(g1, g2))
                step, step_a0 = full[:k], float(full[k])
        except np.linalg.LinAlgError:
            step = None
            step_a0 = 0.0

        improvement = 0.0
        if step is not None:
            t = 1.0
            for _ in range(opts.max_step_halvings):
                cand_theta = theta + t * step
                cand_a0 = a0 + t * step_a0
                cand = objective(cand_theta, cand_a0)
                better = cand > current if poisson else cand < current
                if not better and poisson and math.isfinite(cand):
                    # near the optimum the likelihood goes float-flat before
                    # the residual meets tolerance; accept on residual descent
                    flat = abs(cand - current) <= 8.0 * _EPS * max(1.0, abs(current))
                    if flat:
                        cand_res = float(
                            np.abs(ay - a @ np.exp(a.T @ cand_theta)).max()
                        )
                        better = cand_res < residual
                if better and math.isfinite(cand):
                    improvement = abs(cand - current)
                    theta, a0, current = cand_theta, cand_a0, cand
                    break
                t *= 0.5

        collapsed = has_zero and float(np.exp(a.T @ theta).min()) < collapse_floor
        if collapsed and improvement < opts.stall_improvement:
            if poisson:
                return _augmented_poisson(model, table, iterations)
            return _augmented_multinomial(model, table, iterations)
        if step is None and improvement == 0.0:
            break

    raise NonConvergence(
        f"{scheme.value} fit stopped after {iterations} iterations "
        f"with residual {residual:.3e} above tolerance {gate:.3e}",
        iterations=iterations,
        residual=residual,
    )


def _finish(model: RelationalModel, table: ObservedTable, scheme: SamplingScheme,
            delta: np.ndarray, a0: float, residual: float, iterations: int) -> FitResult:
    d = model.kernel_array
    y = table.counts_array
    if scheme is SamplingScheme.POISSON:
        if model.df > 0:
            alpha = np.linalg.solve(d @ d.T, d @ (delta - y))
        else:
            alpha = np.zeros(0)
        return FitResult(
            estimate=tuple(float(x) for x in delta),
            lagrange=tuple(float(x) for x in alpha),
            scheme=scheme,
            existed=True,
            kkt_residual=residual,
            iterations=iterations,
        )
    total = table.total
    # multipliers of the probability-scale stationarity system:
    # alpha0 p_hat + D' alpha = N p_hat - y
    basis = np.column_stack([delta] + ([d.T] if model.df > 0 else []))
    coeffs, *_ = np.linalg.lstsq(basis, total * delta - y, rcond=None)
    gamma = _proportionality(model, delta, y / total)
    return FitResult(
        estimate=tuple(float(x) for x in delta),
        lagrange=tuple(float(x) for x in coeffs[1:]),
        scheme=scheme,
        existed=True,
        kkt_residual=residual,
        iterations=iterations,
        alpha0=float(coeffs[0]),
        gamma=gamma,
    )
