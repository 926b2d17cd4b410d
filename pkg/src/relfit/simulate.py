"""Monte Carlo experiments: sample under an in-model truth, fit, compare.

The engine samples count tables from a truth that satisfies the model
constraints, fits every table through the augmented-estimate path,
collects the three goodness-of-fit statistics, and summarizes how close
their empirical laws come to the chi-squared reference with K degrees of
freedom: Kolmogorov-Smirnov distances, quantiles, and Freedman-Diaconis
histograms.  The fraction of negative likelihood-ratio values and the
fraction of replicates whose fitted total misses the observed total are
reported alongside; both are the expected behavior of models without the
overall effect, not errors.

Replicates draw from per-index derived streams, so a report is bit-exact
reproducible from (config, seed) regardless of execution order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySample,
    InvalidArgument,
    NonConvergence,
    NonPositiveParameter,
    NotInModel,
    NotNormalized,
)
from .gof import chisq_cdf, statistics_for
from .mle import ObservedTable, SolverOptions, fit_augmented
from .model_core import RelationalModel, SamplingScheme
from .rng import Stream, check_seed, stream_for

STATISTIC_NAMES = ("pearson", "lr", "bregman")

_QUANTILES = (0.5, 0.9, 0.95, 0.99)

# switch point between inversion and rejection sampling for Poisson draws
_POISSON_INVERSION_LIMIT = 10.0

_IN_MODEL_TOL = 1e-8
_TOTAL_MATCH_TOL = 1e-6


def sample_poisson(lam, rng: Stream) -> tuple[int, ...]:
    """Independent Poisson draws, one per cell, deterministic given rng."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise DimensionMismatch("lam must be a nonempty vector")
    if not np.isfinite(lam).all() or (lam <= 0).any():
        raise NonPositiveParameter("lam must be strictly positive and finite")
    return tuple(_poisson_draw(float(mean), rng) for mean in lam)


def _poisson_draw(mean: float, rng: Stream) -> int:
    if mean < _POISSON_INVERSION_LIMIT:
        # multiplicative inversion: count uniforms until the running
        # product drops under exp(-mean)
        limit = math.exp(-mean)
        k = 0
        prod = rng.next_float()
        while prod > limit:
            k += 1
            prod *= rng.next_float()
        return k
    # rejection from a logistic envelope, stable for large means
    c = 0.767 - 3.36 / mean
    beta = math.pi / math.sqrt(3.0 * mean)
    alpha = beta * mean
    k = math.log(c) - mean - math.log(beta)
    log_mean = math.log(mean)
    while True:
        u = rng.next_float()
        x = (alpha - math.log((1.0 - u) / u)) / beta
        n = math.floor(x + 0.5)
        if n < 0:
            continue
        v = rng.next_float()
        y = alpha - beta * x
        lhs = y + math.log(v / (1.0 + math.exp(y)) ** 2)
        rhs = k + n * log_mean - math.lgamma(n + 1.0)
        if lhs <= rhs:
            return int(n)


def sample_multinomial(n: int, p, rng: Stream) -> tuple[int, ...]:
    """One table from Mult(n, p) via sequential conditional binomials."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"sample size must be a positive integer, got {n!r}")
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DimensionMismatch("p must be a nonempty vector")
    if not np.isfinite(p).all() or (p <= 0).any():
        raise NonPositiveParameter("p must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-12:
        raise NotNormalized(f"p sums to {p.sum()!r}, not 1")
    counts = [0] * p.size
    remaining = int(n)
    tail = 1.0
    for i in range(p.size - 1):
        if remaining == 0:
            break
        q = min(1.0, max(0.0, float(p[i]) / tail))
        k = _binomial_draw(remaining, q, rng)
        counts[i] = k
        remaining -= k
        tail -= float(p[i])
    counts[-1] += remaining
    return tuple(counts)


def _binomial_draw(n: int, q: float, rng: Stream) -> int:
    """Bin(n, q) by inversion walking outward from the mode.

    Starting at the mode keeps every probability on the path at or below
    the mode mass, so the walk never underflows the way plain from-zero
    inversion does for large n.  One uniform per draw.
    """
    if n == 0 or q <= 0.0:
        return 0
    if q >= 1.0:
        return n
    mode = min(int(math.floor((n + 1) * q)), n)
    log_pm = (math.lgamma(n + 1.0) - math.lgamma(mode + 1.0)
              - math.lgamma(n - mode + 1.0)
              + mode * math.log(q) + (n - mode) * math.log1p(-q))
    pm = math.exp(log_pm)
    u = rng.next_float() - pm
    if u <= 0.0:
        return mode
    ratio = q / (1.0 - q)
    lo_k, lo_p = mode, pm
    hi_k, hi_p = mode, pm
    while True:
        moved = False
        if lo_k > 0:
            lo_p *= lo_k / ((n - lo_k + 1.0) * ratio)
            lo_k -= 1
            u -= lo_p
            if u <= 0.0:
                return lo_k
            moved = True
        if hi_k < n:
            hi_p *= (n - hi_k) * ratio / (hi_k + 1.0)
            hi_k += 1
            u -= hi_p
            if u <= 0.0:
                return hi_k
            moved = True
        if not moved:
            # all mass consumed; u was within an ulp of 1
            return mode


def ks_distance(sample, df: int) -> float:
    """Sup distance between the empirical CDF and the chi-squared CDF."""
    values = np.asarray(sample, dtype=float)
    if values.size == 0:
        raise EmptySample("ks_distance needs at least one value")
    if not np.isfinite(values).all():
        raise InvalidArgument("sample values must be finite")
    if isinstance(df, bool) or not isinstance(df, (int, np.integer)) or df < 1:
        raise InvalidArgument(f"df must be a positive integer, got {df!r}")
    values = np.sort(values)
    n = values.size
    # negative values sit below the law's support, where the CDF is zero
    ref = np.array([chisq_cdf(x, int(df)) if x > 0.0 else 0.0 for x in values])
    grid = np.arange(1, n + 1) / n
    d_plus = float((grid - ref).max())
    d_minus = float((ref - (grid - 1.0 / n)).max())
    return max(d_plus, d_minus)


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment specification.

    ``truth`` must be strictly positive, satisfy the model constraints,
    and for the multinomial scheme sum to one with ``sample_size`` set.
    """

    model: RelationalModel
    scheme: SamplingScheme
    truth: tuple[float, ...]
    replicates: int
    seed: int
    sample_size: int | None = None
    statistics: tuple[str, ...] = STATISTIC_NAMES
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        object.__setattr__(self, "truth", tuple(float(x) for x in self.truth))
        stats = tuple(self.statistics)
        if not stats:
            raise InvalidArgument("at least one statistic must be requested")
        for name in stats:
            if name not in STATISTIC_NAMES:
                raise InvalidArgument(
                    f"unknown statistic {name!r}; valid: {', '.join(STATISTIC_NAMES)}"
                )
        object.__setattr__(self, "statistics", stats)
        check_seed(self.seed)
        if (isinstance(self.replicates, bool)
                or not isinstance(self.replicates, int) or self.replicates < 1):
            raise InvalidArgument("replicates must be a positive integer")
        truth = np.asarray(self.truth, dtype=float)
        if truth.size != self.model.n_cells:
            raise DimensionMismatch(
                f"truth has length {truth.size}, model has {self.model.n_cells} cells"
            )
        if not np.isfinite(truth).all() or (truth <= 0).any():
            raise NonPositiveParameter("truth must be strictly positive")
        if self.scheme is SamplingScheme.MULTINOMIAL:
            if abs(truth.sum() - 1.0) > 1e-12:
                raise NotNormalized(f"truth sums to {truth.sum()!r}, not 1")
            if (self.sample_size is None or isinstance(self.sample_size, bool)
                    or self.sample_size < 1):
                raise InvalidArgument(
                    "multinomial experiments need a positive sample_size"
                )
        if self.model.df > 0:
            violation = float(
                np.abs(self.model.kernel_array @ np.log(truth)).max()
            )
            if violation > _IN_MODEL_TOL:
                raise NotInModel(
                    f"truth violates the model constraints: |D log truth| "
                    f"reaches {violation:.3e}"
                )


@dataclass(frozen=True)
class SimulationReport:
    """Aggregated Monte Carlo results.

    ``samples`` always carries all three statistics in replicate order
    (bulk CSV output has a fixed column set), excluding failed replicates
    (their indices are in ``failure_indices``).  ``ks``, ``quantiles``,
    and ``histograms`` are restricted to the statistics requested in the
    config; ``ks`` is empty when df = 0 (no reference law to compare
    with).  ``existence_failures`` counts replicates served by the
    augmented fallback; ``total_mismatch_fraction`` is the fraction whose
    fitted total misses the observed total beyond rounding.
    """

    scheme: SamplingScheme
    truth: tuple[float, ...]
    sample_size: int | None
    replicates: int
    seed: int
    df: int
    statistics: tuple[str, ...]
    samples: dict[str, tuple[float, ...]]
    existence_failures: int
    failure_indices: tuple[int, ...]
    negative_lr_fraction: float
    total_mismatch_fraction: float
    ks: dict[str, float]
    quantiles: dict[str, dict[str, float]]
    histograms: dict[str, dict[str, tuple[float, ...]]]
    replicate_indices: tuple[int, ...]
    existed: tuple[bool, ...]
    observed_totals: tuple[float, ...]
    fitted_totals: tuple[float, ...]
    runtime_seconds: float


def _histogram(values: np.ndarray) -> dict[str, tuple[float, ...]]:
    # Freedman-Diaconis bin width, capped to keep output bounded
    lo, hi = float(values.min()), float(values.max())
    q75, q25 = np.quantile(values, [0.75, 0.25])
    width = 2.0 * (q75 - q25) / (values.size ** (1.0 / 3.0))
    if width <= 0.0 or hi == lo:
        bins = 1
    else:
        bins = min(512, max(1, int(math.ceil((hi - lo) / width))))
    counts, edges = np.histogram(values, bins=bins)
    return {
        "bin_edges": tuple(float(e) for e in edges),
        "counts": tuple(int(c) for c in counts),
    }


def run_experiment(config: ExperimentConfig) -> SimulationReport:
    """Run the replicate loop and aggregate the report.

    Each replicate samples with its own derived stream, fits through the
    augmented path, and contributes all three statistics computed against
    lam_hat (Poisson) or N p_hat (multinomial).  NonConvergence failures
    are recorded by index and abort the run only past 1% of replicates.
    """
    model = config.model
    truth = np.asarray(config.truth, dtype=float)
    poisson = config.scheme is SamplingScheme.POISSON
    started = time.perf_counter()

    collected: dict[str, list[float]] = {name: [] for name in STATISTIC_NAMES}
    failures: list[int] = []
    max_failures = max(1, config.replicates // 100)
    existence_failures = 0
    total_mismatches = 0
    kept_indices: list[int] = []
    existed_flags: list[bool] = []
    observed_totals: list[float] = []
    fitted_totals: list[float] = []

    for index in range(config.replicates):
        rng = stream_for(config.seed, index)
        if poisson:
            counts = sample_poisson(truth, rng)
        else:
            counts = sample_multinomial(config.sample_size, truth, rng)
        table = ObservedTable(counts)
        try:
            fit = fit_augmented(model, table, config.scheme, config.solver)
        except NonConvergence:
            failures.append(index)
            if len(failures) > max_failures:
                raise NonConvergence(
                    f"{len(failures)} of {index + 1} replicates failed to "
                    f"converge; aborting past the 1% cap "
                    f"(failed indices {failures[:10]}...)",
                    iterations=None,
                    residual=None,
                ) from None
            continue
        if not fit.existed:
            existence_failures += 1
        estimate = fit.estimate_array
        fitted = estimate if poisson else float(table.total) * estimate
        observed_total = float(table.total)
        fitted_total = float(fitted.sum())
        if abs(fitted_total - observed_total) > _TOTAL_MATCH_TOL * (1.0 + observed_total):
            total_mismatches += 1
        pearson, lr, bregman = statistics_for(table.counts_array, fitted)
        collected["pearson"].append(pearson)
        collected["lr"].append(lr)
        collected["bregman"].append(bregman)
        kept_indices.append(index)
        existed_flags.append(fit.existed)
        observed_totals.append(observed_total)
        fitted_totals.append(fitted_total)

    kept = len(collected["pearson"])
    if kept == 0:
        raise NonConvergence("every replicate failed to converge")
    lr_values = np.asarray(collected["lr"])
    negative_lr_fraction = float((lr_values < 0.0).sum()) / kept

    ks: dict[str, float] = {}
    quantiles: dict[str, dict[str, float]] = {}
    histograms: dict[str, dict[str, tuple[float, ...]]] = {}
    for name in config.statistics:
        values = np.asarray(collected[name], dtype=float)
        if model.df >= 1:
            ks[name] = ks_distance(values, model.df)
        quantiles[name] = {
            str(q): float(np.quantile(values, q)) for q in _QUANTILES
        }
        histograms[name] = _histogram(values)

    return SimulationReport(
        scheme=config.scheme,
        truth=config.truth,
        sample_size=config.sample_size,
        replicates=config.replicates,
        seed=config.seed,
        df=model.df,
        statistics=config.statistics,
        samples={name: tuple(collected[name]) for name in STATISTIC_NAMES},
        existence_failures=existence_failures,
        failure_indices=tuple(failures),
        negative_lr_fraction=negative_lr_fraction,
        total_mismatch_fraction=total_mismatches / kept,
        ks=ks,
        quantiles=quantiles,
        histograms=histograms,
        replicate_indices=tuple(kept_indices),
        existed=tuple(existed_flags),
        observed_totals=tuple(observed_totals),
        fitted_totals=tuple(fitted_totals),
        runtime_seconds=time.perf_counter() - started,
    )
