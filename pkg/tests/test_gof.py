import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from relfit import (
    DimensionMismatch,
    InvalidArgument,
    NonPositiveFitted,
    SamplingScheme,
    bregman_stat,
    chisq_cdf,
    chisq_sf,
    fit_poisson,
    gof_test,
    lr_stat,
    pearson_stat,
    statistics_for,
)
from relfit.gof import _tail_probability

import oracle_constants as oc


def test_crab_poisson_statistics_frozen(crab_model):
    report = gof_test(crab_model, oc.CRAB_Y, SamplingScheme.POISSON)
    assert abs(report.pearson - oc.CRAB_PEARSON) <= 1e-9
    assert abs(report.lr - oc.CRAB_LR) <= 1e-6
    assert abs(report.bregman - oc.CRAB_BREGMAN) <= 1e-9
    assert report.df == 1
    assert abs(report.p_pearson - oc.SF_CRAB_PEARSON_1) <= 1e-9
    assert abs(report.p_bregman - oc.SF_CRAB_BREGMAN_1) <= 1e-9
    # Negative statistic: all upper-tail mass lies above it.
    assert report.p_lr == 1.0
    assert report.lr_reference_supported is False
    assert report.existed is True
    assert report.observed_total == 49.0
    assert abs(report.fitted_total - sum(oc.CRAB_LAMBDA_HAT)) <= 1e-7


def test_crab_multinomial_statistics_frozen(crab_model):
    report = gof_test(crab_model, oc.CRAB_Y, SamplingScheme.MULTINOMIAL)
    assert abs(report.pearson - oc.CRAB_MULT_PEARSON) <= 1e-6
    assert abs(report.lr - oc.CRAB_MULT_LR) <= 1e-6
    assert abs(report.bregman - oc.CRAB_MULT_LR) <= 1e-6
    assert report.lr_reference_supported is True
    assert abs(report.fitted_total - 49.0) <= 1e-8


def test_feasible_empirical_distribution_gives_zero(crab_model):
    # (3, 10, 2)/15 satisfies p1 p2 = p3, so the fit is the data itself.
    report = gof_test(crab_model, (3, 10, 2), SamplingScheme.MULTINOMIAL)
    assert abs(report.pearson) <= 1e-8
    assert abs(report.lr) <= 1e-8
    assert abs(report.bregman) <= 1e-8


def test_saturated_positive_table(saturated2_model):
    report = gof_test(saturated2_model, (3, 5), SamplingScheme.POISSON)
    assert report.df == 0
    assert abs(report.pearson) <= 1e-10
    assert abs(report.lr) <= 1e-10
    assert abs(report.bregman) <= 1e-10
    assert report.p_pearson == 1.0 and report.p_lr == 1.0 and report.p_bregman == 1.0
    assert type(report.lr) is float and type(report.bregman) is float


def test_saturated_augmented_branch(saturated2_model):
    # (0, 5) has no MLE; statistics run against the augmented value (2.5, 2.5).
    report = gof_test(saturated2_model, (0, 5), SamplingScheme.POISSON)
    assert report.existed is False
    assert abs(report.pearson - 5.0) <= 1e-12
    assert abs(report.lr - 10.0 * math.log(2.0)) <= 1e-12
    assert abs(report.bregman - report.lr) <= 1e-12
    # df = 0 with a nonzero statistic: no upper-tail mass left.
    assert report.p_pearson == 0.0


def test_lr_flag_depends_on_scheme_and_overall_effect(crab_model, ones_row_model):
    assert gof_test(crab_model, (5, 8, 40), SamplingScheme.POISSON).lr_reference_supported is False
    assert gof_test(crab_model, (5, 8, 40), SamplingScheme.MULTINOMIAL).lr_reference_supported is True
    assert gof_test(ones_row_model, (5, 8, 40), SamplingScheme.POISSON).lr_reference_supported is True


def test_gof_reuses_supplied_fit(crab_model):
    fit = fit_poisson(crab_model, oc.CRAB_Y)
    report = gof_test(crab_model, oc.CRAB_Y, SamplingScheme.POISSON, fit=fit)
    assert abs(report.pearson - oc.CRAB_PEARSON) <= 1e-9


def test_statistic_functions_direct():
    u = np.array([1.0, 4.0, 0.0])
    v = np.array([2.0, 3.0, 1.0])
    x2 = (1 - 2) ** 2 / 2 + (4 - 3) ** 2 / 3 + 1.0
    g2 = 2 * (math.log(0.5) + 4 * math.log(4 / 3))
    assert abs(pearson_stat(u, v) - x2) <= 1e-14
    assert abs(lr_stat(u, v) - g2) <= 1e-14
    assert abs(bregman_stat(u, v) - (g2 + 2 * (6 - 5))) <= 1e-14
    assert statistics_for((0, 0), (0.0, 0.0)) == (0.0, 0.0, 0.0)


def test_statistic_input_validation():
    with pytest.raises(DimensionMismatch):
        pearson_stat((1, 2), (1, 2, 3))
    with pytest.raises(NonPositiveFitted):
        pearson_stat((1, 2), (1.0, 0.0))
    with pytest.raises(NonPositiveFitted):
        bregman_stat((1, 2), (1.0, -2.0))
    with pytest.raises(InvalidArgument):
        lr_stat((1, float("nan")), (1.0, 2.0))


def test_chisq_sf_frozen_grid():
    for (x, k), expected in oc.CHISQ_SF_GRID.items():
        got = chisq_sf(x, k)
        assert abs(got - expected) <= 1e-10, (x, k)
        assert abs(got - expected) <= 1e-8 * expected, (x, k)


def test_chisq_sf_against_scipy_across_method_boundary():
    # The implementation switches from series to continued fraction at
    # x = k + 1; scan a band straddling that point plus wide tails.
    for k in (1, 2, 3, 5, 10, 50, 200):
        xs = [0.25 * k, 0.5 * k, 0.9 * k, float(k), k + 0.5, k + 1.0, k + 1.5, 2.0 * k, 5.0 * k]
        for x in xs:
            if x <= 0 or x > 1000.0:
                continue
            expected = scipy.stats.chi2.sf(x, k)
            got = chisq_sf(x, k)
            assert abs(got - expected) <= 1e-12, (x, k)
            if expected > 0:
                assert abs(got - expected) <= 1e-8 * expected, (x, k)


def test_chisq_sf_properties():
    assert chisq_sf(0.0, 1) == 1.0
    assert abs(chisq_sf(3.8415, 1) - 0.05) <= 1e-3
    xs = np.linspace(0.0, 60.0, 121)
    for k in (1, 3, 10):
        values = [chisq_sf(float(x), k) for x in xs]
        assert all(a > b for a, b in zip(values, values[1:]))
        for x in (0.5, 4.0, 25.0):
            assert abs(chisq_sf(x, k) + chisq_cdf(x, k) - 1.0) <= 1e-12
    assert chisq_cdf(0.0, 4) == 0.0


def test_chisq_sf_argument_validation():
    with pytest.raises(InvalidArgument):
        chisq_sf(-0.5, 1)
    with pytest.raises(InvalidArgument):
        chisq_sf(float("inf"), 1)
    with pytest.raises(InvalidArgument):
        chisq_sf(1.0, 0)
    with pytest.raises(InvalidArgument):
        chisq_sf(1.0, 2.0)
    with pytest.raises(InvalidArgument):
        chisq_sf(1.0, True)


def test_tail_probability_conventions():
    assert _tail_probability(0.0, 0) == 1.0
    assert _tail_probability(0.5, 0) == 0.0
    assert _tail_probability(-3.0, 2) == 1.0
    assert _tail_probability(0.0, 2) == 1.0


positive = st.floats(min_value=0.25, max_value=32.0, allow_nan=False)
nonnegative = st.one_of(st.just(0.0), st.floats(min_value=0.0625, max_value=32.0))


@given(
    st.lists(st.tuples(nonnegative, positive), min_size=1, max_size=8),
)
@settings(max_examples=300, deadline=None)
def test_statistic_identity_property(pairs):
    """B = G^2 + 2 (fitted total - observed total); B and X^2 never negative;
    matching totals collapse B onto G^2."""
    u = np.array([a for a, _ in pairs])
    v = np.array([b for _, b in pairs])
    x2, g2, b = statistics_for(u, v)
    assert x2 >= 0.0
    assert b >= 0.0
    assert abs(b - (g2 + 2.0 * (v.sum() - u.sum()))) <= 1e-12
    if u.sum() > 0:
        matched = v * (u.sum() / v.sum())
        _, g2m, bm = statistics_for(u, matched)
        assert abs(bm - g2m) <= 1e-12
    # A perfect fit gives exactly zero everywhere.
    if np.all(u > 0):
        assert statistics_for(u, u.copy()) == (0.0, 0.0, 0.0)
