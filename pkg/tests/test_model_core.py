import json
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relfit import (
    DuplicateSubset,
    EmptyColumn,
    IndexOutOfRange,
    InvalidArgument,
    ParseError,
    RankDeficient,
    SamplingScheme,
    build_model,
    model_from_json,
    model_to_json,
)
from relfit.model_core import MAX_CELLS, has_overall_effect, load_model, rank_and_kernel


def test_crab_structure(crab_model):
    m = crab_model
    assert m.n_cells == 3
    assert m.n_effects == 2
    assert m.df == 1
    assert m.overall_effect is False
    assert m.design == ((1, 0, 1), (0, 1, 1))
    assert m.kernel_basis == ((1, 1, -1),)


def test_independence_structure(independence_model):
    m = independence_model
    assert m.df == 1
    assert m.overall_effect is True
    assert m.kernel_basis == ((1, -1, -1, 1),)


def test_saturated_structure(saturated2_model, saturated3_model):
    assert saturated2_model.df == 0
    assert saturated2_model.kernel_basis == ()
    assert saturated2_model.overall_effect is True
    assert saturated3_model.df == 0
    assert saturated3_model.overall_effect is True


def test_ones_row_structure(ones_row_model):
    assert ones_row_model.overall_effect is True
    assert ones_row_model.df == 1
    assert ones_row_model.kernel_basis == ((1, -1, 0),)


def test_design_and_kernel_arrays_read_only(crab_model):
    a = crab_model.design_array
    d = crab_model.kernel_array
    assert a.shape == (2, 3)
    assert d.shape == (1, 3)
    with pytest.raises((ValueError, RuntimeError)):
        a[0, 0] = 5
    with pytest.raises((ValueError, RuntimeError)):
        d[0, 0] = 5


def test_kernel_orthogonal_to_design(crab_model, independence_model, ones_row_model):
    for m in (crab_model, independence_model, ones_row_model):
        prod = m.design_array @ m.kernel_array.T
        assert np.all(prod == 0)


def test_rank_and_kernel_rational_exactness():
    # A dependent fourth row must reduce the rank, and the kernel must be
    # integer in lowest terms with positive leading entry.
    rank, kernel = rank_and_kernel([(1, 1, 0, 0), (0, 0, 1, 1), (1, 0, 1, 0)])
    assert rank == 3
    assert kernel == ((1, -1, -1, 1),)
    rank, _ = rank_and_kernel([(1, 1, 0, 0), (0, 0, 1, 1), (1, 0, 1, 0), (0, 1, 0, 1)])
    assert rank == 3


def test_has_overall_effect_cases():
    assert has_overall_effect([(1, 0, 1), (0, 1, 1)]) is False
    assert has_overall_effect([(1, 1, 1), (1, 1, 0)]) is True
    # Disjoint cover: the sum of the rows is the ones vector.
    assert has_overall_effect([(1, 1, 0, 0), (0, 0, 1, 1)]) is True


def test_sampling_scheme_parse():
    assert SamplingScheme.parse("poisson") is SamplingScheme.POISSON
    assert SamplingScheme.parse(" Multinomial ") is SamplingScheme.MULTINOMIAL
    with pytest.raises(InvalidArgument):
        SamplingScheme.parse("gaussian")


def test_build_model_validation_errors():
    with pytest.raises(InvalidArgument):
        build_model((), ())
    with pytest.raises(InvalidArgument):
        build_model([str(i) for i in range(MAX_CELLS + 1)], [(0,)])
    with pytest.raises(InvalidArgument):
        build_model(("a", "b"), ((0,), ()))
    with pytest.raises(InvalidArgument):
        build_model(("a", "b"), ((0, 0), (1,)))
    with pytest.raises(InvalidArgument):
        build_model(("a", "b"), ((0, 1.0),))
    with pytest.raises(IndexOutOfRange):
        build_model(("a", "b"), ((0, 2),))
    with pytest.raises(DuplicateSubset):
        build_model(("a", "b"), ((0, 1), (1, 0)))
    with pytest.raises(EmptyColumn):
        build_model(("a", "b"), ())
    with pytest.raises(EmptyColumn):
        build_model(("a", "b", "c"), ((0, 1),))
    with pytest.raises(RankDeficient):
        build_model(
            ("n11", "n12", "n21", "n22"),
            ((0, 1), (2, 3), (0, 2), (1, 3)),
        )
    with pytest.raises(InvalidArgument):
        build_model(("a", "b"), ((0,), (1,)), effect_names=("only_one",))


def test_json_round_trip(crab_model):
    text = model_to_json(crab_model)
    again = model_from_json(text)
    assert again == crab_model
    payload = json.loads(text)
    assert payload["cells"] == list(crab_model.cell_labels)
    assert payload["effects"][0]["name"] == "fish"
    assert payload["effects"][0]["cells"] == [0, 2]


def test_load_model(tmp_path, crab_model):
    path = tmp_path / "m.json"
    path.write_text(model_to_json(crab_model))
    assert load_model(path) == crab_model


@pytest.mark.parametrize(
    "text",
    [
        "not json at all {",
        '{"effects": []}',
        '{"cells": ["a"], "effects": [{"name": "x"}]}',
        '{"cells": ["a"], "effects": [{"name": "x", "cells": "0"}]}',
        '{"cells": "ab", "effects": []}',
        "[1, 2, 3]",
    ],
)
def test_model_from_json_rejects_malformed(text):
    with pytest.raises(ParseError):
        model_from_json(text)


def _random_design(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    j = draw(st.integers(min_value=1, max_value=n))
    rows = draw(
        st.lists(
            st.lists(st.booleans(), min_size=n, max_size=n).map(tuple),
            min_size=j,
            max_size=j,
        )
    )
    return [tuple(int(b) for b in row) for row in rows]


@given(st.data())
@settings(max_examples=200, deadline=None)
def test_rank_plus_kernel_dimension(data):
    """For any 0/1 matrix, rank + dim Ker = number of columns and the
    kernel rows are exactly orthogonal to every design row."""
    rows = _random_design(data.draw)
    n = len(rows[0])
    rank, kernel = rank_and_kernel(rows)
    assert rank + len(kernel) == n
    a = np.array(rows, dtype=np.int64)
    for vec in kernel:
        assert np.all(a @ np.array(vec, dtype=np.int64) == 0)
        g = 0
        for entry in vec:
            g = gcd(g, abs(entry))
        nonzero = [e for e in vec if e != 0]
        assert g == 1 and nonzero[0] > 0


@given(st.data())
@settings(max_examples=100, deadline=None)
def test_kernel_invariant_under_cell_permutation(data):
    """Relabeling cells permutes kernel columns; df and the overall-effect
    flag cannot change."""
    rows = _random_design(data.draw)
    n = len(rows[0])
    perm = data.draw(st.permutations(range(n)))
    permuted = [tuple(row[perm[i]] for i in range(n)) for row in rows]
    rank1, kernel1 = rank_and_kernel(rows)
    rank2, kernel2 = rank_and_kernel(permuted)
    assert rank1 == rank2
    assert len(kernel1) == len(kernel2)
    assert has_overall_effect(rows) == has_overall_effect(permuted)
    # Same subspace: each permuted original kernel row must be annihilated
    # by the permuted design and lie in the span of kernel2.
    if kernel1:
        d2 = np.array(kernel2, dtype=float)
        for vec in kernel1:
            moved = np.array([vec[perm[i]] for i in range(n)], dtype=float)
            coeffs, residual, *_ = np.linalg.lstsq(d2.T, moved, rcond=None)
            assert np.allclose(d2.T @ coeffs, moved, atol=1e-9)
