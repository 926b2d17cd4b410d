"""Relational-model structure: design matrix, kernel basis, overall effect.

A relational model attaches one multiplicative effect to each of J subsets
of an I-cell sample space.  Its design matrix A is the 0-1 matrix whose
row j indicates subset j; the model states log(delta) = A' theta, or
equivalently D log(delta) = 0 for any matrix D whose rows span Ker(A).

Rank, kernel, and overall-effect status are computed in exact rational
arithmetic: these are algebraic facts about a 0-1 matrix and floating
point rank decisions are unreliable exactly at the boundaries that matter
(a dependent row, a kernel vector with large integer entries).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd, lcm

import numpy as np

from .errors import (
    DuplicateSubset,
    EmptyColumn,
    IndexOutOfRange,
    InvalidArgument,
    ParseError,
    RankDeficient,
)

# Dense exact elimination; the intended domain is small tables.
MAX_CELLS = 64


class SamplingScheme(enum.Enum):
    """The two sampling schemes: free totals vs a fixed total N."""

    POISSON = "poisson"
    MULTINOMIAL = "multinomial"

    @classmethod
    def parse(cls, text: str) -> "SamplingScheme":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InvalidArgument(
                f"unknown sampling scheme {text!r}; expected 'poisson' or 'multinomial'"
            ) from None


@dataclass(frozen=True)
class RelationalModel:
    """Validated model structure, immutable after construction.

    ``design`` is the J x I matrix A with entries in {0, 1}, full row rank,
    no empty column.  ``kernel_basis`` is a K x I integer matrix D whose
    rows span Ker(A) over the rationals, in canonical form (lowest integer
    terms, first nonzero entry positive, rows ordered by free column).
    ``df`` = K = I - J and ``overall_effect`` records whether the all-ones
    vector lies in the row space of A.
    """

    cell_labels: tuple[str, ...]
    design: tuple[tuple[int, ...], ...]
    kernel_basis: tuple[tuple[int, ...], ...]
    overall_effect: bool
    df: int
    effect_names: tuple[str, ...]

    @property
    def n_cells(self) -> int:
        return len(self.cell_labels)

    @property
    def n_effects(self) -> int:
        return len(self.design)

    @cached_property
    def design_array(self) -> np.ndarray:
        a = np.array(self.design, dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def kernel_array(self) -> np.ndarray:
        # shape (K, I) even when K = 0, so downstream matrix code is uniform
        d = np.array(self.kernel_basis, dtype=float).reshape(self.df, self.n_cells)
        d.setflags(write=False)
        return d


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals.

    Pivots are chosen left to right, taking the first nonzero entry at or
    below the working row (smallest pivot index), which makes the output
    canonical for a given input.
    """
    m = [row[:] for row in rows]
    nrows, ncols = len(m), len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        inv = Fraction(1, 1) / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def _canonical_integer_vector(v: list[Fraction]) -> tuple[int, ...]:
    """Scale a rational vector to integer lowest terms, first nonzero > 0."""
    denom_lcm = lcm(*(x.denominator for x in v)) if v else 1
    ints = [int(x * denom_lcm) for x in v]
    g = gcd(*ints)
    if g > 1:
        ints = [x // g for x in ints]
    first = next((x for x in ints if x != 0), 0)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def _validate_binary_matrix(matrix) -> list[list[Fraction]]:
    rows = [list(row) for row in matrix]
    if not rows or not rows[0]:
        raise InvalidArgument("matrix must be nonempty")
    ncols = len(rows[0])
    for row in rows:
        if len(row) != ncols:
            raise InvalidArgument("matrix rows must all have the same length")
        for x in row:
            if x not in (0, 1):
                raise InvalidArgument(f"matrix entries must be 0 or 1, got {x!r}")
    return [[Fraction(int(x)) for x in row] for row in rows]


def rank_and_kernel(design) -> tuple[int, tuple[tuple[int, ...], ...]]:
    """Exact rank and canonical integer kernel basis of a 0-1 matrix.

    The basis rows span Ker(A) over the rationals.  Each row is reduced to
    lowest integer terms with its first nonzero entry positive; rows are
    ordered by their free-column index.  The output is deterministic for a
    given input.
    """
    rows = _validate_binary_matrix(design)
    ncols = len(rows[0])
    reduced, pivots = _rref(rows)
    rank = len(pivots)
    free_cols = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free_cols:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -reduced[i][f]
        basis.append(_canonical_integer_vector(v))
    return rank, tuple(basis)


def has_overall_effect(design) -> bool:
    """True iff A'x = 1 is exactly solvable, i.e. 1 lies in rowspace(A)."""
    rows = _validate_binary_matrix(design)
    nrows, ncols = len(rows), len(rows[0])
    # augmented system [A' | 1]: consistent iff no pivot lands in the last column
    augmented = [[rows[j][i] for j in range(nrows)] + [Fraction(1)] for i in range(ncols)]
    _, pivots = _rref(augmented)
    return nrows not in pivots


def build_model(cell_labels, effect_subsets, effect_names=None) -> RelationalModel:
    """Validate inputs and assemble a relational model.

    ``effect_subsets`` lists, per effect, the cell indices it covers.  The
    design must have no duplicate subsets, no uncovered cell, and full row
    rank; each subset must be nonempty with in-range, non-repeated indices.
    """
    labels = tuple(str(c) for c in cell_labels)
    n = len(labels)
    if n < 1:
        raise InvalidArgument("a model needs at least one cell")
    if n > MAX_CELLS:
        raise InvalidArgument(f"at most {MAX_CELLS} cells are supported, got {n}")

    subsets = [list(s) for s in effect_subsets]
    if effect_names is None:
        names = tuple(f"effect{j + 1}" for j in range(len(subsets)))
    else:
        names = tuple(str(x) for x in effect_names)
        if len(names) != len(subsets):
            raise InvalidArgument("effect_names and effect_subsets lengths differ")

    seen: dict[frozenset, int] = {}
    design_rows = []
    for j, subset in enumerate(subsets):
        if not subset:
            raise InvalidArgument(f"effect subset {j} is empty")
        for idx in subset:
            if not isinstance(idx, int) or isinstance(idx, bool):
                raise InvalidArgument(f"effect subset {j} has a non-integer index {idx!r}")
            if idx < 0 or idx >= n:
                raise IndexOutOfRange(
                    f"effect subset {j} references cell {idx}, valid range is 0..{n - 1}"
                )
        key = frozenset(subset)
        if len(key) != len(subset):
            raise InvalidArgument(f"effect subset {j} repeats a cell index")
        if key in seen:
            raise DuplicateSubset(
                f"effect subsets {seen[key]} and {j} cover the same cells"
            )
        seen[key] = j
        design_rows.append(tuple(1 if i in key else 0 for i in range(n)))

    if not design_rows:
        raise EmptyColumn("no effect subsets given; every cell is uncovered")
    for i in range(n):
        if all(row[i] == 0 for row in design_rows):
            raise EmptyColumn(f"cell {i} ({labels[i]!r}) belongs to no effect subset")

    rank, kernel = rank_and_kernel(design_rows)
    if rank < len(design_rows):
        raise RankDeficient(
            f"design rows are linearly dependent (rank {rank} < {len(design_rows)} rows)"
        )

    return RelationalModel(
        cell_labels=labels,
        design=tuple(design_rows),
        kernel_basis=kernel,
        overall_effect=has_overall_effect(design_rows),
        df=n - rank,
        effect_names=names,
    )


def model_to_json(model: RelationalModel) -> str:
    """Canonical JSON form; ``model_from_json`` round-trips it bit-exactly."""
    subsets = [
        [i for i in range(model.n_cells) if row[i] == 1] for row in model.design
    ]
    obj = {
        "cells": list(model.cell_labels),
        "effects": [
            {"name": name, "cells": cells}
            for name, cells in zip(model.effect_names, subsets)
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def model_from_json(text: str) -> RelationalModel:
    """Parse the model file format and validate via ``build_model``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in model file: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError("model file must hold a JSON object")
    if "cells" not in obj or "effects" not in obj:
        raise ParseError("model file needs 'cells' and 'effects' keys")
    cells = obj["cells"]
    effects = obj["effects"]
    if not isinstance(cells, list) or not all(isinstance(c, str) for c in cells):
        raise ParseError("'cells' must be a list of strings")
    if not isinstance(effects, list):
        raise ParseError("'effects' must be a list")
    subsets, names = [], []
    for j, entry in enumerate(effects):
        if not isinstance(entry, dict) or "cells" not in entry:
            raise ParseError(f"effect {j} must be an object with a 'cells' list")
        subset = entry["cells"]
        if not isinstance(subset, list):
            raise ParseError(f"effect {j}: 'cells' must be a list of cell indices")
        subsets.append(subset)
        names.append(str(entry.get("name", f"effect{j + 1}")))
    return build_model(cells, subsets, effect_names=names)


def load_model(path) -> RelationalModel:
    """Read and validate a model file."""
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read())
