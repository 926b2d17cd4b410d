import pytest

from relfit import build_model

import oracle_constants as oc


@pytest.fixture(scope="session")
def crab_model():
    """Three cells, effects {0,2} and {1,2}, kernel (1,1,-1), no overall effect."""
    return build_model(oc.CRAB_CELLS, oc.CRAB_SUBSETS, effect_names=("fish", "sugarcane"))


@pytest.fixture(scope="session")
def independence_model():
    # 2x2 table as cells (11, 12, 21, 22); rows row1, row2 plus column
    # col1 span rank 3, kernel (1, -1, -1, 1), overall effect present.
    return build_model(
        ("n11", "n12", "n21", "n22"),
        ((0, 1), (2, 3), (0, 2)),
        effect_names=("row1", "row2", "col1"),
    )


@pytest.fixture(scope="session")
def saturated2_model():
    return build_model(("a", "b"), ((0,), (1,)))


@pytest.fixture(scope="session")
def saturated3_model():
    return build_model(("a", "b", "c"), ((0,), (1,), (2,)))


@pytest.fixture(scope="session")
def ones_row_model():
    # Explicit all-ones effect; kernel (1, -1, 0).
    return build_model(("a", "b", "c"), ((0, 1, 2), (0, 1)))
