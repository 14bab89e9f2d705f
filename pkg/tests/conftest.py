import pytest
from hypothesis import strategies as st

from honestflow import BoundaryRule, IntervalUnion, PiecewiseDensity


def dyadics(lo=-8.0, hi=8.0, denom=16):
    """Exactly representable floats lo..hi on a 1/denom grid.

    Group laws (shift, reflect, window splitting) hold exactly in floating
    point on such grids, so property tests can assert equality instead of
    closeness.
    """
    lo_i, hi_i = int(lo * denom), int(hi * denom)
    return st.integers(min_value=lo_i, max_value=hi_i).map(lambda k: k / denom)


@pytest.fixture
def unit_ladder():
    return IntervalUnion("affine", start=0.0, spacing=2.0, length=1.0)


@pytest.fixture
def geometric_ladder():
    return IntervalUnion("geometric", start=0.0, spacing=3.0, length=1.0, ratio=0.5)


@pytest.fixture
def shift_rule():
    return BoundaryRule("shift", scale=1.0)


@pytest.fixture
def unit_box(unit_ladder):
    return PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, 1.0)])


@pytest.fixture
def geo_box(geometric_ladder):
    return PiecewiseDensity.from_pieces(geometric_ladder, [(0.0, 1.0, 1.0)])
