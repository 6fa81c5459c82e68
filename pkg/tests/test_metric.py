import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxslope.errors import DimensionMismatchError
from maxslope.metric import Point, SpaceDescriptor, distance, squared_distance

from conftest import pt


finite_coord = st.floats(min_value=-1e6, max_value=1e6,
                         allow_nan=False, allow_infinity=False)


class TestPoint:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            Point((0.0, float("nan")))

    def test_rejects_inf(self):
        with pytest.raises(ValueError):
            Point((float("inf"),))

    def test_coords_coerced_to_float(self):
        p = Point((1, 2))
        assert p.coords == (1.0, 2.0)
        assert p.dim == 2


class TestSpaceDescriptor:
    def test_default_base_point_is_origin(self):
        sp = SpaceDescriptor(3)
        assert sp.base_point.coords == (0.0, 0.0, 0.0)

    def test_weights_require_weighted_kind(self):
        with pytest.raises(ValueError):
            SpaceDescriptor(2, weights=(1.0, 2.0))

    def test_weighted_needs_matching_length(self):
        with pytest.raises(ValueError):
            SpaceDescriptor(2, metric_kind="diagonal_weighted", weights=(1.0,))

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            SpaceDescriptor(1, metric_kind="diagonal_weighted", weights=(0.0,))

    def test_dimension_positive(self):
        with pytest.raises(ValueError):
            SpaceDescriptor(0)

    def test_roundtrip_dict(self):
        sp = SpaceDescriptor(2, metric_kind="diagonal_weighted", weights=(4.0, 1.0),
                             base_point=pt(1.0, 2.0))
        assert SpaceDescriptor.from_dict(sp.to_dict()) == sp


class TestDistance:
    def test_identity(self, plane):
        assert distance(plane, pt(0, 0), pt(0, 0)) == 0.0

    def test_pythagorean(self, plane):
        assert distance(plane, pt(0, 0), pt(3, 4)) == 5.0

    def test_weighted(self, weighted_plane):
        # sqrt(4 * 1^2 + 1 * 0^2) = 2
        assert distance(weighted_plane, pt(0, 0), pt(1, 0)) == 2.0

    def test_squared_identity(self, plane):
        assert squared_distance(plane, pt(1, 1), pt(1, 1)) == 0.0

    def test_squared_pythagorean(self, plane):
        assert squared_distance(plane, pt(0, 0), pt(3, 4)) == 25.0

    def test_squared_weighted(self, weighted_plane):
        # 4 * 1 + 1 * 1 = 5
        assert squared_distance(weighted_plane, pt(0, 0), pt(1, 1)) == 5.0

    def test_dimension_mismatch(self, plane):
        with pytest.raises(DimensionMismatchError):
            distance(plane, pt(0, 0), pt(0, 0, 0))


@settings(max_examples=200, deadline=None)
@given(st.lists(finite_coord, min_size=6, max_size=6))
def test_triangle_inequality(coords):
    sp = SpaceDescriptor(2, metric_kind="diagonal_weighted", weights=(4.0, 1.0))
    x, y, z = pt(*coords[0:2]), pt(*coords[2:4]), pt(*coords[4:6])
    lhs = abs(distance(sp, x, z) - distance(sp, x, y))
    assert lhs <= distance(sp, y, z) + 1e-7 * max(1.0, lhs)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite_coord, min_size=4, max_size=4))
def test_symmetry_and_square_consistency(coords):
    sp = SpaceDescriptor(2)
    x, y = pt(*coords[0:2]), pt(*coords[2:4])
    d_xy, d_yx = distance(sp, x, y), distance(sp, y, x)
    assert d_xy == d_yx
    sq = squared_distance(sp, x, y)
    assert math.isclose(sq, d_xy * d_xy, rel_tol=1e-12, abs_tol=1e-300)
