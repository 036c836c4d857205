#!/usr/bin/env python3
"""
Tests for mcs-alloc distance primitives.

Verifies haversine and planar distances, matrix construction and mode checks.
"""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from conftest import random_planar
from mcs_alloc.errors import ModeMismatchError, ParameterError
from mcs_alloc.geo import (
    EARTH_RADIUS_M,
    CoordMode,
    Location,
    build_distance_matrix,
    centroid,
    distance,
)

lats = st.floats(min_value=-80, max_value=80, allow_nan=False)
# keeps triples away from antipodes, where haversine loses precision
lons = st.floats(min_value=-60, max_value=60, allow_nan=False)


def test_distance_examples():
    """Test identity, one degree of longitude and a Pythagorean triple."""
    print("\n[TEST] distance examples")

    a = Location.geographic(5.3, -4.0)
    assert distance(a, a) == 0.0

    one_degree = distance(Location.geographic(0, 0), Location.geographic(0, 1))
    assert abs(one_degree - 111194.93) < 0.01
    assert math.isclose(one_degree, math.pi * EARTH_RADIUS_M / 180, rel_tol=1e-12)

    assert distance(Location.planar(0, 0), Location.planar(3, 4)) == 5.0

    print("  ✓ Distances match closed forms")


def test_mode_mismatch():
    """Mixed coordinate modes are rejected."""
    print("\n[TEST] mode mismatch")

    try:
        distance(Location.planar(0, 0), Location.geographic(0, 0))
        assert False, "expected ModeMismatchError"
    except ModeMismatchError:
        pass

    try:
        build_distance_matrix([Location.planar(0, 0), Location.geographic(0, 0)])
        assert False, "expected ModeMismatchError"
    except ModeMismatchError:
        pass

    print("  ✓ Mixed modes raise")


def test_location_validation():
    """Latitude/longitude ranges and finiteness are enforced."""
    print("\n[TEST] location validation")

    for bad in (lambda: Location.geographic(91, 0), lambda: Location.geographic(0, 181),
                lambda: Location.planar(math.inf, 0), lambda: Location.planar(0, math.nan)):
        try:
            bad()
            assert False, "expected ParameterError"
        except ParameterError:
            pass

    loc = Location.geographic(5.3, -4.0)
    assert (loc.lat, loc.lon) == (5.3, -4.0)
    assert Location.from_dict(loc.to_dict(), CoordMode.GEOGRAPHIC) == loc

    print("  ✓ Out-of-range coordinates raise")


def test_distance_matrix():
    """Matrix entries equal pairwise distance() calls exactly."""
    print("\n[TEST] build_distance_matrix")

    single = build_distance_matrix([Location.planar(1, 1)])
    assert single.entries.shape == (1, 1) and single[0, 0] == 0.0

    pair = build_distance_matrix([Location.planar(0, 0), Location.planar(0, 70)])
    assert pair[0, 1] == 70.0 and pair[1, 0] == 70.0

    rng = np.random.default_rng(3)
    points = [Location.geographic(float(la), float(lo))
              for la, lo in zip(rng.uniform(5.30, 5.33, 5), rng.uniform(-4.03, -4.0, 5))]
    matrix = build_distance_matrix(points)
    for i in range(5):
        for j in range(5):
            assert matrix[i, j] == distance(points[i], points[j])
    matrix.check()

    sub = matrix.submatrix([3, 1])
    assert sub[0, 1] == matrix[3, 1]

    print("  ✓ Matrix is exact, symmetric and metric")


def test_centroid():
    """Centroid is the coordinate mean."""
    print("\n[TEST] centroid")

    c = centroid([Location.planar(0, 0), Location.planar(10, 0), Location.planar(5, 30)])
    assert (c.x, c.y) == (5.0, 10.0)

    print("  ✓ Centroid correct")


@settings(max_examples=200, deadline=None)
@given(lats, lons, lats, lons)
def test_symmetry_property(la1, lo1, la2, lo2):
    """distance(a, b) == distance(b, a)"""
    a, b = Location.geographic(la1, lo1), Location.geographic(la2, lo2)
    assert distance(a, b) == distance(b, a)


@settings(max_examples=200, deadline=None)
@given(lats, lons, lats, lons, lats, lons)
def test_triangle_property(la1, lo1, la2, lo2, la3, lo3):
    """distance(a, c) <= distance(a, b) + distance(b, c) + 1e-6"""
    a, b, c = (Location.geographic(la1, lo1), Location.geographic(la2, lo2),
               Location.geographic(la3, lo3))
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-6


@settings(max_examples=200, deadline=None)
@given(lats, lons, lats, lons, st.floats(-9, 9))
def test_longitude_translation_property(la1, lo1, la2, lo2, shift):
    """Shifting both longitudes by the same offset keeps the distance"""
    before = distance(Location.geographic(la1, lo1), Location.geographic(la2, lo2))
    after = distance(Location.geographic(la1, lo1 + shift), Location.geographic(la2, lo2 + shift))
    assert abs(before - after) < 1e-6


def test_planar_triangle_batch():
    """Random planar matrices pass the metric check."""
    print("\n[TEST] planar metric batch")

    rng = np.random.default_rng(11)
    for _ in range(20):
        build_distance_matrix(random_planar(rng, 8)).check()

    print("  ✓ 20 random planar matrices are metric")


def main():
    """Run all tests."""
    print("\n" + "="*60)
    print("MCS-ALLOC GEO TEST SUITE")
    print("="*60)

    test_distance_examples()
    test_mode_mismatch()
    test_location_validation()
    test_distance_matrix()
    test_centroid()
    test_symmetry_property()
    test_triangle_property()
    test_longitude_translation_property()
    test_planar_triangle_batch()

    print("\n" + "="*60)
    print("ALL TESTS PASSED ✓")
    print("="*60 + "\n")


if __name__ == "__main__":
    main()
