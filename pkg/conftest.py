"""Shared test setup: make the src/ layout importable without an install."""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))


def random_planar(rng: np.random.Generator, count: int, extent: float = 1000.0):
    """`count` planar locations uniform over an extent x extent square"""
    from mcs_alloc.geo import Location

    return [Location.planar(float(x), float(y)) for x, y in rng.uniform(0, extent, size=(count, 2))]
