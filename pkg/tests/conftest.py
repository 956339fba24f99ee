"""Shared builders for the test suite."""

import numpy as np


def two_subspace_series(n=200, change=100, p=6, sigma=0.0, seed=0):
    """Piecewise rank-1 series: axis e1 before `change`, axis e2 after.

    Built directly (not via the generator) so detection tests do not depend
    on the simulation module.
    """
    rng = np.random.default_rng(seed)
    X = np.zeros((p, n))
    X[0, :change] = rng.standard_normal(change) + 2.0
    X[1, change:] = rng.standard_normal(n - change) + 2.0
    if sigma > 0:
        X += sigma * rng.standard_normal((p, n))
    return X


def three_segment_series(n=300, changes=(100, 200), p=6, sigma=0.0, seed=0):
    """Three orthogonal rank-1 segments on axes e1, e2, e3."""
    rng = np.random.default_rng(seed)
    X = np.zeros((p, n))
    bounds = (0, *changes, n)
    for axis, (a, b) in enumerate(zip(bounds, bounds[1:])):
        X[axis, a:b] = rng.standard_normal(b - a) + 2.0
    if sigma > 0:
        X += sigma * rng.standard_normal((p, n))
    return X
