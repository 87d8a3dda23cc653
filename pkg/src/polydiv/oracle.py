"""Brute-force reference computations for the test suite.

Nothing here uses the closed-form facet rules of :mod:`polydiv.geometry`;
facets are rediscovered from their definition by enumerating point
subsets, which is exponential and capped accordingly.
"""

from __future__ import annotations

import itertools

import numpy as np

from .numerics import DegenerateError, Rng, hyperplane_through

MAX_POINTS = 16
MAX_DIM = 5


def brute_force_facets(points, tol: float = 1e-9) -> list[tuple[int, ...]]:
    """Facets of ``Conv(points)`` as sorted tuples of point indices.

    Every ``d``-subset spanning a hyperplane is extended to all points on
    that hyperplane; the result is a facet iff every other point lies
    strictly on one side.
    """
    pts = np.asarray(points, dtype=float)
    k, d = pts.shape
    if k > MAX_POINTS or d > MAX_DIM:
        raise ValueError(f"oracle limited to {MAX_POINTS} points in R^{MAX_DIM}")
    if np.linalg.matrix_rank(pts[1:] - pts[0]) < d:
        raise DegenerateError("point set is not full-dimensional")
    found: set[tuple[int, ...]] = set()
    for subset in itertools.combinations(range(k), d):
        try:
            c, c0 = hyperplane_through(pts[list(subset)])
        except DegenerateError:
            continue
        s = pts @ c - c0
        on = np.abs(s) <= tol
        rest = s[~on]
        if rest.size and (np.all(rest > tol) or np.all(rest < -tol)):
            found.add(tuple(int(i) for i in np.flatnonzero(on)))
    return sorted(found)


def mc_volume(cell, enclosing_box, rng: Rng, n: int) -> tuple[float, float]:
    """Hit-or-miss volume estimate and its binomial standard error."""
    from .geometry import Location, classify

    if n < 1000:
        raise ValueError("use at least 1000 samples")
    lo, hi = enclosing_box.lo, enclosing_box.hi
    pts = lo + rng.random((n, lo.size)) * (hi - lo)
    hits = classify(cell, pts, tol=0.0) != Location.OUTSIDE
    frac = float(hits.mean())
    vol = enclosing_box.volume
    return frac * vol, vol * np.sqrt(frac * (1 - frac) / n)


def hull_volume(points) -> float:
    """Volume via scipy's Qhull, used only as a cross-check in tests."""
    from scipy.spatial import ConvexHull

    return float(ConvexHull(np.asarray(points, dtype=float)).volume)
