"""Named shapes and seeded random polygonal regions for tests and the CLI."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull

from .geometry import PointSet, PolygonalRegion

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]

NAMED_SHAPES = {
    "square": [SQUARE],
    "rect": [[(0, 0), (2, 0), (2, 1), (0, 1)]],
    "triangle": [[(0, 0), (1, 0), (0, 1)]],
    "L": [[(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]],
    "holed": [[(0, 0), (3, 0), (3, 3), (0, 3)], [(1, 1), (1, 2), (2, 2), (2, 1)]],
    "two_squares": [SQUARE, [(2, 0), (3, 0), (3, 1), (2, 1)]],
}


def named_shape(name: str) -> PolygonalRegion:
    try:
        return PolygonalRegion.from_loops(NAMED_SHAPES[name])
    except KeyError:
        raise KeyError(f"unknown shape {name!r}; known: {', '.join(sorted(NAMED_SHAPES))}") from None


def translated(A: PolygonalRegion, offset) -> PolygonalRegion:
    off = np.asarray(offset, dtype=float)
    return PolygonalRegion.from_loops([lp + off for lp in A.loops])


def random_convex(rng: np.random.Generator, n: int = 8, radius: float = 1.0, center=(0.0, 0.0)) -> PolygonalRegion:
    """Convex hull of random points in a disk."""
    while True:
        r = radius * np.sqrt(rng.random(n))
        a = rng.uniform(0, 2 * math.pi, n)
        pts = np.column_stack([r * np.cos(a), r * np.sin(a)]) + np.asarray(center)
        hull = ConvexHull(pts)
        if len(hull.vertices) >= 3 and hull.volume > 0.05 * radius * radius:
            return PolygonalRegion.from_loops([pts[hull.vertices]])


def random_star(rng: np.random.Generator, n: int = 9, radius: float = 1.0, center=(0.0, 0.0)) -> PolygonalRegion:
    """Star-shaped polygon with alternating radii, so it has reflex vertices."""
    a = np.linspace(0, 2 * math.pi, n, endpoint=False) + rng.uniform(-0.3, 0.3, n) * (math.pi / n)
    r = radius * np.where(np.arange(n) % 2 == 0, rng.uniform(0.75, 1.0, n), rng.uniform(0.3, 0.55, n))
    pts = np.column_stack([r * np.cos(a), r * np.sin(a)]) + np.asarray(center)
    return PolygonalRegion.from_loops([pts])


def random_holed(rng: np.random.Generator, radius: float = 1.0, center=(0.0, 0.0)) -> PolygonalRegion:
    """Convex outer loop with a smaller convex hole well inside it."""
    outer = random_convex(rng, 10, radius, center)
    c = np.asarray(center, dtype=float)
    # a hole inside the inscribed disk of the outer loop
    lp = outer.loops[0]
    d = lp - np.roll(lp, 1, axis=0)
    n = np.column_stack([d[:, 1], -d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]
    inradius = float(np.min(((lp - c) * n).sum(axis=1)))
    if inradius <= 0.1 * radius:
        return random_holed(rng, radius, center)
    hole = random_convex(rng, 6, 0.6 * inradius, c)
    return PolygonalRegion.from_loops([lp, hole.loops[0][::-1]])


def random_disconnected(rng: np.random.Generator, radius: float = 1.0) -> PolygonalRegion:
    """Two convex pieces far enough apart not to touch."""
    a = random_convex(rng, 7, 0.5 * radius, (-0.6 * radius, 0.0))
    b = random_convex(rng, 7, 0.5 * radius, (0.6 * radius, 0.0))
    a_max = a.vertices[:, 0].max()
    b_min = b.vertices[:, 0].min()
    if b_min - a_max < 0.05 * radius:
        b = translated(b, (a_max - b_min + 0.1 * radius, 0.0))
    return PolygonalRegion.from_loops([*a.loops, *b.loops])


KINDS = ("convex", "reflex", "holed", "disconnected")


def random_region(rng: np.random.Generator, kind: str, radius: float = 1.0) -> PolygonalRegion:
    if kind == "convex":
        return random_convex(rng, int(rng.integers(3, 12)), radius)
    if kind == "reflex":
        return random_star(rng, 2 * int(rng.integers(3, 7)), radius)
    if kind == "holed":
        return random_holed(rng, radius)
    if kind == "disconnected":
        return random_disconnected(rng, radius)
    raise ValueError(f"unknown region kind {kind!r}")


def random_points(rng: np.random.Generator, n: int, radius: float) -> PointSet:
    r = radius * np.sqrt(rng.random(n))
    a = rng.uniform(0, 2 * math.pi, n)
    return PointSet(np.column_stack([r * np.cos(a), r * np.sin(a)]))
