"""Morse theory on polygonal regions for affine and radial functions.

A boundary point x is critical for f when -df(x) lies in the normal cone of
the region at x. Convex vertices count +1, reflex vertices -1; the minimum
of a radial function inside the region and the feet of perpendiculars on
edges (seen from outside) count +1.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
import shapely

from .errors import CriticalValue, NotMorse
from .geometry import (ANGLE_TOL, LENGTH_TOL, PolygonalRegion, contains_points,
                       euler_combinatorial, normal_angle, wrap_angle, wrap_signed)


@dataclass(frozen=True)
class MorseFunction:
    kind: str
    u: tuple = (1.0, 0.0)
    center: tuple = (0.0, 0.0)

    @classmethod
    def affine(cls, u) -> "MorseFunction":
        if math.hypot(u[0], u[1]) == 0.0:
            raise ValueError("affine Morse function needs a nonzero covector")
        return cls("affine", u=(float(u[0]), float(u[1])))

    @classmethod
    def radial(cls, center) -> "MorseFunction":
        return cls("radial", center=(float(center[0]), float(center[1])))

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if self.kind == "affine":
            return pts @ np.asarray(self.u)
        d = pts - np.asarray(self.center)
        return 0.5 * (d * d).sum(axis=1)

    def neg_gradient(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if self.kind == "affine":
            return np.broadcast_to(-np.asarray(self.u), pts.shape)
        return np.asarray(self.center) - pts


@dataclass(frozen=True)
class CriticalRecord:
    location: tuple
    stratum: str
    sign: int
    value: float


@dataclass
class MorseReport:
    ok: bool
    problems: list

    def __bool__(self) -> bool:
        return self.ok


def _vertex_cones(A: PolygonalRegion):
    """(vertex, arc start, arc sweep, sign) for every vertex."""
    a0, a1 = A.edges
    th_out = np.array([normal_angle(d) for d in (a1 - a0)])
    out = []
    for k, v in enumerate(A.vertices):
        idx = np.flatnonzero(A.loop_index == A.loop_index[k])
        prev = idx[(k - idx[0] - 1) % len(idx)]
        ext = A.exterior_angles[k]
        if ext > 0:
            out.append((v, th_out[prev], ext, 1))
        else:
            out.append((v, th_out[k], -ext, -1))
    return out


def is_morse_on(f: MorseFunction, A: PolygonalRegion, tol: float = ANGLE_TOL) -> MorseReport:
    """Check that f has only nondegenerate critical points on every stratum of A."""
    problems = []
    for k, (v, start, sweep, _) in enumerate(_vertex_cones(A)):
        g = f.neg_gradient(v)[0]
        if math.hypot(g[0], g[1]) <= LENGTH_TOL:
            problems.append(f"vertex {k} is the centre of f")
            continue
        th = math.atan2(g[1], g[0])
        d = min(abs(wrap_signed(th - start)), abs(wrap_signed(th - start - sweep)))
        if d <= tol:
            problems.append(f"-df at vertex {k} is within {d:.3g} rad of a normal-cone edge")
    a0, a1 = A.edges
    if f.kind == "affine":
        u = np.asarray(f.u) / math.hypot(*f.u)
        for k, d in enumerate(a1 - a0):
            s = abs(float(d @ u)) / math.hypot(d[0], d[1])
            if s <= math.sin(tol):
                problems.append(f"f is constant along edge {k}")
    else:
        p = np.asarray(f.center)
        for k, (s0, s1) in enumerate(zip(a0, a1)):
            d = s1 - s0
            L = math.hypot(d[0], d[1])
            dist = abs(d[0] * (p[1] - s0[1]) - d[1] * (p[0] - s0[0])) / L
            s = float((p - s0) @ d) / (L * L)
            if dist <= LENGTH_TOL and -1e-12 <= s <= 1 + 1e-12:
                problems.append(f"centre lies on edge {k}")
            elif dist <= LENGTH_TOL:
                problems.append(f"centre lies on the line of edge {k}")
    return MorseReport(not problems, problems)


def critical_points(f: MorseFunction, A: PolygonalRegion, tol: float = ANGLE_TOL) -> list[CriticalRecord]:
    """Signed critical points of f on the strata of A, sorted by value."""
    rep = is_morse_on(f, A, tol)
    if not rep:
        raise NotMorse("; ".join(rep.problems))
    recs = []
    for v, start, sweep, sign in _vertex_cones(A):
        g = f.neg_gradient(v)[0]
        th = wrap_angle(math.atan2(g[1], g[0]))
        if wrap_angle(th - start) <= sweep:
            recs.append(CriticalRecord((float(v[0]), float(v[1])), "vertex", sign, float(f(v)[0])))
    if f.kind == "radial":
        p = np.asarray(f.center)
        if contains_points(A, p)[0]:
            recs.append(CriticalRecord((float(p[0]), float(p[1])), "interior", 1, 0.0))
        a0, a1 = A.edges
        for s0, s1 in zip(a0, a1):
            d = s1 - s0
            s = float((p - s0) @ d) / float(d @ d)
            if not 0.0 < s < 1.0:
                continue
            foot = s0 + s * d
            outward = np.array([d[1], -d[0]])
            if float((p - foot) @ outward) > 0:
                recs.append(CriticalRecord((float(foot[0]), float(foot[1])), "edge", 1, float(f(foot)[0])))
    recs.sort(key=lambda r: (r.value, r.location))
    return recs


def euler_via_morse(f: MorseFunction, A: PolygonalRegion, tol: float = ANGLE_TOL) -> int:
    """Euler characteristic as the signed count of critical points."""
    return int(sum(r.sign for r in critical_points(f, A, tol)))


def sublevel_euler(f: MorseFunction, A: PolygonalRegion, t: float, tol: float = 1e-9) -> int:
    """Euler characteristic of {f <= t} from the critical records below t."""
    recs = critical_points(f, A)
    for r in recs:
        if abs(r.value - t) <= tol:
            raise CriticalValue(f"t = {t} is a critical value (at {r.location})")
    return int(sum(r.sign for r in recs if r.value <= t))


# --------------------------------------------------------------------------
# clip-and-count oracles


def _halfplane(u, t, center, size) -> shapely.Polygon:
    u = np.asarray(u, dtype=float)
    n = u / np.hypot(*u)
    w = np.array([-n[1], n[0]])
    base = np.asarray(center) + (t / np.hypot(*u) - float(np.asarray(center) @ n)) * n
    pts = [base + size * w, base - size * w, base - size * w - 2 * size * n, base + size * w - 2 * size * n]
    return shapely.Polygon(pts)


def _disk(center, radius, n_sides: int, circumscribed: bool) -> shapely.Polygon:
    ang = np.arange(n_sides) * (2 * math.pi / n_sides)
    R = radius / math.cos(math.pi / n_sides) if circumscribed else radius
    return shapely.Polygon(np.column_stack([center[0] + R * np.cos(ang), center[1] + R * np.sin(ang)]))


def sublevel_euler_clipped(f: MorseFunction, A: PolygonalRegion, t: float, n_sides: int = 720) -> list[int]:
    """Euler characteristic of A ∩ {f <= t} by polygon clipping.

    Affine f gives one value (half-plane clip); radial f gives two, for the
    inscribed and circumscribed regular ``n_sides``-gons of the disk.
    """
    shape = A.to_shapely()
    if f.kind == "affine":
        minx, miny, maxx, maxy = shape.bounds
        size = 4.0 * (maxx - minx + maxy - miny + 1.0)
        center = ((minx + maxx) / 2, (miny + maxy) / 2)
        parts = [_halfplane(f.u, t, center, size)]
    else:
        if t < 0:
            return [0, 0]
        r = math.sqrt(2.0 * t)
        parts = [_disk(f.center, r, n_sides, False), _disk(f.center, r, n_sides, True)]
    return [euler_combinatorial(PolygonalRegion.from_shapely(shapely.intersection(shape, P))) for P in parts]
