"""Planar polygonal regions, point sets, rigid motions and exact measures.

A region is a finite union of closed polygons with holes. Outer loops run
counterclockwise, holes clockwise, so the interior is always on the left of
the traversal. Angles are radians; a direction ``theta`` stands for the unit
covector ``(cos theta, sin theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import shapely
from shapely.geometry import LinearRing, MultiPolygon, Polygon

from .errors import InteriorPoint, InvalidRegion, NonTransverse

TWO_PI = 2.0 * math.pi
LENGTH_TOL = 1e-9
ANGLE_TOL = 1e-6


def wrap_angle(theta):
    """Reduce to [0, 2*pi). Works on scalars and arrays."""
    out = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def wrap_signed(theta):
    """Reduce to [-pi, pi)."""
    out = np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI)
    out = np.where(out >= TWO_PI, 0.0, out) - math.pi
    if np.ndim(out) == 0:
        return float(out)
    return out


def rotation_matrix(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


def normal_angle(tangent) -> float:
    """Angle of the outward normal (t_y, -t_x) of a boundary edge with tangent t."""
    tx, ty = float(tangent[0]), float(tangent[1])
    return wrap_angle(math.atan2(-tx, ty))


# --------------------------------------------------------------------------
# small value types


@dataclass(frozen=True)
class AngularArc:
    """Counterclockwise arc of directions ``[start, start + sweep]`` with a sign."""

    start: float
    sweep: float
    multiplicity: int = 1

    def __post_init__(self):
        if not (0.0 < self.sweep <= TWO_PI + 1e-12):
            raise ValueError(f"arc sweep must lie in (0, 2pi], got {self.sweep}")
        if self.multiplicity not in (1, -1):
            raise ValueError("arc multiplicity must be +1 or -1")
        object.__setattr__(self, "start", wrap_angle(self.start))

    @property
    def end(self) -> float:
        return wrap_angle(self.start + self.sweep)

    def contains(self, theta: float, tol: float = 0.0) -> bool:
        """True if ``theta`` lies in the closed arc widened by ``tol``."""
        d = wrap_angle(theta - self.start + tol)
        return d <= self.sweep + 2.0 * tol

    def distance_to_ends(self, theta: float) -> float:
        d0 = abs(wrap_signed(theta - self.start))
        d1 = abs(wrap_signed(theta - self.start - self.sweep))
        return min(d0, d1)


@dataclass(frozen=True)
class RigidMotion:
    """x -> R(alpha) x + t."""

    alpha: float = 0.0
    t: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "t", (float(self.t[0]), float(self.t[1])))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.alpha)

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return pts @ self.matrix.T + np.asarray(self.t)

    def inverse(self) -> "RigidMotion":
        rt = rotation_matrix(-self.alpha) @ np.asarray(self.t)
        return RigidMotion(-self.alpha, (-rt[0], -rt[1]))

    def compose(self, other: "RigidMotion") -> "RigidMotion":
        """self after other."""
        t = self.apply(np.asarray(other.t))
        return RigidMotion(self.alpha + other.alpha, (t[0], t[1]))


@dataclass(frozen=True)
class NormalCone:
    """Normal cone at a boundary point: one direction on an edge, an arc at a vertex."""

    kind: str
    direction: float | None = None
    arc: AngularArc | None = None


# --------------------------------------------------------------------------
# loops


def _ring_area2(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def clean_loop(loop, tol: float = LENGTH_TOL) -> np.ndarray:
    """Drop a repeated closing vertex, zero-length edges and flat vertices.

    A vertex is flat when it lies within ``tol`` of the segment joining its
    neighbours and the chain does not fold back on itself there.
    """
    pts = np.asarray(loop, dtype=float).reshape(-1, 2)
    if len(pts) > 1 and np.allclose(pts[0], pts[-1], atol=tol, rtol=0):
        pts = pts[:-1]
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        nxt = np.roll(pts, -1, axis=0)
        seg = np.hypot(*(nxt - pts).T)
        if np.any(seg <= tol):
            keep = seg > tol
            pts = pts[keep]
            changed = True
            continue
        prv = np.roll(pts, 1, axis=0)
        nxt = np.roll(pts, -1, axis=0)
        a = pts - prv
        b = nxt - pts
        base = nxt - prv
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        blen = np.hypot(base[:, 0], base[:, 1])
        dist = np.abs(cross) / np.maximum(blen, 1e-300)
        forward = (a * b).sum(axis=1) > 0
        flat = (dist <= tol) & forward
        if np.any(flat):
            # remove one flat vertex at a time so chains merge cleanly
            pts = np.delete(pts, int(np.flatnonzero(flat)[0]), axis=0)
            changed = True
    return pts


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PolygonalRegion:
    """Compact polygonal region given by oriented boundary loops.

    Construct with :meth:`from_loops` (validating) or :meth:`from_shapely`.
    Counterclockwise loops are outer boundaries, clockwise loops are holes.
    """

    loops: tuple = field(default_factory=tuple)

    @classmethod
    def from_loops(cls, loops, validate: bool = True, tol: float = LENGTH_TOL) -> "PolygonalRegion":
        cleaned = []
        for i, loop in enumerate(loops):
            pts = clean_loop(loop, tol)
            if len(pts) < 3:
                raise InvalidRegion(f"loop {i} has fewer than 3 distinct vertices")
            if abs(_ring_area2(pts)) <= tol:
                raise InvalidRegion(f"loop {i} encloses no area")
            cleaned.append(_frozen(pts))
        region = cls(tuple(cleaned))
        if validate:
            region.validate()
        return region

    @classmethod
    def from_shapely(cls, geom, tol: float = LENGTH_TOL) -> "PolygonalRegion":
        """Region from a shapely (Multi)Polygon; lower-dimensional parts are dropped."""
        if geom is None or geom.is_empty:
            return cls(())
        parts = shapely.get_parts(geom)
        polys = [g for g in parts if g.geom_type == "Polygon"]
        for g in parts:
            if g.geom_type in ("MultiPolygon", "GeometryCollection"):
                polys.extend(p for p in shapely.get_parts(g) if p.geom_type == "Polygon")
        loops = []
        for poly in shapely.orient_polygons(np.array(polys, dtype=object), exterior_cw=False):
            for ring in [poly.exterior, *poly.interiors]:
                pts = clean_loop(np.asarray(ring.coords), tol)
                if len(pts) >= 3 and abs(_ring_area2(pts)) > tol * tol:
                    loops.append(_frozen(pts))
        return cls(tuple(loops))

    @classmethod
    def empty(cls) -> "PolygonalRegion":
        return cls(())

    # -- structure ---------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return len(self.loops) == 0

    @cached_property
    def orientations(self) -> np.ndarray:
        return np.array([1 if _ring_area2(lp) > 0 else -1 for lp in self.loops], dtype=int)

    @property
    def outer_loops(self) -> list:
        return [lp for lp, o in zip(self.loops, self.orientations) if o > 0]

    @property
    def hole_loops(self) -> list:
        return [lp for lp, o in zip(self.loops, self.orientations) if o < 0]

    @cached_property
    def vertices(self) -> np.ndarray:
        if self.is_empty:
            return np.zeros((0, 2))
        return _frozen(np.concatenate(self.loops))

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end points of every boundary edge, in traversal order."""
        if self.is_empty:
            return np.zeros((0, 2)), np.zeros((0, 2))
        starts = np.concatenate(self.loops)
        ends = np.concatenate([np.roll(lp, -1, axis=0) for lp in self.loops])
        return _frozen(starts), _frozen(ends)

    @cached_property
    def loop_index(self) -> np.ndarray:
        """Loop id of every vertex (and of the edge starting there)."""
        return np.concatenate([np.full(len(lp), i) for i, lp in enumerate(self.loops)]) \
            if self.loops else np.zeros(0, dtype=int)

    @cached_property
    def exterior_angles(self) -> np.ndarray:
        """Signed turning angle at every vertex, in (-pi, pi)."""
        out = []
        for lp in self.loops:
            a = lp - np.roll(lp, 1, axis=0)
            b = np.roll(lp, -1, axis=0) - lp
            cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
            dot = (a * b).sum(axis=1)
            out.append(np.arctan2(cross, dot))
        return np.concatenate(out) if out else np.zeros(0)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    def to_shapely(self):
        return self._shape

    @cached_property
    def _shape(self):
        if self.is_empty:
            return MultiPolygon()
        outers = [i for i, o in enumerate(self.orientations) if o > 0]
        holes = [i for i, o in enumerate(self.orientations) if o < 0]
        owner = {i: [] for i in outers}
        for h in holes:
            parent = self._smallest_container(h, outers)
            if parent is None:
                raise InvalidRegion(f"hole loop {h} lies outside every outer loop")
            owner[parent].append(self.loops[h])
        polys = [Polygon(self.loops[i], owner[i]) for i in outers]
        return MultiPolygon(polys)

    def _smallest_container(self, idx, candidates):
        probe = shapely.Point(self.loops[idx][0])
        best, best_area = None, math.inf
        for j in candidates:
            if j == idx:
                continue
            ring = Polygon(self.loops[j])
            if ring.contains(probe):
                area = abs(_ring_area2(self.loops[j]))
                if area < best_area:
                    best, best_area = j, area
        return best

    def validate(self, tol: float = LENGTH_TOL) -> None:
        """Raise :class:`InvalidRegion` unless the loops describe a valid region."""
        rings = [LinearRing(lp) for lp in self.loops]
        for i, ring in enumerate(rings):
            if not ring.is_simple:
                raise InvalidRegion(f"loop {i} is self-intersecting")
        for i in range(len(rings)):
            for j in range(i + 1, len(rings)):
                if rings[i].distance(rings[j]) <= tol:
                    raise InvalidRegion(f"loops {i} and {j} touch or cross")
        all_idx = list(range(len(rings)))
        for i, o in enumerate(self.orientations):
            parent = self._smallest_container(i, all_idx)
            parent_o = None if parent is None else self.orientations[parent]
            if o < 0 and parent_o != 1:
                raise InvalidRegion(f"hole loop {i} (clockwise) is not directly inside an outer loop")
            if o > 0 and parent_o == 1:
                raise InvalidRegion(f"outer loop {i} (counterclockwise) is nested directly in another outer loop")
        if not self._shape.is_valid:
            raise InvalidRegion(shapely.is_valid_reason(self._shape))

    def to_literal(self) -> list:
        return [lp.tolist() for lp in self.loops]


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite set of distinct points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise InvalidRegion("point coordinates must be finite")
        if len(pts) > 1:
            d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
            np.fill_diagonal(d, np.inf)
            if d.min() <= LENGTH_TOL:
                raise InvalidRegion("points must be pairwise distinct")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0


# --------------------------------------------------------------------------
# operations


def apply_motion(g: RigidMotion, A):
    """Image of a region or point set under a rigid motion."""
    if isinstance(A, PointSet):
        return PointSet(g.apply(A.points))
    return PolygonalRegion(tuple(_frozen(g.apply(lp)) for lp in A.loops))


def _point_segment_distance(p, a, b):
    """Distance from points p (k,2) to segments a->b (m,2); returns (k, m)."""
    ab = b - a
    L2 = np.maximum((ab * ab).sum(axis=1), 1e-300)
    ap = p[:, None, :] - a[None, :, :]
    s = np.clip((ap * ab[None]).sum(axis=2) / L2[None], 0.0, 1.0)
    diff = ap - s[..., None] * ab[None]
    return np.hypot(diff[..., 0], diff[..., 1])


def segment_crossings(a0, a1, b0, b1):
    """All proper crossings between segments a0->a1 and b0->b1.

    Returns index arrays (i, j), parameters (s, t) along each segment and the
    crossing points.
    """
    da = a1 - a0
    db = b1 - b0
    den = da[:, None, 0] * db[None, :, 1] - da[:, None, 1] * db[None, :, 0]
    w = b0[None, :, :] - a0[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = (w[..., 0] * db[None, :, 1] - w[..., 1] * db[None, :, 0]) / den
        t = (w[..., 0] * da[:, None, 1] - w[..., 1] * da[:, None, 0]) / den
    ok = (den != 0) & (s > 0) & (s < 1) & (t > 0) & (t < 1)
    i, j = np.nonzero(ok)
    s, t = s[i, j], t[i, j]
    pts = a0[i] + s[:, None] * da[i]
    return i, j, s, t, pts


@dataclass
class TransversalityReport:
    ok: bool
    violations: list

    def __bool__(self) -> bool:
        return self.ok


def transversality_check(A: PolygonalRegion, B: PolygonalRegion,
                         tol: float = LENGTH_TOL, angle_tol: float = ANGLE_TOL) -> TransversalityReport:
    """Check that the boundaries of A and B meet only in clean crossings.

    Fails when a vertex of either region lies within ``tol`` of the other
    boundary, or when two edges cross (or overlap) at an angle below
    ``angle_tol``.
    """
    violations = []
    if A.is_empty or B.is_empty:
        return TransversalityReport(True, violations)
    a0, a1 = A.edges
    b0, b1 = B.edges
    for name, P, (s0, s1) in (("A", A.vertices, (b0, b1)), ("B", B.vertices, (a0, a1))):
        d = _point_segment_distance(P, s0, s1)
        k, m = np.nonzero(d <= tol)
        for kk, mm in zip(k, m):
            violations.append(f"vertex {kk} of {name} lies on edge {mm} of the other region "
                              f"(distance {d[kk, mm]:.3g})")
    i, j, _, _, _ = segment_crossings(a0, a1, b0, b1)
    da = a1 - a0
    db = b1 - b0
    for ii, jj in zip(i, j):
        ang = abs(math.atan2(da[ii, 0] * db[jj, 1] - da[ii, 1] * db[jj, 0],
                             float(da[ii] @ db[jj])))
        ang = min(ang, math.pi - ang)
        if ang <= angle_tol:
            violations.append(f"edges A{ii} and B{jj} cross at angle {ang:.3g}")
    # parallel overlapping edges never register as proper crossings
    cross = da[:, None, 0] * db[None, :, 1] - da[:, None, 1] * db[None, :, 0]
    la = np.hypot(da[:, 0], da[:, 1])[:, None]
    lb = np.hypot(db[:, 0], db[:, 1])[None, :]
    near_par = np.abs(cross) <= np.sin(angle_tol) * la * lb
    for ii, jj in zip(*np.nonzero(near_par)):
        seg_d = shapely.LineString([a0[ii], a1[ii]]).distance(shapely.LineString([b0[jj], b1[jj]]))
        if seg_d <= tol:
            violations.append(f"edges A{ii} and B{jj} are parallel and touch")
    return TransversalityReport(not violations, violations)


def intersect_regions(A: PolygonalRegion, B: PolygonalRegion, tol: float = LENGTH_TOL,
                      angle_tol: float = ANGLE_TOL, check: bool = True) -> PolygonalRegion:
    """Intersection of two transverse regions."""
    if check:
        rep = transversality_check(A, B, tol, angle_tol)
        if not rep:
            raise NonTransverse("regions are not transverse", rep.violations)
    if A.is_empty or B.is_empty:
        return PolygonalRegion.empty()
    return PolygonalRegion.from_shapely(shapely.intersection(A.to_shapely(), B.to_shapely()), tol)


def euler_combinatorial(A) -> int:
    """V - E + F of the boundary cell structure; holes count as negative faces."""
    if isinstance(A, PointSet):
        return int(len(A.points))
    n_v = A.n_vertices
    n_e = A.n_vertices
    faces = int(np.sum(A.orientations > 0)) - int(np.sum(A.orientations < 0))
    return n_v - n_e + faces


def area_perimeter(A: PolygonalRegion) -> tuple[float, float]:
    """Shoelace area (holes subtract) and total boundary length."""
    if A.is_empty:
        return 0.0, 0.0
    area = 0.5 * sum(_ring_area2(lp) for lp in A.loops)
    a0, a1 = A.edges
    per = float(np.hypot(*(a1 - a0).T).sum())
    return float(area), per


def normal_cone_at(A: PolygonalRegion, s, tol: float = LENGTH_TOL) -> NormalCone:
    """Normal cone of A at a boundary point ``s``.

    Convex vertices give an arc with multiplicity +1, reflex vertices the arc
    between the same two edge normals with multiplicity -1.
    """
    s = np.asarray(s, dtype=float).reshape(1, 2)
    verts = A.vertices
    dv = np.hypot(*(verts - s).T)
    if dv.size and dv.min() <= tol:
        k = int(np.argmin(dv))
        a0, a1 = A.edges
        loop = A.loop_index[k]
        idx = np.flatnonzero(A.loop_index == loop)
        pos = k - idx[0]
        prev_edge = idx[(pos - 1) % len(idx)]
        th_in = normal_angle(a1[prev_edge] - a0[prev_edge])
        th_out = normal_angle(a1[k] - a0[k])
        ext = A.exterior_angles[k]
        if ext > 0:
            return NormalCone("vertex", arc=AngularArc(th_in, float(ext), 1))
        return NormalCone("vertex", arc=AngularArc(th_out, float(-ext), -1))
    a0, a1 = A.edges
    d = _point_segment_distance(s, a0, a1)[0]
    if d.size and d.min() <= tol:
        k = int(np.argmin(d))
        return NormalCone("edge", direction=normal_angle(a1[k] - a0[k]))
    if A.to_shapely().contains(shapely.Point(s[0])):
        raise InteriorPoint("the normal cone is empty at interior points")
    raise ValueError("point is not in the region")


def triangulate(A: PolygonalRegion) -> np.ndarray:
    """Counterclockwise triangles (T, 3, 2) covering A."""
    if A.is_empty:
        return np.zeros((0, 3, 2))
    tris = shapely.get_parts(shapely.constrained_delaunay_triangles(A.to_shapely()))
    if len(tris) == 0:
        return np.zeros((0, 3, 2))
    coords = shapely.get_coordinates(tris).reshape(len(tris), 4, 2)[:, :3, :]
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    cw = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    coords[cw] = coords[cw][:, ::-1]
    return coords


def contains_points(A: PolygonalRegion, pts) -> np.ndarray:
    """Boolean mask: which points lie in the interior of A."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    if A.is_empty:
        return np.zeros(len(pts), dtype=bool)
    return shapely.contains_xy(A.to_shapely(), pts[:, 0], pts[:, 1])


def diameter_radius(A) -> float:
    """Largest distance from the origin to a point of A."""
    pts = A.points if isinstance(A, PointSet) else A.vertices
    if len(pts) == 0:
        return 0.0
    return float(np.hypot(pts[:, 0], pts[:, 1]).max())
