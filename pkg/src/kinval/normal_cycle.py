"""Normal cycles of polygonal regions in the cosphere bundle plane x circle.

A normal cycle is stored as two piece tables:

* edge pieces: a segment ``p0 -> p1`` at fixed direction ``theta`` (the
  outward normal), with multiplicity +-1;
* arc pieces: a fixed base point with a counterclockwise arc of directions
  ``[start, start + sweep]`` and multiplicity +-1.

Every piece also carries a group id so that many cycles (one per rigid
motion, say) can share one table and be integrated in a single pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from . import quadrature as quad
from .errors import NonGeneric, NonTransverse
from .geometry import (LENGTH_TOL, TWO_PI, AngularArc, PointSet, PolygonalRegion,
                       RigidMotion, contains_points, segment_crossings,
                       transversality_check, wrap_angle, wrap_signed, _point_segment_distance)


@dataclass(frozen=True)
class EdgePiece:
    p0: tuple
    p1: tuple
    normal: float
    multiplicity: int


@dataclass(frozen=True)
class ArcPiece:
    base: tuple
    arc: AngularArc


def _arr(x, shape_tail=()):
    a = np.asarray(x, dtype=float)
    return a.reshape((-1,) + shape_tail)


@dataclass(frozen=True, eq=False)
class NormalCycle:
    edge_p0: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    edge_p1: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    edge_theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    edge_mult: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    arc_base: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    arc_start: np.ndarray = field(default_factory=lambda: np.zeros(0))
    arc_sweep: np.ndarray = field(default_factory=lambda: np.zeros(0))
    arc_mult: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    edge_group: np.ndarray | None = None
    arc_group: np.ndarray | None = None
    n_groups: int = 1

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "edge_p0", _arr(self.edge_p0, (2,)))
        set_(self, "edge_p1", _arr(self.edge_p1, (2,)))
        set_(self, "edge_theta", _arr(self.edge_theta))
        set_(self, "edge_mult", np.asarray(self.edge_mult, dtype=np.int64).ravel())
        set_(self, "arc_base", _arr(self.arc_base, (2,)))
        set_(self, "arc_start", _arr(self.arc_start))
        set_(self, "arc_sweep", _arr(self.arc_sweep))
        set_(self, "arc_mult", np.asarray(self.arc_mult, dtype=np.int64).ravel())
        if self.edge_group is None:
            set_(self, "edge_group", np.zeros(len(self.edge_theta), dtype=np.int64))
        if self.arc_group is None:
            set_(self, "arc_group", np.zeros(len(self.arc_start), dtype=np.int64))

    # -- views -------------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edge_theta)

    @property
    def n_arcs(self) -> int:
        return len(self.arc_start)

    @property
    def is_empty(self) -> bool:
        return self.n_edges == 0 and self.n_arcs == 0

    @property
    def edge_pieces(self) -> list:
        return [EdgePiece(tuple(a), tuple(b), float(t), int(m))
                for a, b, t, m in zip(self.edge_p0, self.edge_p1, self.edge_theta, self.edge_mult)]

    @property
    def arc_pieces(self) -> list:
        return [ArcPiece(tuple(b), AngularArc(float(s), float(w), int(m)))
                for b, s, w, m in zip(self.arc_base, self.arc_start, self.arc_sweep, self.arc_mult)]

    def turning(self, per_group: bool = False):
        """Integral of d(theta) over the cycle."""
        vals = self.arc_mult * self.arc_sweep
        if per_group:
            return np.bincount(self.arc_group, vals, minlength=self.n_groups)
        return float(vals.sum())

    def select_groups(self, mask) -> "NormalCycle":
        """Keep only pieces of the groups flagged in ``mask`` (renumbered)."""
        mask = np.asarray(mask, dtype=bool)
        new_id = np.cumsum(mask) - 1
        e = mask[self.edge_group]
        a = mask[self.arc_group]
        return NormalCycle(self.edge_p0[e], self.edge_p1[e], self.edge_theta[e], self.edge_mult[e],
                           self.arc_base[a], self.arc_start[a], self.arc_sweep[a], self.arc_mult[a],
                           new_id[self.edge_group[e]], new_id[self.arc_group[a]], int(mask.sum()))

    def to_records(self) -> list[dict]:
        """Plain records for text dumps."""
        out = []
        for p in self.edge_pieces:
            out.append({"type": "edge", "p0": list(p.p0), "p1": list(p.p1),
                        "normal": p.normal, "multiplicity": p.multiplicity})
        for p in self.arc_pieces:
            out.append({"type": "arc", "base": list(p.base), "start": p.arc.start,
                        "sweep": p.arc.sweep, "multiplicity": p.arc.multiplicity})
        return out


def concat(*cycles: NormalCycle, regroup: bool = False) -> NormalCycle:
    """Sum of cycles as currents. With ``regroup`` each input becomes its own group."""
    cycles = [c for c in cycles if c is not None]
    if not cycles:
        return NormalCycle()
    if regroup:
        eg = [np.full(c.n_edges, k) for k, c in enumerate(cycles)]
        ag = [np.full(c.n_arcs, k) for k, c in enumerate(cycles)]
        n_groups = len(cycles)
    else:
        eg = [c.edge_group for c in cycles]
        ag = [c.arc_group for c in cycles]
        n_groups = max(c.n_groups for c in cycles)
    cat = np.concatenate
    return NormalCycle(cat([c.edge_p0 for c in cycles]), cat([c.edge_p1 for c in cycles]),
                       cat([c.edge_theta for c in cycles]), cat([c.edge_mult for c in cycles]),
                       cat([c.arc_base for c in cycles]), cat([c.arc_start for c in cycles]),
                       cat([c.arc_sweep for c in cycles]), cat([c.arc_mult for c in cycles]),
                       cat(eg).astype(np.int64), cat(ag).astype(np.int64), n_groups)


# --------------------------------------------------------------------------
# construction


def cycle_from_rings(coords: np.ndarray, ring_offsets: np.ndarray,
                     ring_group: np.ndarray | None = None, n_groups: int = 1) -> NormalCycle:
    """Normal cycle of oriented rings packed as ``coords[ring_offsets[k]:ring_offsets[k+1]]``.

    Rings must not repeat their first vertex. Outer rings are
    counterclockwise and holes clockwise.
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    offs = np.asarray(ring_offsets, dtype=np.int64)
    n_rings = len(offs) - 1
    if n_rings <= 0 or len(coords) == 0:
        return NormalCycle(n_groups=n_groups)
    lens = np.diff(offs)
    ring_of = np.repeat(np.arange(n_rings), lens)
    idx = np.arange(len(coords))
    start = offs[:-1][ring_of]
    nxt = np.where(idx + 1 == offs[1:][ring_of], start, idx + 1)
    prv = np.where(idx == start, offs[1:][ring_of] - 1, idx - 1)
    p1 = coords[nxt]
    tan = p1 - coords
    theta = wrap_angle(np.arctan2(-tan[:, 0], tan[:, 1]))
    tin = coords - coords[prv]
    cross = tin[:, 0] * tan[:, 1] - tin[:, 1] * tan[:, 0]
    dot = (tin * tan).sum(axis=1)
    ext = np.arctan2(cross, dot)
    th_in = theta[prv]
    pos = ext > 0
    arc_start = np.where(pos, th_in, theta)
    arc_mult = np.where(pos, 1, -1)
    keep = ext != 0.0
    group = np.zeros(n_rings, dtype=np.int64) if ring_group is None else np.asarray(ring_group, dtype=np.int64)
    g = group[ring_of]
    return NormalCycle(coords, p1, theta, np.ones(len(coords), dtype=np.int64),
                       coords[keep], arc_start[keep], np.abs(ext[keep]), arc_mult[keep],
                       g, g[keep], n_groups)


def build_normal_cycle(A) -> NormalCycle:
    """Normal cycle of a polygonal region or a finite point set."""
    if isinstance(A, PointSet):
        k = len(A.points)
        return NormalCycle(arc_base=A.points, arc_start=np.zeros(k), arc_sweep=np.full(k, TWO_PI),
                           arc_mult=np.ones(k, dtype=np.int64))
    if A.is_empty:
        return NormalCycle()
    lens = [len(lp) for lp in A.loops]
    offs = np.concatenate(([0], np.cumsum(lens)))
    return cycle_from_rings(np.concatenate(A.loops), offs)


def act(g: RigidMotion, N: NormalCycle) -> NormalCycle:
    """Push a cycle forward by the lifted rigid motion."""
    return NormalCycle(g.apply(N.edge_p0), g.apply(N.edge_p1), wrap_angle(N.edge_theta + g.alpha),
                       N.edge_mult, g.apply(N.arc_base), wrap_angle(N.arc_start + g.alpha),
                       N.arc_sweep, N.arc_mult, N.edge_group, N.arc_group, N.n_groups)


def antipodal(N: NormalCycle) -> NormalCycle:
    """Image of the cycle under theta -> theta + pi.

    Integrating a form over the result equals integrating its pullback by
    the antipodal map over ``N``.
    """
    return NormalCycle(N.edge_p0, N.edge_p1, wrap_angle(N.edge_theta + math.pi), N.edge_mult,
                       N.arc_base, wrap_angle(N.arc_start + math.pi), N.arc_sweep, N.arc_mult,
                       N.edge_group, N.arc_group, N.n_groups)


# --------------------------------------------------------------------------
# integration


@lru_cache(maxsize=None)
def trig_rule_order(theta_degree: int, length: float, rel: float = 1e-15) -> int:
    """Smallest Gauss–Legendre order whose error bound for trigonometric
    polynomials of the given degree on an interval of ``length`` is below
    ``rel * length``."""
    if theta_degree <= 0:
        return 1
    k = float(theta_degree)
    for n in range(1, 80):
        lg = ((2 * n + 1) * math.log(length) + 4 * math.lgamma(n + 1) + 2 * n * math.log(k)
              - math.log(2 * n + 1) - 3 * math.lgamma(2 * n + 1))
        if lg <= math.log(rel * length):
            return n
    return 80


def _edge_integrand(N, beta, idx, u):
    d = N.edge_p1[idx] - N.edge_p0[idx]
    x = N.edge_p0[idx, 0] + u * d[:, 0]
    y = N.edge_p0[idx, 1] + u * d[:, 1]
    a, b, _ = beta(x, y, N.edge_theta[idx])
    return a * d[:, 0] + b * d[:, 1]


def _arc_integrand(N, beta, idx, u):
    th = N.arc_start[idx] + u * N.arc_sweep[idx]
    _, _, c = beta(N.arc_base[idx, 0], N.arc_base[idx, 1], th)
    return c * N.arc_sweep[idx]


def _fixed_rule(fn, n_items, order):
    x, w = quad.gauss_legendre(order)
    idx = np.repeat(np.arange(n_items), order)
    u = np.tile(x, n_items)
    vals = np.broadcast_to(np.asarray(fn(idx, u), dtype=float), idx.shape)
    return (vals.reshape(n_items, order) * w).sum(axis=1)


def piece_integrals(N: NormalCycle, beta, rule: str = "auto", order: int = quad.DEFAULT_ORDER,
                    rtol: float = quad.DEFAULT_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Signed integrals of ``beta`` over every edge piece and every arc piece.

    ``rule="auto"`` uses exact fixed-order rules when ``beta`` declares its
    polynomial degree in x, y and trigonometric degree in theta, and the
    adaptive dyadic rule otherwise. ``rule="adaptive"`` forces the latter.
    """
    xy_deg = getattr(beta, "xy_degree", None)
    th_deg = getattr(beta, "theta_degree", None)
    exact = rule == "auto"
    if N.n_edges:
        fn = lambda i, u: _edge_integrand(N, beta, i, u)  # noqa: E731
        if exact and xy_deg is not None:
            e_int = _fixed_rule(fn, N.n_edges, xy_deg // 2 + 1)
        else:
            e_int, _ = quad.adaptive_integrate(fn, N.n_edges, order=order, rtol=rtol)
        e_int = e_int * N.edge_mult
    else:
        e_int = np.zeros(0)
    if N.n_arcs:
        fn = lambda i, u: _arc_integrand(N, beta, i, u)  # noqa: E731
        if exact and th_deg is not None:
            a_int = _fixed_rule(fn, N.n_arcs, trig_rule_order(th_deg, TWO_PI))
        else:
            a_int, _ = quad.adaptive_integrate(fn, N.n_arcs, order=order, rtol=rtol)
        a_int = a_int * N.arc_mult
    else:
        a_int = np.zeros(0)
    return e_int, a_int


def integrate_form(N: NormalCycle, beta, per_group: bool = False, rule: str = "auto",
                   order: int = quad.DEFAULT_ORDER, rtol: float = quad.DEFAULT_RTOL):
    """Integral of a 1-form over the cycle (or per group)."""
    e_int, a_int = piece_integrals(N, beta, rule, order, rtol)
    if per_group:
        return (np.bincount(N.edge_group, e_int, minlength=N.n_groups)
                + np.bincount(N.arc_group, a_int, minlength=N.n_groups))
    return float(math.fsum(e_int) + math.fsum(a_int))


# --------------------------------------------------------------------------
# checks


def boundary_residual(N: NormalCycle, digits: int = 7) -> int:
    """Largest absolute net multiplicity of any boundary point of the cycle.

    Endpoints are matched after rounding coordinates to ``digits`` decimals
    (angles modulo 2*pi). A closed cycle returns 0.
    """
    pts = []
    w = []
    for p, m in ((N.edge_p1, 1), (N.edge_p0, -1)):
        pts.append(np.column_stack([p, N.edge_theta, N.edge_group]))
        w.append(m * N.edge_mult)
    for ang, m in ((N.arc_start + N.arc_sweep, 1), (N.arc_start, -1)):
        pts.append(np.column_stack([N.arc_base, wrap_angle(ang), N.arc_group]))
        w.append(m * N.arc_mult)
    P = np.concatenate(pts)
    W = np.concatenate(w)
    if len(P) == 0:
        return 0
    key = np.round(P, digits)
    key[:, 2] = np.mod(key[:, 2], round(TWO_PI, digits))
    key[np.isclose(key[:, 2], round(TWO_PI, digits)), 2] = 0.0
    key = key + 0.0  # turn -0.0 into 0.0
    _, inv = np.unique(key, axis=0, return_inverse=True)
    net = np.bincount(inv.ravel(), W)
    return int(np.abs(net).max())


def legendrian_residual(N: NormalCycle) -> float:
    """Max |alpha(tangent)| over edge pieces (arcs have no horizontal part)."""
    if N.n_edges == 0:
        return 0.0
    d = N.edge_p1 - N.edge_p0
    L = np.maximum(np.hypot(d[:, 0], d[:, 1]), 1e-300)
    val = (np.cos(N.edge_theta) * d[:, 0] + np.sin(N.edge_theta) * d[:, 1]) / L
    return float(np.abs(val).max())


# --------------------------------------------------------------------------
# restriction and the three-piece decomposition


def _clip_edges(p0, p1, theta, mult, group, B: PolygonalRegion, tol: float):
    """Parts of the segments p0->p1 that lie inside B."""
    if B.is_empty or len(p0) == 0:
        return (np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=np.int64),
                np.zeros(0, dtype=np.int64))
    b0, b1 = B.edges
    i, _, s, _, _ = segment_crossings(p0, p1, b0, b1)
    out0, out1, oth, om, og = [], [], [], [], []
    for k in range(len(p0)):
        cuts = np.sort(np.concatenate(([0.0], s[i == k], [1.0])))
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        d = p1[k] - p0[k]
        inside = contains_points(B, p0[k] + mids[:, None] * d)
        for lo, hi, ok in zip(cuts[:-1], cuts[1:], inside):
            if ok and hi > lo:
                out0.append(p0[k] + lo * d)
                out1.append(p0[k] + hi * d)
                oth.append(theta[k])
                om.append(mult[k])
                og.append(group[k])
    if not out0:
        return (np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=np.int64),
                np.zeros(0, dtype=np.int64))
    return np.array(out0), np.array(out1), np.array(oth), np.array(om), np.array(og)


def restrict_to_region(N: NormalCycle, B: PolygonalRegion, tol: float = LENGTH_TOL) -> NormalCycle:
    """The part of N lying over B: edge pieces clipped, arcs kept if their base is inside."""
    if B.is_empty:
        return NormalCycle(n_groups=N.n_groups)
    b0, b1 = B.edges
    for pts in (N.arc_base, N.edge_p0, N.edge_p1):
        if len(pts):
            d = _point_segment_distance(pts, b0, b1)
            if d.min() <= tol:
                raise NonGeneric("a stratum point lies on the boundary of the restricting region")
    if N.n_edges:
        d = N.edge_p1 - N.edge_p0
        db = b1 - b0
        cross = d[:, None, 0] * db[None, :, 1] - d[:, None, 1] * db[None, :, 0]
        near = np.abs(cross) <= 1e-12 * np.hypot(*d.T)[:, None] * np.hypot(*db.T)[None, :]
        for ii, jj in zip(*np.nonzero(near)):
            if _point_segment_distance(np.array([N.edge_p0[ii], N.edge_p1[ii]]), b0[jj:jj + 1], b1[jj:jj + 1]).min() <= tol:
                raise NonGeneric("an edge piece runs along the boundary of the restricting region")
    e0, e1, eth, em, eg = _clip_edges(N.edge_p0, N.edge_p1, N.edge_theta, N.edge_mult, N.edge_group, B, tol)
    keep = contains_points(B, N.arc_base) if N.n_arcs else np.zeros(0, dtype=bool)
    return NormalCycle(e0, e1, eth, em, N.arc_base[keep], N.arc_start[keep], N.arc_sweep[keep],
                       N.arc_mult[keep], eg, N.arc_group[keep], N.n_groups)


def joint_arc_tables(th_a, th_b, u_a, u_b, sign_constant: int):
    """Arc tables for the short paths from the A-normal to the B-normal.

    The path from ``th_a`` to ``th_b`` carries multiplicity
    ``sign_constant * sign(det(u_a, u_b))``; it is stored as a
    counterclockwise arc with the matching sign.
    """
    th_a = np.asarray(th_a, dtype=float)
    th_b = np.asarray(th_b, dtype=float)
    det = u_a[:, 0] * u_b[:, 1] - u_a[:, 1] * u_b[:, 0]
    rel = sign_constant * np.where(det >= 0, 1, -1)
    d = wrap_signed(th_b - th_a)
    ccw = d > 0
    start = np.where(ccw, th_a, th_b)
    mult = np.where(ccw, rel, -rel).astype(np.int64)
    return wrap_angle(start), np.abs(d), mult


@dataclass(frozen=True, eq=False)
class Decomposition:
    piece_A: NormalCycle
    piece_B: NormalCycle
    joint_arcs: NormalCycle
    sign_constant: int

    @property
    def total(self) -> NormalCycle:
        return concat(self.piece_A, self.piece_B, self.joint_arcs)

    @property
    def n_crossings(self) -> int:
        return self.joint_arcs.n_arcs


def _joint_arcs(A: PolygonalRegion, B: PolygonalRegion, sign_constant: int) -> NormalCycle:
    a0, a1 = A.edges
    b0, b1 = B.edges
    i, j, _, _, pts = segment_crossings(a0, a1, b0, b1)
    if len(i) == 0:
        return NormalCycle()
    ua = a1[i] - a0[i]
    ub = b1[j] - b0[j]
    th_a = wrap_angle(np.arctan2(-ua[:, 0], ua[:, 1]))
    th_b = wrap_angle(np.arctan2(-ub[:, 0], ub[:, 1]))
    start, sweep, mult = joint_arc_tables(th_a, th_b, ua, ub, sign_constant)
    return NormalCycle(arc_base=pts, arc_start=start, arc_sweep=sweep, arc_mult=mult)


def decompose_intersection(A: PolygonalRegion, B: PolygonalRegion, sign_constant: int | None = None,
                           tol: float = LENGTH_TOL) -> Decomposition:
    """Split N(A ∩ B) into the part of N(A) over B, the part of N(B) over A,
    and one joint arc at every boundary crossing."""
    rep = transversality_check(A, B, tol)
    if not rep:
        raise NonTransverse("regions are not transverse", rep.violations)
    if sign_constant is None:
        sign_constant = joint_sign_constant()
    pa = restrict_to_region(build_normal_cycle(A), B, tol)
    pb = restrict_to_region(build_normal_cycle(B), A, tol)
    return Decomposition(pa, pb, _joint_arcs(A, B, sign_constant), sign_constant)


def square_pair_fixture(seed: int = 0) -> tuple[PolygonalRegion, PolygonalRegion]:
    """Unit square and an overlapping square moved by a small seeded motion."""
    rng = np.random.default_rng(seed)
    A = PolygonalRegion.from_loops([[(0, 0), (1, 0), (1, 1), (0, 1)]])
    g = RigidMotion(rng.uniform(-0.2, 0.2), tuple(0.5 + rng.uniform(-0.1, 0.1, 2)))
    B = PolygonalRegion.from_loops([g.apply(lp) for lp in A.loops])
    return A, B


def calibrate_joint_sign(seed: int = 0) -> int:
    """Pick the global joint-arc sign that makes the three pieces add up to
    N(A ∩ B) on the square-pair fixture.

    Both candidate signs are tried; the turning and the boundary-length
    integrals decide. Raises if neither or both fit.
    """
    from .geometry import intersect_regions

    A, B = square_pair_fixture(seed)
    ref = build_normal_cycle(intersect_regions(A, B))
    probes = [
        lambda x, y, t: (0 * t, 0 * t, 1.0 + 0 * t),
        lambda x, y, t: (-np.sin(t) + 0 * x, np.cos(t) + 0 * y, np.cos(t) + 0 * x),
    ]
    fits = []
    for k in (1, -1):
        dec = decompose_intersection(A, B, sign_constant=k)
        tot = dec.total
        err = max(abs(integrate_form(tot, p, rule="adaptive") - integrate_form(ref, p, rule="adaptive"))
                  for p in probes)
        if boundary_residual(tot) == 0 and err < 1e-9:
            fits.append(k)
    if len(fits) != 1:
        raise RuntimeError(f"joint-arc sign calibration is ambiguous: {fits}")
    return fits[0]


@lru_cache(maxsize=1)
def joint_sign_constant() -> int:
    return calibrate_joint_sign(0)

