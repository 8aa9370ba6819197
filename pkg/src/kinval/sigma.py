"""Kinematic valuations through forms on the space of interpolating
directions, and through the three-piece unfolding of N(A ∩ gX).

The forms route writes nu(A) as four terms:

    term1  interpolation term over N(A): a fiber integral over the
           directions zeta between the normal xi of N(A) and a second
           direction eta, of beta(zeta) ^ omega(eta);
    term2  integral over N(A) of f * beta;
    term3  integral over A x circle of beta ^ omega;
    term4  integral over A of f * gamma.

Interpolating directions are parametrized by a sheet sigma = +-1, an
opening t in [0, pi] and a fraction r in [0, 1]: eta = xi + sigma t and
zeta = xi + sigma r t. Every angle map is affine, so the coordinates stay
smooth where eta meets +-xi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
import shapely

from . import kernels
from . import quadrature as quad
from .errors import QuadratureFailure
from .forms import CoefForm1, ValuationPair, lk0
from .geometry import TWO_PI, PointSet, PolygonalRegion, triangulate, wrap_angle
from .kinematic import (MotionFamily, SmoothedForm, iter_chunks, moved_edges, nudge_nodes,
                        point_function_f)
from .normal_cycle import (NormalCycle, build_normal_cycle, integrate_form, joint_arc_tables,
                           joint_sign_constant, restrict_to_region, trig_rule_order)
from .seeding import rng_for


@dataclass
class ThetaPsiResult:
    term1: float
    term2: float
    term3: float
    term4: float
    info: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.term1 + self.term2 + self.term3 + self.term4

    def as_dict(self) -> dict:
        return {"term1": self.term1, "term2": self.term2, "term3": self.term3, "term4": self.term4,
                "total": self.total}


# --------------------------------------------------------------------------
# term 1


def _interp_once(N: NormalCycle, beta: CoefForm1, omega, n_s: int, n_t: int, n_r: int,
                 orientation: int) -> float:
    if N.n_edges == 0:
        return 0.0
    xs, ws = quad.gauss_legendre(n_s)
    tt, wt = quad.panel_rule(0.0, math.pi, 16, max(1, n_t // 16))
    xr, wr = quad.gauss_legendre(n_r)
    d = N.edge_p1 - N.edge_p0
    L = np.hypot(d[:, 0], d[:, 1])
    u = d / L[:, None]
    total = 0.0
    for sheet in (1.0, -1.0):
        # points: edge x s-node x t-node
        E, S, T = np.meshgrid(np.arange(N.n_edges), np.arange(n_s), np.arange(len(tt)), indexing="ij")
        E, S, T = E.ravel(), S.ravel(), T.ravel()
        px = N.edge_p0[E, 0] + xs[S] * d[E, 0]
        py = N.edge_p0[E, 1] + xs[S] * d[E, 1]
        phi = N.edge_theta[E]
        eta = wrap_angle(phi + sheet * tt[T])
        _, q, r = omega(px, py, eta)
        om = q * u[E, 0] + r * u[E, 1]
        # inner average of the dtheta coefficient of beta along [xi, eta]
        zeta = phi[:, None] + sheet * xr[None, :] * tt[T][:, None]
        _, _, c = beta(px[:, None], py[:, None], zeta)
        inner = (c * wr[None, :]).sum(axis=1)
        w = N.edge_mult[E] * L[E] * ws[S] * wt[T]
        total += sheet * float(np.sum(w * tt[T] * inner * om))
    return orientation * total


def interpolation_integral(A, beta: CoefForm1, omega, orientation: int | None = None,
                           n: int = 32, rtol: float = 1e-8, max_levels: int = 3,
                           info: dict | None = None) -> float:
    """Interpolation term over N(A) (or a restricted cycle), refined by doubling.

    Arc pieces of N(A) have a fixed base point, so omega pulls back to zero
    there; only edge pieces contribute.
    """
    if orientation is None:
        orientation = sigma_orientation()
    N = A if isinstance(A, NormalCycle) else build_normal_cycle(A)
    if N.n_edges == 0 or beta.name == "0":
        return 0.0
    deg = beta.theta_degree
    n_r = 16 if deg is None else max(trig_rule_order(deg, math.pi), 2)
    prev = _interp_once(N, beta, omega, n, n, n_r, orientation)
    level = 0
    cur = prev
    for level in range(1, max_levels + 1):
        m = n * 2 ** level
        cur = _interp_once(N, beta, omega, m, m, n_r, orientation)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300) + 1e-14:
            break
        prev = cur
    if info is not None:
        info["term1_nodes_per_axis"] = n * 2 ** level
        info["term1_change"] = abs(cur - prev)
    return cur


# --------------------------------------------------------------------------
# terms 2-4


def _theta_integral(fun, x, y, n0: int = 32, rtol: float = 1e-7, n_max: int = 4096):
    """Periodic trapezoid integral over theta of fun(x, y, theta) per point,
    each point doubled until its own estimate settles. A doubling only
    evaluates the new midpoints."""
    def tsum(idx, n, shift):
        th = (np.arange(n) + shift) * (TWO_PI / n)
        X = np.repeat(x[idx], n)
        Y = np.repeat(y[idx], n)
        T = np.tile(th, len(idx))
        return fun(X, Y, T).reshape(len(idx), n).sum(axis=1) * (TWO_PI / n)

    out = np.zeros(len(x))
    active = np.arange(len(x))
    n = n0
    prev = tsum(active, n, 0.0)
    while active.size:
        cur = 0.5 * (prev + tsum(active, n, 0.5))
        n *= 2
        done = np.abs(cur - prev) <= rtol * np.maximum(np.abs(cur), 1e-300) + 1e-13
        out[active[done]] = cur[done]
        active, prev = active[~done], cur[~done]
        if active.size and n >= n_max:
            raise QuadratureFailure("theta integral did not converge")
    return out


def pushdown_integral(A: PolygonalRegion, beta: CoefForm1, omega, rtol: float = 1e-6) -> float:
    """Integral over A x circle of beta ^ omega."""
    if isinstance(A, PointSet) or A.is_empty or beta.name == "0":
        return 0.0

    def dens(x, y, t):
        a, b, c = beta(x, y, t)
        p, q, r = omega(x, y, t)
        return a * r - b * q + c * p

    def g(x, y):
        shape = np.shape(x)
        return _theta_integral(dens, np.ravel(x), np.ravel(y), rtol=0.1 * rtol).reshape(shape)

    return quad.adaptive_triangles(g, triangulate(A), order=6, rtol=rtol)


def _integrate_f_beta(F, X, N: NormalCycle, beta: CoefForm1) -> float:
    """Integral over N of f * beta, evaluating f once per quadrature node."""
    if N.is_empty or beta.name == "0":
        return 0.0
    total = 0.0
    if N.n_arcs:
        # f is constant along an arc
        fv = point_function_f(F, X, N.arc_base)
        arc_only = NormalCycle(arc_base=N.arc_base, arc_start=N.arc_start, arc_sweep=N.arc_sweep,
                               arc_mult=N.arc_mult, arc_group=np.arange(N.n_arcs), n_groups=N.n_arcs)
        per = integrate_form(arc_only, beta, per_group=True, rule="adaptive")
        total += math.fsum(fv * per)
    if N.n_edges:
        d = N.edge_p1 - N.edge_p0
        cache: dict = {}

        def fn(idx, u):
            x = N.edge_p0[idx, 0] + u * d[idx, 0]
            y = N.edge_p0[idx, 1] + u * d[idx, 1]
            pts = np.column_stack([x, y])
            keys = [p.tobytes() for p in pts]
            miss = [k for k in dict.fromkeys(keys) if k not in cache]
            if miss:
                vals = point_function_f(F, X, np.frombuffer(b"".join(miss)).reshape(-1, 2))
                cache.update(zip(miss, vals))
            f = np.array([cache[k] for k in keys])
            a, b, _ = beta(x, y, N.edge_theta[idx])
            return f * (a * d[idx, 0] + b * d[idx, 1]) * N.edge_mult[idx]

        vals, _ = quad.adaptive_integrate(fn, N.n_edges, order=16, rtol=1e-10)
        total += math.fsum(vals)
    return total


def _integrate_f_gamma(F, X, A, gamma, rtol=1e-10) -> float:
    if gamma.is_zero or isinstance(A, PointSet) or A.is_empty:
        return 0.0

    def g(x, y):
        shape = np.shape(x)
        f = point_function_f(F, X, np.column_stack([np.ravel(x), np.ravel(y)]))
        return (f * np.ravel(gamma(x, y))).reshape(shape)

    return quad.adaptive_triangles(g, triangulate(A), order=6, rtol=rtol)


def kinematic_forms(F: MotionFamily, X: PolygonalRegion, mu: ValuationPair, A, omega: SmoothedForm | None = None,
                    E: PolygonalRegion | None = None, orientation: int | None = None) -> ThetaPsiResult:
    """nu(A) by the four-term forms route; with ``E`` every term is
    restricted to base points in E (curvature-measure localization)."""
    omega = omega or SmoothedForm(F, X)
    info: dict = {}
    N = build_normal_cycle(A)
    region = A
    if E is not None:
        N = restrict_to_region(N, E)
        if not isinstance(A, PointSet):
            region = PolygonalRegion.from_shapely(shapely.intersection(A.to_shapely(), E.to_shapely()))
    if mu.beta_is_zero:
        t1 = t2 = t3 = 0.0
    else:
        t1 = interpolation_integral(N, mu.beta, omega, orientation, info=info)
        t2 = _integrate_f_beta(F, X, N, mu.beta)
        t3 = pushdown_integral(region, mu.beta, omega) if not isinstance(region, PointSet) else 0.0
    t4 = _integrate_f_gamma(F, X, region, mu.gamma)
    info["orientation"] = sigma_orientation() if orientation is None else orientation
    info["omega_evaluations"] = omega.n_evaluations
    return ThetaPsiResult(t1, t2, t3, t4, info)


# --------------------------------------------------------------------------
# unfolded route


def _unfolded_chunk(A: PolygonalRegion, X: PolygonalRegion, mus: dict, alpha, t, sign_constant: int,
                    E: PolygonalRegion | None = None):
    """Per motion: integral of beta over the three pieces of N(A ∩ gX) plus gamma over A ∩ gX."""
    K = len(alpha)
    a0, a1 = A.edges
    nA = len(a0)
    B0, B1 = moved_edges(X, alpha, t)
    nX = B0.shape[1]
    NA = build_normal_cycle(A)
    NX = build_normal_cycle(X)
    Aedges0 = a0[None]
    # piece of N(A) over gX
    p0 = np.tile(a0, (K, 1))
    p1 = np.tile(a1, (K, 1))
    grp = np.repeat(np.arange(K), nA)
    q0, q1, src = kernels.clip_batch(p0, p1, grp, B0, B1)
    ea_theta = np.tile(NA.edge_theta, K)[src]
    ea_group = grp[src]
    va = np.tile(NA.arc_base, (K, 1))
    va_grp = np.repeat(np.arange(K), NA.n_arcs)
    keep_a = kernels.inside_batch(va, va_grp, B0, B1)
    # piece of N(gX) over A
    c, s = np.cos(alpha), np.sin(alpha)
    r0 = B0.reshape(-1, 2)
    r1 = B1.reshape(-1, 2)
    q0b, q1b, srcb = kernels.clip_batch(r0, r1, np.zeros(len(r0), dtype=np.int64), Aedges0, a1[None])
    eb_theta = wrap_angle(np.tile(NX.edge_theta, K) + np.repeat(alpha, nX))[srcb]
    eb_group = np.repeat(np.arange(K), nX)[srcb]
    vb = (np.einsum("kab,jb->kja", np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2), NX.arc_base)
          + t[:, None, :]).reshape(-1, 2)
    keep_b = kernels.inside_batch(vb, np.zeros(len(vb), dtype=np.int64), Aedges0, a1[None])
    # joint arcs at crossings
    kk, ii, jj, ss, _ = kernels.crossings_batch(a0, a1, B0, B1)
    ua = (a1 - a0)[ii]
    ub = (B1 - B0)[kk, jj]
    pts = a0[ii] + ss[:, None] * ua
    th_a = wrap_angle(np.arctan2(-ua[:, 0], ua[:, 1]))
    th_b = wrap_angle(np.arctan2(-ub[:, 0], ub[:, 1]))
    j_start, j_sweep, j_mult = joint_arc_tables(th_a, th_b, ua, ub, sign_constant)
    arc_b_start = wrap_angle(np.tile(NX.arc_start, K) + np.repeat(alpha, NX.n_arcs))
    cyc = NormalCycle(
        np.concatenate([q0, q0b]), np.concatenate([q1, q1b]), np.concatenate([ea_theta, eb_theta]),
        np.ones(len(q0) + len(q0b), dtype=np.int64),
        np.concatenate([va[keep_a], vb[keep_b], pts]),
        np.concatenate([np.tile(NA.arc_start, K)[keep_a], arc_b_start[keep_b], j_start]),
        np.concatenate([np.tile(NA.arc_sweep, K)[keep_a], np.tile(NX.arc_sweep, K)[keep_b], j_sweep]),
        np.concatenate([np.tile(NA.arc_mult, K)[keep_a], np.tile(NX.arc_mult, K)[keep_b], j_mult]),
        np.concatenate([ea_group, eb_group]),
        np.concatenate([va_grp[keep_a], np.repeat(np.arange(K), NX.n_arcs)[keep_b], kk]), K)
    # boundary of A ∩ gX as oriented segments, for the area part
    seg0 = np.concatenate([q0, q0b])
    seg1 = np.concatenate([q1, q1b])
    seg_grp = np.concatenate([ea_group, eb_group])
    if E is not None:
        cyc = _restrict_batch(cyc, E)
    out = {}
    for name, mu in mus.items():
        val = np.zeros(K)
        if not mu.beta_is_zero:
            val += integrate_form(cyc, mu.beta, per_group=True)
        if not mu.gamma.is_zero:
            if E is None:
                val += _boundary_fan(mu.gamma, seg0, seg1, seg_grp, K)
            else:
                val += _area_over(mu.gamma, A, E, X, alpha, t)
        out[name] = val
    return out


def _restrict_batch(cyc: NormalCycle, E: PolygonalRegion) -> NormalCycle:
    e0, e1 = E.edges
    E0, E1 = e0[None], e1[None]
    zeros = np.zeros(cyc.n_edges, dtype=np.int64)
    q0, q1, src = kernels.clip_batch(cyc.edge_p0, cyc.edge_p1, zeros, E0, E1)
    keep = kernels.inside_batch(cyc.arc_base, np.zeros(cyc.n_arcs, dtype=np.int64), E0, E1) \
        if cyc.n_arcs else np.zeros(0, dtype=bool)
    return NormalCycle(q0, q1, cyc.edge_theta[src], cyc.edge_mult[src], cyc.arc_base[keep],
                       cyc.arc_start[keep], cyc.arc_sweep[keep], cyc.arc_mult[keep],
                       cyc.edge_group[src], cyc.arc_group[keep], cyc.n_groups)


def _boundary_fan(gamma, seg0, seg1, grp, K):
    """Integral of gamma over regions given by their oriented boundary segments,
    as signed triangles fanned from the origin."""
    if len(seg0) == 0:
        return np.zeros(K)
    tris = np.stack([np.zeros_like(seg0), seg0, seg1], axis=1)
    order = 4 if gamma.xy_degree is None else gamma.xy_degree // 2 + 1
    return np.bincount(grp, quad.integrate_triangles(gamma, tris, order), minlength=K)


def _area_over(gamma, A, E, X, alpha, t):
    from .kinematic import _fan_integrals, intersection_rings

    AE = PolygonalRegion.from_shapely(shapely.intersection(A.to_shapely(), E.to_shapely()))
    if AE.is_empty:
        return np.zeros(len(alpha))
    coords, offs, grp = intersection_rings(AE, X, alpha, t)
    return _fan_integrals(gamma, coords, offs, grp, len(alpha))


@dataclass
class UnfoldedResult:
    values: dict
    n_nodes: int
    n_perturbed: int
    sign_constant: int

    def __getitem__(self, name):
        return self.values[name]


def kinematic_unfolded(F: MotionFamily, X: PolygonalRegion, mu, A: PolygonalRegion, grid=None,
                       seed: int | None = None, chunk: int = 20000, E: PolygonalRegion | None = None,
                       per_node: bool = False) -> UnfoldedResult:
    """Grid quadrature over motions of the three-piece integral; never builds
    the intersection polygon. Uses the same nodes and nudges as the direct route."""
    mus = mu if isinstance(mu, dict) else {"mu": mu}
    grid = tuple(grid or F.grid)
    rng = rng_for(F.seed if seed is None else seed, "direct-nudge")
    sign = joint_sign_constant()
    total = {k: 0.0 for k in mus}
    nodes = []
    n_nodes = n_pert = 0
    for alpha, t, w in iter_chunks(F, A, X, grid, chunk, E=E):
        n_pert += nudge_nodes(A, X, alpha, t, rng)
        vals = _unfolded_chunk(A, X, mus, alpha, t, sign, E)
        for k in mus:
            total[k] += float(np.dot(vals[k], w))
        n_nodes += len(alpha)
        if per_node:
            nodes.append((alpha, t, w, vals))
    res = UnfoldedResult(total, n_nodes, n_pert, sign)
    if per_node:
        res.nodes = nodes
    return res


def product_check(F: MotionFamily, X: PolygonalRegion, phi: ValuationPair, A: PolygonalRegion,
                  E: PolygonalRegion, grid=None, omega: SmoothedForm | None = None):
    """Both sides of the localized product of the principal kinematic valuation
    with the curvature measure ``phi``: forms route restricted to E against
    motion quadrature of phi(A ∩ gX, E)."""
    lhs = kinematic_forms(F, X, phi, A, omega=omega, E=E).total
    rhs = kinematic_unfolded(F, X, phi, A, grid=grid, E=E)["mu"]
    return lhs, rhs


# --------------------------------------------------------------------------
# orientation calibration and an independent point function


def sigma_fixture(seed: int = 0):
    """Family, shape and a slightly moved square, all contacts inside the plateau."""
    rng = np.random.default_rng(seed)
    F = MotionFamily(3.5, 4.0, 1.0, grid=(32, 32, 32), seed=seed)
    X = PolygonalRegion.from_loops([[(0, 0), (1, 0), (1, 1), (0, 1)]])
    off = np.array([0.2, 0.1]) + rng.uniform(-0.1, 0.1, 2)
    A = PolygonalRegion.from_loops([[tuple(off + p) for p in [(0, 0), (1, 0), (1, 1), (0, 1)]]])
    return F, X, A


def calibrate_sigma_orientation(seed: int = 0) -> int:
    """Pick the global sign of the interpolation term that makes the forms
    route agree with the unfolded route for the Euler characteristic."""
    F, X, A = sigma_fixture(seed)
    om = SmoothedForm(F, X)
    mu = lk0()
    ref = kinematic_unfolded(F, X, mu, A)["mu"]
    res = kinematic_forms(F, X, mu, A, omega=om, orientation=1)
    rest = res.term2 + res.term3 + res.term4
    fits = [k for k in (1, -1) if abs(rest + k * res.term1 - ref) <= 1e-3 * abs(ref)]
    if len(fits) != 1 or abs(res.term1) <= 1e-3 * abs(ref):
        raise RuntimeError(f"interpolation orientation calibration is ambiguous: {fits}")
    return fits[0]


@lru_cache(maxsize=1)
def sigma_orientation() -> int:
    return calibrate_sigma_orientation(0)


def point_function_via_omega(F: MotionFamily, X: PolygonalRegion, x, omega: SmoothedForm | None = None,
                             n_theta: int = 128, order: int = 16) -> float:
    """f(x) from omega alone: move the point outward along a ray until it is
    out of reach and integrate the variation of the singleton, which is the
    fiber integral of e -| omega at the antipodal direction."""
    omega = omega or SmoothedForm(F, X)
    x = np.asarray(x, dtype=float)
    rx = math.hypot(*x)
    e = x / rx if rx > 0 else np.array([1.0, 0.0])
    reach = omega.reach + 1e-9
    start = max(rx, 0.0)
    # ray parameter s from |x| to the reach, with breaks where the density band is crossed
    rX = omega.reach - F.R1
    breaks = sorted({b for b in (F.R0 - rX, F.R0 + rX, F.R1 - rX, F.R1 + rX) if start < b < reach})
    s, ws = quad.breakpoint_rule(start, reach, breaks, order * 8, kmin=max(1, len(breaks) + 1))
    th = np.arange(n_theta) * (TWO_PI / n_theta)
    S = np.repeat(s, n_theta)
    T = np.tile(th, len(s)) + math.pi
    p, q, r = omega(S * e[0], S * e[1], T)
    deriv = (q * e[0] + r * e[1]).reshape(len(s), n_theta).sum(axis=1) * (TWO_PI / n_theta)
    return -float(np.dot(deriv, ws))
