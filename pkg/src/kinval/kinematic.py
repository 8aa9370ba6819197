"""Measured families of rigid motions, the point function f, the smoothed
2-form omega, and direct evaluation of kinematic valuations

    nu(A) = integral over motions g of mu(A ∩ gX) rho(g) dg.

Motions are ``x -> R(alpha) x + t`` with ``alpha`` in [0, 2pi) and the
density depends on |t| only: it equals ``c`` for |t| <= R0, vanishes for
|t| >= R1 and is C-infinity in between.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math
import time

import numpy as np
import shapely
from scipy.interpolate import CubicHermiteSpline

from . import kernels
from . import quadrature as quad
from .errors import NonTransverse, QuadratureFailure
from .geometry import (LENGTH_TOL, ANGLE_TOL, TWO_PI, PointSet, PolygonalRegion, area_perimeter,
                       diameter_radius, wrap_angle)
from .normal_cycle import NormalCycle, build_normal_cycle, concat, cycle_from_rings, integrate_form
from .seeding import rng_for

PROFILES = ("bump", "indicator")


def _psi(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """C-infinity step: 1 for u <= 0, 0 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a = _psi(u)
    b = _psi(1.0 - u)
    return b / (a + b)


def smooth_step_derivative(u):
    u = np.asarray(u, dtype=float)
    a = _psi(u)
    b = _psi(1.0 - u)
    inner = (u > 0) & (u < 1)
    da = np.zeros_like(u)
    db = np.zeros_like(u)
    da[inner] = a[inner] / u[inner] ** 2
    db[inner] = -b[inner] / (1.0 - u[inner]) ** 2
    den = (a + b) ** 2
    return (db * a - b * da) / den


@dataclass(frozen=True)
class MotionFamily:
    """Rigid motions with a radial plateau density.

    ``rotations=False`` freezes alpha at 0 (translations only); such a
    family is not admissible and exists to exercise the checks.
    """

    R0: float = 3.0
    R1: float = 3.5
    c: float = 1.0
    profile: str = "bump"
    rotations: bool = True
    grid: tuple = (64, 64, 64)
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.R0 < self.R1):
            raise ValueError("plateau radii must satisfy 0 < R0 < R1")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")

    # -- radial profile ----------------------------------------------------

    def rho_radial(self, r):
        r = np.asarray(r, dtype=float)
        if self.profile == "indicator":
            return np.where(r <= 0.5 * (self.R0 + self.R1), self.c, 0.0)
        return self.c * smooth_step((r - self.R0) / (self.R1 - self.R0))

    def rho_radial_derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.profile == "indicator":
            return np.zeros_like(r)
        w = self.R1 - self.R0
        return self.c * smooth_step_derivative((r - self.R0) / w) / w

    def density(self, alpha, tx, ty):
        return np.broadcast_to(self.rho_radial(np.hypot(tx, ty)), np.broadcast(alpha, tx, ty).shape)

    @property
    def alpha_measure(self) -> float:
        return TWO_PI if self.rotations else 1.0

    @cached_property
    def _moment_spline(self):
        """Hermite interpolant of K(r) = int_0^r s rho(s) ds on the transition band."""
        n = 4097
        r = np.linspace(self.R0, self.R1, n)
        x, w = quad.gauss_legendre(12)
        lo, hi = r[:-1], r[1:]
        nodes = lo[:, None] + (hi - lo)[:, None] * x[None, :]
        cell = ((hi - lo)[:, None] * w[None, :] * nodes * self.rho_radial(nodes)).sum(axis=1)
        K = 0.5 * self.c * self.R0 ** 2 + np.concatenate(([0.0], np.cumsum(cell)))
        return CubicHermiteSpline(r, K, r * self.rho_radial(r))

    def radial_moment(self, r):
        """K(r) = integral over 0 <= s <= r of s rho(s) ds."""
        r = np.abs(np.asarray(r, dtype=float))
        if self.profile == "indicator":
            return 0.5 * self.c * np.minimum(r, 0.5 * (self.R0 + self.R1)) ** 2
        out = 0.5 * self.c * np.minimum(r, self.R0) ** 2
        band = (r > self.R0) & (r < self.R1)
        if np.any(band):
            out[band] = self._moment_spline(r[band])
        out[r >= self.R1] = self._total_moment
        return out

    @cached_property
    def _total_moment(self) -> float:
        if self.profile == "indicator":
            return 0.5 * self.c * (0.5 * (self.R0 + self.R1)) ** 2
        return float(self._moment_spline(self.R1))

    @cached_property
    def band_table(self):
        """(band radii, spline breakpoints, spline coefficients, K(infinity)) for compiled kernels."""
        if self.profile == "indicator":
            return (np.array([0.5 * (self.R0 + self.R1)]), np.zeros(2), np.zeros((4, 1)),
                    self._total_moment)
        sp = self._moment_spline
        return (np.array([self.R0, self.R1]), np.ascontiguousarray(sp.x),
                np.ascontiguousarray(sp.c), self._total_moment)

    def mass(self) -> float:
        """Total mass of the density over the motion group."""
        return self.alpha_measure * TWO_PI * self._total_moment

    def _h(self, r):
        """K(r) / r^2, continuous at r = 0."""
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, 0.5 * self.c)
        far = r > self.R0
        if self.profile == "indicator":
            far = r > 0.5 * (self.R0 + self.R1)
        if np.any(far):
            out[far] = self.radial_moment(r[far]) / r[far] ** 2
        return out

    def polygon_mass(self, loops_pts: list) -> float:
        """Integral of the radial density over a polygon given by oriented loops."""
        val = polygon_masses(self, [np.asarray(lp, dtype=float) for lp in loops_pts], np.zeros((1, 2)))
        return float(val[0])

    def with_density_scale(self, k: float) -> "MotionFamily":
        return MotionFamily(self.R0, self.R1, self.c * k, self.profile, self.rotations, self.grid, self.seed)


def _band_radii(F: MotionFamily) -> tuple:
    return (F.R0, F.R1) if F.profile == "bump" else (0.5 * (F.R0 + F.R1),)


def _split_line_integral(F: MotionFamily, q0, d, fn, inner_value, order):
    """Integral over u in [0, 1] of fn(|q0 + u d|) |d| for every row.

    The segment is cut where its distance to the origin crosses the edges of
    the density band; pieces inside the plateau take ``inner_value``,
    the others a fixed Gauss-Legendre rule.
    """
    n = len(q0)
    L = np.hypot(d[:, 0], d[:, 1])
    dd = L * L
    w_star = -(q0 * d).sum(axis=1) / dd
    h2 = np.maximum((q0 * q0).sum(axis=1) - dd * w_star ** 2, 0.0)
    cols = []
    for R in _band_radii(F):
        half = np.sqrt(np.where(R * R > h2, (R * R - h2) / dd, np.nan))
        cols += [w_star - half, w_star + half]
    br = np.column_stack(cols)
    br = np.where(np.isnan(br), 1.0, np.clip(br, 0.0, 1.0))
    cuts = np.sort(np.column_stack([np.zeros(n), br, np.ones(n)]), axis=1)
    s0, s1 = cuts[:, :-1], cuts[:, 1:]
    length = (s1 - s0) * L[:, None]
    um = 0.5 * (s0 + s1)
    mid_r = np.sqrt(dd[:, None] * (um - w_star[:, None]) ** 2 + h2[:, None])
    inner = mid_r <= _band_radii(F)[0]
    vals = (inner_value * length * inner).sum(axis=1)
    rest = ~inner & (length > 0)
    if np.any(rest):
        x, w = quad.gauss_legendre(order)
        item = np.broadcast_to(np.arange(n)[:, None], s0.shape)[rest]
        nodes = s0[rest][:, None] + (s1 - s0)[rest][:, None] * x[None, :]
        r = np.sqrt(dd[item][:, None] * (nodes - w_star[item][:, None]) ** 2 + h2[item][:, None])
        vals += np.bincount(item, (fn(r) * w[None, :]).sum(axis=1) * length[rest], minlength=n)
    return vals


def polygon_masses(F: MotionFamily, loops: list, shifts: np.ndarray, order: int = 64) -> np.ndarray:
    """Density mass of the translates ``loops + shift`` for every row of ``shifts``.

    Uses the divergence theorem with the radial field t K(|t|)/|t|^2 so only
    1D edge integrals remain.
    """
    shifts = np.asarray(shifts, dtype=float).reshape(-1, 2)
    e0 = np.concatenate(loops)
    e1 = np.concatenate([np.roll(lp, -1, axis=0) for lp in loops])
    nE = len(e0)
    P = len(shifts)
    q0 = (e0[None, :, :] + shifts[:, None, :]).reshape(-1, 2)
    q1 = (e1[None, :, :] + shifts[:, None, :]).reshape(-1, 2)
    d = q1 - q0
    L = np.hypot(d[:, 0], d[:, 1])
    n = np.column_stack([d[:, 1], -d[:, 0]]) / L[:, None]
    lever = (q0 * n).sum(axis=1)
    # whole edge inside the plateau: closed form
    rmax = np.maximum(np.hypot(*q0.T), np.hypot(*q1.T))
    plateau_r = F.R0 if F.profile == "bump" else 0.5 * (F.R0 + F.R1)
    easy = rmax <= plateau_r
    vals = np.zeros(len(q0))
    vals[easy] = 0.5 * F.c * L[easy]
    hard = np.flatnonzero(~easy & (np.abs(lever) > 0))
    if hard.size:
        if kernels.BACKEND == "numba":
            radii, sx, sc, k_inf = F.band_table
            x, w = quad.gauss_legendre(order)
            vals[hard] = kernels.line_h_loop(np.ascontiguousarray(q0[hard]), np.ascontiguousarray(d[hard]),
                                             radii, float(F.c), sx, sc, float(k_inf), x, w)
        else:
            vals[hard] = _split_line_integral(F, q0[hard], d[hard], F._h, 0.5 * F.c, order)
    return (lever * vals).reshape(P, nE).sum(axis=1)


# --------------------------------------------------------------------------
# admissibility


@dataclass
class AdmissibilityReport:
    bounded_support: bool
    smooth: bool
    submersive: bool
    min_rank: int
    details: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.bounded_support and self.smooth and self.submersive

    def __bool__(self) -> bool:
        return self.ok


def lifted_motion(alpha, t, xi):
    """(R x + t, theta + alpha) for xi = (x, y, theta)."""
    c, s = math.cos(alpha), math.sin(alpha)
    x, y, th = xi
    return np.array([c * x - s * y + t[0], s * x + c * y + t[1], th + alpha])


def admissibility_check(F: MotionFamily, n_samples: int = 100, seed: int | None = None) -> AdmissibilityReport:
    """Bounded support, smoothness of the density across its transition band
    (finite differences), and rank 3 of p -> lifted motion of xi at samples."""
    details = []
    seed = F.seed if seed is None else seed
    rng = rng_for(seed, "admissibility")
    r_out = F.R1 + rng.random(50) * F.R1
    bounded = bool(np.all(F.rho_radial(r_out) == 0.0))
    if not bounded:
        details.append("density does not vanish beyond R1")
    # first differences must halve with the step for a smooth density
    r = np.linspace(max(F.R0 - 0.25 * (F.R1 - F.R0), 0.0), F.R1 + 0.25 * (F.R1 - F.R0), 4001)
    jumps = []
    for h in (1e-5, 5e-6, 2.5e-6):
        jumps.append(float(np.max(np.abs(F.rho_radial(r + h) - F.rho_radial(r - h)))))
    scale = max(abs(F.c), 1e-300)
    smooth = jumps[-1] <= 1e-12 * scale or (jumps[1] <= 0.6 * jumps[0] and jumps[2] <= 0.6 * jumps[1])
    if not smooth:
        details.append(f"density jumps across the transition band (max difference {jumps[-1]:.3g})")
    ranks = []
    for _ in range(n_samples):
        alpha = rng.uniform(0, TWO_PI)
        t = rng.uniform(-F.R0, F.R0, 2)
        xi = np.array([*rng.uniform(-2, 2, 2), rng.uniform(0, TWO_PI)])
        h = 1e-6
        cols = []
        params = [(1, 0, 0), (0, 1, 0), (0, 0, 1)] if F.rotations else [(0, 1, 0), (0, 0, 1)]
        for da, dx, dy in params:
            plus = lifted_motion(alpha + h * da, t + h * np.array([dx, dy]), xi)
            minus = lifted_motion(alpha - h * da, t - h * np.array([dx, dy]), xi)
            cols.append((plus - minus) / (2 * h))
        ranks.append(int(np.linalg.matrix_rank(np.column_stack(cols), tol=1e-6)))
    min_rank = min(ranks)
    submersive = min_rank == 3
    if not submersive:
        details.append(f"differential has rank {min_rank} < 3")
    return AdmissibilityReport(bounded, smooth, submersive, min_rank, details)


# --------------------------------------------------------------------------
# the point function f


def _rot(alpha):
    c, s = np.cos(alpha), np.sin(alpha)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def point_function_f(F: MotionFamily, X: PolygonalRegion, x, n_alpha: int = 64,
                     rtol: float = 1e-10, max_alpha: int = 1024) -> np.ndarray | float:
    """Density mass of the motions g with x in gX, for one point or an (m, 2) array.

    For each alpha the admissible translations form the polygon
    x - R(alpha) X; its density mass is a boundary integral. The alpha
    integral uses the periodic trapezoid rule, doubled until two successive
    estimates agree to ``rtol`` relative.
    """
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    rX = diameter_radius(X)
    area_X = area_perimeter(X)[0]
    out = np.zeros(len(pts))
    r = np.hypot(pts[:, 0], pts[:, 1])
    plateau_r = F.R0 if F.profile == "bump" else 0.5 * (F.R0 + F.R1)
    covered = r + rX <= plateau_r
    out[covered] = F.c * area_X * F.alpha_measure
    far = r - rX >= F.R1
    todo = np.flatnonzero(~covered & ~far)
    if todo.size == 0:
        return float(out[0]) if scalar else out

    def estimate(idx, n):
        if not F.rotations:
            alphas, wts = np.zeros(1), np.ones(1)
        else:
            alphas = np.arange(n) * (TWO_PI / n)
            wts = np.full(n, TWO_PI / n)
        res = np.zeros(len(idx))
        for a, w in zip(alphas, wts):
            R = _rot(a + math.pi)
            loops = [lp @ R.T for lp in X.loops]
            res += w * polygon_masses(F, loops, pts[idx])
        return res

    n = n_alpha
    prev = estimate(todo, n)
    if not F.rotations:
        out[todo] = prev
        return float(out[0]) if scalar else out
    active = todo
    while True:
        n *= 2
        cur = estimate(active, n)
        done = np.abs(cur - prev) <= rtol * np.maximum(np.abs(cur), 1e-300) + 1e-14
        out[active[done]] = cur[done]
        active = active[~done]
        prev = cur[~done]
        if active.size == 0:
            break
        if n >= max_alpha:
            raise QuadratureFailure("alpha integration of f did not converge")
    return float(out[0]) if scalar else out


def point_function_mc(F: MotionFamily, X: PolygonalRegion, x, n_samples: int = 10**6,
                      seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of f(x) and its standard error."""
    rng = rng_for(seed, "point-function-mc")
    x = np.asarray(x, dtype=float)
    R = F.R1
    est, sq = 0.0, 0.0
    shape = X.to_shapely()
    done = 0
    vol = F.alpha_measure * math.pi * R * R
    while done < n_samples:
        m = min(10**6, n_samples - done)
        alpha = rng.uniform(0, TWO_PI, m) if F.rotations else np.zeros(m)
        rad = R * np.sqrt(rng.random(m))
        phi = rng.uniform(0, TWO_PI, m)
        t = np.column_stack([rad * np.cos(phi), rad * np.sin(phi)])
        # x in R X + t  <=>  R^-1 (x - t) in X
        z = x[None, :] - t
        c, s = np.cos(alpha), np.sin(alpha)
        zx = c * z[:, 0] + s * z[:, 1]
        zy = -s * z[:, 0] + c * z[:, 1]
        inside = shapely.contains_xy(shape, zx, zy)
        val = np.where(inside, F.rho_radial(rad), 0.0)
        est += val.sum()
        sq += (val * val).sum()
        done += m
    mean = est / n_samples
    var = max(sq / n_samples - mean * mean, 0.0)
    return vol * mean, vol * math.sqrt(var / n_samples)


# --------------------------------------------------------------------------
# the smoothed form omega


class SmoothedForm:
    """Evaluator of the 2-form omega representing the motion-averaged current
    of N(X), returned as coefficients (p, q, r) of dx^dy, dx^dtheta, dy^dtheta.

    omega is the contraction of dx^dy^dtheta with a vector field W built
    from fiber integrals over N(X): an edge piece with normal theta_e
    contributes, with alpha = theta0 - theta_e,
        W_xy += m * int_0^L rho(y - R(alpha)(p0 + w u)) dw * R(alpha) u,
    and an arc piece at base v contributes
        W_theta += m * int_arc rho(y - R(theta0 - theta') v) dtheta'.
    Values are memoized per query point.
    """

    def __init__(self, F: MotionFamily, X: PolygonalRegion, order: int = 64,
                 memoize: bool = True):
        if not F.rotations:
            raise ValueError("the smoothed form is defined for families with rotations")
        self.F = F
        self.X = X
        self.N = build_normal_cycle(X)
        self.order = order
        self.memoize = memoize
        self._cache: dict = {}
        self.n_evaluations = 0
        N = self.N
        self._eL = np.hypot(*(N.edge_p1 - N.edge_p0).T)
        self._eu = (N.edge_p1 - N.edge_p0) / self._eL[:, None]
        self._eR = np.maximum(np.hypot(*N.edge_p0.T), np.hypot(*N.edge_p1.T))
        self._vR = np.hypot(*N.arc_base.T)
        self._plateau = F.R0 if F.profile == "bump" else 0.5 * (F.R0 + F.R1)

    def _compute(self, pts: np.ndarray) -> np.ndarray:
        if kernels.BACKEND != "numba":
            return self._compute_np(pts)
        N, F = self.N, self.F
        x, w = quad.gauss_legendre(self.order)
        return kernels.omega_loop(np.ascontiguousarray(pts), N.edge_p0, self._eu, self._eL, N.edge_theta,
                                  N.edge_mult.astype(float), self._eR, N.arc_base, N.arc_start,
                                  N.arc_sweep, N.arc_mult.astype(float), self._vR, F.band_table[0],
                                  float(F.c), x, w)

    def _compute_np(self, pts: np.ndarray) -> np.ndarray:
        F, N = self.F, self.N
        P = len(pts)
        out = np.zeros((P, 3))
        if P == 0:
            return out
        y = pts[:, :2]
        th0 = pts[:, 2]
        ry = np.hypot(y[:, 0], y[:, 1])
        nE, nA = N.n_edges, N.n_arcs
        # edges
        if nE:
            a = th0[:, None] - N.edge_theta[None, :]
            ca, sa = np.cos(a), np.sin(a)
            Ru = np.stack([ca * self._eu[None, :, 0] - sa * self._eu[None, :, 1],
                           sa * self._eu[None, :, 0] + ca * self._eu[None, :, 1]], -1)
            integ = np.zeros((P, nE))
            cov = (ry[:, None] + self._eR[None, :]) <= self._plateau
            integ[cov] = F.c * np.broadcast_to(self._eL[None, :], (P, nE))[cov]
            far = (ry[:, None] - self._eR[None, :]) >= F.R1
            todo_p, todo_e = np.nonzero(~cov & ~far)
            if todo_p.size:
                integ[todo_p, todo_e] = self._edge_fibers(y[todo_p], ca[todo_p, todo_e],
                                                          sa[todo_p, todo_e], todo_e)
            integ *= N.edge_mult[None, :]
            out[:, 1] = -(integ * Ru[..., 1]).sum(axis=1)  # q = -W_y
            out[:, 2] = (integ * Ru[..., 0]).sum(axis=1)   # r = W_x
        if nA:
            integ = np.zeros((P, nA))
            cov = (ry[:, None] + self._vR[None, :]) <= self._plateau
            integ[cov] = F.c * np.broadcast_to(N.arc_sweep[None, :], (P, nA))[cov]
            far = np.abs(ry[:, None] - self._vR[None, :]) >= F.R1
            todo_p, todo_a = np.nonzero(~cov & ~far)
            if todo_p.size:
                integ[todo_p, todo_a] = self._arc_fibers(y[todo_p], th0[todo_p], todo_a)
            out[:, 0] = (integ * N.arc_mult[None, :]).sum(axis=1)  # p = W_theta
        return out

    def _split_integral(self, lo, hi, breaks, radius):
        """Integral of rho(radius(item, s)) over [lo, hi] per item.

        ``breaks`` (items, k) holds the parameters where the radius crosses
        the edges of the density band (NaN when absent). Between them the
        integrand is the constant c, zero, or smooth; only the last kind is
        sampled, with a fixed Gauss-Legendre rule.
        """
        F = self.F
        n = len(lo)
        br = np.where(np.isnan(breaks), hi[:, None], np.clip(breaks, lo[:, None], hi[:, None]))
        cuts = np.sort(np.column_stack([lo, br, hi]), axis=1)
        s0, s1 = cuts[:, :-1], cuts[:, 1:]
        length = s1 - s0
        item = np.broadcast_to(np.arange(n)[:, None], s0.shape)
        mid_r = radius(item.ravel(), (0.5 * (s0 + s1)).ravel()).reshape(s0.shape)
        radii = _band_radii(F)
        inner = mid_r <= radii[0]
        band = (mid_r > radii[0]) & (mid_r < radii[-1]) & (length > 0)
        vals = (F.c * length * inner).sum(axis=1)
        if np.any(band):
            x, w = quad.gauss_legendre(self.order)
            bi = item[band]
            a0, ln = s0[band], length[band]
            nodes = a0[:, None] + ln[:, None] * x[None, :]
            rho = F.rho_radial(radius(np.repeat(bi, len(x)), nodes.ravel())).reshape(nodes.shape)
            vals += np.bincount(bi, (rho * w[None, :]).sum(axis=1) * ln, minlength=n)
        return vals

    def _edge_fibers(self, yy, cA, sA, edges):
        N = self.N
        p0 = N.edge_p0[edges]
        u = self._eu[edges]
        # in the rotated frame: z(w) = R(p0 + w u); distance to y along the line
        rp = np.column_stack([cA * p0[:, 0] - sA * p0[:, 1], sA * p0[:, 0] + cA * p0[:, 1]])
        ru = np.column_stack([cA * u[:, 0] - sA * u[:, 1], sA * u[:, 0] + cA * u[:, 1]])
        rel = yy - rp
        w_star = (rel * ru).sum(axis=1)
        h2 = np.maximum((rel * rel).sum(axis=1) - w_star ** 2, 0.0)
        cols = []
        for R in _band_radii(self.F):
            half = np.sqrt(np.where(R * R > h2, R * R - h2, np.nan))
            cols += [w_star - half, w_star + half]

        def radius(item, w):
            return np.sqrt((w - w_star[item]) ** 2 + h2[item])

        lo = np.zeros(len(edges))
        return self._split_integral(lo, self._eL[edges], np.column_stack(cols), radius)

    def _arc_fibers(self, yy, th0, arcs):
        N = self.N
        v = N.arc_base[arcs]
        start = N.arc_start[arcs]
        sweep = N.arc_sweep[arcs]
        d = np.hypot(yy[:, 0], yy[:, 1])
        e = np.hypot(v[:, 0], v[:, 1])
        # the moving point has polar angle phi_v + th0 - theta'
        base = np.arctan2(v[:, 1], v[:, 0]) + th0 - np.arctan2(yy[:, 1], yy[:, 0])
        de = 2.0 * d * e
        cols = []
        for R in _band_radii(self.F):
            with np.errstate(divide="ignore", invalid="ignore"):
                kap = (d * d + e * e - R * R) / de
            ok = (de > 0) & (np.abs(kap) < 1)
            g = np.arccos(np.clip(kap, -1, 1))
            for cand in (base - g, base + g):
                tp = start + np.mod(cand - start, TWO_PI)
                cols.append(np.where(ok & (tp < start + sweep), tp, np.nan))

        def radius(item, tp):
            return np.sqrt(np.maximum(d[item] ** 2 + e[item] ** 2
                                      - de[item] * np.cos(base[item] - tp), 0.0))

        return self._split_integral(start, start + sweep, np.column_stack(cols), radius)

    def evaluate_points(self, pts) -> np.ndarray:
        pts = np.ascontiguousarray(np.asarray(pts, dtype=float).reshape(-1, 3))
        if not self.memoize:
            self.n_evaluations += len(pts)
            return self._compute(pts)
        keys = [row.tobytes() for row in pts]
        missing = {}
        for k, row in zip(keys, pts):
            if k not in self._cache and k not in missing:
                missing[k] = row
        if missing:
            rows = np.array(list(missing.values()))
            vals = np.empty((len(rows), 3))
            for s in range(0, len(rows), 4096):
                vals[s:s + 4096] = self._compute(rows[s:s + 4096])
            self.n_evaluations += len(rows)
            for k, v in zip(missing.keys(), vals):
                self._cache.setdefault(k, v)
        return np.array([self._cache[k] for k in keys]).reshape(-1, 3)

    def __call__(self, x, y, t):
        shape = np.broadcast(x, y, t).shape
        pts = np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape).ravel() for v in (x, y, t)], 1)
        vals = self.evaluate_points(pts)
        return tuple(vals[:, k].reshape(shape) for k in range(3))

    def antipodal(self):
        """Coefficients of the pullback by theta -> theta + pi."""
        return lambda x, y, t: self(x, y, np.asarray(t) + math.pi)

    @property
    def reach(self) -> float:
        """omega vanishes outside the disk of this radius."""
        return self.F.R1 + diameter_radius(self.X)


def smoothed_form_omega(F: MotionFamily, X: PolygonalRegion, xi0) -> tuple[float, float, float]:
    """(p, q, r) of omega at one point xi0 = (x, y, theta)."""
    vals = SmoothedForm(F, X, memoize=False).evaluate_points(np.asarray(xi0, dtype=float).reshape(1, 3))
    return tuple(float(v) for v in vals[0])


def radial_cutoff(R_in: float, R_out: float):
    """Base function equal to 1 for |x| <= R_in and 0 for |x| >= R_out (smooth)."""
    def h(x, y):
        return smooth_step((np.hypot(x, y) - R_in) / (R_out - R_in))
    return h


def _polar_rule(r_breaks, n_r, n_phi):
    r, wr = quad.breakpoint_rule(r_breaks[0], r_breaks[-1], r_breaks[1:-1], n_r, kmin=8)
    phi = np.arange(n_phi) * (TWO_PI / n_phi)
    R, PHI = np.meshgrid(r, phi, indexing="ij")
    W = (wr * r)[:, None] * np.full(n_phi, TWO_PI / n_phi)[None, :]
    return np.column_stack([(R * np.cos(PHI)).ravel(), (R * np.sin(PHI)).ravel()]), W.ravel()


def pairing_check(F: MotionFamily, X: PolygonalRegion, tau, n_alpha: int = 32, n_r: int = 48,
                  n_phi: int = 48, n_theta: int = 48, omega: SmoothedForm | None = None):
    """Both sides of  int_P int_{gN(X)} tau rho(g) dg  =  int omega ^ tau.

    ``tau`` is a 1-form on plane x circle. The left side integrates over
    motions (alpha by the trapezoid rule, t in polar coordinates), the
    right side over plane x circle using the smoothed form.
    """
    N = build_normal_cycle(X)
    # left: motions
    t_pts, t_w = _polar_rule([0.0, F.R0, F.R1], n_r, n_phi)
    rho = F.rho_radial(np.hypot(*t_pts.T))
    keep = rho != 0
    t_pts, t_w, rho = t_pts[keep], t_w[keep], rho[keep]
    alphas = np.arange(n_alpha) * (TWO_PI / n_alpha)
    lhs = 0.0
    for a in alphas:
        c, s = math.cos(a), math.sin(a)
        Rm = np.array([[c, -s], [s, c]])
        K = len(t_pts)
        cyc = NormalCycle(
            (N.edge_p0 @ Rm.T)[None] .repeat(K, 0).reshape(-1, 2) + np.repeat(t_pts, N.n_edges, 0),
            (N.edge_p1 @ Rm.T)[None].repeat(K, 0).reshape(-1, 2) + np.repeat(t_pts, N.n_edges, 0),
            np.tile(wrap_angle(N.edge_theta + a), K), np.tile(N.edge_mult, K),
            (N.arc_base @ Rm.T)[None].repeat(K, 0).reshape(-1, 2) + np.repeat(t_pts, N.n_arcs, 0),
            np.tile(wrap_angle(N.arc_start + a), K), np.tile(N.arc_sweep, K), np.tile(N.arc_mult, K),
            np.repeat(np.arange(K), N.n_edges), np.repeat(np.arange(K), N.n_arcs), K)
        per = integrate_form(cyc, tau, per_group=True)
        lhs += (TWO_PI / n_alpha) * float((per * rho * t_w).sum())
    # right: plane x circle
    om = omega or SmoothedForm(F, X)
    rX = diameter_radius(X)
    breaks = sorted({0.0, max(F.R0 - rX, 0.0), F.R0, min(F.R1, F.R0 + rX), F.R1, F.R1 + rX})
    y_pts, y_w = _polar_rule(breaks, n_r, n_phi)
    th = np.arange(n_theta) * (TWO_PI / n_theta)
    Y = np.repeat(y_pts, n_theta, 0)
    T = np.tile(th, len(y_pts))
    a_, b_, c_ = tau(Y[:, 0], Y[:, 1], T)
    p, q, r = om(Y[:, 0], Y[:, 1], T)
    dens = (a_ * r - b_ * q + c_ * p).reshape(len(y_pts), n_theta)
    rhs = float((dens.sum(axis=1) * (TWO_PI / n_theta) * y_w).sum())
    return lhs, rhs


# --------------------------------------------------------------------------
# motion grid with breakpoint-aligned panels


def _edge_angles(R: PolygonalRegion) -> np.ndarray:
    a0, a1 = R.edges
    d = a1 - a0
    return np.arctan2(d[:, 1], d[:, 0])


def critical_alphas(A: PolygonalRegion, X: PolygonalRegion) -> np.ndarray:
    """Rotation angles at which an edge of A is parallel to a rotated edge of X."""
    psi = _edge_angles(A)[:, None] - _edge_angles(X)[None, :]
    base = np.mod(psi.ravel(), math.pi)
    return np.unique(np.concatenate([base, base + math.pi]))


def _segment_x_crossings(s0, s1):
    """x-coordinates where pairs of segments cross."""
    if len(s0) < 2:
        return np.zeros(0)
    from .geometry import segment_crossings

    i, j, _, _, pts = segment_crossings(s0, s1, s0, s1)
    return pts[i < j, 0]


@dataclass
class MotionNodes:
    """Quadrature nodes for one rotation angle."""

    alpha: float
    t: np.ndarray
    weight: np.ndarray


def _window_contacts(A: PolygonalRegion, E: PolygonalRegion):
    """Extra contact geometry for integrands localized to E: the edges of E,
    and as points the vertices of E plus the crossings of the two boundaries."""
    from .geometry import segment_crossings

    e0, e1 = E.edges
    a0, a1 = A.edges
    *_, pts = segment_crossings(a0, a1, e0, e1)
    return np.concatenate([E.vertices, pts.reshape(-1, 2)]), e0, e1


def motion_grid(F: MotionFamily, A, X: PolygonalRegion, grid=None, crossing_breaks: bool = True,
                E: PolygonalRegion | None = None):
    """Yield breakpoint-aligned tensor nodes, one rotation angle at a time.

    ``grid = (n_alpha, n_x, n_y)`` are target node counts for the full
    ranges [0, 2pi) and [-R1, R1]; they are spread over panels whose ends
    sit where the integrand t -> mu(A ∩ gX) stops being smooth (contact
    events between edges and vertices, the edges of the density plateau).
    Nodes where A ∩ gX is empty are skipped. With ``E`` the contact events
    of gX with the boundary of E are panel ends as well.
    """
    n_a, n_x, n_y = grid or F.grid
    Av = A.points if isinstance(A, PointSet) else A.vertices
    if isinstance(A, PointSet):
        Ae0 = Ae1 = np.zeros((0, 2))
    else:
        Ae0, Ae1 = A.edges
    box_v = Av
    if E is not None and not isinstance(A, PointSet):
        wv, we0, we1 = _window_contacts(A, E)
        Av = np.concatenate([Av, wv])
        Ae0 = np.concatenate([Ae0, we0])
        Ae1 = np.concatenate([Ae1, we1])
    Xv = X.vertices
    Xe0, Xe1 = X.edges
    if F.rotations:
        crit = critical_alphas(A, X) if not isinstance(A, PointSet) else np.zeros(0)
        if E is not None and not isinstance(A, PointSet):
            crit = np.unique(np.concatenate([crit, critical_alphas(E, X)]))
        alphas, wa = quad.breakpoint_rule(0.0, TWO_PI, crit, n_a, kmin=2)
    else:
        alphas, wa = np.zeros(1), np.ones(1)
    span = 2.0 * F.R1
    radial_breaks = [F.R0, F.R1] if F.profile == "bump" else [0.5 * (F.R0 + F.R1)]
    for alpha, w_alpha in zip(alphas, wa):
        c, s = math.cos(alpha), math.sin(alpha)
        Rm = np.array([[c, -s], [s, c]])
        RXv = Xv @ Rm.T
        D = (box_v[:, None, :] - RXv[None, :, :]).reshape(-1, 2)
        # contact segments in translation space
        seg0 = [(Ae0[:, None, :] - RXv[None, :, :]).reshape(-1, 2),
                (Av[:, None, :] - (Xe0 @ Rm.T)[None, :, :]).reshape(-1, 2)]
        seg1 = [(Ae1[:, None, :] - RXv[None, :, :]).reshape(-1, 2),
                (Av[:, None, :] - (Xe1 @ Rm.T)[None, :, :]).reshape(-1, 2)]
        s0 = np.concatenate(seg0)
        s1 = np.concatenate(seg1)
        lo_x, hi_x = max(-F.R1, D[:, 0].min()), min(F.R1, D[:, 0].max())
        lo_y, hi_y = D[:, 1].min(), D[:, 1].max()
        if lo_x >= hi_x:
            continue
        bx = [D[:, 0], np.array([-r for r in radial_breaks] + radial_breaks)]
        if crossing_breaks:
            bx.append(_segment_x_crossings(s0, s1))
        nx_here = max(2, int(round(n_x * (hi_x - lo_x) / span)))
        tx, wx = quad.breakpoint_rule(lo_x, hi_x, np.concatenate(bx), nx_here, kmin=2)
        dxs = s1[:, 0] - s0[:, 0]
        ts, ws = [], []
        for x0, w0 in zip(tx, wx):
            ylim = math.sqrt(max(F.R1 * F.R1 - x0 * x0, 0.0))
            lo, hi = max(lo_y, -ylim), min(hi_y, ylim)
            if lo >= hi:
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                u = (x0 - s0[:, 0]) / dxs
            hit = (dxs != 0) & (u > 0) & (u < 1)
            by = s0[hit, 1] + u[hit] * (s1[hit, 1] - s0[hit, 1])
            rb = [math.sqrt(r * r - x0 * x0) for r in radial_breaks if r > abs(x0)]
            by = np.concatenate([by, rb, [-v for v in rb]])
            ny_here = max(2, int(round(n_y * (hi - lo) / span)))
            ty, wy = quad.breakpoint_rule(lo, hi, by, ny_here, kmin=2)
            ts.append(np.column_stack([np.full(len(ty), x0), ty]))
            ws.append(w0 * wy)
        if not ts:
            continue
        T = np.concatenate(ts)
        W = np.concatenate(ws) * w_alpha * F.rho_radial(np.hypot(T[:, 0], T[:, 1]))
        keep = W != 0
        yield MotionNodes(float(alpha), T[keep], W[keep])


# --------------------------------------------------------------------------
# batched per-motion evaluation


def moved_edges(X: PolygonalRegion, alpha: np.ndarray, t: np.ndarray):
    """Edge endpoints of R(alpha_k) X + t_k, shape (K, nX, 2) each."""
    R = _rot(np.asarray(alpha, dtype=float))
    e0, e1 = X.edges
    B0 = np.einsum("kab,jb->kja", R, e0) + t[:, None, :]
    B1 = np.einsum("kab,jb->kja", R, e1) + t[:, None, :]
    return B0, B1


def _multipolygons_of_moved(X: PolygonalRegion, alpha: np.ndarray, t: np.ndarray):
    """Vectorized shapely geometries of R(alpha_k) X + t_k."""
    K = len(alpha)
    _, base, (ring_offs, poly_offs, _) = shapely.to_ragged_array([X.to_shapely()])
    coords = (np.einsum("kab,jb->kja", _rot(alpha), base) + t[:, None, :]).reshape(-1, 2)
    nc = len(base)
    n_ring = len(ring_offs) - 1
    n_poly = len(poly_offs) - 1
    ring_all = np.append((ring_offs[:-1][None, :] + nc * np.arange(K)[:, None]).ravel(), nc * K)
    poly_all = np.append((poly_offs[:-1][None, :] + n_ring * np.arange(K)[:, None]).ravel(), n_ring * K)
    mp_all = np.arange(K + 1) * n_poly
    return shapely.from_ragged_array(shapely.GeometryType.MULTIPOLYGON, coords,
                                     (ring_all, poly_all, mp_all))


def _fan_integrals(gamma, coords, ring_offsets, ring_group, n_groups):
    """Integral of a polynomial base form over oriented rings, per group.

    Each ring is fanned from its first vertex into signed triangles.
    """
    if coords.shape[0] == 0:
        return np.zeros(n_groups)
    lens = np.diff(ring_offsets)
    ring_of = np.repeat(np.arange(len(lens)), lens)
    idx = np.arange(len(coords))
    start = ring_offsets[:-1][ring_of]
    nxt = np.where(idx + 1 == ring_offsets[1:][ring_of], start, idx + 1)
    tris = np.stack([coords[start], coords, coords[nxt]], axis=1)
    valid = (idx != start) & (nxt != start)
    deg = gamma.xy_degree
    order = 4 if deg is None else deg // 2 + 1
    vals = quad.integrate_triangles(gamma, tris[valid], order)
    return np.bincount(ring_group[ring_of[valid]], vals, minlength=n_groups)


def intersection_rings(A: PolygonalRegion, X: PolygonalRegion, alpha, t):
    """Oriented rings of A ∩ (R(alpha_k) X + t_k) for all k.

    Returns coords (no closing vertex), ring offsets, ring group ids.
    """
    moved = _multipolygons_of_moved(X, alpha, t)
    inter = shapely.intersection(A.to_shapely(), moved)
    parts, owner = shapely.get_parts(inter, return_index=True)
    if len(parts) == 0:
        return np.zeros((0, 2)), np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    types = shapely.get_type_id(parts)
    poly = types == 3
    if not np.all(poly | shapely.is_empty(parts)):
        bad = np.unique(owner[~poly & ~shapely.is_empty(parts)])
        raise NonTransverse(f"{len(bad)} motion(s) produced lower-dimensional intersections",
                            bad.tolist())
    parts, owner = parts[poly], owner[poly]
    parts = shapely.orient_polygons(parts, exterior_cw=False)
    _, coords, (ring_offs, poly_offs) = shapely.to_ragged_array(parts)
    ring_poly = np.repeat(np.arange(len(poly_offs) - 1), np.diff(poly_offs))
    ring_group = owner[ring_poly]
    # drop closing vertices
    lens = np.diff(ring_offs)
    keep = np.ones(len(coords), dtype=bool)
    keep[ring_offs[1:] - 1] = False
    new_offs = np.concatenate(([0], np.cumsum(lens - 1)))
    return coords[keep], new_offs, ring_group


@dataclass
class DirectResult:
    values: dict
    n_nodes: int
    n_perturbed: int
    grid: tuple
    wall_time: float
    perturbations: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.values[name]


def _direct_chunk(A, X, mus, alpha, t):
    """mu(A ∩ g_k X) for every motion k and every valuation pair."""
    K = len(alpha)
    coords, offs, grp = intersection_rings(A, X, alpha, t)
    cyc = cycle_from_rings(coords, offs, grp, K)
    out = {}
    for name, mu in mus.items():
        val = np.zeros(K)
        if not mu.beta_is_zero:
            val += integrate_form(cyc, mu.beta, per_group=True)
        if not mu.gamma.is_zero:
            val += _fan_integrals(mu.gamma, coords, offs, grp, K)
        out[name] = val
    return out


def transverse_mask(A: PolygonalRegion, X: PolygonalRegion, alpha, t, tol=LENGTH_TOL, angle_tol=ANGLE_TOL):
    a0, a1 = A.edges
    B0, B1 = moved_edges(X, alpha, t)
    return kernels.transverse_batch(a0, a1, B0, B1, tol, angle_tol)


def nudge_nodes(A, X, alpha, t, rng, magnitude=1e-7, retries=3, log=None):
    """Perturb non-transverse motions in place; returns the number nudged."""
    ok = transverse_mask(A, X, alpha, t)
    bad = np.flatnonzero(~ok)
    n_bad = bad.size
    for _ in range(retries):
        if bad.size == 0:
            break
        kick = rng.uniform(-magnitude, magnitude, (bad.size, 3))
        if log is not None:
            for b, k in zip(bad, kick):
                log.append({"alpha": float(alpha[b]), "t": [float(t[b, 0]), float(t[b, 1])],
                            "nudge": k.tolist()})
        alpha[bad] += kick[:, 0]
        t[bad] += kick[:, 1:]
        ok_b = transverse_mask(A, X, alpha[bad], t[bad])
        bad = bad[~ok_b]
    if bad.size:
        raise NonTransverse(f"{bad.size} motion(s) stayed non-transverse after {retries} nudges")
    return n_bad


def iter_chunks(F, A, X, grid, chunk, crossing_breaks=True, E=None):
    """Concatenate motion-grid nodes into chunks of about ``chunk`` motions."""
    buf_a, buf_t, buf_w, size = [], [], [], 0
    for nodes in motion_grid(F, A, X, grid, crossing_breaks, E):
        buf_a.append(np.full(len(nodes.t), nodes.alpha))
        buf_t.append(nodes.t)
        buf_w.append(nodes.weight)
        size += len(nodes.t)
        if size >= chunk:
            yield np.concatenate(buf_a), np.concatenate(buf_t), np.concatenate(buf_w)
            buf_a, buf_t, buf_w, size = [], [], [], 0
    if size:
        yield np.concatenate(buf_a), np.concatenate(buf_t), np.concatenate(buf_w)


def kinematic_direct(F: MotionFamily, X: PolygonalRegion, mu, A: PolygonalRegion, grid=None,
                     seed: int | None = None, chunk: int = 20000, crossing_breaks: bool = True,
                     per_node: bool = False) -> DirectResult:
    """Tensor-grid quadrature of  g -> mu(A ∩ gX) rho(g).

    ``mu`` is a valuation pair or a dict name -> pair (all share the
    intersections). Non-transverse nodes are nudged by a seeded random
    motion of size 1e-7, up to three times.
    """
    t0 = time.perf_counter()
    mus = mu if isinstance(mu, dict) else {"mu": mu}
    grid = tuple(grid or F.grid)
    rng = rng_for(F.seed if seed is None else seed, "direct-nudge")
    total = {k: 0.0 for k in mus}
    nodes = []
    n_nodes = n_pert = 0
    log: list = []
    for alpha, t, w in iter_chunks(F, A, X, grid, chunk, crossing_breaks):
        n_pert += nudge_nodes(A, X, alpha, t, rng, log=log)
        vals = _direct_chunk(A, X, mus, alpha, t)
        for k in mus:
            total[k] += float(np.dot(vals[k], w))
        n_nodes += len(alpha)
        if per_node:
            nodes.append((alpha, t, w, vals))
    res = DirectResult(total if isinstance(mu, dict) else {"mu": total["mu"]}, n_nodes, n_pert, grid,
                       time.perf_counter() - t0, log)
    if per_node:
        res.nodes = nodes
    return res


# --------------------------------------------------------------------------
# Monte Carlo oracle


def _convex(R: PolygonalRegion) -> bool:
    return len(R.loops) == 1 and bool(np.all(R.exterior_angles > 0))


def _sat_overlap_np(Av, Bv):
    """Separating-axis test for convex polygons: Av (nA, 2), Bv (K, nB, 2)."""
    def axes(P):
        d = np.roll(P, -1, axis=-2) - P
        return np.stack([-d[..., 1], d[..., 0]], -1)

    K = Bv.shape[0]
    ax = np.concatenate([np.broadcast_to(axes(Av), (K,) + Av.shape), axes(Bv)], axis=1)
    pa = np.einsum("kmc,nc->kmn", ax, Av)
    pb = np.einsum("kmc,knc->kmn", ax, Bv)
    sep = (pa.max(-1) < pb.min(-1)) | (pb.max(-1) < pa.min(-1))
    return ~sep.any(axis=1)


def kinematic_mc(F: MotionFamily, X: PolygonalRegion, A: PolygonalRegion, n_samples: int = 10**7,
                 seed: int = 0, batch: int = 200000) -> tuple[float, float]:
    """Monte Carlo estimate of  int chi(A ∩ gX) rho(g) dg  with its standard error.

    Translations are drawn uniformly from the disk that can bring X into
    contact with A (radius |A| + |X|, capped at R1).
    """
    rng = rng_for(seed, "kinematic-mc")
    reach = min(F.R1, diameter_radius(A) + diameter_radius(X))
    vol = F.alpha_measure * math.pi * reach * reach
    convex = _convex(A) and _convex(X)
    s1 = s2 = 0.0
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        alpha = rng.uniform(0, TWO_PI, m) if F.rotations else np.zeros(m)
        rad = reach * np.sqrt(rng.random(m))
        phi = rng.uniform(0, TWO_PI, m)
        t = np.column_stack([rad * np.cos(phi), rad * np.sin(phi)])
        if convex:
            Bv = np.einsum("kab,jb->kja", _rot(alpha), X.vertices) + t[:, None, :]
            chi = _sat_overlap_np(A.vertices, Bv).astype(float)
        else:
            coords, offs, grp = intersection_rings(A, X, alpha, t)
            cyc = cycle_from_rings(coords, offs, grp, m)
            chi = np.rint(cyc.turning(per_group=True) / TWO_PI)
        val = chi * F.rho_radial(rad)
        s1 += val.sum()
        s2 += (val * val).sum()
        done += m
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0)
    return vol * mean, vol * math.sqrt(var / n_samples)
