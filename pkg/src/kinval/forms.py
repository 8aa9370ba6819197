"""Differential forms on the plane and on plane x circle, valuation pairs,
the built-in valuations and pointwise checks on forms.

Coordinates on plane x circle are ``(x, y, theta)``. A 1-form is
``a dx + b dy + c dtheta`` and a 2-form ``p dx^dy + q dx^dtheta + r dy^dtheta``.
Coefficients are vectorized callables ``f(x, y, theta)`` that broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
import math
from typing import Callable

import numpy as np
import shapely
from scipy.linalg import expm

from . import quadrature as quad
from .errors import NonVertical, SceneError
from .geometry import PointSet, PolygonalRegion, triangulate
from .normal_cycle import build_normal_cycle, integrate_form, restrict_to_region

TWO_PI = 2.0 * math.pi


def _zero(x, y, t):
    return np.zeros(np.broadcast(x, y, t).shape)


def _full(shape_of, v):
    return np.full(np.broadcast(*shape_of).shape, float(v))


# --------------------------------------------------------------------------
# coefficient forms


@dataclass(frozen=True)
class CoefForm1:
    """``a dx + b dy + c dtheta``.

    ``xy_degree`` / ``theta_degree`` declare the coefficients as polynomials
    of that degree in x, y and trigonometric polynomials of that degree in
    theta; integrators then use exact fixed-order rules. ``None`` means
    unknown.
    """

    a: Callable = _zero
    b: Callable = _zero
    c: Callable = _zero
    name: str = ""
    xy_degree: int | None = None
    theta_degree: int | None = None

    def __call__(self, x, y, t):
        shape = np.broadcast(x, y, t).shape
        return tuple(np.broadcast_to(np.asarray(f(x, y, t), dtype=float), shape)
                     for f in (self.a, self.b, self.c))

    def scaled(self, k: float) -> "CoefForm1":
        return CoefForm1(lambda x, y, t: k * self.a(x, y, t), lambda x, y, t: k * self.b(x, y, t),
                         lambda x, y, t: k * self.c(x, y, t), self.name, self.xy_degree, self.theta_degree)

    def times(self, h: Callable) -> "CoefForm1":
        """Multiply every coefficient by the base function ``h(x, y)``."""
        return CoefForm1(lambda x, y, t: h(x, y) * self.a(x, y, t), lambda x, y, t: h(x, y) * self.b(x, y, t),
                         lambda x, y, t: h(x, y) * self.c(x, y, t), f"{self.name}*h")

    def __add__(self, other: "CoefForm1") -> "CoefForm1":
        deg = lambda u, v: None if u is None or v is None else max(u, v)  # noqa: E731
        return CoefForm1(lambda x, y, t: self.a(x, y, t) + other.a(x, y, t),
                         lambda x, y, t: self.b(x, y, t) + other.b(x, y, t),
                         lambda x, y, t: self.c(x, y, t) + other.c(x, y, t),
                         f"{self.name}+{other.name}", deg(self.xy_degree, other.xy_degree),
                         deg(self.theta_degree, other.theta_degree))

    def antipodal(self) -> "CoefForm1":
        """Pullback by theta -> theta + pi."""
        pi = math.pi
        return CoefForm1(lambda x, y, t: self.a(x, y, t + pi), lambda x, y, t: self.b(x, y, t + pi),
                         lambda x, y, t: self.c(x, y, t + pi), f"s*{self.name}", self.xy_degree, self.theta_degree)


@dataclass(frozen=True)
class CoefForm2:
    """``p dx^dy + q dx^dtheta + r dy^dtheta``."""

    p: Callable = _zero
    q: Callable = _zero
    r: Callable = _zero
    name: str = ""

    def __call__(self, x, y, t):
        shape = np.broadcast(x, y, t).shape
        return tuple(np.broadcast_to(np.asarray(f(x, y, t), dtype=float), shape)
                     for f in (self.p, self.q, self.r))


@dataclass(frozen=True)
class BaseForm2:
    """``g dx^dy`` on the plane."""

    g: Callable = lambda x, y: np.zeros(np.broadcast(x, y).shape)
    name: str = ""
    xy_degree: int | None = None
    is_zero: bool = False

    def __call__(self, x, y):
        return np.broadcast_to(np.asarray(self.g(x, y), dtype=float), np.broadcast(x, y).shape)


ZERO_BASE = BaseForm2(name="0", xy_degree=0, is_zero=True)


@dataclass(frozen=True)
class ValuationPair:
    """A valuation given by a 1-form on plane x circle and a 2-form on the plane."""

    beta: CoefForm1
    gamma: BaseForm2 = ZERO_BASE
    name: str = ""

    @property
    def beta_is_zero(self) -> bool:
        return self.beta.name == "0"


# --------------------------------------------------------------------------
# a small exterior algebra on plane x circle (basis dx, dy, dtheta)


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


class Form:
    """Differential form sampled at points: a map from sorted index tuples to arrays."""

    def __init__(self, degree: int, comps: dict):
        self.degree = degree
        self.comps = {tuple(k): np.asarray(v, dtype=float) for k, v in comps.items()}

    def __add__(self, other: "Form") -> "Form":
        out = dict(self.comps)
        for k, v in other.comps.items():
            out[k] = out[k] + v if k in out else v
        return Form(self.degree, out)

    def __sub__(self, other: "Form") -> "Form":
        return self + other.scaled(-1.0)

    def scaled(self, s) -> "Form":
        return Form(self.degree, {k: s * v for k, v in self.comps.items()})

    def wedge(self, other: "Form") -> "Form":
        out: dict = {}
        for (I, a), (J, b) in product(self.comps.items(), other.comps.items()):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            val = _perm_sign(I + J) * a * b
            out[K] = out[K] + val if K in out else val
        return Form(self.degree + other.degree, out)

    def interior(self, v) -> "Form":
        """Contraction with the vector field ``v = (vx, vy, vtheta)``."""
        out: dict = {}
        for I, a in self.comps.items():
            for pos, idx in enumerate(I):
                K = I[:pos] + I[pos + 1:]
                val = (-1) ** pos * v[idx] * a
                out[K] = out[K] + val if K in out else val
        return Form(self.degree - 1, out)

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(v))) for v in self.comps.values()), default=0.0)

    @classmethod
    def from_coef1(cls, beta, x, y, t) -> "Form":
        a, b, c = beta(x, y, t)
        return cls(1, {(0,): a, (1,): b, (2,): c})

    @classmethod
    def from_coef2(cls, omega, x, y, t) -> "Form":
        p, q, r = omega(x, y, t)
        return cls(2, {(0, 1): p, (0, 2): q, (1, 2): r})


def contact_form(t) -> Form:
    t = np.asarray(t, dtype=float)
    return Form(1, {(0,): np.cos(t), (1,): np.sin(t)})


def reeb_field(t):
    t = np.asarray(t, dtype=float)
    return (np.cos(t), np.sin(t), np.zeros_like(t))


def reeb_decomposition_check(beta, points) -> float:
    """Max coefficient discrepancy of ``beta = alpha^(T-|beta) + T-|(alpha^beta)``.

    ``beta`` is a :class:`CoefForm1`, a :class:`CoefForm2`, or a callable
    ``(x, y, t) -> Form``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    x, y, t = pts.T
    if isinstance(beta, CoefForm1):
        B = Form.from_coef1(beta, x, y, t)
    elif isinstance(beta, CoefForm2):
        B = Form.from_coef2(beta, x, y, t)
    else:
        B = beta(x, y, t)
    al = contact_form(t)
    T = reeb_field(t)
    rhs = al.wedge(B.interior(T)) + al.wedge(B).interior(T)
    return (B - rhs).max_abs()


def verticality_residual(omega, points) -> np.ndarray:
    """Pointwise coefficient of alpha ^ omega: r cos(theta) - q sin(theta)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    x, y, t = pts.T
    _, q, r = omega(x, y, t)
    return r * np.cos(t) - q * np.sin(t)


def verticality_check(omega, points) -> float:
    """Max |alpha ^ omega| over the sample points."""
    return float(np.max(np.abs(verticality_residual(omega, points)), initial=0.0))


def exterior_derivative_fd(omega, points, h: float = 1e-4) -> np.ndarray:
    """Central-difference value of the single coefficient of d(omega):
    dr/dx - dq/dy + dp/dtheta."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    x, y, t = pts.T
    stacked = np.concatenate([
        np.stack([x + h, y, t], 1), np.stack([x - h, y, t], 1),
        np.stack([x, y + h, t], 1), np.stack([x, y - h, t], 1),
        np.stack([x, y, t + h], 1), np.stack([x, y, t - h], 1),
    ])
    p, q, r = omega(stacked[:, 0], stacked[:, 1], stacked[:, 2])
    n = len(pts)
    blk = lambda arr, k: arr[k * n:(k + 1) * n]  # noqa: E731
    dr_dx = (blk(r, 0) - blk(r, 1)) / (2 * h)
    dq_dy = (blk(q, 2) - blk(q, 3)) / (2 * h)
    dp_dt = (blk(p, 4) - blk(p, 5)) / (2 * h)
    return dr_dx - dq_dy + dp_dt


def closedness_check(omega, points, h: float = 1e-4) -> float:
    """Max |d omega| by central finite differences with step ``h``."""
    return float(np.max(np.abs(exterior_derivative_fd(omega, points, h)), initial=0.0))


def wedge_density(beta, omega, x, y, t) -> np.ndarray:
    """Coefficient of dx^dy^dtheta in beta ^ omega."""
    a, b, c = beta(x, y, t)
    p, q, r = omega(x, y, t)
    return a * r - b * q + c * p


def interior_horizontal(delta, v) -> CoefForm1:
    """The 1-form v -| delta for a planar field ``v(x, y) -> (vx, vy)`` lifted horizontally."""

    def coefs(x, y, t):
        vx, vy = v(x, y)
        p, q, r = delta(x, y, t)
        return -p * vy, p * vx, q * vx + r * vy

    return CoefForm1(lambda x, y, t: coefs(x, y, t)[0], lambda x, y, t: coefs(x, y, t)[1],
                     lambda x, y, t: coefs(x, y, t)[2], "v-|delta")


# --------------------------------------------------------------------------
# built-in forms

_MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
N_TRIG = 5
N_MONO = len(_MONOMIALS)
POLY_TRIG_SIZE = 3 * N_MONO * N_TRIG + N_MONO


def _mono_basis(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return [x ** i * y ** j for i, j in _MONOMIALS]


def _trig_basis(t):
    t = np.asarray(t, dtype=float)
    return [np.ones_like(t), np.cos(t), np.sin(t), np.cos(2 * t), np.sin(2 * t)]


def _poly_trig_coef(P: np.ndarray) -> Callable:
    """sum_{m, k} P[m, k] * monomial_m(x, y) * trig_k(theta)."""
    P = np.array(P, dtype=float).reshape(N_MONO, N_TRIG)
    nz = [(m, k, P[m, k]) for m in range(N_MONO) for k in range(N_TRIG) if P[m, k] != 0.0]

    def coef(x, y, t):
        out = np.zeros(np.broadcast(x, y, t).shape)
        if not nz:
            return out
        mono = _mono_basis(x, y)
        trig = _trig_basis(t)
        for m, k, val in nz:
            out = out + val * mono[m] * trig[k]
        return out

    return coef


def lk0(scale: float = 1.0) -> ValuationPair:
    """Euler characteristic: beta = dtheta / 2pi."""
    k = scale / TWO_PI
    beta = CoefForm1(c=lambda x, y, t: _full((x, y, t), k), name="lk0", xy_degree=0, theta_degree=0)
    return ValuationPair(beta, ZERO_BASE, "lk0")


def lk1(scale: float = 1.0) -> ValuationPair:
    """Half the perimeter: beta = (-sin(theta) dx + cos(theta) dy) / 2."""
    h = 0.5 * scale
    beta = CoefForm1(a=lambda x, y, t: -h * np.sin(t) + 0.0 * x * y,
                     b=lambda x, y, t: h * np.cos(t) + 0.0 * x * y,
                     name="lk1", xy_degree=0, theta_degree=1)
    return ValuationPair(beta, ZERO_BASE, "lk1")


def lk2(scale: float = 1.0) -> ValuationPair:
    """Area: gamma = dx^dy."""
    beta = CoefForm1(name="0", xy_degree=0, theta_degree=0)
    gamma = BaseForm2(lambda x, y: _full((x, y), scale), "area", 0)
    return ValuationPair(beta, gamma, "lk2")


def poly_trig(params) -> ValuationPair:
    """Polynomial (degree <= 2 in x, y) times trigonometric (degree <= 2 in theta) pair.

    ``params`` is a flat list, zero-padded to length ``POLY_TRIG_SIZE``:
    three blocks of 6 x 5 coefficients for a, b, c (monomials
    1, x, y, x^2, xy, y^2 against 1, cos, sin, cos 2t, sin 2t) followed by
    6 monomial coefficients for gamma.
    """
    v = np.zeros(POLY_TRIG_SIZE)
    params = np.asarray(params, dtype=float).ravel()
    if params.size > POLY_TRIG_SIZE:
        raise SceneError(f"poly_trig takes at most {POLY_TRIG_SIZE} parameters, got {params.size}")
    v[:params.size] = params
    blk = N_MONO * N_TRIG
    beta = CoefForm1(_poly_trig_coef(v[:blk]), _poly_trig_coef(v[blk:2 * blk]),
                     _poly_trig_coef(v[2 * blk:3 * blk]), "poly_trig", 2, 2)
    g_coef = v[3 * blk:]

    def g(x, y):
        return sum(cf * m for cf, m in zip(g_coef, _mono_basis(x, y)))

    gamma = BaseForm2(lambda x, y: np.broadcast_to(g(x, y), np.broadcast(x, y).shape), "poly", 2,
                      is_zero=not np.any(g_coef))
    return ValuationPair(beta, gamma, "poly_trig")


def random_poly_trig_params(rng: np.random.Generator, scale: float = 1.0) -> list:
    return (scale * rng.standard_normal(POLY_TRIG_SIZE)).tolist()


REGISTRY = {"lk0": lk0, "lk1": lk1, "lk2": lk2, "poly_trig": poly_trig}


def make_form(name: str, params=()) -> ValuationPair:
    """Build a registered valuation pair from its scene description."""
    if name not in REGISTRY:
        raise SceneError(f"unknown form name {name!r}; known: {sorted(REGISTRY)}")
    if name == "poly_trig":
        return poly_trig(params)
    params = list(params)
    if len(params) > 1:
        raise SceneError(f"{name} takes at most one parameter (a scale)")
    return REGISTRY[name](*params)


def combine(pairs, weights) -> ValuationPair:
    """Linear combination of valuation pairs."""
    beta = None
    gs = []
    for pair, w in zip(pairs, weights):
        b = pair.beta.scaled(w)
        beta = b if beta is None else beta + b
        gs.append((pair.gamma, w))

    def g(x, y):
        return sum(w * gam(x, y) for gam, w in gs)

    degs = [gam.xy_degree for gam, _ in gs]
    deg = None if any(d is None for d in degs) else max(degs)
    return ValuationPair(beta, BaseForm2(g, "sum", deg), "combination")


# --------------------------------------------------------------------------
# valuations


def integrate_base_form(gamma: BaseForm2, A: PolygonalRegion, rtol: float = 1e-10) -> float:
    """Integral of ``gamma`` over a polygonal region."""
    if gamma.is_zero or isinstance(A, PointSet) or A.is_empty:
        return 0.0
    tris = triangulate(A)
    if gamma.xy_degree is not None:
        return float(math.fsum(quad.integrate_triangles(gamma, tris, gamma.xy_degree // 2 + 1)))
    return quad.adaptive_triangles(gamma, tris, order=8, rtol=rtol)


def eval_valuation(mu: ValuationPair, A, rule: str = "auto") -> float:
    """mu(A) = integral of beta over N(A) plus integral of gamma over A."""
    val = 0.0 if mu.beta_is_zero else integrate_form(build_normal_cycle(A), mu.beta, rule=rule)
    return val + integrate_base_form(mu.gamma, A)


def curvature_measure(mu: ValuationPair, A: PolygonalRegion, E: PolygonalRegion) -> float:
    """The part of mu(A) sitting over E."""
    N = restrict_to_region(build_normal_cycle(A), E)
    val = 0.0 if mu.beta_is_zero else integrate_form(N, mu.beta)
    if not mu.gamma.is_zero and not isinstance(A, PointSet):
        inter = PolygonalRegion.from_shapely(shapely.intersection(A.to_shapely(), E.to_shapely()))
        val += integrate_base_form(mu.gamma, inter)
    return val


def point_function(mu: ValuationPair, x) -> float:
    """mu({x}): the dtheta coefficient integrated once around the fiber at x."""
    x0, y0 = float(x[0]), float(x[1])

    def fn(_, u):
        return mu.beta.c(x0, y0, TWO_PI * u) * TWO_PI + 0.0 * u

    val, _ = quad.adaptive_integrate(fn, 1)
    return float(val[0])


# --------------------------------------------------------------------------
# variations under affine flows


@dataclass(frozen=True)
class AffineField:
    """Planar vector field v(x) = M x + b."""

    M: tuple = ((0.0, 0.0), (0.0, 0.0))
    b: tuple = (0.0, 0.0)

    def __call__(self, x, y):
        M = np.asarray(self.M, dtype=float)
        vx = M[0, 0] * x + M[0, 1] * y + self.b[0]
        vy = M[1, 0] * x + M[1, 1] * y + self.b[1]
        return vx, vy

    def flow(self, t: float, pts) -> np.ndarray:
        """Exact time-t flow of the field applied to points."""
        G = np.zeros((3, 3))
        G[:2, :2] = self.M
        G[:2, 2] = self.b
        E = expm(t * G)
        pts = np.asarray(pts, dtype=float)
        return pts @ E[:2, :2].T + E[:2, 2]

    @classmethod
    def translation(cls, v) -> "AffineField":
        return cls(b=(float(v[0]), float(v[1])))

    @classmethod
    def dilation(cls, center=(0.0, 0.0)) -> "AffineField":
        c = np.asarray(center, dtype=float)
        return cls(M=((1.0, 0.0), (0.0, 1.0)), b=(-c[0], -c[1]))


def flow_region(v: AffineField, t: float, A):
    if isinstance(A, PointSet):
        return PointSet(v.flow(t, A.points))
    return PolygonalRegion(tuple(v.flow(t, lp) for lp in A.loops))


def variation_fd(evaluator, A, v: AffineField, h: float = 1e-3) -> float:
    """Fourth-order central difference of t -> evaluator(F_t(A)) at t = 0."""
    f = {k: evaluator(flow_region(v, k * h, A)) for k in (-2, -1, 1, 2)}
    return (-f[2] + 8 * f[1] - 8 * f[-1] + f[-2]) / (12 * h)


def variation_probe(evaluator, A, v: AffineField, delta, h: float = 1e-3,
                    vertical_tol: float = 1e-6, n_samples: int = 64, seed: int = 0,
                    order: int = 16, rtol: float = 1e-10):
    """Compare d/dt evaluator(F_t A) with the integral over N(A) of v -| delta.

    ``delta`` is a 2-form evaluator; it must be vertical (alpha ^ delta = 0)
    so that the horizontal lift of v is a legitimate choice.
    """
    N = build_normal_cycle(A)
    rng = np.random.default_rng(seed)
    samples = []
    if N.n_edges:
        k = rng.integers(0, N.n_edges, n_samples)
        s = rng.random(n_samples)
        p = N.edge_p0[k] + s[:, None] * (N.edge_p1[k] - N.edge_p0[k])
        samples.append(np.column_stack([p, N.edge_theta[k]]))
    if N.n_arcs:
        k = rng.integers(0, N.n_arcs, n_samples)
        th = N.arc_start[k] + rng.random(n_samples) * N.arc_sweep[k]
        samples.append(np.column_stack([N.arc_base[k], th]))
    res = verticality_check(delta, np.concatenate(samples))
    if res > vertical_tol:
        raise NonVertical(f"candidate is not vertical (residual {res:.3g})")
    lhs = variation_fd(evaluator, A, v, h)
    rhs = integrate_form(N, interior_horizontal(delta, v), rule="adaptive", order=order, rtol=rtol)
    return lhs, rhs
