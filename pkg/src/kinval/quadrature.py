"""Gauss–Legendre rules: fixed panels, breakpoint-aligned panels, dyadic
adaptive refinement over many intervals at once, and collapsed rules on
triangles.

Every routine is deterministic: node order and summation order depend only
on the inputs.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure

DEFAULT_ORDER = 16
DEFAULT_RTOL = 1e-10
MAX_PANELS = 2**10


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point rule on [0, 1] (weights sum to 1)."""
    if n < 1:
        raise ValueError("order must be positive")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_rule(lo: float, hi: float, n: int, panels: int = 1):
    """Composite rule with ``panels`` equal panels of ``n`` nodes on [lo, hi]."""
    x, w = gauss_legendre(n)
    edges = np.linspace(lo, hi, panels + 1)
    width = np.diff(edges)
    nodes = (edges[:-1, None] + width[:, None] * x[None, :]).ravel()
    weights = (width[:, None] * w[None, :]).ravel()
    return nodes, weights


def breakpoint_rule(lo: float, hi: float, breakpoints, n: int, kmin: int = 2,
                    merge_tol: float = 1e-12):
    """Composite rule whose panels end exactly at the given breakpoints.

    Roughly ``n`` nodes are spread over [lo, hi] in proportion to panel
    width, with at least ``kmin`` nodes in every panel. Breakpoints closer
    than ``merge_tol`` are merged.
    """
    bp = np.asarray(breakpoints, dtype=float).ravel()
    bp = bp[(bp > lo) & (bp < hi)]
    cuts = np.unique(np.concatenate(([lo], bp, [hi])))
    if cuts.size > 2:
        keep = np.concatenate(([True], np.diff(cuts) > merge_tol))
        cuts = cuts[keep]
        cuts[-1] = hi
    span = hi - lo
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        width = b - a
        if width <= 0.0:
            continue
        k = max(kmin, int(round(n * width / span)))
        x, w = gauss_legendre(k)
        nodes.append(a + width * x)
        weights.append(width * w)
    return np.concatenate(nodes), np.concatenate(weights)


def adaptive_integrate(fn, n_items: int, order: int = DEFAULT_ORDER,
                       rtol: float = DEFAULT_RTOL, atol: float = 1e-13,
                       max_panels: int = MAX_PANELS, raise_on_failure: bool = True):
    """Integrate ``n_items`` functions over [0, 1] by dyadic panel refinement.

    ``fn(item, u)`` receives flat arrays of item indices and local
    parameters and returns the integrand values. Each item is refined
    independently until two successive estimates agree to
    ``rtol * |I| + atol``.

    Returns the per-item integrals and the number of panels used per item.
    """
    out = np.zeros(n_items)
    panels_used = np.zeros(n_items, dtype=np.int64)
    if n_items == 0:
        return out, panels_used
    x, w = gauss_legendre(order)

    def estimate(items, n_panels):
        k = np.arange(n_panels)
        u = ((k[:, None] + x[None, :]) / n_panels).ravel()
        ww = np.tile(w, n_panels) / n_panels
        m = u.size
        idx = np.repeat(items, m)
        vals = np.asarray(fn(idx, np.tile(u, items.size)), dtype=float)
        return (vals.reshape(items.size, m) * ww).sum(axis=1)

    active = np.arange(n_items)
    prev = estimate(active, 1)
    n_panels = 2
    while active.size and n_panels <= max_panels:
        cur = estimate(active, n_panels)
        done = np.abs(cur - prev) <= rtol * np.abs(cur) + atol
        out[active[done]] = cur[done]
        panels_used[active[done]] = n_panels
        active = active[~done]
        prev = cur[~done]
        n_panels *= 2
    if active.size:
        out[active] = prev
        panels_used[active] = n_panels // 2
        if raise_on_failure:
            raise QuadratureFailure(
                f"{active.size} interval(s) did not converge within {max_panels} panels"
            )
    return out, panels_used


@lru_cache(maxsize=None)
def triangle_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss–Legendre rule on the reference triangle (0,0),(1,0),(0,1).

    Returns barycentric-style coordinates ``(s, t)`` of shape (m, 2) and
    weights summing to 1/2.
    """
    x, w = gauss_legendre(order)
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    s = u.ravel()
    t = (v * (1.0 - u)).ravel()
    weights = (wu * wv * (1.0 - u)).ravel()
    st = np.stack([s, t], axis=1)
    st.setflags(write=False)
    weights.setflags(write=False)
    return st, weights


def triangle_nodes(tris: np.ndarray, order: int):
    """Physical nodes (T, m, 2) and signed weights (T, m) for triangles (T, 3, 2).

    Weights carry the signed Jacobian, so clockwise triangles integrate with
    a negative sign.
    """
    tris = np.asarray(tris, dtype=float)
    st, w = triangle_rule(order)
    p0 = tris[:, 0, :]
    e1 = tris[:, 1, :] - p0
    e2 = tris[:, 2, :] - p0
    jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    pts = p0[:, None, :] + st[None, :, 0:1] * e1[:, None, :] + st[None, :, 1:2] * e2[:, None, :]
    return pts, jac[:, None] * w[None, :]


def integrate_triangles(g, tris: np.ndarray, order: int = 8) -> np.ndarray:
    """Per-triangle integrals of the vectorized scalar field ``g(x, y)``."""
    tris = np.asarray(tris, dtype=float)
    if tris.size == 0:
        return np.zeros(0)
    pts, wts = triangle_nodes(tris, order)
    vals = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, wts.shape)
    return (vals * wts).sum(axis=1)


def _subdivide(tris: np.ndarray) -> np.ndarray:
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    kids = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=1)
    return kids.reshape(-1, 3, 2)


def adaptive_triangles(g, tris: np.ndarray, order: int = 8, rtol: float = 1e-10,
                       atol: float = 1e-13, max_level: int = 6) -> float:
    """Integral of ``g`` over a union of (signed) triangles.

    Triangles whose estimate changes under 4-way subdivision by more than
    the tolerance are subdivided again, up to ``max_level`` times.
    """
    tris = np.asarray(tris, dtype=float).reshape(-1, 3, 2)
    if tris.shape[0] == 0:
        return 0.0
    total = 0.0
    coarse = integrate_triangles(g, tris, order)
    for _ in range(max_level):
        kids = _subdivide(tris)
        fine = integrate_triangles(g, kids, order).reshape(-1, 4).sum(axis=1)
        scale = max(1.0, float(np.abs(fine).sum()))
        done = np.abs(fine - coarse) <= rtol * np.abs(fine) + atol * scale
        total += float(fine[done].sum())
        if done.all():
            return total
        tris = kids.reshape(-1, 4, 3, 2)[~done].reshape(-1, 3, 2)
        coarse = integrate_triangles(g, tris, order)
    raise QuadratureFailure("triangle refinement did not converge")
