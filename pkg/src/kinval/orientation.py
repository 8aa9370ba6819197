"""Oriented intersections of transverse oriented linear subspaces.

A subspace is an (n, d) matrix whose columns form an oriented basis. For
X of codimension k and Y of codimension m meeting transversely, a basis
(v, u, w) of the ambient space is chosen with v, u in X, u spanning X ∩ Y,
and u, w in Y. The orientation of u is fixed by requiring that the product
of the orientation signs of (v, u, w), (v, u), (u, w) and u is +1.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np
from scipy.linalg import null_space


@dataclass(frozen=True)
class OrientedSubspace:
    basis: np.ndarray

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def codim(self) -> int:
        return self.ambient - self.dim


def _sign_in(basis: np.ndarray, vecs: np.ndarray) -> int:
    """Orientation sign of ``vecs`` relative to the oriented span of ``basis``."""
    if vecs.shape[1] == 0:
        return 1
    coef, *_ = np.linalg.lstsq(basis, vecs, rcond=None)
    det = np.linalg.det(coef)
    if abs(det) < 1e-12:
        raise ValueError("vectors do not form a basis of the subspace")
    return 1 if det > 0 else -1


def _extend(sub: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Columns of ``basis`` that complete ``sub`` to a basis of span(basis)."""
    cur = sub
    extra = []
    for j in range(basis.shape[1]):
        cand = np.column_stack([cur, basis[:, j]]) if cur.size else basis[:, j:j + 1]
        if np.linalg.matrix_rank(cand, tol=1e-10) > (cur.shape[1] if cur.size else 0):
            cur = cand
            extra.append(basis[:, j])
    return np.column_stack(extra) if extra else np.zeros((basis.shape[0], 0))


def oriented_intersection(X: OrientedSubspace, Y: OrientedSubspace):
    """X • Y as an OrientedSubspace, or the multiplicity +-1 when it is a point."""
    n = X.ambient
    k, m = X.codim, Y.codim
    if np.linalg.matrix_rank(np.column_stack([X.basis, Y.basis]), tol=1e-10) < n:
        raise ValueError("subspaces are not transverse")
    coef = null_space(np.column_stack([X.basis, -Y.basis]))
    u = X.basis @ coef[:X.dim] if coef.size else np.zeros((n, 0))
    v = _extend(u, X.basis)
    w = _extend(u, Y.basis)
    assert v.shape[1] == m and w.shape[1] == k
    full = np.column_stack([v, u, w])
    s = (_sign_in(np.eye(n), full) * _sign_in(X.basis, np.column_stack([v, u]))
         * _sign_in(Y.basis, np.column_stack([u, w])))
    if u.shape[1] == 0:
        return s
    if s < 0:
        u = u.copy()
        u[:, 0] = -u[:, 0]
    return OrientedSubspace(u)


def same_orientation(a, b) -> int:
    """+1 if two oriented subspaces (or multiplicities) agree, -1 if they are opposite."""
    if isinstance(a, (int, np.integer)):
        return int(a) * int(b)
    return _sign_in(a.basis, b.basis)


def commutation_sign(X: OrientedSubspace, Y: OrientedSubspace) -> tuple[int, int]:
    """(observed sign relating X•Y to Y•X, predicted (-1)^(mk))."""
    got = same_orientation(oriented_intersection(X, Y), oriented_intersection(Y, X))
    return got, (-1) ** (X.codim * Y.codim)


def coordinate_fixtures(n: int):
    """All transverse pairs of coordinate subspaces of R^n, in every basis order."""
    eye = np.eye(n)
    subsets = [c for d in range(1, n + 1) for c in combinations(range(n), d)]
    for sx in subsets:
        for sy in subsets:
            if set(sx) | set(sy) != set(range(n)):
                continue
            for px in permutations(sx):
                for py in permutations(sy):
                    yield OrientedSubspace(eye[:, list(px)]), OrientedSubspace(eye[:, list(py)])
