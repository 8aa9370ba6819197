"""Batched segment/polygon kernels.

Every kernel works on many small polygons at once: a fixed edge list ``a0,
a1`` of one region against per-motion edge lists ``B0, B1`` of shape
(K, nB, 2). Each kernel exists twice, a numba loop and a broadcast numpy
version; :data:`BACKEND` says which one the public names point to.
"""

from __future__ import annotations

import numpy as np

from ._accel import HAS_NUMBA, njit

BACKEND = "numba" if HAS_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numba loops


@njit
def _seg_point_dist(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    L2 = dx * dx + dy * dy
    s = ((px - ax) * dx + (py - ay) * dy) / L2 if L2 > 0.0 else 0.0
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    ex = px - ax - s * dx
    ey = py - ay - s * dy
    return np.sqrt(ex * ex + ey * ey)


@njit
def _transverse_loop(a0, a1, B0, B1, tol, sin_tol):
    K = B0.shape[0]
    nA = a0.shape[0]
    nB = B0.shape[1]
    ok = np.ones(K, dtype=np.bool_)
    for k in range(K):
        bad = False
        for i in range(nA):
            if bad:
                break
            for j in range(nB):
                if _seg_point_dist(a0[i, 0], a0[i, 1], B0[k, j, 0], B0[k, j, 1], B1[k, j, 0], B1[k, j, 1]) <= tol:
                    bad = True
                    break
                if _seg_point_dist(B0[k, j, 0], B0[k, j, 1], a0[i, 0], a0[i, 1], a1[i, 0], a1[i, 1]) <= tol:
                    bad = True
                    break
                dax = a1[i, 0] - a0[i, 0]
                day = a1[i, 1] - a0[i, 1]
                dbx = B1[k, j, 0] - B0[k, j, 0]
                dby = B1[k, j, 1] - B0[k, j, 1]
                cr = dax * dby - day * dbx
                la = np.sqrt(dax * dax + day * day)
                lb = np.sqrt(dbx * dbx + dby * dby)
                if abs(cr) <= sin_tol * la * lb and cr != 0.0:
                    # shallow crossing; overlaps are caught by the vertex tests
                    wx = B0[k, j, 0] - a0[i, 0]
                    wy = B0[k, j, 1] - a0[i, 1]
                    s = (wx * dby - wy * dbx) / cr
                    t = (wx * day - wy * dax) / cr
                    if s > 0.0 and s < 1.0 and t > 0.0 and t < 1.0:
                        bad = True
                        break
        ok[k] = not bad
    return ok


@njit
def _count_crossings(a0, a1, B0, B1):
    K = B0.shape[0]
    nA = a0.shape[0]
    nB = B0.shape[1]
    n = 0
    for k in range(K):
        for i in range(nA):
            for j in range(nB):
                dax = a1[i, 0] - a0[i, 0]
                day = a1[i, 1] - a0[i, 1]
                dbx = B1[k, j, 0] - B0[k, j, 0]
                dby = B1[k, j, 1] - B0[k, j, 1]
                den = dax * dby - day * dbx
                if den == 0.0:
                    continue
                wx = B0[k, j, 0] - a0[i, 0]
                wy = B0[k, j, 1] - a0[i, 1]
                s = (wx * dby - wy * dbx) / den
                t = (wx * day - wy * dax) / den
                if s > 0.0 and s < 1.0 and t > 0.0 and t < 1.0:
                    n += 1
    return n


@njit
def _crossings_loop(a0, a1, B0, B1):
    n = _count_crossings(a0, a1, B0, B1)
    K = B0.shape[0]
    nA = a0.shape[0]
    nB = B0.shape[1]
    kk = np.empty(n, dtype=np.int64)
    ii = np.empty(n, dtype=np.int64)
    jj = np.empty(n, dtype=np.int64)
    ss = np.empty(n)
    tt = np.empty(n)
    m = 0
    for k in range(K):
        for i in range(nA):
            for j in range(nB):
                dax = a1[i, 0] - a0[i, 0]
                day = a1[i, 1] - a0[i, 1]
                dbx = B1[k, j, 0] - B0[k, j, 0]
                dby = B1[k, j, 1] - B0[k, j, 1]
                den = dax * dby - day * dbx
                if den == 0.0:
                    continue
                wx = B0[k, j, 0] - a0[i, 0]
                wy = B0[k, j, 1] - a0[i, 1]
                s = (wx * dby - wy * dbx) / den
                t = (wx * day - wy * dax) / den
                if s > 0.0 and s < 1.0 and t > 0.0 and t < 1.0:
                    kk[m] = k
                    ii[m] = i
                    jj[m] = j
                    ss[m] = s
                    tt[m] = t
                    m += 1
    return kk, ii, jj, ss, tt


@njit
def _inside_one(px, py, E0, E1, g):
    c = False
    for j in range(E0.shape[1]):
        y0 = E0[g, j, 1]
        y1 = E1[g, j, 1]
        if (y0 > py) != (y1 > py):
            x0 = E0[g, j, 0]
            x1 = E1[g, j, 0]
            xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < xc:
                c = not c
    return c


@njit
def _inside_loop(pts, grp, E0, E1):
    out = np.empty(pts.shape[0], dtype=np.bool_)
    for m in range(pts.shape[0]):
        out[m] = _inside_one(pts[m, 0], pts[m, 1], E0, E1, grp[m])
    return out


@njit
def _clip_loop(p0, p1, grp, E0, E1):
    M = p0.shape[0]
    nE = E0.shape[1]
    cap = M * (nE + 1)
    q0 = np.empty((cap, 2))
    q1 = np.empty((cap, 2))
    src = np.empty(cap, dtype=np.int64)
    params = np.empty(nE + 2)
    n = 0
    for m in range(M):
        g = grp[m]
        dax = p1[m, 0] - p0[m, 0]
        day = p1[m, 1] - p0[m, 1]
        c = 0
        params[c] = 0.0
        c += 1
        for j in range(nE):
            dbx = E1[g, j, 0] - E0[g, j, 0]
            dby = E1[g, j, 1] - E0[g, j, 1]
            den = dax * dby - day * dbx
            if den == 0.0:
                continue
            wx = E0[g, j, 0] - p0[m, 0]
            wy = E0[g, j, 1] - p0[m, 1]
            s = (wx * dby - wy * dbx) / den
            t = (wx * day - wy * dax) / den
            if s > 0.0 and s < 1.0 and t > 0.0 and t < 1.0:
                params[c] = s
                c += 1
        params[c] = 1.0
        c += 1
        ps = np.sort(params[:c])
        for r in range(c - 1):
            lo = ps[r]
            hi = ps[r + 1]
            if hi <= lo:
                continue
            mid = 0.5 * (lo + hi)
            if _inside_one(p0[m, 0] + mid * dax, p0[m, 1] + mid * day, E0, E1, g):
                q0[n, 0] = p0[m, 0] + lo * dax
                q0[n, 1] = p0[m, 1] + lo * day
                q1[n, 0] = p0[m, 0] + hi * dax
                q1[n, 1] = p0[m, 1] + hi * day
                src[n] = m
                n += 1
    return q0[:n].copy(), q1[:n].copy(), src[:n].copy()


# --------------------------------------------------------------------------
# numpy twins


def _transverse_np(a0, a1, B0, B1, tol, sin_tol):
    def pt_seg(P, S0, S1):
        # P (..., 2), S0/S1 broadcastable (..., 2)
        d = S1 - S0
        L2 = np.maximum((d * d).sum(-1), 1e-300)
        s = np.clip(((P - S0) * d).sum(-1) / L2, 0.0, 1.0)
        e = P - S0 - s[..., None] * d
        return np.sqrt((e * e).sum(-1))

    A0 = a0[None, :, None, :]
    A1 = a1[None, :, None, :]
    Bs = B0[:, None, :, :]
    Be = B1[:, None, :, :]
    bad = (pt_seg(A0, Bs, Be) <= tol) | (pt_seg(Bs, A0, A1) <= tol)
    da = A1 - A0
    db = Be - Bs
    cr = da[..., 0] * db[..., 1] - da[..., 1] * db[..., 0]
    la = np.sqrt((da * da).sum(-1))
    lb = np.sqrt((db * db).sum(-1))
    par = np.abs(cr) <= sin_tol * la * lb
    w = Bs - A0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (w[..., 0] * db[..., 1] - w[..., 1] * db[..., 0]) / cr
        t = (w[..., 0] * da[..., 1] - w[..., 1] * da[..., 0]) / cr
    overlap = par & (cr != 0) & (s > 0) & (s < 1) & (t > 0) & (t < 1)
    bad = bad | overlap
    return ~bad.reshape(bad.shape[0], -1).any(axis=1)


def _crossings_np(a0, a1, B0, B1):
    da = (a1 - a0)[None, :, None, :]
    db = (B1 - B0)[:, None, :, :]
    w = B0[:, None, :, :] - a0[None, :, None, :]
    den = da[..., 0] * db[..., 1] - da[..., 1] * db[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (w[..., 0] * db[..., 1] - w[..., 1] * db[..., 0]) / den
        t = (w[..., 0] * da[..., 1] - w[..., 1] * da[..., 0]) / den
    ok = (den != 0) & (s > 0) & (s < 1) & (t > 0) & (t < 1)
    k, i, j = np.nonzero(ok)
    return k, i, j, s[k, i, j], t[k, i, j]


def _inside_np(pts, grp, E0, E1):
    y0 = E0[grp, :, 1]
    y1 = E1[grp, :, 1]
    x0 = E0[grp, :, 0]
    x1 = E1[grp, :, 0]
    py = pts[:, 1:2]
    px = pts[:, 0:1]
    straddle = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (px < xc)
    return (hits.sum(axis=1) % 2) == 1


def _clip_np(p0, p1, grp, E0, E1):
    M = p0.shape[0]
    if M == 0:
        return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0, dtype=np.int64)
    da = (p1 - p0)[:, None, :]
    e0 = E0[grp]
    db = E1[grp] - e0
    w = e0 - p0[:, None, :]
    den = da[..., 0] * db[..., 1] - da[..., 1] * db[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (w[..., 0] * db[..., 1] - w[..., 1] * db[..., 0]) / den
        t = (w[..., 0] * da[..., 1] - w[..., 1] * da[..., 0]) / den
    ok = (den != 0) & (s > 0) & (s < 1) & (t > 0) & (t < 1)
    s = np.where(ok, s, 2.0)
    cuts = np.concatenate([np.zeros((M, 1)), np.sort(s, axis=1), np.full((M, 1), 2.0)], axis=1)
    cuts = np.minimum(cuts, 1.0)
    lo = cuts[:, :-1]
    hi = cuts[:, 1:]
    valid = hi > lo
    mid = 0.5 * (lo + hi)
    nS = mid.shape[1]
    mpts = p0[:, None, :] + mid[..., None] * da
    inside = _inside_np(mpts.reshape(-1, 2), np.repeat(grp, nS), E0, E1).reshape(M, nS)
    keep = valid & inside
    m_idx, r_idx = np.nonzero(keep)
    d = (p1 - p0)[m_idx]
    q0 = p0[m_idx] + lo[m_idx, r_idx][:, None] * d
    q1 = p0[m_idx] + hi[m_idx, r_idx][:, None] * d
    return q0, q1, m_idx.astype(np.int64)


# --------------------------------------------------------------------------
# dispatch


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def transverse_batch(a0, a1, B0, B1, tol=1e-9, angle_tol=1e-6, backend=None):
    """Per motion k: do edges a and edges B[k] meet only in clean crossings?"""
    use = backend or BACKEND
    args = (_c(a0), _c(a1), _c(B0), _c(B1), float(tol), float(np.sin(angle_tol)))
    if B0.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return _transverse_loop(*args) if use == "numba" else _transverse_np(*args)


def crossings_batch(a0, a1, B0, B1, backend=None):
    """All proper crossings (k, i, j, s, t): edge i of a with edge j of B[k]."""
    use = backend or BACKEND
    args = (_c(a0), _c(a1), _c(B0), _c(B1))
    if use == "numba":
        return _crossings_loop(*args)
    return _crossings_np(*args)


def inside_batch(pts, grp, E0, E1, backend=None):
    """Even-odd point-in-polygon: point m against polygon ``grp[m]``."""
    use = backend or BACKEND
    args = (_c(pts).reshape(-1, 2), np.ascontiguousarray(grp, dtype=np.int64), _c(E0), _c(E1))
    if args[0].shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return _inside_loop(*args) if use == "numba" else _inside_np(*args)


def clip_batch(p0, p1, grp, E0, E1, backend=None):
    """Sub-segments of p0[m]->p1[m] inside polygon ``grp[m]``; returns (q0, q1, src)."""
    use = backend or BACKEND
    args = (_c(p0).reshape(-1, 2), _c(p1).reshape(-1, 2), np.ascontiguousarray(grp, dtype=np.int64),
            _c(E0), _c(E1))
    if use == "numba":
        return _clip_loop(*args)
    return _clip_np(*args)


# --------------------------------------------------------------------------
# radial density fibers
#
# ``radii`` holds the band edges (R0, R1) of a smooth profile or the single
# cut radius of an indicator profile. Radii along a straight piece follow
# sqrt(p1 (s - p2)^2 + p3); along an arc sqrt(p1 - p2 cos(p3 - s)).


@njit
def _rho_scalar(r, radii, c):
    if radii.shape[0] == 1:
        return c if r <= radii[0] else 0.0
    r0 = radii[0]
    r1 = radii[1]
    if r <= r0:
        return c
    if r >= r1:
        return 0.0
    u = (r - r0) / (r1 - r0)
    a = np.exp(-1.0 / u)
    b = np.exp(-1.0 / (1.0 - u))
    return c * b / (a + b)


@njit
def _h_scalar(r, radii, c, sx, sc, k_inf):
    """K(r) / r^2 with K(r) the first radial moment of the density."""
    if r <= radii[0]:
        return 0.5 * c
    if radii.shape[0] == 1 or r >= radii[radii.shape[0] - 1]:
        return k_inf / (r * r)
    i = np.searchsorted(sx, r) - 1
    if i < 0:
        i = 0
    if i > sx.shape[0] - 2:
        i = sx.shape[0] - 2
    d = r - sx[i]
    k = ((sc[0, i] * d + sc[1, i]) * d + sc[2, i]) * d + sc[3, i]
    return k / (r * r)


@njit
def _radius(mode, s, p1, p2, p3):
    if mode == 0:
        return np.sqrt(p1 * (s - p2) ** 2 + p3)
    v = p1 - p2 * np.cos(p3 - s)
    return np.sqrt(v) if v > 0.0 else 0.0


@njit
def _split_sum(mode, what, lo, hi, brk, nb, p1, p2, p3, radii, c, sx, sc, k_inf, xg, wg):
    """Integral over [lo, hi] of rho (what = 0) or K/r^2 (what = 1) of the radius,
    cut at the parameters ``brk[:nb]`` where the radius meets a band edge."""
    cuts = np.empty(nb + 2)
    cuts[0] = lo
    for m in range(nb):
        b = brk[m]
        cuts[m + 1] = lo if b < lo else (hi if b > hi else b)
    cuts[nb + 1] = hi
    cuts.sort()
    inner_val = c if what == 0 else 0.5 * c
    total = 0.0
    for m in range(nb + 1):
        a = cuts[m]
        b = cuts[m + 1]
        ln = b - a
        if ln <= 0.0:
            continue
        rm = _radius(mode, 0.5 * (a + b), p1, p2, p3)
        if rm <= radii[0]:
            total += inner_val * ln
            continue
        if what == 0 and rm >= radii[radii.shape[0] - 1]:
            continue
        acc = 0.0
        for g in range(xg.shape[0]):
            r = _radius(mode, a + ln * xg[g], p1, p2, p3)
            if what == 0:
                acc += wg[g] * _rho_scalar(r, radii, c)
            else:
                acc += wg[g] * _h_scalar(r, radii, c, sx, sc, k_inf)
        total += acc * ln
    return total


@njit
def _line_breaks(q0x, q0y, dx, dy, radii, brk):
    """Band-edge crossings of the segment q0 + u d, u in [0, 1]; returns (count, dd, u*, h2)."""
    dd = dx * dx + dy * dy
    ws = -(q0x * dx + q0y * dy) / dd
    h2 = q0x * q0x + q0y * q0y - dd * ws * ws
    if h2 < 0.0:
        h2 = 0.0
    nb = 0
    for k in range(radii.shape[0]):
        R2 = radii[k] * radii[k]
        if R2 > h2:
            half = np.sqrt((R2 - h2) / dd)
            brk[nb] = ws - half
            brk[nb + 1] = ws + half
            nb += 2
    return nb, dd, ws, h2


@njit(cache=True)
def line_h_loop(q0, d, radii, c, sx, sc, k_inf, xg, wg):
    """Per row: integral over u in [0, 1] of K/r^2 at |q0 + u d|, times |d|."""
    n = q0.shape[0]
    out = np.empty(n)
    brk = np.empty(4)
    for m in range(n):
        nb, dd, ws, h2 = _line_breaks(q0[m, 0], q0[m, 1], d[m, 0], d[m, 1], radii, brk)
        out[m] = np.sqrt(dd) * _split_sum(0, 1, 0.0, 1.0, brk, nb, dd, ws, h2, radii, c,
                                          sx, sc, k_inf, xg, wg)
    return out


@njit(cache=True)
def omega_loop(pts, e_p0, e_u, e_len, e_theta, e_mult, e_rad, a_base, a_start, a_sweep,
               a_mult, a_rad, radii, c, xg, wg):
    """Coefficients (p, q, r) of the smoothed form at every row (x, y, theta)."""
    P = pts.shape[0]
    out = np.zeros((P, 3))
    brk = np.empty(4)
    dummy_x = np.zeros(2)
    dummy_c = np.zeros((4, 1))
    r_in = radii[0]
    r_out = radii[radii.shape[0] - 1]
    for m in range(P):
        yx = pts[m, 0]
        yy = pts[m, 1]
        th0 = pts[m, 2]
        ry = np.sqrt(yx * yx + yy * yy)
        wx = 0.0
        wy = 0.0
        for k in range(e_len.shape[0]):
            if ry - e_rad[k] >= r_out:
                continue
            a = th0 - e_theta[k]
            ca = np.cos(a)
            sa = np.sin(a)
            rux = ca * e_u[k, 0] - sa * e_u[k, 1]
            ruy = sa * e_u[k, 0] + ca * e_u[k, 1]
            if ry + e_rad[k] <= r_in:
                val = c * e_len[k]
            else:
                rpx = ca * e_p0[k, 0] - sa * e_p0[k, 1]
                rpy = sa * e_p0[k, 0] + ca * e_p0[k, 1]
                relx = yx - rpx
                rely = yy - rpy
                ws = relx * rux + rely * ruy
                h2 = relx * relx + rely * rely - ws * ws
                if h2 < 0.0:
                    h2 = 0.0
                nb = 0
                for j in range(radii.shape[0]):
                    R2 = radii[j] * radii[j]
                    if R2 > h2:
                        half = np.sqrt(R2 - h2)
                        brk[nb] = ws - half
                        brk[nb + 1] = ws + half
                        nb += 2
                val = _split_sum(0, 0, 0.0, e_len[k], brk, nb, 1.0, ws, h2, radii, c,
                                 dummy_x, dummy_c, 0.0, xg, wg)
            val *= e_mult[k]
            wx += val * rux
            wy += val * ruy
        wt = 0.0
        phi_y = np.arctan2(yy, yx)
        for k in range(a_start.shape[0]):
            if abs(ry - a_rad[k]) >= r_out:
                continue
            if ry + a_rad[k] <= r_in:
                val = c * a_sweep[k]
            else:
                e = a_rad[k]
                de = 2.0 * ry * e
                base = np.arctan2(a_base[k, 1], a_base[k, 0]) + th0 - phi_y
                nb = 0
                if de > 0.0:
                    for j in range(radii.shape[0]):
                        kap = (ry * ry + e * e - radii[j] * radii[j]) / de
                        if abs(kap) < 1.0:
                            g = np.arccos(kap)
                            for cand in (base - g, base + g):
                                tp = a_start[k] + ((cand - a_start[k]) % (2.0 * np.pi))
                                if tp < a_start[k] + a_sweep[k]:
                                    brk[nb] = tp
                                    nb += 1
                val = _split_sum(1, 0, a_start[k], a_start[k] + a_sweep[k], brk, nb,
                                 ry * ry + e * e, de, base, radii, c, dummy_x, dummy_c, 0.0, xg, wg)
            wt += val * a_mult[k]
        out[m, 0] = wt
        out[m, 1] = -wy
        out[m, 2] = wx
    return out
