"""Numba kernels: direct pairwise sums, grid scatters, and the quadtree.

Everything here is deterministic: loops run in a fixed order, so repeated
calls on identical inputs produce bit-identical results.  The regularized
kernel factor is evaluated branch-free (POLY6) so the inner loops
vectorize.  Profile ids: 0 = POLY6, 1 = GAUSSIAN.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

PROFILE_POLY6 = 0
PROFILE_GAUSSIAN = 1

_INV_2PI = 1.0 / (2.0 * math.pi)
_TINY = 1e-300  # guards 0/0 at a blob's own center; m(0) = 0 makes the result exact


@njit(cache=True, fastmath=True)
def _velocity_poly6(tx, ty, sx, sy, gam, eps, outx, outy):
    inv_eps2 = 1.0 / (eps * eps)
    for i in range(tx.shape[0]):
        xi = tx[i]
        yi = ty[i]
        ax = 0.0
        ay = 0.0
        for j in range(sx.shape[0]):
            dx = xi - sx[j]
            dy = yi - sy[j]
            r2 = dx * dx + dy * dy
            om = max(0.0, 1.0 - r2 * inv_eps2)
            om2 = om * om
            m = 1.0 - om2 * om2
            f = gam[j] * _INV_2PI * m / max(r2, _TINY)
            ax -= dy * f
            ay += dx * f
        outx[i] = ax
        outy[i] = ay


@njit(cache=True, fastmath=True)
def _velocity_gauss(tx, ty, sx, sy, gam, eps, outx, outy):
    inv_eps2 = 1.0 / (eps * eps)
    for i in range(tx.shape[0]):
        xi = tx[i]
        yi = ty[i]
        ax = 0.0
        ay = 0.0
        for j in range(sx.shape[0]):
            dx = xi - sx[j]
            dy = yi - sy[j]
            r2 = dx * dx + dy * dy
            m = -math.expm1(-r2 * inv_eps2)
            f = gam[j] * _INV_2PI * m / max(r2, _TINY)
            ax -= dy * f
            ay += dx * f
        outx[i] = ax
        outy[i] = ay


def velocity_direct(tx, ty, sx, sy, gam, eps, profile):
    """Sum_j gam_j K_eps(t_i - s_j) for every target i; returns (vx, vy)."""
    outx = np.empty_like(tx)
    outy = np.empty_like(tx)
    if profile == PROFILE_POLY6:
        _velocity_poly6(tx, ty, sx, sy, gam, eps, outx, outy)
    else:
        _velocity_gauss(tx, ty, sx, sy, gam, eps, outx, outy)
    return outx, outy


@njit(cache=True)
def _scatter_poly6(sx, sy, w, eps, ox, oy, dx, nx, ny, out):
    # out[j, i] += w_k * phi_eps(node_ij - X_k); nodes at (ox + i dx, oy + j dx)
    inv_eps2 = 1.0 / (eps * eps)
    peak = (4.0 / math.pi) * inv_eps2
    inv_dx = 1.0 / dx
    for k in range(sx.shape[0]):
        xk = sx[k]
        yk = sy[k]
        i0 = max(0, int(math.ceil((xk - eps - ox) * inv_dx)))
        i1 = min(nx - 1, int(math.floor((xk + eps - ox) * inv_dx)))
        j0 = max(0, int(math.ceil((yk - eps - oy) * inv_dx)))
        j1 = min(ny - 1, int(math.floor((yk + eps - oy) * inv_dx)))
        wk = w[k] * peak
        for j in range(j0, j1 + 1):
            dyy = oy + j * dx - yk
            for i in range(i0, i1 + 1):
                dxx = ox + i * dx - xk
                core = 1.0 - (dxx * dxx + dyy * dyy) * inv_eps2
                if core > 0.0:
                    out[j, i] += wk * core * core * core


@njit(cache=True)
def _scatter_gauss(sx, sy, w, eps, rcut, ox, oy, dx, nx, ny, out):
    inv_eps2 = 1.0 / (eps * eps)
    peak = (1.0 / math.pi) * inv_eps2
    inv_dx = 1.0 / dx
    for k in range(sx.shape[0]):
        xk = sx[k]
        yk = sy[k]
        i0 = max(0, int(math.ceil((xk - rcut - ox) * inv_dx)))
        i1 = min(nx - 1, int(math.floor((xk + rcut - ox) * inv_dx)))
        j0 = max(0, int(math.ceil((yk - rcut - oy) * inv_dx)))
        j1 = min(ny - 1, int(math.floor((yk + rcut - oy) * inv_dx)))
        wk = w[k] * peak
        for j in range(j0, j1 + 1):
            dyy = oy + j * dx - yk
            for i in range(i0, i1 + 1):
                dxx = ox + i * dx - xk
                out[j, i] += wk * math.exp(-(dxx * dxx + dyy * dyy) * inv_eps2)


def scatter_blob_sums(sx, sy, w, eps, profile, origin, dx, nx, ny, out=None):
    """Accumulate sum_k w_k phi_eps(x - X_k) on the grid; returns (ny, nx) array.

    Equals the naive per-node sum up to summation order (~1e-15 relative).
    The Gaussian profile is truncated where its remaining mass is < 1e-16.
    """
    if out is None:
        out = np.zeros((ny, nx))
    if profile == PROFILE_POLY6:
        _scatter_poly6(sx, sy, w, eps, origin[0], origin[1], dx, nx, ny, out)
    else:
        rcut = eps * math.sqrt(math.log(1e16))
        _scatter_gauss(sx, sy, w, eps, rcut, origin[0], origin[1], dx, nx, ny, out)
    return out


# ---------------------------------------------------------------------------
# Barnes-Hut quadtree: array-based, bucketed leaves, deterministic build.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _tree_build(px, py, gam, bucket, node_cap):
    n = px.shape[0]
    child = np.full((node_cap, 4), -1, np.int64)
    start = np.zeros(node_cap, np.int64)
    count = np.zeros(node_cap, np.int64)
    ncx = np.zeros(node_cap)
    ncy = np.zeros(node_cap)
    nhalf = np.zeros(node_cap)
    comx = np.zeros(node_cap)
    comy = np.zeros(node_cap)
    gsum = np.zeros(node_cap)
    gabs = np.zeros(node_cap)

    xmin = px.min()
    xmax = px.max()
    ymin = py.min()
    ymax = py.max()
    half0 = 0.5 * max(xmax - xmin, ymax - ymin)
    half0 = half0 * (1.0 + 1e-12) + 1e-12

    order = np.arange(n)
    buf = np.empty(n, np.int64)
    quad = np.empty(n, np.int64)

    start[0] = 0
    count[0] = n
    ncx[0] = 0.5 * (xmin + xmax)
    ncy[0] = 0.5 * (ymin + ymax)
    nhalf[0] = half0
    n_nodes = 1
    min_half = half0 * 1e-12

    stack = np.empty(node_cap + 8, np.int64)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        nid = stack[sp]
        s = start[nid]
        c = count[nid]
        if c <= bucket or nhalf[nid] <= min_half:
            continue  # leaf
        cx = ncx[nid]
        cy = ncy[nid]
        qh = 0.5 * nhalf[nid]
        cnt0 = 0
        cnt1 = 0
        cnt2 = 0
        cnt3 = 0
        for k in range(s, s + c):
            idx = order[k]
            q = 0
            if px[idx] >= cx:
                q += 1
            if py[idx] >= cy:
                q += 2
            quad[k] = q
            if q == 0:
                cnt0 += 1
            elif q == 1:
                cnt1 += 1
            elif q == 2:
                cnt2 += 1
            else:
                cnt3 += 1
        off0 = s
        off1 = off0 + cnt0
        off2 = off1 + cnt1
        off3 = off2 + cnt2
        p0 = off0
        p1 = off1
        p2 = off2
        p3 = off3
        for k in range(s, s + c):
            q = quad[k]
            if q == 0:
                buf[p0] = order[k]
                p0 += 1
            elif q == 1:
                buf[p1] = order[k]
                p1 += 1
            elif q == 2:
                buf[p2] = order[k]
                p2 += 1
            else:
                buf[p3] = order[k]
                p3 += 1
        for k in range(s, s + c):
            order[k] = buf[k]
        if n_nodes + 4 > node_cap:
            return (child, start, count, ncx, ncy, nhalf, comx, comy, gsum, gabs,
                    order, -1)
        for q in range(4):
            if q == 0:
                cs = off0
                cc = cnt0
            elif q == 1:
                cs = off1
                cc = cnt1
            elif q == 2:
                cs = off2
                cc = cnt2
            else:
                cs = off3
                cc = cnt3
            if cc == 0:
                continue
            cid = n_nodes
            n_nodes += 1
            child[nid, q] = cid
            start[cid] = cs
            count[cid] = cc
            ncx[cid] = cx - qh if q % 2 == 0 else cx + qh
            ncy[cid] = cy - qh if q < 2 else cy + qh
            nhalf[cid] = qh
            stack[sp] = cid
            sp += 1

    # aggregates, children first (ids increase downward)
    for nid in range(n_nodes - 1, -1, -1):
        if child[nid, 0] == -1 and child[nid, 1] == -1 and child[nid, 2] == -1 and child[nid, 3] == -1:
            sx_ = 0.0
            sy_ = 0.0
            sg = 0.0
            sa = 0.0
            for k in range(start[nid], start[nid] + count[nid]):
                idx = order[k]
                a = abs(gam[idx])
                sx_ += a * px[idx]
                sy_ += a * py[idx]
                sg += gam[idx]
                sa += a
            if sa > 0.0:
                comx[nid] = sx_ / sa
                comy[nid] = sy_ / sa
            else:
                comx[nid] = ncx[nid]
                comy[nid] = ncy[nid]
            gsum[nid] = sg
            gabs[nid] = sa
        else:
            sx_ = 0.0
            sy_ = 0.0
            sg = 0.0
            sa = 0.0
            for q in range(4):
                cid = child[nid, q]
                if cid >= 0:
                    sx_ += gabs[cid] * comx[cid]
                    sy_ += gabs[cid] * comy[cid]
                    sg += gsum[cid]
                    sa += gabs[cid]
            if sa > 0.0:
                comx[nid] = sx_ / sa
                comy[nid] = sy_ / sa
            else:
                comx[nid] = ncx[nid]
                comy[nid] = ncy[nid]
            gsum[nid] = sg
            gabs[nid] = sa
    return (child, start, count, ncx, ncy, nhalf, comx, comy, gsum, gabs,
            order, n_nodes)


@njit(cache=True, fastmath=True)
def _tree_velocity(qx, qy, qg, child, start, count, ncx, ncy, nhalf,
                   comx, comy, gsum, n_nodes, tx, ty,
                   tile_start, tile_count, eps, theta, gauss, outx, outy):
    # One traversal per target tile; accepted monopoles and leaf ranges are
    # then applied to every target in the tile, in traversal order.
    inv_eps2 = 1.0 / (eps * eps)
    near2 = 4.0 * eps * eps
    mono_x = np.empty(n_nodes)
    mono_y = np.empty(n_nodes)
    mono_g = np.empty(n_nodes)
    dir_s = np.empty(n_nodes, np.int64)
    dir_c = np.empty(n_nodes, np.int64)
    stack = np.empty(n_nodes + 8, np.int64)
    for ti in range(tile_start.shape[0]):
        ts = tile_start[ti]
        tc = tile_count[ti]
        bx0 = tx[ts]
        bx1 = tx[ts]
        by0 = ty[ts]
        by1 = ty[ts]
        for k in range(ts + 1, ts + tc):
            if tx[k] < bx0:
                bx0 = tx[k]
            if tx[k] > bx1:
                bx1 = tx[k]
            if ty[k] < by0:
                by0 = ty[k]
            if ty[k] > by1:
                by1 = ty[k]
        bcx = 0.5 * (bx0 + bx1)
        bcy = 0.5 * (by0 + by1)
        bhx = 0.5 * (bx1 - bx0)
        bhy = 0.5 * (by1 - by0)
        nm = 0
        nd = 0
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            nid = stack[sp]
            ddx = abs(ncx[nid] - bcx) - (nhalf[nid] + bhx)
            ddy = abs(ncy[nid] - bcy) - (nhalf[nid] + bhy)
            if ddx < 0.0:
                ddx = 0.0
            if ddy < 0.0:
                ddy = 0.0
            d2 = ddx * ddx + ddy * ddy
            side = 2.0 * nhalf[nid]
            is_leaf = child[nid, 0] == -1 and child[nid, 1] == -1 and child[nid, 2] == -1 and child[nid, 3] == -1
            opening = side * side < theta * theta * d2
            if opening and d2 > near2:
                mono_x[nm] = comx[nid]
                mono_y[nm] = comy[nid]
                mono_g[nm] = gsum[nid]
                nm += 1
            elif is_leaf:
                dir_s[nd] = start[nid]
                dir_c[nd] = count[nid]
                nd += 1
            else:
                for q in range(4):
                    cid = child[nid, q]
                    if cid >= 0:
                        stack[sp] = cid
                        sp += 1
        for k in range(ts, ts + tc):
            xi = tx[k]
            yi = ty[k]
            ax = 0.0
            ay = 0.0
            for m in range(nm):
                dx = xi - mono_x[m]
                dy = yi - mono_y[m]
                r2 = dx * dx + dy * dy
                if gauss == 0:
                    om = max(0.0, 1.0 - r2 * inv_eps2)
                    om2 = om * om
                    mf = 1.0 - om2 * om2
                else:
                    mf = -math.expm1(-r2 * inv_eps2)
                f = mono_g[m] * _INV_2PI * mf / max(r2, _TINY)
                ax -= dy * f
                ay += dx * f
            for m in range(nd):
                for j in range(dir_s[m], dir_s[m] + dir_c[m]):
                    dx = xi - qx[j]
                    dy = yi - qy[j]
                    r2 = dx * dx + dy * dy
                    if gauss == 0:
                        om = max(0.0, 1.0 - r2 * inv_eps2)
                        om2 = om * om
                        mf = 1.0 - om2 * om2
                    else:
                        mf = -math.expm1(-r2 * inv_eps2)
                    f = qg[j] * _INV_2PI * mf / max(r2, _TINY)
                    ax -= dy * f
                    ay += dx * f
            outx[k] = ax
            outy[k] = ay


class Quadtree:
    """Bucketed quadtree over blob positions with |circulation|-weighted centroids."""

    BUCKET = 16

    def __init__(self, px, py, gam):
        n = px.shape[0]
        cap = max(128, 8 * n // self.BUCKET + 256)
        while True:
            parts = _tree_build(px, py, gam, self.BUCKET, cap)
            if parts[-1] >= 0:
                break
            cap *= 4
        (self.child, self.start, self.count, self.ncx, self.ncy, self.nhalf,
         self.comx, self.comy, self.gsum, self.gabs, self.order,
         self.n_nodes) = parts
        self.qx = px[self.order]
        self.qy = py[self.order]
        self.qg = gam[self.order]

    def leaf_tiles(self):
        leaves = []
        for nid in range(self.n_nodes):
            if (self.child[nid] < 0).all():
                leaves.append((self.start[nid], self.count[nid]))
        arr = np.array(leaves, dtype=np.int64)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def velocity_self(self, eps, profile, theta):
        """Velocity induced at every blob, blobs as their own targets."""
        tile_start, tile_count = self.leaf_tiles()
        outx = np.empty_like(self.qx)
        outy = np.empty_like(self.qx)
        _tree_velocity(self.qx, self.qy, self.qg, self.child, self.start,
                       self.count, self.ncx, self.ncy, self.nhalf,
                       self.comx, self.comy, self.gsum, self.n_nodes,
                       self.qx, self.qy, tile_start, tile_count, eps, theta,
                       0 if profile == PROFILE_POLY6 else 1, outx, outy)
        vx = np.empty_like(outx)
        vy = np.empty_like(outy)
        vx[self.order] = outx
        vy[self.order] = outy
        return vx, vy

    def velocity_targets(self, tx, ty, eps, profile, theta, tile=32):
        """Velocity at arbitrary targets, tiled in input order."""
        n = tx.shape[0]
        tile_start = np.arange(0, n, tile, dtype=np.int64)
        tile_count = np.minimum(tile, n - tile_start)
        outx = np.empty_like(tx)
        outy = np.empty_like(tx)
        _tree_velocity(self.qx, self.qy, self.qg, self.child, self.start,
                       self.count, self.ncx, self.ncy, self.nhalf,
                       self.comx, self.comy, self.gsum, self.n_nodes,
                       tx, ty, tile_start, tile_count, eps, theta,
                       0 if profile == PROFILE_POLY6 else 1, outx, outy)
        return outx, outy
