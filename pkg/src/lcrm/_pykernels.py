"""Pure numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and the same arithmetic; :mod:`lcrm.kernels` picks one at import.

Index conventions: grid arrays are padded with two ghost layers per side.
A fractional padded index ``s`` maps to physical position
``x0 + (s - 2 + c) * h`` with ``c = 0.5`` for cell-centred axes and ``0``
for face-staggered ones; the caller does that conversion.
"""

import numpy as np

_TINY = 1e-300


def delta1(r):
    r = np.abs(r)
    return (3.0 - 2.0 * r + np.sqrt(np.maximum(1.0 + 4.0 * r - 4.0 * r * r, 0.0))) / 8.0


def delta(r):
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    inner = r <= 1.0
    mid = (r > 1.0) & (r < 2.0)
    out[inner] = delta1(r[inner])
    out[mid] = 0.5 - delta1(2.0 - r[mid])
    return out


def _stencil(s):
    base = np.floor(s).astype(np.int64) - 1
    offs = np.arange(4)
    idx = base[:, :, None] + offs  # (N, 3, 4)
    w = delta(s[:, :, None] - idx)
    return idx, w


def spread(arr, s, vals):
    """Accumulate ``vals`` into ``arr`` with the 4x4x4 Peskin stencil.

    Weights are the bare tensor products (no 1/volume factor).
    """
    s = np.ascontiguousarray(s, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if len(s) == 0:
        return arr
    idx, w = _stencil(s)
    nx, ny, nz = arr.shape
    flat = (idx[:, 0, :, None, None]
            + nx * (idx[:, 1, None, :, None] + ny * idx[:, 2, None, None, :]))
    wt = (w[:, 0, :, None, None] * w[:, 1, None, :, None] * w[:, 2, None, None, :]
          * vals[:, None, None, None])
    acc = np.bincount(flat.ravel(), weights=wt.ravel(), minlength=arr.size)
    # arr is Fortran ordered: flat index i + nx*(j + ny*k)
    arr += acc.reshape(arr.shape, order="F")
    return arr


def gather(arr, s):
    s = np.ascontiguousarray(s, dtype=float)
    if len(s) == 0:
        return np.zeros(0)
    idx, w = _stencil(s)
    vals = arr[idx[:, 0, :, None, None], idx[:, 1, None, :, None], idx[:, 2, None, None, :]]
    wt = w[:, 0, :, None, None] * w[:, 1, None, :, None] * w[:, 2, None, None, :]
    return (vals * wt).sum(axis=(1, 2, 3))


def trilinear(arr, s):
    s = np.ascontiguousarray(s, dtype=float)
    if len(s) == 0:
        return np.zeros(0)
    i0 = np.floor(s).astype(np.int64)
    f = s - i0
    i, j, k = i0[:, 0], i0[:, 1], i0[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    gx, gy, gz = 1.0 - fx, 1.0 - fy, 1.0 - fz
    return (arr[i, j, k] * gx * gy * gz
            + arr[i + 1, j, k] * fx * gy * gz
            + arr[i, j + 1, k] * gx * fy * gz
            + arr[i + 1, j + 1, k] * fx * fy * gz
            + arr[i, j, k + 1] * gx * gy * fz
            + arr[i + 1, j, k + 1] * fx * gy * fz
            + arr[i, j + 1, k + 1] * gx * fy * fz
            + arr[i + 1, j + 1, k + 1] * fx * fy * fz)


def closest_point_triangle(p, a, b, c):
    """Closest points on triangles (a, b, c) to points p; all (M, 3)."""
    def dot(u, v):
        return np.einsum("ij,ij->i", u, v)

    ab = b - a
    ac = c - a
    ap = p - a
    d1 = dot(ab, ap)
    d2 = dot(ac, ap)
    bp = p - b
    d3 = dot(ab, bp)
    d4 = dot(ac, bp)
    cp = p - c
    d5 = dot(ab, cp)
    d6 = dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        denom = np.where(np.abs(denom) > _TINY, denom, _TINY)
        v = vb / denom
        w = vc / denom
        q = a + ab * v[:, None] + ac * w[:, None]
        m = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        den = (d4 - d3) + (d5 - d6)
        t = np.where(m, (d4 - d3) / np.where(m, den, 1.0), 0.0)
        q = np.where(m[:, None], b + (c - b) * t[:, None], q)
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        t = np.where(m, d2 / np.where(m, d2 - d6, 1.0), 0.0)
        q = np.where(m[:, None], a + ac * t[:, None], q)
        m = (d6 >= 0) & (d5 <= d6)
        q = np.where(m[:, None], c, q)
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        t = np.where(m, d1 / np.where(m, d1 - d3, 1.0), 0.0)
        q = np.where(m[:, None], a + ab * t[:, None], q)
        m = (d3 >= 0) & (d4 <= d3)
        q = np.where(m[:, None], b, q)
        m = (d1 <= 0) & (d2 <= 0)
        q = np.where(m[:, None], a, q)
    return q


def _band_candidates(tris, x0, h, n, periodic, band, lo_el, hi_el):
    """Candidate (cell, element, distance, |cos|, sign) tuples for a chunk."""
    t = tris[lo_el:hi_el]
    m = len(t)
    vmin = t.min(axis=1)
    vmax = t.max(axis=1)
    lo = np.floor((vmin - x0) / h - 0.5).astype(np.int64) - band
    hi = np.floor((vmax - x0) / h - 0.5).astype(np.int64) + band + 1
    width = (hi - lo + 1).max(axis=0)
    ox = np.arange(width[0])
    oy = np.arange(width[1])
    oz = np.arange(width[2])
    gi = lo[:, 0, None, None, None] + ox[None, :, None, None]
    gj = lo[:, 1, None, None, None] + oy[None, None, :, None]
    gk = lo[:, 2, None, None, None] + oz[None, None, None, :]
    shape = (m, width[0], width[1], width[2])
    gi = np.broadcast_to(gi, shape).ravel()
    gj = np.broadcast_to(gj, shape).ravel()
    gk = np.broadcast_to(gk, shape).ravel()
    el = np.broadcast_to(np.arange(m)[:, None, None, None], shape).ravel()
    hib = hi[el]
    valid = (gi <= hib[:, 0]) & (gj <= hib[:, 1]) & (gk <= hib[:, 2])
    for ax, g in enumerate((gi, gj, gk)):
        if not periodic[ax]:
            valid &= (g >= 0) & (g < n[ax])
    gi, gj, gk, el = gi[valid], gj[valid], gk[valid], el[valid]
    p = np.stack([x0[0] + (gi + 0.5) * h[0],
                  x0[1] + (gj + 0.5) * h[1],
                  x0[2] + (gk + 0.5) * h[2]], axis=1)
    a, b, c = t[el, 0], t[el, 1], t[el, 2]
    q = closest_point_triangle(p, a, b, c)
    diff = p - q
    d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return gi % n[0], gj % n[1], gk % n[2], el + lo_el, d, diff


def distance_band(tris, normals, x0, h, n, periodic, band, chunk=256):
    """Unsigned band distance, sign and nearest element per interior cell.

    Returns ``(dist, sign, nearest)`` of shape ``n``; cells farther than
    ``band * min(h)`` from every element hold ``inf``, ``0`` and ``-1``.
    """
    tris = np.asarray(tris, dtype=float)
    normals = np.asarray(normals, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    h = np.asarray(h, dtype=float)
    n = tuple(int(v) for v in n)
    ncell = n[0] * n[1] * n[2]
    dmin = np.full(ncell, np.inf)
    tol = 1e-9 * float(h.min())
    nel = len(tris)
    for lo in range(0, nel, chunk):
        gi, gj, gk, el, d, _ = _band_candidates(tris, x0, h, n, periodic, band, lo, min(lo + chunk, nel))
        flat = gi + n[0] * (gj + n[1] * gk)
        np.minimum.at(dmin, flat, d)
    bestcos = np.full(ncell, -1.0)
    bestel = np.full(ncell, -1, dtype=np.int64)
    bestsign = np.zeros(ncell)
    for lo in range(0, nel, chunk):
        gi, gj, gk, el, d, diff = _band_candidates(tris, x0, h, n, periodic, band, lo, min(lo + chunk, nel))
        flat = gi + n[0] * (gj + n[1] * gk)
        keep = d <= dmin[flat] + tol
        flat, el, d, diff = flat[keep], el[keep], d[keep], diff[keep]
        dn = np.einsum("ij,ij->i", diff, normals[el])
        cosv = np.where(d > 0, np.abs(dn) / np.where(d > 0, d, 1.0), 1.0)
        sgn = np.where(dn >= 0, 1.0, -1.0)
        # per cell: max cos, then smallest element id
        order = np.lexsort((el, -cosv, flat))
        flat, el, cosv, sgn = flat[order], el[order], cosv[order], sgn[order]
        first = np.ones(len(flat), dtype=bool)
        first[1:] = flat[1:] != flat[:-1]
        flat, el, cosv, sgn = flat[first], el[first], cosv[first], sgn[first]
        upd = cosv > bestcos[flat]
        f = flat[upd]
        bestcos[f] = cosv[upd]
        bestel[f] = el[upd]
        bestsign[f] = sgn[upd]
    far = dmin > band * float(h.min())
    dmin[far] = np.inf
    bestsign[far] = 0.0
    bestel[far] = -1
    shape = n
    return (dmin.reshape(shape, order="F"), bestsign.reshape(shape, order="F"),
            bestel.reshape(shape, order="F"))


def _godunov(a, b, c, h):
    # a <= b <= c elementwise
    u = a + h
    m = u > b
    with np.errstate(invalid="ignore"):
        u2 = 0.5 * (a + b + np.sqrt(np.maximum(2.0 * h * h - (a - b) ** 2, 0.0)))
    u = np.where(m, u2, u)
    m = m & (u > c)
    s = a + b + c
    with np.errstate(invalid="ignore"):
        u3 = (s + np.sqrt(np.maximum(s * s - 3.0 * (a * a + b * b + c * c - h * h), 0.0))) / 3.0
    return np.where(m, u3, u)


def _axis_min(d, ax, periodic):
    lo = np.roll(d, 1, axis=ax)
    hi = np.roll(d, -1, axis=ax)
    if not periodic:
        sl = [slice(None)] * d.ndim
        sl[ax] = 0
        lo[tuple(sl)] = np.inf
        sl[ax] = -1
        hi[tuple(sl)] = np.inf
    return np.minimum(lo, hi)


def fast_sweep(d, frozen, h, periodic, max_iter=50, tol=1e-12):
    """Solve |grad d| = 1 outside ``frozen`` cells (first-order upwind).

    Plane-by-plane Gauss-Seidel: each sweep walks one axis in one direction
    and updates a whole plane at once from the planes already visited.
    Iterates to a fixed point, so the result matches the cell-by-cell
    eight-ordering sweep to round-off.
    """
    d = np.array(d, dtype=float, order="F")
    free = ~frozen
    n = d.shape
    for _ in range(max_iter):
        change = 0.0
        for ax in range(3):
            for direction in (1, -1):
                rng = range(n[ax]) if direction > 0 else range(n[ax] - 1, -1, -1)
                for idx in rng:
                    sl = [slice(None)] * 3
                    sl[ax] = idx
                    sl = tuple(sl)
                    fr = free[sl]
                    if not fr.any():
                        continue
                    mins = []
                    for bx in range(3):
                        if bx == ax:
                            nb = []
                            for off in (-1, 1):
                                j = idx + off
                                if periodic[ax]:
                                    j %= n[ax]
                                elif j < 0 or j >= n[ax]:
                                    continue
                                s2 = [slice(None)] * 3
                                s2[ax] = j
                                nb.append(d[tuple(s2)])
                            mins.append(np.minimum.reduce(nb) if len(nb) > 1 else nb[0])
                        else:
                            plane = d[sl]
                            pax = bx if bx < ax else bx - 1
                            mins.append(_axis_min(plane, pax, periodic[bx]))
                    m = np.sort(np.stack(mins), axis=0)
                    hh = float(h)
                    new = _godunov(m[0], m[1], m[2], hh)
                    old = d[sl]
                    cand = np.where(fr & (new < old), new, old)
                    with np.errstate(invalid="ignore"):
                        dif = np.where(np.isfinite(old), np.abs(cand - old),
                                       np.where(np.isfinite(cand), np.inf, 0.0))
                    change = max(change, float(dif.max()))
                    d[sl] = cand
        if change <= tol * hh:
            break
    return d


# Kuhn split of the unit cube: vertex bits are (x, y, z) -> x + 2y + 4z
def _kuhn_tets():
    tets = []
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        v = [0]
        cur = 0
        for ax in perm:
            cur |= 1 << ax
            v.append(cur)
        tets.append((tuple(v), perm))
    return tets


KUHN_TETS = _kuhn_tets()
CORNER_OFFSETS = np.array([[(c >> 0) & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)])


def _tet_polygons():
    """For each of the 16 sign patterns, the crossing edges in cyclic order."""
    table = {}
    for pat in range(16):
        pos = [v for v in range(4) if (pat >> v) & 1]
        neg = [v for v in range(4) if not (pat >> v) & 1]
        if len(pos) in (0, 4):
            table[pat] = []
        elif len(pos) == 1 or len(pos) == 3:
            lone = pos[0] if len(pos) == 1 else neg[0]
            others = [v for v in range(4) if v != lone]
            table[pat] = [(lone, o) for o in others]
        else:
            a, b = pos
            c, d = neg
            table[pat] = [(a, c), (a, d), (b, d), (b, c)]
    return table


TET_POLYGONS = _tet_polygons()


def tetra_march(phi, x0, h, ranges, eps):
    """Zero-contour triangles of ``phi`` over dual cells.

    ``ranges`` gives, per axis, the padded index range ``[lo, hi)`` of the
    lower corner of each dual cell. Values with ``phi >= 0`` count as
    positive; exact zeros are nudged to ``eps``.
    """
    x0 = np.asarray(x0, dtype=float)
    h = np.asarray(h, dtype=float)
    (ilo, ihi), (jlo, jhi), (klo, khi) = ranges
    corners = []
    for c in range(8):
        ox, oy, oz = CORNER_OFFSETS[c]
        corners.append(phi[ilo + ox:ihi + ox, jlo + oy:jhi + oy, klo + oz:khi + oz])
    cv = np.stack(corners, axis=-1)
    cv = np.where(cv == 0.0, eps, cv)
    pos = cv > 0
    mixed = pos.any(axis=-1) & ~pos.all(axis=-1)
    ci, cj, ck = np.nonzero(mixed)
    if len(ci) == 0:
        return np.zeros((0, 3, 3))
    vals = cv[ci, cj, ck]  # (M, 8)
    cidx = np.stack([ci + ilo, cj + jlo, ck + klo], axis=1)
    out = []
    for verts, perm in KUHN_TETS:
        tv = vals[:, list(verts)]  # (M, 4)
        grad = np.stack([(tv[:, 1] - tv[:, 0]) / h[perm[0]],
                         (tv[:, 2] - tv[:, 1]) / h[perm[1]],
                         (tv[:, 3] - tv[:, 2]) / h[perm[2]]], axis=1)
        g = np.zeros_like(grad)
        for m_ax, ax in enumerate(perm):
            g[:, ax] = grad[:, m_ax]
        pat = ((tv > 0).astype(np.int64) * np.array([1, 2, 4, 8])).sum(axis=1)
        for p in np.unique(pat):
            poly = TET_POLYGONS[int(p)]
            if not poly:
                continue
            sel = pat == p
            pts = []
            for a, b in poly:
                # verts are ordered by inclusion: the smaller tet index is the lower corner
                lo_v, hi_v = (a, b) if a < b else (b, a)
                fa = tv[sel, lo_v]
                fb = tv[sel, hi_v]
                t = fa / (fa - fb)
                # corner coordinates from integer indices so shared edges match bitwise
                xa = x0 + ((cidx[sel] + CORNER_OFFSETS[verts[lo_v]]) - 1.5) * h
                xb = x0 + ((cidx[sel] + CORNER_OFFSETS[verts[hi_v]]) - 1.5) * h
                pts.append(xa + t[:, None] * (xb - xa))
            gs = g[sel]
            if len(pts) == 3:
                tri_list = [(pts[0], pts[1], pts[2])]
            else:
                d02 = np.sum((pts[0] - pts[2]) ** 2, axis=1)
                d13 = np.sum((pts[1] - pts[3]) ** 2, axis=1)
                use02 = (d02 <= d13)[:, None]
                t1 = (pts[0], pts[1], np.where(use02, pts[2], pts[3]))
                t2 = (np.where(use02, pts[0], pts[1]), pts[2], pts[3])
                tri_list = [t1, t2]
            for p0, p1, p2 in tri_list:
                nrm = np.cross(p1 - p0, p2 - p0)
                flip = (np.einsum("ij,ij->i", nrm, gs) < 0)[:, None]
                q1 = np.where(flip, p2, p1)
                q2 = np.where(flip, p1, p2)
                out.append(np.stack([p0, q1, q2], axis=1))
    return np.concatenate(out, axis=0)


def rbgs(p, rhs, bx, by, bz, diag, color):
    """One red or black Gauss-Seidel half-sweep on a padded array (ghost width 1)."""
    nx, ny, nz = (s - 2 for s in p.shape)
    i, j, k = np.meshgrid(np.arange(1, nx + 1), np.arange(1, ny + 1), np.arange(1, nz + 1), indexing="ij")
    mask = ((i + j + k + color) & 1) == 1
    mask &= diag[1:-1, 1:-1, 1:-1] != 0.0
    c = (slice(1, -1),) * 3
    s = (bx[2:, 1:-1, 1:-1] * p[2:, 1:-1, 1:-1] + bx[1:-1, 1:-1, 1:-1] * p[:-2, 1:-1, 1:-1]
         + by[1:-1, 2:, 1:-1] * p[1:-1, 2:, 1:-1] + by[1:-1, 1:-1, 1:-1] * p[1:-1, :-2, 1:-1]
         + bz[1:-1, 1:-1, 2:] * p[1:-1, 1:-1, 2:] + bz[1:-1, 1:-1, 1:-1] * p[1:-1, 1:-1, :-2])
    d = np.where(mask, diag[c], 1.0)
    p[c] = np.where(mask, (s - rhs[c]) / d, p[c])
    return p
