# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; numerical twins of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, fabs, INFINITY

cnp.import_array()


cdef inline double _delta1(double r) noexcept nogil:
    cdef double q
    r = fabs(r)
    q = 1.0 + 4.0 * r - 4.0 * r * r
    if q < 0.0:
        q = 0.0
    return (3.0 - 2.0 * r + sqrt(q)) / 8.0


cdef inline double _delta(double r) noexcept nogil:
    r = fabs(r)
    if r <= 1.0:
        return _delta1(r)
    if r < 2.0:
        return 0.5 - _delta1(2.0 - r)
    return 0.0


def delta(r):
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    flat_in = r.ravel()
    flat_out = out.ravel()
    cdef Py_ssize_t i
    for i in range(flat_in.shape[0]):
        flat_out[i] = _delta(flat_in[i])
    return flat_out.reshape(r.shape)


cdef inline void _weights(double s, long *base, double *w) noexcept nogil:
    cdef long b = <long>floor(s) - 1
    cdef int m
    base[0] = b
    for m in range(4):
        w[m] = _delta(s - (b + m))


def spread(double[:, :, :] arr, s_in, vals_in):
    cdef double[:, ::1] s = np.ascontiguousarray(s_in, dtype=float)
    cdef double[::1] vals = np.ascontiguousarray(vals_in, dtype=float)
    cdef Py_ssize_t n = s.shape[0], p
    cdef long bx, by, bz
    cdef double wx[4]
    cdef double wy[4]
    cdef double wz[4]
    cdef int a, b, c
    cdef double v, vyz
    with nogil:
        for p in range(n):
            _weights(s[p, 0], &bx, wx)
            _weights(s[p, 1], &by, wy)
            _weights(s[p, 2], &bz, wz)
            v = vals[p]
            for c in range(4):
                for b in range(4):
                    vyz = v * wy[b] * wz[c]
                    for a in range(4):
                        arr[bx + a, by + b, bz + c] += wx[a] * vyz
    return arr


def gather(double[:, :, :] arr, s_in):
    cdef double[:, ::1] s = np.ascontiguousarray(s_in, dtype=float)
    cdef Py_ssize_t n = s.shape[0], p
    out_np = np.zeros(n)
    cdef double[::1] out = out_np
    cdef long bx, by, bz
    cdef double wx[4]
    cdef double wy[4]
    cdef double wz[4]
    cdef int a, b, c
    cdef double acc
    with nogil:
        for p in range(n):
            _weights(s[p, 0], &bx, wx)
            _weights(s[p, 1], &by, wy)
            _weights(s[p, 2], &bz, wz)
            acc = 0.0
            for c in range(4):
                for b in range(4):
                    for a in range(4):
                        acc += arr[bx + a, by + b, bz + c] * wx[a] * wy[b] * wz[c]
            out[p] = acc
    return out_np


def trilinear(double[:, :, :] arr, s_in):
    cdef double[:, ::1] s = np.ascontiguousarray(s_in, dtype=float)
    cdef Py_ssize_t n = s.shape[0], p
    out_np = np.zeros(n)
    cdef double[::1] out = out_np
    cdef long i, j, k
    cdef double fx, fy, fz, gx, gy, gz
    with nogil:
        for p in range(n):
            i = <long>floor(s[p, 0])
            j = <long>floor(s[p, 1])
            k = <long>floor(s[p, 2])
            fx = s[p, 0] - i
            fy = s[p, 1] - j
            fz = s[p, 2] - k
            gx = 1.0 - fx
            gy = 1.0 - fy
            gz = 1.0 - fz
            out[p] = (arr[i, j, k] * gx * gy * gz
                      + arr[i + 1, j, k] * fx * gy * gz
                      + arr[i, j + 1, k] * gx * fy * gz
                      + arr[i + 1, j + 1, k] * fx * fy * gz
                      + arr[i, j, k + 1] * gx * gy * fz
                      + arr[i + 1, j, k + 1] * fx * gy * fz
                      + arr[i, j + 1, k + 1] * gx * fy * fz
                      + arr[i + 1, j + 1, k + 1] * fx * fy * fz)
    return out_np


cdef inline double _dot(double *u, double *v) noexcept nogil:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


cdef void _closest(double *p, double *a, double *b, double *c, double *q) noexcept nogil:
    cdef double ab[3]
    cdef double ac[3]
    cdef double ap[3]
    cdef double bp[3]
    cdef double cp[3]
    cdef double d1, d2, d3, d4, d5, d6, va, vb, vc, denom, v, w, t, den
    cdef int m
    for m in range(3):
        ab[m] = b[m] - a[m]
        ac[m] = c[m] - a[m]
        ap[m] = p[m] - a[m]
        bp[m] = p[m] - b[m]
        cp[m] = p[m] - c[m]
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    if d1 <= 0 and d2 <= 0:
        for m in range(3):
            q[m] = a[m]
        return
    if d3 >= 0 and d4 <= d3:
        for m in range(3):
            q[m] = b[m]
        return
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        t = d1 / (d1 - d3)
        for m in range(3):
            q[m] = a[m] + ab[m] * t
        return
    if d6 >= 0 and d5 <= d6:
        for m in range(3):
            q[m] = c[m]
        return
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        t = d2 / (d2 - d6)
        for m in range(3):
            q[m] = a[m] + ac[m] * t
        return
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        den = (d4 - d3) + (d5 - d6)
        t = (d4 - d3) / den
        for m in range(3):
            q[m] = b[m] + (c[m] - b[m]) * t
        return
    denom = va + vb + vc
    if fabs(denom) <= 1e-300:
        denom = 1e-300
    v = vb / denom
    w = vc / denom
    for m in range(3):
        q[m] = a[m] + ab[m] * v + ac[m] * w


def closest_point_triangle(p_in, a_in, b_in, c_in):
    cdef double[:, ::1] p = np.ascontiguousarray(p_in, dtype=float)
    cdef double[:, ::1] a = np.ascontiguousarray(a_in, dtype=float)
    cdef double[:, ::1] b = np.ascontiguousarray(b_in, dtype=float)
    cdef double[:, ::1] c = np.ascontiguousarray(c_in, dtype=float)
    out_np = np.zeros((p.shape[0], 3))
    cdef double[:, ::1] out = out_np
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        _closest(&p[i, 0], &a[i, 0], &b[i, 0], &c[i, 0], &out[i, 0])
    return out_np


cdef inline long _floordiv_mod(long i, long n) noexcept nogil:
    cdef long r = i % n
    if r < 0:
        r += n
    return r


cdef inline double _gap2(double p, double lo, double hi) noexcept nogil:
    cdef double t = 0.0
    if p < lo:
        t = lo - p
    elif p > hi:
        t = p - hi
    return t * t


def distance_band(tris_in, normals_in, x0_in, h_in, n_in, periodic, int band, chunk=None):
    cdef double[:, :, ::1] tris = np.ascontiguousarray(tris_in, dtype=float)
    cdef double[:, ::1] normals = np.ascontiguousarray(normals_in, dtype=float)
    cdef double x0[3]
    cdef double h[3]
    cdef long n[3]
    cdef int per[3]
    cdef int m
    for m in range(3):
        x0[m] = float(x0_in[m])
        h[m] = float(h_in[m])
        n[m] = int(n_in[m])
        per[m] = 1 if periodic[m] else 0
    dist_np = np.full((n[0], n[1], n[2]), np.inf, order="F")
    sign_np = np.zeros((n[0], n[1], n[2]), order="F")
    near_np = np.full((n[0], n[1], n[2]), -1, dtype=np.int64, order="F")
    cos_np = np.full((n[0], n[1], n[2]), -1.0, order="F")
    cdef double[::1, :, :] dist = dist_np
    cdef double[::1, :, :] sgn = sign_np
    cdef cnp.int64_t[::1, :, :] near = near_np
    cdef double[::1, :, :] bcos = cos_np
    cdef Py_ssize_t e, nel = tris.shape[0]
    cdef long lo[3]
    cdef long hi[3]
    cdef long gi, gj, gk, wi, wj, wk
    cdef double vmin, vmax, d, dn, cosv
    cdef double p[3]
    cdef double q[3]
    cdef double diff[3]
    cdef double hmin = min(h[0], min(h[1], h[2]))
    cdef double tol = 1e-9 * hmin
    cdef double cap = band * hmin
    cdef double bmin[3]
    cdef double bmax[3]
    cdef double dz2, dy2, dx2, t, cur
    cdef int ipass, v
    with nogil:
        for ipass in range(2):
            for e in range(nel):
                for m in range(3):
                    vmin = tris[e, 0, m]
                    vmax = vmin
                    for v in range(1, 3):
                        if tris[e, v, m] < vmin:
                            vmin = tris[e, v, m]
                        if tris[e, v, m] > vmax:
                            vmax = tris[e, v, m]
                    bmin[m] = vmin
                    bmax[m] = vmax
                    lo[m] = <long>floor((vmin - x0[m]) / h[m] - 0.5) - band
                    hi[m] = <long>floor((vmax - x0[m]) / h[m] - 0.5) + band + 1
                    if not per[m]:
                        if lo[m] < 0:
                            lo[m] = 0
                        if hi[m] > n[m] - 1:
                            hi[m] = n[m] - 1
                for gk in range(lo[2], hi[2] + 1):
                    wk = _floordiv_mod(gk, n[2])
                    p[2] = x0[2] + (gk + 0.5) * h[2]
                    dz2 = _gap2(p[2], bmin[2], bmax[2])
                    if dz2 > cap * cap:
                        continue
                    for gj in range(lo[1], hi[1] + 1):
                        wj = _floordiv_mod(gj, n[1])
                        p[1] = x0[1] + (gj + 0.5) * h[1]
                        dy2 = dz2 + _gap2(p[1], bmin[1], bmax[1])
                        if dy2 > cap * cap:
                            continue
                        for gi in range(lo[0], hi[0] + 1):
                            wi = _floordiv_mod(gi, n[0])
                            p[0] = x0[0] + (gi + 0.5) * h[0]
                            # bounding-box distance is a lower bound on d
                            dx2 = dy2 + _gap2(p[0], bmin[0], bmax[0])
                            if dx2 > cap * cap:
                                continue
                            cur = dist[wi, wj, wk]
                            if ipass == 0:
                                if dx2 >= cur * cur:
                                    continue
                            elif sqrt(dx2) > cur + tol:
                                continue
                            _closest(p, &tris[e, 0, 0], &tris[e, 1, 0], &tris[e, 2, 0], q)
                            for m in range(3):
                                diff[m] = p[m] - q[m]
                            d = sqrt(_dot(diff, diff))
                            if ipass == 0:
                                if d < dist[wi, wj, wk]:
                                    dist[wi, wj, wk] = d
                            else:
                                if d <= dist[wi, wj, wk] + tol:
                                    dn = _dot(diff, &normals[e, 0])
                                    if d > 0:
                                        cosv = fabs(dn) / d
                                    else:
                                        cosv = 1.0
                                    if cosv > bcos[wi, wj, wk]:
                                        bcos[wi, wj, wk] = cosv
                                        near[wi, wj, wk] = e
                                        sgn[wi, wj, wk] = 1.0 if dn >= 0 else -1.0
    far = dist_np > cap
    dist_np[far] = np.inf
    sign_np[far] = 0.0
    near_np[far] = -1
    return dist_np, sign_np, near_np


cdef inline double _godunov(double a, double b, double c, double h) noexcept nogil:
    # a <= b <= c
    cdef double u = a + h
    cdef double s, q
    if u <= b:
        return u
    q = 2.0 * h * h - (a - b) * (a - b)
    if q < 0:
        q = 0
    u = 0.5 * (a + b + sqrt(q))
    if u <= c:
        return u
    s = a + b + c
    q = s * s - 3.0 * (a * a + b * b + c * c - h * h)
    if q < 0:
        q = 0
    return (s + sqrt(q)) / 3.0


cdef inline double _nbmin(double[::1, :, :] d, long i, long j, long k, int ax, long n, int per) noexcept nogil:
    cdef long im, ip
    cdef double lo = INFINITY, hi = INFINITY
    cdef long idx
    if ax == 0:
        idx = i
    elif ax == 1:
        idx = j
    else:
        idx = k
    im = idx - 1
    ip = idx + 1
    if per:
        im = _floordiv_mod(im, n)
        ip = _floordiv_mod(ip, n)
    if im >= 0:
        if ax == 0:
            lo = d[im, j, k]
        elif ax == 1:
            lo = d[i, im, k]
        else:
            lo = d[i, j, im]
    if ip < n:
        if ax == 0:
            hi = d[ip, j, k]
        elif ax == 1:
            hi = d[i, ip, k]
        else:
            hi = d[i, j, ip]
    return lo if lo < hi else hi


def fast_sweep(d_in, frozen_in, double h, periodic, int max_iter=50, double tol=1e-12):
    d_np = np.array(d_in, dtype=float, order="F")
    fr_np = np.asfortranarray(frozen_in, dtype=np.uint8)
    cdef double[::1, :, :] d = d_np
    cdef unsigned char[::1, :, :] fr = fr_np
    cdef long nx = d.shape[0], ny = d.shape[1], nz = d.shape[2]
    cdef int px = 1 if periodic[0] else 0
    cdef int py = 1 if periodic[1] else 0
    cdef int pz = 1 if periodic[2] else 0
    cdef int it, sweep, sx, sy, sz
    cdef long ii, jj, kk, i, j, k
    cdef double a, b, c, t, u, change, old, dif
    with nogil:
        for it in range(max_iter):
            change = 0.0
            for sweep in range(8):
                sx = 1 if (sweep & 1) == 0 else -1
                sy = 1 if (sweep & 2) == 0 else -1
                sz = 1 if (sweep & 4) == 0 else -1
                for kk in range(nz):
                    k = kk if sz > 0 else nz - 1 - kk
                    for jj in range(ny):
                        j = jj if sy > 0 else ny - 1 - jj
                        for ii in range(nx):
                            i = ii if sx > 0 else nx - 1 - ii
                            if fr[i, j, k]:
                                continue
                            a = _nbmin(d, i, j, k, 0, nx, px)
                            b = _nbmin(d, i, j, k, 1, ny, py)
                            c = _nbmin(d, i, j, k, 2, nz, pz)
                            if a > b:
                                t = a; a = b; b = t
                            if b > c:
                                t = b; b = c; c = t
                            if a > b:
                                t = a; a = b; b = t
                            if a == INFINITY:
                                continue
                            u = _godunov(a, b, c, h)
                            old = d[i, j, k]
                            if u < old:
                                if old == INFINITY:
                                    dif = INFINITY
                                else:
                                    dif = old - u
                                if dif > change:
                                    change = dif
                                d[i, j, k] = u
            if change <= tol * h:
                break
    return d_np


# Kuhn tetrahedra: vertex chains through corner bit masks (x + 2y + 4z)
cdef int KUHN[6][4]
cdef int KPERM[6][3]
_perms = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
for _t, _perm in enumerate(_perms):
    _cur = 0
    KUHN[_t][0] = 0
    for _m, _ax in enumerate(_perm):
        _cur |= 1 << _ax
        KUHN[_t][_m + 1] = _cur
        KPERM[_t][_m] = _ax


cdef inline void _edge_point(int a, int b, int *verts, double *tv, long *idx, double *x0, double *h, double *out) noexcept nogil:
    # corner coordinates come from integer indices so shared edges match bitwise
    cdef int lo_v, hi_v, m, clo, chi
    cdef double t, xa, xb
    if a < b:
        lo_v = a; hi_v = b
    else:
        lo_v = b; hi_v = a
    clo = verts[lo_v]
    chi = verts[hi_v]
    t = tv[lo_v] / (tv[lo_v] - tv[hi_v])
    for m in range(3):
        xa = x0[m] + ((idx[m] + ((clo >> m) & 1)) - 1.5) * h[m]
        xb = x0[m] + ((idx[m] + ((chi >> m) & 1)) - 1.5) * h[m]
        out[m] = xa + t * (xb - xa)


cdef inline void _emit(double[:, :, ::1] buf, Py_ssize_t row, double *p0, double *p1, double *p2, double *g) noexcept nogil:
    cdef double e1[3]
    cdef double e2[3]
    cdef double nr[3]
    cdef int m
    for m in range(3):
        e1[m] = p1[m] - p0[m]
        e2[m] = p2[m] - p0[m]
    nr[0] = e1[1] * e2[2] - e1[2] * e2[1]
    nr[1] = e1[2] * e2[0] - e1[0] * e2[2]
    nr[2] = e1[0] * e2[1] - e1[1] * e2[0]
    for m in range(3):
        buf[row, 0, m] = p0[m]
    if nr[0] * g[0] + nr[1] * g[1] + nr[2] * g[2] < 0:
        for m in range(3):
            buf[row, 1, m] = p2[m]
            buf[row, 2, m] = p1[m]
    else:
        for m in range(3):
            buf[row, 1, m] = p1[m]
            buf[row, 2, m] = p2[m]


def tetra_march(double[:, :, :] phi, x0_in, h_in, ranges, double eps):
    cdef double x0[3]
    cdef double h[3]
    cdef int m
    for m in range(3):
        x0[m] = float(x0_in[m])
        h[m] = float(h_in[m])
    cdef long ilo = ranges[0][0], ihi = ranges[0][1]
    cdef long jlo = ranges[1][0], jhi = ranges[1][1]
    cdef long klo = ranges[2][0], khi = ranges[2][1]
    cdef Py_ssize_t cap = 1024, count = 0
    buf_np = np.zeros((cap, 3, 3))
    cdef double[:, :, ::1] buf = buf_np
    cdef long i, j, k
    cdef double cv[8]
    cdef double tv[4]
    cdef int verts[4]
    cdef long idx[3]
    cdef double g[3]
    cdef double pts[4][3]
    cdef int c, t, npos, pat, v, lone, a, b, cc, dd, nposv
    cdef int pos[4]
    cdef int neg[4]
    cdef int nneg
    cdef double d02, d13
    for k in range(klo, khi):
        for j in range(jlo, jhi):
            for i in range(ilo, ihi):
                npos = 0
                for c in range(8):
                    cv[c] = phi[i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)]
                    if cv[c] == 0.0:
                        cv[c] = eps
                    if cv[c] > 0:
                        npos += 1
                if npos == 0 or npos == 8:
                    continue
                if count + 12 > cap:
                    cap *= 2
                    new_np = np.zeros((cap, 3, 3))
                    new_np[:count] = buf_np[:count]
                    buf_np = new_np
                    buf = buf_np
                idx[0] = i
                idx[1] = j
                idx[2] = k
                for t in range(6):
                    nposv = 0
                    nneg = 0
                    for v in range(4):
                        verts[v] = KUHN[t][v]
                        tv[v] = cv[verts[v]]
                        if tv[v] > 0:
                            pos[nposv] = v
                            nposv += 1
                        else:
                            neg[nneg] = v
                            nneg += 1
                    if nposv == 0 or nposv == 4:
                        continue
                    g[KPERM[t][0]] = (tv[1] - tv[0]) / h[KPERM[t][0]]
                    g[KPERM[t][1]] = (tv[2] - tv[1]) / h[KPERM[t][1]]
                    g[KPERM[t][2]] = (tv[3] - tv[2]) / h[KPERM[t][2]]
                    if nposv == 1 or nposv == 3:
                        lone = pos[0] if nposv == 1 else neg[0]
                        m = 0
                        for v in range(4):
                            if v != lone:
                                _edge_point(lone, v, verts, tv, idx, x0, h, pts[m])
                                m += 1
                        _emit(buf, count, pts[0], pts[1], pts[2], g)
                        count += 1
                    else:
                        a = pos[0]; b = pos[1]; cc = neg[0]; dd = neg[1]
                        _edge_point(a, cc, verts, tv, idx, x0, h, pts[0])
                        _edge_point(a, dd, verts, tv, idx, x0, h, pts[1])
                        _edge_point(b, dd, verts, tv, idx, x0, h, pts[2])
                        _edge_point(b, cc, verts, tv, idx, x0, h, pts[3])
                        d02 = 0.0
                        d13 = 0.0
                        for m in range(3):
                            d02 += (pts[0][m] - pts[2][m]) * (pts[0][m] - pts[2][m])
                            d13 += (pts[1][m] - pts[3][m]) * (pts[1][m] - pts[3][m])
                        if d02 <= d13:
                            _emit(buf, count, pts[0], pts[1], pts[2], g)
                            _emit(buf, count + 1, pts[0], pts[2], pts[3], g)
                        else:
                            _emit(buf, count, pts[0], pts[1], pts[3], g)
                            _emit(buf, count + 1, pts[1], pts[2], pts[3], g)
                        count += 2
    return buf_np[:count].copy()


def rbgs(double[:, :, :] p, double[:, :, :] rhs, double[:, :, :] bx, double[:, :, :] by,
         double[:, :, :] bz, double[:, :, :] diag, int color):
    """One red or black Gauss-Seidel half-sweep on a padded array (ghost width 1).

    ``bx[i]`` couples cells ``i-1`` and ``i``; ghosts must already be set.
    """
    cdef long nx = p.shape[0] - 2, ny = p.shape[1] - 2, nz = p.shape[2] - 2
    cdef long i, j, k, i0
    cdef double s
    with nogil:
        for k in range(1, nz + 1):
            for j in range(1, ny + 1):
                i0 = 1 + ((j + k + color) & 1)
                for i in range(i0, nx + 1, 2):
                    if diag[i, j, k] == 0.0:
                        continue
                    s = (bx[i + 1, j, k] * p[i + 1, j, k] + bx[i, j, k] * p[i - 1, j, k]
                         + by[i, j + 1, k] * p[i, j + 1, k] + by[i, j, k] * p[i, j - 1, k]
                         + bz[i, j, k + 1] * p[i, j, k + 1] + bz[i, j, k] * p[i, j, k - 1])
                    p[i, j, k] = (s - rhs[i, j, k]) / diag[i, j, k]
    return p
