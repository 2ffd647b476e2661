"""Variable-coefficient pressure Poisson solver: multigrid-preconditioned CG.

Solves ``div(beta grad p) = f`` on cell centres. Arrays here carry a single
ghost layer; ``bx[i]`` is the face coefficient ``beta / h^2`` between cells
``i-1`` and ``i``. Walls have zero face coefficient (homogeneous Neumann).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu

from . import kernels
from .errors import SolverError


@dataclass
class PoissonSettings:
    tolerance: float = 1e-8
    max_iterations: int = 200
    smoother_sweeps: int = 2
    coarsest_cells: int = 4096

    def __post_init__(self):
        if not 0.0 < self.tolerance <= 1e-4:
            raise ValueError("Poisson tolerance must lie in (0, 1e-4]")


@dataclass
class SolveInfo:
    iterations: int
    residuals: list = field(default_factory=list)


def fill_ghosts1(p, periodic):
    """Ghost layer of width 1: periodic copy, else copy (values unused at walls)."""
    for ax in range(3):
        n = p.shape[ax] - 2
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        src_lo = [slice(None)] * 3
        src_hi = [slice(None)] * 3
        lo[ax], hi[ax] = 0, n + 1
        if periodic[ax]:
            src_lo[ax], src_hi[ax] = n, 1
        else:
            src_lo[ax], src_hi[ax] = 1, n
        p[tuple(lo)] = p[tuple(src_lo)]
        p[tuple(hi)] = p[tuple(src_hi)]
    return p


class Level:
    def __init__(self, bx, by, bz, periodic):
        self.b = (bx, by, bz)
        self.periodic = periodic
        self.shape = bx.shape
        self.n = tuple(s - 2 for s in bx.shape)
        d = np.zeros(self.shape, order="F")
        c = (slice(1, -1),) * 3
        d[c] = (bx[2:, 1:-1, 1:-1] + bx[1:-1, 1:-1, 1:-1] + by[1:-1, 2:, 1:-1] + by[1:-1, 1:-1, 1:-1]
                + bz[1:-1, 1:-1, 2:] + bz[1:-1, 1:-1, 1:-1])
        self.diag = d
        self.singular = True  # all-Neumann/periodic: constants are in the null space
        self.lu = None

    def apply(self, p):
        """``A p = sum b (p_nb - p)`` on interior cells (ghosts filled here)."""
        fill_ghosts1(p, self.periodic)
        bx, by, bz = self.b
        c = (slice(1, -1),) * 3
        out = np.zeros(self.shape, order="F")
        pc = p[c]
        out[c] = (bx[2:, 1:-1, 1:-1] * (p[2:, 1:-1, 1:-1] - pc) + bx[1:-1, 1:-1, 1:-1] * (p[:-2, 1:-1, 1:-1] - pc)
                  + by[1:-1, 2:, 1:-1] * (p[1:-1, 2:, 1:-1] - pc) + by[1:-1, 1:-1, 1:-1] * (p[1:-1, :-2, 1:-1] - pc)
                  + bz[1:-1, 1:-1, 2:] * (p[1:-1, 1:-1, 2:] - pc) + bz[1:-1, 1:-1, 1:-1] * (p[1:-1, 1:-1, :-2] - pc))
        return out

    def smooth(self, p, rhs, sweeps, reverse=False):
        colors = (1, 0) if reverse else (0, 1)
        for _ in range(sweeps):
            for color in colors:
                fill_ghosts1(p, self.periodic)
                kernels.rbgs(p, rhs, *self.b, self.diag, color)
        return p

    def coarsenable(self):
        return all(n % 2 == 0 and n >= 4 for n in self.n)

    def coarsen(self):
        """Galerkin-consistent coarse coefficients for piecewise-constant transfer."""
        nc = tuple(n // 2 for n in self.n)
        out = []
        for ax, b in enumerate(self.b):
            cb = np.zeros(tuple(m + 2 for m in nc), order="F")
            # fine face 2I-1 (1-based interior numbering) lies on coarse face I
            # sum the 2x2 fine faces in the plane of each coarse face
            tot = 0.0
            for oa in (0, 1):
                for ob in (0, 1):
                    s2 = [slice(1, 1 + 2 * m, 2) for m in nc]
                    s2[ax] = slice(1, 2 * nc[ax] + 2, 2)
                    others = [a for a in range(3) if a != ax]
                    s2[others[0]] = slice(1 + oa, 1 + oa + 2 * nc[others[0]], 2)
                    s2[others[1]] = slice(1 + ob, 1 + ob + 2 * nc[others[1]], 2)
                    tot = tot + b[tuple(s2)]
            dst = [slice(1, 1 + m) for m in nc]
            dst[ax] = slice(1, nc[ax] + 2)
            cb[tuple(dst)] = tot / 8.0
            out.append(cb)
        return Level(*out, self.periodic)

    def factorize(self):
        """Sparse LU of the operator with one cell pinned (coarsest level)."""
        nx, ny, nz = self.n
        N = nx * ny * nz
        idx = np.arange(N).reshape(self.n, order="F")
        rows, cols, vals = [], [], []
        diag = np.zeros(N)
        for ax, b in enumerate(self.b):
            n = self.n[ax]
            for shift in (1, -1):
                # neighbour across the face shared with cell i+shift
                if shift == 1:
                    bsl = [slice(1, -1)] * 3
                    bsl[ax] = slice(2, n + 2)
                else:
                    bsl = [slice(1, -1)] * 3
                    bsl[ax] = slice(1, n + 1)
                coef = b[tuple(bsl)].ravel(order="F")
                nb = np.roll(idx, -shift, axis=ax).ravel(order="F")
                me = idx.ravel(order="F")
                if not self.periodic[ax]:
                    pos = np.indices(self.n)[ax].ravel(order="F")
                    ok = (pos + shift >= 0) & (pos + shift < n)
                    coef = np.where(ok, coef, 0.0)
                rows.append(me)
                cols.append(nb)
                vals.append(coef)
                diag -= coef
        rows.append(np.arange(N))
        cols.append(np.arange(N))
        vals.append(diag)
        A = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)).tocsr()
        A = A.tolil()
        A[0, :] = 0.0
        A[0, 0] = 1.0
        self.lu = splu(A.tocsc())

    def direct(self, rhs):
        r = rhs[1:-1, 1:-1, 1:-1].ravel(order="F").copy()
        r[0] = 0.0
        x = self.lu.solve(r)
        out = np.zeros(self.shape, order="F")
        out[1:-1, 1:-1, 1:-1] = x.reshape(self.n, order="F")
        return out


def restrict(r, nc):
    c = (slice(1, -1),) * 3
    f = r[c]
    out = np.zeros(tuple(m + 2 for m in nc), order="F")
    out[c] = 0.125 * (f[0::2, 0::2, 0::2] + f[1::2, 0::2, 0::2] + f[0::2, 1::2, 0::2] + f[1::2, 1::2, 0::2]
                      + f[0::2, 0::2, 1::2] + f[1::2, 0::2, 1::2] + f[0::2, 1::2, 1::2] + f[1::2, 1::2, 1::2])
    return out


def prolong_add(p, e):
    c = (slice(1, -1),) * 3
    ec = e[c]
    pf = p[c]
    for a in (0, 1):
        for b in (0, 1):
            for d in (0, 1):
                pf[a::2, b::2, d::2] += ec
    return p


class Multigrid:
    def __init__(self, bx, by, bz, periodic, settings):
        self.settings = settings
        self.levels = [Level(bx, by, bz, periodic)]
        while (self.levels[-1].coarsenable()
               and np.prod(self.levels[-1].n) > settings.coarsest_cells):
            self.levels.append(self.levels[-1].coarsen())
        self.levels[-1].factorize()

    def vcycle(self, rhs, lvl=0):
        L = self.levels[lvl]
        if lvl == len(self.levels) - 1:
            return L.direct(rhs)
        s = self.settings.smoother_sweeps
        e = np.zeros(L.shape, order="F")
        L.smooth(e, rhs, s)
        r = rhs - L.apply(e)
        nc = self.levels[lvl + 1].n
        ec = self.vcycle(restrict(r, nc), lvl + 1)
        prolong_add(e, ec)
        L.smooth(e, rhs, s, reverse=True)
        return e


def _interior_dot(a, b):
    c = (slice(1, -1),) * 3
    return float(np.vdot(a[c], b[c]))


def _remove_mean(a):
    c = (slice(1, -1),) * 3
    a[c] -= a[c].mean()
    return a


def solve(bx, by, bz, rhs, periodic, settings=None, x0=None, mg=None):
    """Solve ``A p = rhs`` (``A p = div(beta grad p)``); returns ``(p, info)``.

    All inputs use ghost width 1. The right-hand side is made mean-free
    (solvability in the all-Neumann/periodic case) and so is the result.
    """
    settings = settings or PoissonSettings()
    mg = mg or Multigrid(bx, by, bz, periodic, settings)
    L = mg.levels[0]
    f = _remove_mean(np.array(rhs, order="F", dtype=float))
    p = np.zeros(L.shape, order="F") if x0 is None else np.array(x0, order="F", dtype=float)
    # CG on the negative semi-definite A; every inner product flips sign
    # together, so the iteration matches CG on -A
    r = f - L.apply(p)
    fn = np.sqrt(_interior_dot(f, f))
    info = SolveInfo(0)
    if fn == 0.0:
        return np.zeros(L.shape, order="F"), info
    # residual of A p = f, kept as r = f - A p; preconditioner solves A z = r
    z = _remove_mean(mg.vcycle(r))
    d = z.copy()
    rz = _interior_dot(r, z)
    for it in range(1, settings.max_iterations + 1):
        Ad = L.apply(d)
        dAd = _interior_dot(d, Ad)
        if dAd == 0.0:
            break
        alpha = rz / dAd
        p += alpha * d
        r -= alpha * Ad
        res = np.sqrt(_interior_dot(r, r)) / fn
        info.residuals.append(res)
        info.iterations = it
        if res <= settings.tolerance:
            break
        z = _remove_mean(mg.vcycle(r))
        rz_new = _interior_dot(r, z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    else:
        raise SolverError(f"pressure solve did not converge in {settings.max_iterations} iterations "
                          f"(residual {info.residuals[-1]:.3e})", info.residuals)
    _remove_mean(p)
    fill_ghosts1(p, periodic)
    return p, info
