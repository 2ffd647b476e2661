"""Uniform staggered (MAC) grid, field containers and shared stencils.

Arrays are indexed ``[i, j, k]`` (x, y, z), Fortran ordered so x is the
fastest index, and padded with ``GHOST = 2`` layers on every side.
Cell ``i`` (padded) has its centre at ``x0 + (i - 2 + 0.5) h``; the
x-face array ``u[i]`` holds the face at ``x0 + (i - 2) h``, the left face
of cell ``i``.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DomainError, StabilityError

GHOST = 2
FACES = ("x-", "x+", "y-", "y+", "z-", "z+")
BOUNDARY_KINDS = ("periodic", "no_slip_wall", "zero_gradient", "fixed_value")


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    nz: int
    hx: float
    hy: float
    hz: float
    origin: tuple = (0.0, 0.0, 0.0)
    boundary: tuple = ("periodic",) * 6
    boundary_value: tuple = (0.0,) * 6

    def __post_init__(self):
        for n in (self.nx, self.ny, self.nz):
            if int(n) < 8:
                raise ValueError(f"grid needs at least 8 cells per axis, got {n}")
        for h in (self.hx, self.hy, self.hz):
            if not h > 0:
                raise ValueError("cell sizes must be positive")
        if len(self.boundary) != 6:
            raise ValueError("boundary needs one kind per face")
        for kind in self.boundary:
            if kind not in BOUNDARY_KINDS:
                raise ValueError(f"unknown boundary kind {kind!r}")
        for ax in range(3):
            lo, hi = self.boundary[2 * ax], self.boundary[2 * ax + 1]
            if (lo == "periodic") != (hi == "periodic"):
                raise ValueError(f"axis {'xyz'[ax]}: periodic faces must come in pairs")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "boundary", tuple(self.boundary))
        object.__setattr__(self, "boundary_value", tuple(float(v) for v in self.boundary_value))

    @classmethod
    def cube(cls, n, length, origin=(0.0, 0.0, 0.0), boundary="zero_gradient"):
        """Isotropic grid with ``n`` cells per axis (int or 3-tuple)."""
        ns = (n, n, n) if np.isscalar(n) else tuple(n)
        ls = (length, length, length) if np.isscalar(length) else tuple(length)
        bc = (boundary,) * 6 if isinstance(boundary, str) else tuple(boundary)
        return cls(ns[0], ns[1], ns[2], ls[0] / ns[0], ls[1] / ns[1], ls[2] / ns[2],
                   origin=origin, boundary=bc)

    @property
    def n(self):
        return (self.nx, self.ny, self.nz)

    @property
    def h(self):
        return np.array([self.hx, self.hy, self.hz])

    @property
    def hmin(self):
        return min(self.hx, self.hy, self.hz)

    @property
    def cell_volume(self):
        return self.hx * self.hy * self.hz

    @property
    def x0(self):
        return np.array(self.origin)

    @property
    def lengths(self):
        return np.array([self.nx * self.hx, self.ny * self.hy, self.nz * self.hz])

    @property
    def periodic(self):
        return tuple(self.boundary[2 * ax] == "periodic" for ax in range(3))

    @property
    def padded_shape(self):
        return (self.nx + 2 * GHOST, self.ny + 2 * GHOST, self.nz + 2 * GHOST)

    def face_shape(self, axis):
        shape = list(self.padded_shape)
        shape[axis] += 1
        return tuple(shape)

    def zeros(self, shape=None):
        return np.zeros(self.padded_shape if shape is None else shape, order="F")

    def interior(self, arr):
        g = GHOST
        return arr[g:g + self.nx, g:g + self.ny, g:g + self.nz]

    def centers(self, axis):
        n = self.n[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.h[axis]

    def cell_center_grid(self):
        """Physical coordinates of interior cell centres, each of shape ``n``."""
        return np.meshgrid(self.centers(0), self.centers(1), self.centers(2), indexing="ij")

    def wrap(self, points):
        """Map points into the box along periodic axes."""
        p = np.array(points, dtype=float, copy=True)
        for ax in range(3):
            if self.periodic[ax]:
                L = self.lengths[ax]
                c = p[..., ax]
                off = c - self.origin[ax]
                out = (off < 0.0) | (off >= L)
                # points already inside are left untouched
                if out.any():
                    c[out] = self.origin[ax] + np.mod(off[out], L)
        return p

    def check_inside(self, points):
        p = np.atleast_2d(points)
        lo = self.x0
        hi = self.x0 + self.lengths
        for ax in range(3):
            if self.periodic[ax]:
                continue
            bad = (p[:, ax] < lo[ax] - 1e-12 * self.h[ax]) | (p[:, ax] > hi[ax] + 1e-12 * self.h[ax])
            if bad.any():
                raise DomainError(f"point outside the domain along {'xyz'[ax]}: {p[bad][0]}")

    def index_coords(self, points, stagger=(0.5, 0.5, 0.5)):
        """Fractional padded indices of (wrapped) points for a staggering."""
        p = self.wrap(np.atleast_2d(points))
        return (p - self.x0) / self.h - np.asarray(stagger) + GHOST


FACE_STAGGER = ((0.0, 0.5, 0.5), (0.5, 0.0, 0.5), (0.5, 0.5, 0.0))
CELL_STAGGER = (0.5, 0.5, 0.5)


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray = None

    def __post_init__(self):
        if self.values is None:
            self.values = self.grid.zeros()
        elif self.values.shape != self.grid.padded_shape:
            raise ValueError(f"expected padded shape {self.grid.padded_shape}, got {self.values.shape}")

    @property
    def interior(self):
        return self.grid.interior(self.values)

    def copy(self):
        return ScalarField(self.grid, self.values.copy(order="F"))

    @classmethod
    def from_function(cls, grid, fn):
        f = cls(grid)
        X, Y, Z = grid.cell_center_grid()
        f.interior[...] = fn(X, Y, Z)
        apply_boundary(f)
        return f


@dataclass
class MacVelocity:
    grid: GridSpec
    u: np.ndarray = None
    v: np.ndarray = None
    w: np.ndarray = None
    wall_velocity: dict = field(default_factory=dict)

    def __post_init__(self):
        for ax, name in enumerate("uvw"):
            if getattr(self, name) is None:
                setattr(self, name, self.grid.zeros(self.grid.face_shape(ax)))

    @property
    def components(self):
        return (self.u, self.v, self.w)

    def copy(self):
        return MacVelocity(self.grid, self.u.copy(order="F"), self.v.copy(order="F"),
                           self.w.copy(order="F"), dict(self.wall_velocity))

    def face_interior(self, axis):
        """View of the unique interior faces of one component."""
        g = GHOST
        arr = self.components[axis]
        n = list(self.grid.n)
        if not self.grid.periodic[axis]:
            n[axis] += 1
        return arr[g:g + n[0], g:g + n[1], g:g + n[2]]

    def face_coords(self, axis):
        """Physical coordinates of the unique interior faces of ``axis``."""
        grid = self.grid
        axes = []
        for ax in range(3):
            n = grid.n[ax]
            if ax == axis:
                m = n if grid.periodic[ax] else n + 1
                axes.append(grid.origin[ax] + np.arange(m) * grid.h[ax])
            else:
                axes.append(grid.centers(ax))
        return np.meshgrid(*axes, indexing="ij")

    @classmethod
    def from_function(cls, grid, fn, wall_velocity=None):
        """Sample ``fn(X, Y, Z) -> (u, v, w)`` on the faces."""
        vel = cls(grid, wall_velocity=dict(wall_velocity or {}))
        for ax in range(3):
            X, Y, Z = vel.face_coords(ax)
            vel.face_interior(ax)[...] = fn(X, Y, Z)[ax]
        apply_boundary(vel)
        return vel

    def cell_centered(self):
        """Velocity averaged to interior cell centres, shape ``n + (3,)``."""
        g = GHOST
        nx, ny, nz = self.grid.n
        uc = 0.5 * (self.u[g:g + nx, g:g + ny, g:g + nz] + self.u[g + 1:g + 1 + nx, g:g + ny, g:g + nz])
        vc = 0.5 * (self.v[g:g + nx, g:g + ny, g:g + nz] + self.v[g:g + nx, g + 1:g + 1 + ny, g:g + nz])
        wc = 0.5 * (self.w[g:g + nx, g:g + ny, g:g + nz] + self.w[g:g + nx, g:g + ny, g + 1:g + 1 + nz])
        return np.stack([uc, vc, wc], axis=-1)

    def max_abs(self):
        return max(float(np.abs(self.face_interior(ax)).max()) for ax in range(3))


def _sl(axis, idx):
    s = [slice(None)] * 3
    s[axis] = idx
    return tuple(s)


def _fill_scalar_axis(a, axis, n, kind_lo, kind_hi, val_lo, val_hi):
    g = GHOST
    if kind_lo == "periodic":
        a[_sl(axis, slice(0, g))] = a[_sl(axis, slice(n, n + g))]
        a[_sl(axis, slice(n + g, n + 2 * g))] = a[_sl(axis, slice(g, 2 * g))]
        return
    for side, kind, val in ((0, kind_lo, val_lo), (1, kind_hi, val_hi)):
        for m in range(g):
            if side == 0:
                ghost, mirror, adj = g - 1 - m, g + m, g
            else:
                ghost, mirror, adj = n + g + m, n + g - 1 - m, n + g - 1
            if kind == "zero_gradient":
                a[_sl(axis, ghost)] = a[_sl(axis, adj)]
            elif kind == "no_slip_wall":
                a[_sl(axis, ghost)] = a[_sl(axis, mirror)]
            elif kind == "fixed_value":
                a[_sl(axis, ghost)] = 2.0 * val - a[_sl(axis, mirror)]


def _fill_normal_axis(a, axis, n, kind_lo, kind_hi, val_lo, val_hi):
    """Face-normal component along its own axis; faces ``g .. g+n``."""
    g = GHOST
    if kind_lo == "periodic":
        a[_sl(axis, slice(n + g, n + 2 * g + 1))] = a[_sl(axis, slice(g, 2 * g + 1))]
        a[_sl(axis, slice(0, g))] = a[_sl(axis, slice(n, n + g))]
        return
    for side, kind, val in ((0, kind_lo, val_lo), (1, kind_hi, val_hi)):
        wall = g if side == 0 else n + g
        sgn = -1 if side == 0 else 1
        if kind == "zero_gradient":
            for m in range(1, g + 1):
                a[_sl(axis, wall + sgn * m)] = a[_sl(axis, wall)]
            continue
        a[_sl(axis, wall)] = val
        for m in range(1, g + 1):
            a[_sl(axis, wall + sgn * m)] = 2.0 * val - a[_sl(axis, wall - sgn * m)]


def apply_boundary(fld, kinds=None, values=None):
    """Fill ghost layers in place according to per-face boundary kinds.

    ``kinds`` overrides the grid's face kinds (6-tuple); ``values`` the
    fixed values. A :class:`MacVelocity` uses its ``wall_velocity`` map
    (face name -> 3-vector) on wall faces.
    """
    grid = fld.grid
    kinds = grid.boundary if kinds is None else tuple(kinds)
    values = grid.boundary_value if values is None else tuple(values)
    if isinstance(fld, ScalarField):
        for ax in range(3):
            _fill_scalar_axis(fld.values, ax, grid.n[ax], kinds[2 * ax], kinds[2 * ax + 1],
                              values[2 * ax], values[2 * ax + 1])
        return fld
    if isinstance(fld, MacVelocity):
        for comp, arr in enumerate(fld.components):
            for ax in range(3):
                wl = fld.wall_velocity.get(FACES[2 * ax], (0.0, 0.0, 0.0))
                wh = fld.wall_velocity.get(FACES[2 * ax + 1], (0.0, 0.0, 0.0))
                klo, khi = kinds[2 * ax], kinds[2 * ax + 1]
                if comp == ax:
                    _fill_normal_axis(arr, ax, grid.n[ax], klo, khi, wl[comp], wh[comp])
                else:
                    kl = "fixed_value" if klo in ("no_slip_wall", "fixed_value") else klo
                    kh = "fixed_value" if khi in ("no_slip_wall", "fixed_value") else khi
                    _fill_scalar_axis(arr, ax, grid.n[ax], kl, kh, wl[comp], wh[comp])
        return fld
    raise TypeError(f"cannot apply boundary to {type(fld).__name__}")


def sample_trilinear(arr, grid, points, stagger=CELL_STAGGER):
    """Trilinear samples of a padded array at many points (ghosts must be set)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid.check_inside(pts)
    s = grid.index_coords(pts, stagger)
    return kernels.trilinear(arr, s)


def sample_trilinear_many(arrs, grid, points, stagger=CELL_STAGGER):
    """Samples of several same-staggered arrays at the same points, as (N, len(arrs))."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grid.check_inside(pts)
    s = grid.index_coords(pts, stagger)
    return np.stack([kernels.trilinear(a, s) for a in arrs], axis=1)


def interpolate_trilinear(fld, point):
    """Trilinear value of a scalar field, or velocity vector, at ``point``.

    Accepts a single point (returns scalar / 3-vector) or an (N, 3) array.
    """
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if isinstance(fld, ScalarField):
        out = sample_trilinear(fld.values, fld.grid, pts)
        return float(out[0]) if single else out
    if isinstance(fld, MacVelocity):
        out = np.stack([sample_trilinear(arr, fld.grid, pts, FACE_STAGGER[ax])
                        for ax, arr in enumerate(fld.components)], axis=-1)
        return out[0] if single else out
    raise TypeError(f"cannot interpolate {type(fld).__name__}")


def _minabs(a, b):
    return np.where(np.abs(a) <= np.abs(b), a, b)


def eno2_derivative(f, vel_axis, axis, h):
    """Upwind ENO2 derivative of padded ``f`` along ``axis`` at interior points.

    ``vel_axis`` is the advecting velocity at those points (interior shape).
    """
    g = GHOST
    n = [s - 2 * g for s in f.shape]

    def shifted(off):
        s = [slice(g, g + n[0]), slice(g, g + n[1]), slice(g, g + n[2])]
        s[axis] = slice(g + off, g + off + n[axis])
        return f[tuple(s)]

    fm2, fm1, f0, fp1, fp2 = (shifted(o) for o in (-2, -1, 0, 1, 2))
    d2m = fm2 - 2 * fm1 + f0
    d20 = fm1 - 2 * f0 + fp1
    d2p = f0 - 2 * fp1 + fp2
    back = (f0 - fm1) / h + _minabs(d2m, d20) / (2 * h)
    fwd = (fp1 - f0) / h - _minabs(d20, d2p) / (2 * h)
    return np.where(vel_axis > 0, back, fwd)


def convection_term(f, vel):
    """``u . grad f`` at interior cells with ENO2 upwinding (padded ``f``)."""
    uc = vel.cell_centered()
    h = vel.grid.h
    out = np.zeros(vel.grid.n, order="F")
    for ax in range(3):
        out += uc[..., ax] * eno2_derivative(f, uc[..., ax], ax, h[ax])
    return out


def cfl_number(vel, dt):
    return vel.max_abs() * dt / vel.grid.hmin


def eno2_advect(fld, vel, dt):
    """Advance ``df/dt + u . grad f = 0`` by ``dt`` (SSP-RK2, ENO2 in space)."""
    if cfl_number(vel, dt) > 1.0 + 1e-12:
        raise StabilityError(f"CFL number {cfl_number(vel, dt):.3g} exceeds 1")
    stage = fld.copy()
    stage.interior[...] -= dt * convection_term(fld.values, vel)
    apply_boundary(stage)
    out = fld.copy()
    out.interior[...] = 0.5 * (fld.interior + stage.interior - dt * convection_term(stage.values, vel))
    apply_boundary(out)
    return out


def divergence(vel):
    g = GHOST
    nx, ny, nz = vel.grid.n
    hx, hy, hz = vel.grid.h
    out = ScalarField(vel.grid)
    out.interior[...] = (
        (vel.u[g + 1:g + 1 + nx, g:g + ny, g:g + nz] - vel.u[g:g + nx, g:g + ny, g:g + nz]) / hx
        + (vel.v[g:g + nx, g + 1:g + 1 + ny, g:g + nz] - vel.v[g:g + nx, g:g + ny, g:g + nz]) / hy
        + (vel.w[g:g + nx, g:g + ny, g + 1:g + 1 + nz] - vel.w[g:g + nx, g:g + ny, g:g + nz]) / hz)
    return out


def central_gradient(arr, grid):
    """Central-difference gradient of a padded cell array, padded by one less."""
    h = grid.h
    gx = np.zeros_like(arr)
    gy = np.zeros_like(arr)
    gz = np.zeros_like(arr)
    gx[1:-1] = (arr[2:] - arr[:-2]) / (2 * h[0])
    gy[:, 1:-1] = (arr[:, 2:] - arr[:, :-2]) / (2 * h[1])
    gz[:, :, 1:-1] = (arr[:, :, 2:] - arr[:, :, :-2]) / (2 * h[2])
    return gx, gy, gz


def write_vtk(path, grid, arrays, title="lcrm"):
    """Legacy ASCII structured-points file with point data at cell centres.

    ``arrays`` maps names to interior-shaped scalars or ``n + (3,)`` vectors.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    nx, ny, nz = grid.n
    x0 = grid.x0 + 0.5 * grid.h
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET STRUCTURED_POINTS",
             f"DIMENSIONS {nx} {ny} {nz}",
             f"ORIGIN {x0[0]:.17g} {x0[1]:.17g} {x0[2]:.17g}",
             f"SPACING {grid.hx:.17g} {grid.hy:.17g} {grid.hz:.17g}",
             f"POINT_DATA {nx * ny * nz}"]
    for name, data in arrays.items():
        data = np.asarray(data)
        if data.ndim == 4:
            lines.append(f"VECTORS {name} double")
            flat = data.reshape(-1, 3, order="F")
            lines.extend(f"{a:.10g} {b:.10g} {c:.10g}" for a, b, c in flat)
        else:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.10g}" for v in data.ravel(order="F"))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk_scalars(path):
    """Read back the scalar arrays written by :func:`write_vtk` (for tests/tools)."""
    text = Path(path).read_text().split("\n")
    dims = None
    out = {}
    i = 0
    while i < len(text):
        line = text[i].strip()
        if line.startswith("DIMENSIONS"):
            dims = tuple(int(v) for v in line.split()[1:])
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            count = dims[0] * dims[1] * dims[2]
            vals = np.array([float(v) for v in text[i + 2:i + 2 + count]])
            out[name] = vals.reshape(dims, order="F")
            i += 1 + count
        i += 1
    return out
