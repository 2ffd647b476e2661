"""Exchange between front elements and the grid through the Peskin kernel."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError
from .grid import GHOST, CELL_STAGGER, ScalarField, apply_boundary


def delta1(r):
    """Inner branch of the kernel, valid for ``|r| <= 1``."""
    r = np.asarray(r, dtype=float)
    if np.any(np.abs(r) > 1.0):
        raise DomainError("delta1 is defined for |r| <= 1 only")
    a = np.abs(r)
    out = (3.0 - 2.0 * a + np.sqrt(1.0 + 4.0 * a - 4.0 * a * a)) / 8.0
    return float(out) if out.ndim == 0 else out


def delta(r):
    out = kernels.python_backend.delta(np.asarray(r, dtype=float))
    return float(out) if out.ndim == 0 else out


@dataclass
class KernelStamp:
    base: tuple
    weights: np.ndarray  # (4, 4, 4), already divided by the cell volume


def kernel_stamp(grid, point, stagger=CELL_STAGGER):
    s = grid.index_coords(point, stagger)[0]
    base = np.floor(s).astype(int) - 1
    w = [delta(s[ax] - (base[ax] + np.arange(4))) for ax in range(3)]
    weights = np.einsum("i,j,k->ijk", *w) / grid.cell_volume
    return KernelStamp(tuple(int(b) for b in base), weights)


def fold_ghosts(arr, grid, stagger=CELL_STAGGER):
    """Move spread contributions that landed in ghost layers back inside.

    Periodic axes add each ghost to its periodic image. Other axes reflect
    it onto its mirror cell (or mirror face for the face-normal axis), so
    the interior integral equals the spread total.
    """
    g = GHOST
    for ax in range(3):
        n = grid.n[ax]
        face = stagger[ax] == 0.0

        def sl(i):
            s = [slice(None)] * 3
            s[ax] = i
            return tuple(s)

        if grid.periodic[ax]:
            top = arr.shape[ax]
            for i in range(g):
                arr[sl(i + n)] += arr[sl(i)]
                arr[sl(i)] = 0.0
            for i in range(n + g, top):
                arr[sl(i - n)] += arr[sl(i)]
                arr[sl(i)] = 0.0
        else:
            lo_m = (lambda i: 2 * g - i) if face else (lambda i: 2 * g - 1 - i)
            hi_wall = n + g
            hi_m = (lambda i: 2 * hi_wall - i) if face else (lambda i: 2 * hi_wall - 1 - i)
            for i in range(g):
                arr[sl(lo_m(i))] += arr[sl(i)]
                arr[sl(i)] = 0.0
            first_ghost = n + g + 1 if face else n + g
            for i in range(first_ghost, arr.shape[ax]):
                arr[sl(hi_m(i))] += arr[sl(i)]
                arr[sl(i)] = 0.0
    return arr


def spread_to_array(grid, positions, values, stagger=CELL_STAGGER, shape=None):
    """Kernel-spread point values onto a padded array (density units, 1/volume)."""
    arr = grid.zeros(shape)
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(pos):
        grid.check_inside(pos)
        s = grid.index_coords(pos, stagger)
        kernels.spread(arr, s, np.asarray(values, dtype=float).ravel() / grid.cell_volume)
        fold_ghosts(arr, grid, stagger)
    return arr


def distribute(grid, positions, values, areas):
    """``M_ijk = sum_f value_f D_ijk(x_f) dA_f`` as a cell field."""
    vals = np.asarray(values, dtype=float) * np.asarray(areas, dtype=float)
    out = ScalarField(grid, spread_to_array(grid, positions, vals))
    return _fill_spread_ghosts(out)


def _fill_spread_ghosts(fld):
    kinds = tuple("periodic" if k == "periodic" else "zero_gradient" for k in fld.grid.boundary)
    return apply_boundary(fld, kinds)


def default_eps_q(grid):
    return 1e-8 / grid.hmin


@dataclass
class SurfaceField:
    gamma: ScalarField   # Gamma(x)
    mass: ScalarField    # M_s
    q: ScalarField       # Q
    band: np.ndarray     # padded bool mask, True where Q >= eps_Q


def normalized_surface_field(mesh, grid, values=None, eps_q=None):
    """``Gamma(x) = M_s / Q`` from element concentrations (or ``values``)."""
    eps_q = default_eps_q(grid) if eps_q is None else eps_q
    c = mesh.centroids()
    a = mesh.areas()
    vals = mesh.gamma if values is None else np.asarray(values, dtype=float)
    m = distribute(grid, c, vals, a)
    q = distribute(grid, c, np.ones(len(mesh)), a)
    band = q.values >= eps_q
    g = ScalarField(grid)
    g.values[band] = m.values[band] / q.values[band]
    return SurfaceField(g, m, q, band)


def kernel_interpolate(fld, point, stagger=CELL_STAGGER):
    """``sum field_ijk D_ijk(x) V`` (ghost layers must be filled)."""
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    fld.grid.check_inside(pts)
    s = fld.grid.index_coords(pts, stagger)
    out = kernels.gather(fld.values, s)
    return float(out[0]) if single else out
