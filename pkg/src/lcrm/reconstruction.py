"""Distance field, indicator/material fields and tetra-marching rebuild of the front."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import GeometryError
from .front import FrontMesh, eps_geom
from .grid import GHOST, ScalarField, central_gradient, sample_trilinear

BAND_CELLS = 4


@dataclass
class DistanceField:
    phi: ScalarField
    narrow_band_width: int
    nearest: np.ndarray   # interior-shaped element id (-1 outside the band)
    in_band: np.ndarray   # interior-shaped bool

    @property
    def grid(self):
        return self.phi.grid


@dataclass
class IndicatorField:
    ind: ScalarField
    rho: ScalarField
    mu: ScalarField


def extrapolate_ghosts(arr, grid):
    """Periodic copy, or linear extrapolation on non-periodic sides (in place)."""
    g = GHOST
    for ax in range(3):
        n = grid.n[ax]

        def sl(i):
            s = [slice(None)] * 3
            s[ax] = i
            return tuple(s)

        if grid.periodic[ax]:
            arr[sl(slice(0, g))] = arr[sl(slice(n, n + g))]
            arr[sl(slice(n + g, n + 2 * g))] = arr[sl(slice(g, 2 * g))]
        else:
            d_lo = arr[sl(g)] - arr[sl(g + 1)]
            d_hi = arr[sl(n + g - 1)] - arr[sl(n + g - 2)]
            for m in range(1, g + 1):
                arr[sl(g - m)] = arr[sl(g)] + m * d_lo
                arr[sl(n + g - 1 + m)] = arr[sl(n + g - 1)] + m * d_hi
    return arr


def _component_signs(in_band, sign, periodic):
    """Sign for every non-band cell from the band cells its region touches."""
    far = ~in_band
    structure = ndimage.generate_binary_structure(3, 1)
    labels, nlab = ndimage.label(far, structure=structure)
    if nlab == 0:
        return np.zeros(in_band.shape)
    # merge regions that meet across periodic sides
    parent = np.arange(nlab + 1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ax in range(3):
        if not periodic[ax]:
            continue
        a = np.take(labels, 0, axis=ax).ravel()
        b = np.take(labels, -1, axis=ax).ravel()
        both = (a > 0) & (b > 0)
        for la, lb in set(zip(a[both].tolist(), b[both].tolist())):
            ra, rb = find(la), find(lb)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    root = np.array([find(i) for i in range(nlab + 1)])
    labels = root[labels]
    # accumulate signs of band cells adjacent to each region
    votes = np.zeros(nlab + 1)
    for ax in range(3):
        for off in (1, -1):
            nb_lab = np.roll(labels, off, axis=ax)
            nb_ok = np.ones(labels.shape, dtype=bool)
            if not periodic[ax]:
                edge = [slice(None)] * 3
                edge[ax] = 0 if off == 1 else -1
                nb_ok[tuple(edge)] = False
            sel = in_band & nb_ok & (nb_lab > 0)
            votes += np.bincount(nb_lab[sel], weights=sign[sel], minlength=nlab + 1)
    region_sign = np.where(votes >= 0, 1.0, -1.0)
    return np.where(far, region_sign[labels], 0.0)


def build_distance(mesh, grid, band=BAND_CELLS):
    """Signed distance to the front: exact in a band, fast-swept outside."""
    if len(mesh) == 0:
        raise GeometryError("cannot build a distance field from an empty front")
    dist, sign, nearest = kernels.distance_band(mesh.verts, mesh.normals(), grid.x0, grid.h,
                                                grid.n, grid.periodic, int(band))
    # beyond band*h a cell may not have seen its true nearest element
    in_band = dist <= band * grid.hmin
    nearest = np.where(in_band, nearest, -1)
    far_sign = _component_signs(in_band, sign, grid.periodic)
    d = kernels.fast_sweep(np.where(in_band, dist, np.inf), in_band, grid.hmin, grid.periodic)
    d = np.where(np.isfinite(d), d, band * grid.hmin * 4)
    signed = np.where(in_band, sign, far_sign) * d
    phi = ScalarField(grid)
    phi.interior[...] = signed
    extrapolate_ghosts(phi.values, grid)
    return DistanceField(phi, int(band), np.asfortranarray(nearest), in_band)


def smoothed_heaviside(phi, width):
    x = np.clip(phi / width, -1.0, 1.0)
    return np.where(phi >= width, 1.0,
                    np.where(phi <= -width, 0.0, 0.5 * (1.0 + x + np.sin(np.pi * x) / np.pi)))


def build_indicator(dist, rho1=1.0, rho2=1.0, mu1=1.0, mu2=1.0, width=1.5):
    """Indicator (0 in phase 1, 1 in phase 2) with half-width ``width`` cells."""
    phi = dist.phi if isinstance(dist, DistanceField) else dist
    grid = phi.grid
    ind = ScalarField(grid, np.asfortranarray(smoothed_heaviside(phi.values, width * grid.hmin)))
    rho = ScalarField(grid, rho1 + (rho2 - rho1) * ind.values)
    mu = ScalarField(grid, mu1 + (mu2 - mu1) * ind.values)
    return IndicatorField(ind, rho, mu)


def march_ranges(grid):
    """Lower-corner index ranges of the dual cells to march (each cell once)."""
    return [(GHOST, GHOST + n if per else GHOST + n - 1) for n, per in zip(grid.n, grid.periodic)]


def contour_mesh(phi):
    """Zero contour of a cell-centred field as a triangle soup (no surfactant)."""
    grid = phi.grid
    tris = kernels.tetra_march(phi.values, grid.x0, grid.h, march_ranges(grid), 1e-12 * grid.hmin)
    mesh = FrontMesh(tris)
    mesh.drop_degenerate(grid.hmin)
    mesh.flags["dropped_elements"] = 0
    return mesh


def rescale_mass(mesh, target):
    """Scale every Gamma_f so that sum Gamma_f A_e equals ``target``."""
    areas = mesh.areas()
    if not len(mesh):
        return mesh
    total = float(np.dot(mesh.gamma, areas))
    if total > 0.0:
        mesh.gamma = mesh.gamma * (target / total)
    elif target > 0 and areas.sum() > 0:
        mesh.gamma = np.full(len(mesh), target / areas.sum())
    # the last ulps go into the largest contributions so the sum matches exactly
    g = mesh.gamma
    for k in np.argsort(-areas * g)[:4]:
        if g[k] > 0 and _match_sum(g, areas, target, int(k)):
            break
    return mesh


def _match_sum(g, areas, target, k):
    """Search the bit pattern of ``g[k] > 0`` for ``dot(g, areas) == target``."""
    bits0 = np.float64(g[k]).view(np.int64)

    def resid(i):
        g[k] = np.int64(bits0 + i).view(np.float64)
        return target - float(np.dot(g, areas))

    r = resid(0)
    if r == 0.0:
        return True
    sgn = 1 if r > 0 else -1
    lo, step = 0, 1
    # exponential search for a bracket, then bisection on the ulp count
    while step < 2 ** 40:
        hi = sgn * step
        if bits0 + hi <= 0:
            break
        rh = resid(hi)
        if rh == 0.0:
            return True
        if (rh > 0) != (sgn > 0):
            while abs(hi - lo) > 1:
                mid = (lo + hi) // 2
                rm = resid(mid)
                if rm == 0.0:
                    return True
                if (rm > 0) == (sgn > 0):
                    lo = mid
                else:
                    hi = mid
            break
        lo, step = hi, step * 2
    resid(0)
    return False


def volume_axis(mesh, grid):
    """An axis along which the front does not wrap across a periodic seam (or None)."""
    if not len(mesh):
        return None
    lo = mesh.verts.reshape(-1, 3).min(axis=0)
    hi = mesh.verts.reshape(-1, 3).max(axis=0)
    for ax in range(3):
        if not grid.periodic[ax]:
            return ax
    for ax in range(3):
        if lo[ax] > grid.origin[ax] + grid.h[ax] and hi[ax] < grid.origin[ax] + grid.lengths[ax] - grid.h[ax]:
            return ax
    return None


def enclosed_volume(mesh, grid, axis):
    """``sum (x_a - o_a) n_a A`` over elements: the phase-1 volume bounded by the front."""
    c = mesh.centroids()[:, axis] - grid.origin[axis]
    return float(np.dot(c, mesh.area_vectors()[:, axis]))


def preserve_volume(mesh, phi, target, axis, iterations=2):
    """Move every vertex by one common distance along ``grad phi`` to reach ``target``.

    Coincident vertices of neighbouring elements see the same interpolated
    normal, so the soup stays watertight.
    """
    grid = phi.grid
    if not len(mesh):
        return mesh
    g = central_gradient(phi.values, grid)
    pts = mesh.verts.reshape(-1, 3)
    n = np.stack([sample_trilinear(c, grid, pts) for c in g], axis=1)
    nn = np.linalg.norm(n, axis=1)
    n = n / np.where(nn > 0, nn, 1.0)[:, None]
    for _ in range(iterations):
        area = mesh.total_area
        if area <= 0:
            break
        shift = (target - enclosed_volume(mesh, grid, axis)) / area
        mesh.verts = mesh.verts + shift * n.reshape(-1, 3, 3)
    return mesh


def reconstruct(dist, gamma_field=None, old_mass=None, target_volume=None, axis=None):
    """Rebuild the front from the zero contour of ``dist``.

    New elements take Gamma from ``gamma_field`` at their centroids; with
    ``old_mass`` given the result is rescaled to carry exactly that mass.
    With ``target_volume`` (and the ``axis`` it was measured along) the new
    front is offset along the normal to enclose that volume, which cancels
    the inward drift of repeated linear contouring on curved fronts.
    """
    phi = dist.phi if isinstance(dist, DistanceField) else dist
    mesh = contour_mesh(phi)
    if len(mesh) and target_volume is not None and axis is not None:
        preserve_volume(mesh, phi, target_volume, axis)
    if len(mesh) and gamma_field is not None:
        mesh.gamma = np.maximum(sample_trilinear(gamma_field.values, phi.grid, mesh.centroids()), 0.0)
    if old_mass is not None and len(mesh):
        rescale_mass(mesh, float(old_mass))
    mesh.prev_area = mesh.areas()
    return mesh


def levelset_field(grid, fn):
    """Cell field from an analytic level-set function ``fn(X, Y, Z)``."""
    phi = ScalarField(grid)
    c = [grid.origin[ax] + (np.arange(grid.padded_shape[ax]) - GHOST + 0.5) * grid.h[ax] for ax in range(3)]
    X, Y, Z = np.meshgrid(*c, indexing="ij")
    phi.values[...] = fn(X, Y, Z)
    return phi


def sphere_levelset(center, radius):
    cx, cy, cz = center
    return lambda X, Y, Z: np.sqrt((X - cx) ** 2 + (Y - cy) ** 2 + (Z - cz) ** 2) - radius


def front_from_levelset(grid, fn, gamma=0.0):
    """Triangulate the zero set of ``fn`` (negative inside phase 1)."""
    mesh = contour_mesh(levelset_field(grid, fn))
    if callable(gamma):
        mesh.gamma = np.asarray(gamma(mesh.centroids()), dtype=float)
    else:
        mesh.gamma = np.full(len(mesh), float(gamma))
    mesh.prev_area = mesh.areas()
    return mesh



__all__ = ["DistanceField", "IndicatorField", "build_distance", "build_indicator", "reconstruct",
           "contour_mesh", "front_from_levelset", "sphere_levelset", "levelset_field",
           "rescale_mass", "volume_axis", "enclosed_volume", "preserve_volume", "smoothed_heaviside", "extrapolate_ghosts", "eps_geom"]
