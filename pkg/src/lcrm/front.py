"""Lagrangian interface stored as a triangle soup.

Elements never share vertices: the mesh is three arrays, vertex positions
``verts`` (N, 3, 3), surface concentration ``gamma`` (N,) and the area
before the last advection ``prev_area`` (N,).
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GeometryError
from .grid import ScalarField, central_gradient, interpolate_trilinear, sample_trilinear_many

# edges in order 12, 23, 31
EDGES = ((0, 1), (1, 2), (2, 0))


def eps_geom(h):
    return 1e-12 * h * h


@dataclass
class FrontElement:
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    gamma: float = 0.0
    prev_area: float = 0.0

    @property
    def area(self):
        return 0.5 * float(np.linalg.norm(np.cross(self.v2 - self.v1, self.v3 - self.v1)))


class FrontMesh:
    def __init__(self, verts=None, gamma=None, prev_area=None):
        self.verts = np.zeros((0, 3, 3)) if verts is None else np.array(verts, dtype=float).reshape(-1, 3, 3)
        n = len(self.verts)
        self.gamma = np.zeros(n) if gamma is None else np.broadcast_to(np.asarray(gamma, dtype=float), (n,)).copy()
        self.prev_area = self.areas() if prev_area is None else np.asarray(prev_area, dtype=float).copy()
        self.flags = {"clamped_vertices": 0, "dropped_elements": 0, "normal_fallbacks": 0}

    @classmethod
    def from_elements(cls, elements):
        verts = np.array([[e.v1, e.v2, e.v3] for e in elements], dtype=float).reshape(-1, 3, 3)
        return cls(verts, [e.gamma for e in elements], [e.prev_area for e in elements])

    def __len__(self):
        return len(self.verts)

    @property
    def elements(self):
        return [FrontElement(v[0].copy(), v[1].copy(), v[2].copy(), float(g), float(a))
                for v, g, a in zip(self.verts, self.gamma, self.prev_area)]

    def copy(self):
        m = FrontMesh(self.verts.copy(), self.gamma.copy(), self.prev_area.copy())
        m.flags = dict(self.flags)
        return m

    def subset(self, keep):
        m = FrontMesh(self.verts[keep], self.gamma[keep], self.prev_area[keep])
        m.flags = dict(self.flags)
        return m

    def area_vectors(self):
        """Half cross products, so ``|a| = A_e`` and ``a / |a| = n_f``."""
        v = self.verts
        return 0.5 * np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    def areas(self):
        return np.linalg.norm(self.area_vectors(), axis=1)

    def normals(self):
        a = self.area_vectors()
        nrm = np.linalg.norm(a, axis=1)
        return a / np.where(nrm > 0, nrm, 1.0)[:, None]

    def centroids(self):
        return self.verts.mean(axis=1)

    @property
    def total_area(self):
        return float(self.areas().sum())

    @property
    def total_surfactant_mass(self):
        return float(np.dot(self.gamma, self.areas()))

    def area_ratios(self, h):
        """``prev_area / area`` for every element."""
        a = self.areas()
        if (a <= eps_geom(h)).any():
            raise GeometryError("degenerate element in area ratio")
        return self.prev_area / a

    def drop_degenerate(self, h):
        keep = self.areas() > eps_geom(h)
        dropped = int((~keep).sum())
        if dropped:
            flags = self.flags
            self.verts, self.gamma, self.prev_area = self.verts[keep], self.gamma[keep], self.prev_area[keep]
            self.flags = flags
            self.flags["dropped_elements"] += dropped
        return dropped

    def write_obj(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(f"# triangle soup, {len(self)} elements\n")
            for tri in self.verts:
                for p in tri:
                    f.write(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
            for e in range(len(self)):
                f.write(f"f {3 * e + 1} {3 * e + 2} {3 * e + 3}\n")
        return path

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["element_id", "gamma", "area"])
            for e, (g, a) in enumerate(zip(self.gamma, self.areas())):
                w.writerow([e, repr(float(g)), repr(float(a))])
        return path


def read_obj(path):
    """Read an OBJ soup written by :meth:`FrontMesh.write_obj`."""
    vs, fs = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            vs.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            fs.append([int(x) - 1 for x in parts[1:4]])
    vs = np.array(vs)
    return FrontMesh(vs[np.array(fs, dtype=int)] if fs else None)


@dataclass
class ElementFrame:
    """Geometry of one element or, with a leading axis, of many.

    Per-edge quantities are ordered 12, 23, 31 on axis ``-2`` (vectors) or
    ``-1`` (scalars). Tangents run clockwise about ``normal`` so that
    ``p = n x t`` is the outward in-plane conormal of each edge.
    """
    area: np.ndarray
    normal: np.ndarray
    edge_mid: np.ndarray
    edge_len: np.ndarray
    tangent: np.ndarray
    edge_normal: np.ndarray
    binormal_p: np.ndarray
    binormal_pp: np.ndarray
    fallback: np.ndarray

    def __len__(self):
        return len(self.area)


def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0, n, 1.0)


def phi_gradient_at(phi, points):
    """Trilinear interpolation of the central-difference gradient of ``phi``."""
    grid = phi.grid
    return sample_trilinear_many(central_gradient(phi.values, grid), grid, np.atleast_2d(points))


def mesh_frames(mesh, phi=None, grad_eps=1e-3):
    """Element frames for every element of ``mesh`` (batched arrays).

    With ``phi`` given, edge-midpoint normals come from the interpolated
    distance gradient and are renormalized; otherwise ``n_f`` is used.
    """
    v = mesh.verts
    avec = mesh.area_vectors()
    area = np.linalg.norm(avec, axis=1)
    n_f = avec / np.where(area > 0, area, 1.0)[:, None]
    a = v[:, [0, 1, 2]]
    b = v[:, [1, 2, 0]]
    mid = 0.5 * (a + b)
    d = a - b
    elen = np.linalg.norm(d, axis=2)
    t = d / np.where(elen > 0, elen, 1.0)[:, :, None]
    nf3 = np.repeat(n_f[:, None, :], 3, axis=1)
    fallback = np.zeros((len(mesh), 3), dtype=bool)
    if phi is not None and len(mesh):
        g = phi_gradient_at(phi, mid.reshape(-1, 3)).reshape(-1, 3, 3)
        gn = np.linalg.norm(g, axis=2)
        fallback = gn < grad_eps
        nk = np.where(fallback[:, :, None], nf3, g / np.where(gn > 0, gn, 1.0)[:, :, None])
        # keep n_k normal to its own edge so p stays unit
        nk = nk - np.einsum("eki,eki->ek", nk, t)[:, :, None] * t
        nk = _unit(nk)
        mesh.flags["normal_fallbacks"] = mesh.flags.get("normal_fallbacks", 0) + int(fallback.sum())
    else:
        nk = nf3
    p = np.cross(nk, t)
    pp = np.cross(nf3, t)
    return ElementFrame(area, n_f, mid, elen, t, nk, p, pp, fallback)


def element_frame(e, phi=None, h=None):
    """Frame of a single element; raises on degenerate geometry."""
    h = phi.grid.hmin if (h is None and phi is not None) else (1.0 if h is None else h)
    m = FrontMesh([[e.v1, e.v2, e.v3]], [e.gamma], [e.prev_area])
    if m.areas()[0] <= eps_geom(h):
        raise GeometryError("degenerate element: vertices are collinear")
    fr = mesh_frames(m, phi)
    return ElementFrame(*(getattr(fr, f)[0] for f in ElementFrame.__dataclass_fields__))


def area_ratio(e, h=1.0):
    a = e.area
    if a <= eps_geom(h):
        raise GeometryError("degenerate element in area ratio")
    return e.prev_area / a


def _velocity_at(vel, pts, clamp):
    grid = vel.grid
    lo = grid.x0
    hi = grid.x0 + grid.lengths
    nclamp = 0
    pts = pts.copy()
    for ax in range(3):
        if grid.periodic[ax]:
            continue
        bad = (pts[:, ax] < lo[ax]) | (pts[:, ax] > hi[ax])
        if bad.any():
            if not clamp:
                raise GeometryError("vertex left the domain")
            nclamp += int(bad.sum())
            pts[:, ax] = np.clip(pts[:, ax], lo[ax], hi[ax])
    return interpolate_trilinear(vel, pts), pts, nclamp


def advect_front(mesh, vel, dt):
    """Move every vertex with the midpoint rule; returns a new mesh.

    ``prev_area`` of the result is the area before the move. Vertices that
    leave a non-periodic side are clamped onto it and counted in
    ``flags['clamped_vertices']``.
    """
    out = mesh.copy()
    out.prev_area = mesh.areas()
    if len(mesh) == 0:
        return out
    x = mesh.verts.reshape(-1, 3)
    u0, x, c0 = _velocity_at(vel, x, clamp=True)
    xh = x + 0.5 * dt * u0
    uh, _, c1 = _velocity_at(vel, xh, clamp=True)
    xn = x + dt * uh
    grid = vel.grid
    lo = grid.x0
    hi = grid.x0 + grid.lengths
    nclamp = 0
    for ax in range(3):
        if grid.periodic[ax]:
            continue
        bad = (xn[:, ax] < lo[ax]) | (xn[:, ax] > hi[ax])
        nclamp += int(bad.sum())
        xn[:, ax] = np.clip(xn[:, ax], lo[ax], hi[ax])
    out.verts = xn.reshape(-1, 3, 3)
    out.flags["clamped_vertices"] += nclamp
    shift_into_box(out, grid)
    return out


def shift_into_box(mesh, grid):
    """Translate whole elements by periods so their centroids lie in the box."""
    if len(mesh) == 0:
        return mesh
    c = mesh.centroids()
    for ax in range(3):
        if not grid.periodic[ax]:
            continue
        L = grid.lengths[ax]
        k = np.floor((c[:, ax] - grid.origin[ax]) / L)
        if k.any():
            mesh.verts[:, :, ax] -= (k * L)[:, None]
    return mesh
