"""Bulk surfactant in phase 2 with a ghost-cell Neumann condition at the front.

Phase 2 is ``phi > 0``. Ghost cells are phase-1 cells with a phase-2
face neighbour; they carry the first-order extrapolation

    C_ghost = C_f - (S / D) * ds_min

of the interface flux condition ``D dC/dn = S`` (``S`` = net adsorption
rate per area, ``n`` pointing into phase 2). Other phase-1 cells hold 0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import StabilityError
from .grid import GHOST, ScalarField, apply_boundary, central_gradient, sample_trilinear

log = logging.getLogger(__name__)

# where C_f is sampled, in cells beyond the foot point along n. At 0 the
# trilinear stencil includes the ghost layer being filled, which then enters
# with its previous-step value.
PROBE_OFFSET = 0.0


def ghost_value(C_f, S, D_c2, ds_min):
    """First-order ghost extrapolation ``C_f - (S / D_c2) ds_min``."""
    if D_c2 <= 0:
        return np.asarray(C_f, dtype=float) + 0.0 * np.asarray(S)
    return np.asarray(C_f, dtype=float) - np.asarray(S, dtype=float) / D_c2 * np.asarray(ds_min, dtype=float)


@dataclass
class GhostCells:
    index: np.ndarray     # (m, 3) interior cell indices
    ds_min: np.ndarray    # (m,) distance to the front
    nearest: np.ndarray   # (m,) nearest element id (-1: none in band)

    def __len__(self):
        return len(self.ds_min)

    def as_list(self):
        return [(tuple(int(v) for v in i), float(d), int(e))
                for i, d, e in zip(self.index, self.ds_min, self.nearest)]


@dataclass
class BulkField:
    C: ScalarField
    D_c2: float
    ghosts: GhostCells = None
    clamped: float = 0.0          # mass added by the last non-negativity clamp
    history: list = field(default_factory=list)

    @property
    def grid(self):
        return self.C.grid


def _phase2(phi):
    return phi.interior > 0.0


def _neighbour_any(mask, periodic):
    """True where any of the 6 face neighbours of a cell is set."""
    out = np.zeros_like(mask)
    for ax in range(3):
        for s in (1, -1):
            sh = np.roll(mask, s, axis=ax)
            if not periodic[ax]:
                edge = [slice(None)] * 3
                edge[ax] = 0 if s == 1 else -1
                sh[tuple(edge)] = False
            out |= sh
    return out


def identify_ghosts(dist):
    """Phase-1 cells with a phase-2 face neighbour, with ``|phi|`` and nearest element."""
    phi = getattr(dist, "phi", dist)
    grid = phi.grid
    p2 = _phase2(phi)
    ghost = ~p2 & _neighbour_any(p2, grid.periodic)
    idx = np.argwhere(ghost)
    ds = np.abs(phi.interior[tuple(idx.T)]) if idx.size else np.zeros(0)
    near = getattr(dist, "nearest", None)
    nearest = near[tuple(idx.T)] if (near is not None and idx.size) else np.full(len(idx), -1)
    return GhostCells(idx.astype(np.int64), ds, np.asarray(nearest, dtype=np.int64))


def _cell_points(grid, idx):
    return grid.x0 + (idx + 0.5) * grid.h


def interface_points(phi, idx):
    """Foot points ``x - phi n`` and unit normals at interior cells ``idx``."""
    grid = phi.grid
    g = GHOST
    grad = central_gradient(phi.values, grid)
    pad = tuple(idx.T + g)
    n = np.stack([c[pad] for c in grad], axis=1) if len(idx) else np.zeros((0, 3))
    nn = np.linalg.norm(n, axis=1)
    n = n / np.where(nn > 0, nn, 1.0)[:, None]
    x = _cell_points(grid, idx)
    f = phi.values[pad] if len(idx) else np.zeros(0)
    return x - f[:, None] * n, n


def _clip(grid, pts):
    lo = grid.x0
    hi = grid.x0 + grid.lengths
    out = pts.copy()
    for ax in range(3):
        if grid.periodic[ax]:
            out[:, ax] = lo[ax] + np.mod(out[:, ax] - lo[ax], grid.lengths[ax])
        else:
            out[:, ax] = np.clip(out[:, ax], lo[ax] + 0.5 * grid.h[ax], hi[ax] - 0.5 * grid.h[ax])
    return out


def fill_ghosts(bulk, phi, S_elem=None, ghosts=None, offset=None):
    """Write ghost values into ``bulk.C`` (in place) and return them.

    ``C_f`` is extrapolated from the phase-2 value probed at
    ``x_f + offset*h*n`` with the same first-order slope, so the ghost value is
    ``C(x_f + offset h n) - (S/D)(offset h + ds_min)``; ``offset = 0`` samples
    at the foot point itself.
    """
    grid = bulk.grid
    ghosts = ghosts if ghosts is not None else (bulk.ghosts or identify_ghosts(phi))
    bulk.ghosts = ghosts
    if not len(ghosts):
        return np.zeros(0)
    foot, n = interface_points(phi, ghosts.index)
    off = (PROBE_OFFSET if offset is None else offset) * grid.hmin
    probe = _clip(grid, foot + off * n)
    if S_elem is None:
        S = np.zeros(len(ghosts))
    else:
        S_elem = np.asarray(S_elem, dtype=float)
        S = np.where(ghosts.nearest >= 0, S_elem[np.maximum(ghosts.nearest, 0)], 0.0)
    c_probe = phase2_sample(bulk.C, phi, probe)
    vals = ghost_value(c_probe, S, bulk.D_c2, ghosts.ds_min + off)
    bulk.C.values[tuple(ghosts.index.T + GHOST)] = vals
    apply_boundary(bulk.C)
    return vals


def phase2_sample(C, phi, pts):
    """Trilinear sample of ``C`` using phase-2 cells only (weights renormalised).

    Points whose stencil holds no phase-2 cell get the plain trilinear value.
    """
    grid = C.grid
    apply_boundary(C)
    m = (phi.values > 0.0).astype(float)
    w = sample_trilinear(m, grid, pts)
    num = sample_trilinear(C.values * m, grid, pts)
    plain = sample_trilinear(C.values, grid, pts)
    return np.where(w > 1e-12, num / np.where(w > 1e-12, w, 1.0), plain)


def adjacent_concentration(C, mesh, offset=None, normals=None, phi=None):
    """Bulk concentration ``C_s`` next to each element: sampled ``offset*h`` into phase 2.

    With ``phi`` (the level set ``C`` lives on) only phase-2 cells enter the sample.
    """
    grid = C.grid
    if not len(mesh):
        return np.zeros(0)
    n = mesh.normals() if normals is None else normals
    offset = PROBE_OFFSET if offset is None else offset
    pts = _clip(grid, mesh.centroids() + offset * grid.hmin * n)
    vals = sample_trilinear(C.values, grid, pts) if phi is None else phase2_sample(C, phi, pts)
    return np.maximum(vals, 0.0)


def _padded_mask(mask, grid):
    out = mask
    for ax in range(3):
        width = [(0, 0)] * 3
        width[ax] = (GHOST, GHOST)
        out = np.pad(out, width, mode="wrap" if grid.periodic[ax] else "edge")
    return out


def _rhs(Cv, vel, valid, D, grid):
    """``-u . grad C + D lap C`` at interior cells; ENO2 drops to first order near invalid cells."""
    g = GHOST
    n = grid.n
    h = grid.h
    out = np.zeros(n, order="F")

    def sh(a, ax, off):
        s = [slice(g, g + m) for m in n]
        s[ax] = slice(g + off, g + off + n[ax])
        return a[tuple(s)]

    uc = vel.cell_centered() if vel is not None else None
    for ax in range(3):
        fm2, fm1, f0, fp1, fp2 = (sh(Cv, ax, o) for o in (-2, -1, 0, 1, 2))
        if D > 0:
            out += D * (fp1 - 2.0 * f0 + fm1) / h[ax] ** 2
        if uc is None:
            continue
        u = uc[..., ax]
        vm2, vp2 = sh(valid, ax, -2), sh(valid, ax, 2)
        d2m = fm2 - 2 * fm1 + f0
        d20 = fm1 - 2 * f0 + fp1
        d2p = f0 - 2 * fp1 + fp2
        mm = np.where(np.abs(d2m) <= np.abs(d20), d2m, d20)
        mp = np.where(np.abs(d20) <= np.abs(d2p), d20, d2p)
        # an unusable far cell drops that side to first-order upwinding
        back = (f0 - fm1) / h[ax] + np.where(vm2, mm, 0.0) / (2 * h[ax])
        fwd = (fp1 - f0) / h[ax] - np.where(vp2, mp, 0.0) / (2 * h[ax])
        out -= u * np.where(u > 0, back, fwd)
    return out


def bulk_dt_limit(h, D_c2):
    """Explicit diffusion limit in 3-D: ``h^2 / (6 D)``."""
    return np.inf if D_c2 <= 0 else h * h / (6.0 * D_c2)


def _ghost_flux(Cint, p2, gmask, D, grid):
    """Diffusive rate out of phase 2 into ghost cells, and its sensitivity to a ghost shift."""
    F = 0.0
    K = 0.0
    for ax in range(3):
        area = grid.cell_volume / grid.h[ax]
        coef = D * area / grid.h[ax]
        for s in (1, -1):
            nb_p2 = np.roll(p2, -s, axis=ax)
            nb_C = np.roll(Cint, -s, axis=ax)
            if not grid.periodic[ax]:
                edge = [slice(None)] * 3
                edge[ax] = -1 if s == 1 else 0
                nb_p2[tuple(edge)] = False
            faces = gmask & nb_p2
            F += coef * float(np.sum(nb_C[faces] - Cint[faces]))
            K += coef * float(np.count_nonzero(faces))
    return F, K


def step_bulk(bulk, vel, phi, dt, S_elem=None, dist=None, uptake=None):
    """Advance ``C`` by ``dt`` in phase 2 (SSP-RK2, explicit diffusion).

    Ghosts are re-identified from ``phi`` (or ``dist``, which also supplies
    nearest elements) and filled once. With ``uptake`` (the total rate
    ``sum S_e A_e`` taken up by the front) every stage shifts all ghost
    values by one constant so the diffusive flux from phase 2 into the
    ghost layer equals ``uptake`` and the exchange conserves mass.
    """
    grid = bulk.grid
    h = grid.hmin
    if dt > bulk_dt_limit(h, bulk.D_c2) * (1 + 1e-12):
        raise StabilityError(f"dt={dt:.3g} exceeds the bulk diffusion limit {bulk_dt_limit(h, bulk.D_c2):.3g}")
    if vel is not None and vel.max_abs() * dt / h > 1.0 + 1e-12:
        raise StabilityError(f"bulk CFL number {vel.max_abs() * dt / h:.3g} exceeds 1")
    ghosts = identify_ghosts(dist if dist is not None else phi)
    p2 = _phase2(phi)
    gmask = np.zeros(grid.n, dtype=bool)
    if len(ghosts):
        gmask[tuple(ghosts.index.T)] = True
    keep = p2 | gmask
    valid = _padded_mask(keep, grid)
    C = bulk.C
    C.interior[~keep] = 0.0
    fill_ghosts(bulk, phi, S_elem, ghosts)
    apply_boundary(C)
    ghost_vals = C.interior[gmask]
    D = bulk.D_c2

    def advance(src, base, w):
        if uptake is not None and D > 0 and len(ghosts):
            F, K = _ghost_flux(src.interior, p2, gmask, D, grid)
            if K > 0:
                src.interior[gmask] = ghost_vals + (F - uptake) / K
                apply_boundary(src)
        st = C.copy()
        r = _rhs(src.values, vel, valid, D, grid)
        st.interior[...] = np.where(p2, w * base.interior + (1 - w) * (src.interior + dt * r), 0.0)
        st.interior[gmask] = ghost_vals
        apply_boundary(st)
        return st

    base = C.copy()
    s1 = advance(C, base, 0.0)
    s2 = advance(s1, base, 0.5)
    neg = s2.interior < 0.0
    bulk.clamped = float(-s2.interior[neg].sum() * grid.cell_volume)
    if neg.any():
        log.info("bulk concentration clamped at %d cells", int(neg.sum()))
        s2.interior[neg] = 0.0
        apply_boundary(s2)
    bulk.C = s2
    return bulk


def bulk_mass(C, I):
    """``sum C I dV`` over interior cells."""
    C = getattr(C, "C", C)
    I = getattr(I, "ind", I)
    return float(np.sum(C.interior * I.interior) * C.grid.cell_volume)


def phase2_mass(C, phi):
    """Sharp-mask variant: ``sum C dV`` over ``phi > 0`` cells."""
    C = getattr(C, "C", C)
    phi = getattr(phi, "phi", phi)
    return float(np.sum(np.where(_phase2(phi), C.interior, 0.0)) * C.grid.cell_volume)
