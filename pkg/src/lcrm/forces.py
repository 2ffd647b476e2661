"""Variable surface tension: equations of state, hybrid normal force and Marangoni force."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import SaturationError
from .grid import FACE_STAGGER, GHOST, ScalarField
from .surfactant import _PhiGrad, probe_gradient
from .transfer import spread_to_array

log = logging.getLogger(__name__)

SIGMA_FLOOR = 0.05


@dataclass
class TensionParams:
    sigma_s: float
    beta_s: float = 0.0
    eos_kind: str = "linear"
    gamma_inf: float = 1.0

    def __post_init__(self):
        if not self.sigma_s > 0:
            raise ValueError("sigma_s must be positive")
        if self.eos_kind not in ("linear", "langmuir"):
            raise ValueError(f"unknown eos_kind {self.eos_kind!r}")
        if not 0.0 <= self.beta_s < 1.0 and self.eos_kind == "linear":
            raise ValueError("linear EOS needs 0 <= beta_s < 1")
        if self.beta_s < 0:
            raise ValueError("beta_s must be non-negative")


def eos(gamma, params, clip_saturation=False):
    """Surface tension from surface concentration, floored at 5% of clean.

    Langmuir input at or above ``gamma_inf`` raises unless
    ``clip_saturation`` is set (field evaluation), in which case it is held
    just below saturation before the floor applies.
    """
    g = np.asarray(gamma, dtype=float)
    x = g / params.gamma_inf
    if params.eos_kind == "linear":
        sig = params.sigma_s * (1.0 - params.beta_s * x)
    else:
        if np.any(x >= 1.0):
            if not clip_saturation:
                raise SaturationError("surface concentration at or above gamma_inf under the Langmuir law")
            x = np.minimum(x, 1.0 - 1e-12)
        sig = params.sigma_s * (1.0 + params.beta_s * np.log1p(-x))
    floor = SIGMA_FLOOR * params.sigma_s
    if np.any(sig < floor):
        log.warning("surface tension floored at %.3g in %d places", floor, int(np.sum(sig < floor)))
        sig = np.maximum(sig, floor)
    return float(sig) if sig.ndim == 0 else sig


@dataclass
class ForceFields:
    F_L: tuple            # three padded cell arrays
    G: tuple              # three padded cell arrays
    sigma_kappa_H: ScalarField
    F_n: tuple            # three face arrays
    F_s: tuple = None     # three face arrays

    def total_face_force(self):
        if self.F_s is None:
            return self.F_n
        return tuple(a + b for a, b in zip(self.F_n, self.F_s))


def element_line_force(frames, sigma_e):
    """``sigma_e * sum_k (n_k x t_k) ds_k`` per element.

    With clockwise tangents ``n_k x t_k`` is the outward conormal, so this is
    the pull of the surrounding surface on the element; on a drop it points
    into phase 1.
    """
    pull = np.einsum("ekj,ek->ej", frames.binormal_p, frames.edge_len)
    return np.asarray(sigma_e)[:, None] * pull


def normal_force(mesh, frames, ind, sigma_e, grid=None):
    """Hybrid normal force ``F_n = sigma kappa_H grad I`` on velocity faces."""
    grid = ind.grid if grid is None else grid
    cen = mesh.centroids()
    f_e = element_line_force(frames, sigma_e)
    nA = frames.normal * frames.area[:, None]
    F_L = tuple(spread_to_array(grid, cen, f_e[:, ax]) for ax in range(3))
    G = tuple(spread_to_array(grid, cen, nA[:, ax]) for ax in range(3))
    FG = sum(a * b for a, b in zip(F_L, G))
    GG = sum(b * b for b in G)
    eps_G = 1e-6 * GG.max() if GG.size and GG.max() > 0 else np.inf
    inband = GG > eps_G
    skh = ScalarField(grid)
    skh.values[inband] = FG[inband] / GG[inband]
    F_n = face_gradient_product(skh.values, inband, ind.values, grid)
    return ForceFields(F_L, G, skh, F_n)


def face_gradient_product(coef, inband, ind, grid):
    """``coef_face * dI/dn`` on every face; ``coef_face`` averages in-band cells."""
    out = []
    g = GHOST
    for ax in range(3):
        arr = grid.zeros(grid.face_shape(ax))
        lo = [slice(g, g + n) for n in grid.n]
        hi = list(lo)
        face = list(lo)
        lo[ax] = slice(g - 1, g + grid.n[ax])
        hi[ax] = slice(g, g + grid.n[ax] + 1)
        face[ax] = slice(g, g + grid.n[ax] + 1)
        lo, hi, face = tuple(lo), tuple(hi), tuple(face)
        cl, ch = coef[lo], coef[hi]
        bl, bh = inband[lo], inband[hi]
        cnt = bl.astype(float) + bh
        cf = np.where(cnt > 0, (cl * bl + ch * bh) / np.where(cnt > 0, cnt, 1.0), 0.0)
        arr[face] = cf * (ind[hi] - ind[lo]) / grid.h[ax]
        out.append(arr)
    return tuple(out)


def sigma_field(surf, params):
    """Eulerian ``sigma(Gamma(x))``; clean tension outside the surface band."""
    grid = surf.gamma.grid
    sig = ScalarField(grid, np.full(grid.padded_shape, params.sigma_s, order="F"))
    band = surf.band
    if band.any():
        sig.values[band] = eos(surf.gamma.values[band], params, clip_saturation=True)
    return sig


def marangoni_force(mesh, frames, sig_field, phi=None, band=None, dl=None):
    """Tangential force from probed surface gradients of ``sig_field``.

    Each edge midpoint carries ``[(d sigma)_p p + (d sigma)_t t] A_e / 3``,
    spread with the kernel onto the face grid of each component.
    """
    grid = sig_field.grid
    ne = len(mesh)
    pts = frames.edge_mid.reshape(-1, 3)
    snap = _PhiGrad(phi) if phi is not None else None
    gp = probe_gradient(pts, frames.binormal_p.reshape(-1, 3), sig_field, phi, dl, band, snap)[0]
    gt = probe_gradient(pts, frames.tangent.reshape(-1, 3), sig_field, phi, dl, band, snap)[0]
    vec = (gp[:, None] * frames.binormal_p.reshape(-1, 3) + gt[:, None] * frames.tangent.reshape(-1, 3))
    vec *= np.repeat(frames.area / 3.0, 3)[:, None]
    F_s = tuple(spread_to_array(grid, pts, vec[:, ax], FACE_STAGGER[ax], grid.face_shape(ax))
                for ax in range(3))
    return F_s, vec.reshape(ne, 3, 3)


def surface_forces(mesh, frames, ind, surf, params, phi=None, dl=None, marangoni=True):
    """Normal plus (optionally) Marangoni force fields for the current front."""
    sigma_e = eos(mesh.gamma, params, clip_saturation=True)
    ff = normal_force(mesh, frames, ind, sigma_e)
    if marangoni and params.beta_s > 0:
        sig = sigma_field(surf, params)
        ff.F_s = marangoni_force(mesh, frames, sig, phi, surf.band, dl)[0]
    return ff


def integrate_faces(face_arrays, grid):
    """Volume integral of a face-force triple over unique interior faces."""
    g = GHOST
    tot = np.zeros(3)
    for ax, arr in enumerate(face_arrays):
        sl = [slice(g, g + n) for n in grid.n]
        if not grid.periodic[ax]:
            sl[ax] = slice(g, g + grid.n[ax] + 1)
        tot[ax] = arr[tuple(sl)].sum() * grid.cell_volume
    return tot
