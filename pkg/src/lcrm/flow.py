"""Variable-density, variable-viscosity projection step on the MAC grid."""

from dataclasses import dataclass, field

import numpy as np

from . import poisson
from .errors import DivergenceError
from .grid import GHOST, MacVelocity, ScalarField, apply_boundary, divergence, eno2_derivative


@dataclass
class FlowParams:
    rho1: float = 1.0
    rho2: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    gravity: tuple = (0.0, 0.0, 0.0)
    body_force: tuple = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))  # per phase, force per volume

    def __post_init__(self):
        for name in ("rho1", "rho2", "mu1", "mu2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _win(grid, comp):
    """Slices of the interior window for face component ``comp`` (None = cells)."""
    g = GHOST
    out = []
    for ax in range(3):
        extra = 1 if ax == comp else 0
        out.append((g, grid.n[ax] + extra))
    return out


def _take(arr, win, off=(0, 0, 0)):
    return arr[tuple(slice(s + o, s + o + n) for (s, n), o in zip(win, off))]


def _unit(ax, v=1):
    o = [0, 0, 0]
    o[ax] = v
    return tuple(o)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def face_density(rho, grid, comp):
    """Harmonic mean of the two cells sharing each ``comp`` face (window shape)."""
    win = _win(grid, comp)
    r0 = _take(rho, win, _unit(comp, -1))
    r1 = _take(rho, win)
    return 2.0 * r0 * r1 / (r0 + r1)


def _edge_mu(mu, win, c, d):
    """Arithmetic mean of the four cells around the (c-face, d-face) edge."""
    s = 0.0
    for oc in (-1, 0):
        for od in (-1, 0):
            s = s + _take(mu, win, _add(_unit(c, oc), _unit(d, od)))
    return 0.25 * s


def viscous_term(vel, mu):
    """``div(mu (grad u + grad u^T))`` for each component on its faces."""
    grid = vel.grid
    h = grid.h
    U = vel.components
    out = []
    for c in range(3):
        win = _win(grid, c)
        Uc = U[c]
        acc = 0.0
        # normal stress: 2 mu du_c/dx_c at cells, differenced to faces
        tau_hi = 2.0 * _take(mu, win) * (_take(Uc, win, _unit(c, 1)) - _take(Uc, win)) / h[c]
        tau_lo = 2.0 * _take(mu, win, _unit(c, -1)) * (_take(Uc, win) - _take(Uc, win, _unit(c, -1))) / h[c]
        acc = acc + (tau_hi - tau_lo) / h[c]
        for d in range(3):
            if d == c:
                continue
            Ud = U[d]

            def tau(off_d):
                # shear stress on the edge at d-face index (cell + off_d)
                o = _unit(d, off_d)
                mue = _edge_mu(mu, win, c, d) if off_d == 0 else _edge_mu(mu, win_shift(win, d, 1), c, d)
                duc = (_take(Uc, win, o) - _take(Uc, win, _add(o, _unit(d, -1)))) / h[d]
                dud = (_take(Ud, win, o) - _take(Ud, win, _add(o, _unit(c, -1)))) / h[c]
                return mue * (duc + dud)

            acc = acc + (tau(1) - tau(0)) / h[d]
        out.append(acc)
    return out


def win_shift(win, ax, off):
    w = list(win)
    s, n = w[ax]
    w[ax] = (s + off, n)
    return w


def convection_term(vel):
    """``(u . grad) u_c`` on each face set with ENO2 upwinding."""
    grid = vel.grid
    h = grid.h
    U = vel.components
    out = []
    for c in range(3):
        win = _win(grid, c)
        acc = 0.0
        for d in range(3):
            if d == c:
                adv = _take(U[c], win)
            else:
                # average of the four d-faces around the c-face
                adv = 0.25 * (_take(U[d], win) + _take(U[d], win, _unit(d, 1))
                              + _take(U[d], win, _unit(c, -1)) + _take(U[d], win, _add(_unit(c, -1), _unit(d, 1))))
            acc = acc + adv * eno2_derivative(U[c], adv, d, h[d])
        out.append(acc)
    return out


def predictor(vel, rho, mu, force, dt, params, convect=True):
    """Explicit momentum update without pressure; returns a new velocity.

    ``rho`` and ``mu`` are padded cell fields (or arrays); ``force`` is a
    triple of face arrays (force per volume) or None.
    """
    grid = vel.grid
    rho = getattr(rho, "values", rho)
    mu = getattr(mu, "values", mu)
    out = vel.copy()
    visc = viscous_term(vel, mu)
    conv = convection_term(vel) if convect else (0.0, 0.0, 0.0)
    for c in range(3):
        win = _win(grid, c)
        rf = face_density(rho, grid, c)
        rhs = -conv[c] + visc[c] / rf + params.gravity[c]
        if force is not None:
            rhs = rhs + _take(force[c], win) / rf
        _take(out.components[c], win)[...] += dt * rhs
    apply_boundary(out)
    for arr in out.components:
        if not np.all(np.isfinite(arr)):
            raise DivergenceError("non-finite velocity in the predictor")
    return out


def _poisson_coefficients(rho, grid):
    """Face coefficients ``beta / h^2`` (ghost width 1) from cell densities."""
    n = grid.n
    b = []
    for ax in range(3):
        arr = np.zeros(tuple(m + 2 for m in n), order="F")
        rf = face_density(rho, grid, ax)  # faces g .. g+n along ax
        dst = [slice(1, m + 1) for m in n]
        dst[ax] = slice(1, n[ax] + 2)
        arr[tuple(dst)] = 1.0 / (rf * grid.h[ax] ** 2)
        if not grid.periodic[ax]:
            for idx in (1, n[ax] + 1):
                w = [slice(None)] * 3
                w[ax] = idx
                arr[tuple(w)] = 0.0
        b.append(arr)
    return b


@dataclass
class ProjectionCache:
    key: tuple = None
    mg: object = None
    coeffs: list = field(default_factory=list)


def project(vel_star, rho, dt, settings=None, cache=None, p_guess=None):
    """Make ``vel_star`` discretely divergence-free; returns ``(u, P, info)``."""
    grid = vel_star.grid
    rho = getattr(rho, "values", rho)
    settings = settings or poisson.PoissonSettings()
    div = divergence(vel_star)
    rhs = np.zeros(tuple(m + 2 for m in grid.n), order="F")
    rhs[1:-1, 1:-1, 1:-1] = div.interior / dt
    key = (rho.shape, float(rho.min()), float(rho.max()), float(rho.sum()))
    if cache is not None and cache.key == key and cache.mg is not None:
        b, mg = cache.coeffs, cache.mg
    else:
        b = _poisson_coefficients(rho, grid)
        mg = poisson.Multigrid(*b, grid.periodic, settings)
        if cache is not None:
            cache.key, cache.mg, cache.coeffs = key, mg, b
    x0 = None
    if p_guess is not None:
        x0 = np.zeros_like(rhs)
        x0[1:-1, 1:-1, 1:-1] = p_guess
    p, info = poisson.solve(*b, rhs, grid.periodic, settings, x0=x0, mg=mg)
    out = vel_star.copy()
    for ax in range(3):
        # faces g .. g+n along ax couple cells (i-1, i); poisson index = padded - 1
        n = grid.n
        sl_hi = [slice(1, m + 1) for m in n]
        sl_lo = list(sl_hi)
        sl_hi[ax] = slice(1, n[ax] + 2)
        sl_lo[ax] = slice(0, n[ax] + 1)
        grad = (p[tuple(sl_hi)] - p[tuple(sl_lo)])
        coef = b[ax][tuple(sl_hi)] * grid.h[ax]  # beta / h
        win = _win(grid, ax)
        _take(out.components[ax], win)[...] -= dt * coef * grad
    apply_boundary(out)
    P = ScalarField(grid)
    P.interior[...] = p[1:-1, 1:-1, 1:-1]
    return out, P, info


def timestep_limit(max_u, h, rho1, rho2, mu_max, sigma_max, D_s=0.0, D_c2=0.0, safety=0.5):
    """Explicit stability envelope; the smallest candidate times ``safety``."""
    rho_min = min(rho1, rho2)
    rho_bar = 0.5 * (rho1 + rho2)
    cands = {
        "convective": h / max_u if max_u > 0 else np.inf,
        "viscous": 0.25 * rho_min * h * h / mu_max if mu_max > 0 else np.inf,
        "capillary": np.sqrt(rho_bar * h ** 3 / (4.0 * np.pi * sigma_max)) if sigma_max > 0 else np.inf,
        "surface_diffusion": 0.25 * h * h / D_s if D_s > 0 else np.inf,
        "bulk_diffusion": 0.25 * h * h / D_c2 if D_c2 > 0 else np.inf,
    }
    which = min(cands, key=cands.get)
    return safety * cands[which], which
